#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "upsd/errors.hpp"

namespace upsd {

// ---------------------------------------------------------------------------
// Diagnostic criteria (the nine ICD-11 derived slots), in canonical order.
// ---------------------------------------------------------------------------

enum class CriterionId {
    DepressionMood,
    LossOfInterest,
    DecreasedEnergy,
    SelfLoathing,
    SuicidalTendency,
    PoorConcentration,
    DisruptedSleep,
    ChangedAppetiteOrWeight,
    PsychomotorChange,
};

inline constexpr std::size_t kCriterionCount = 9;

inline constexpr std::array<CriterionId, kCriterionCount> kAllCriteria = {
    CriterionId::DepressionMood,    CriterionId::LossOfInterest,
    CriterionId::DecreasedEnergy,   CriterionId::SelfLoathing,
    CriterionId::SuicidalTendency,  CriterionId::PoorConcentration,
    CriterionId::DisruptedSleep,    CriterionId::ChangedAppetiteOrWeight,
    CriterionId::PsychomotorChange,
};

constexpr std::size_t index_of(CriterionId c) noexcept { return static_cast<std::size_t>(c); }

/// Display name as used in prompts and the slot-set object ("Depression Mood").
std::string_view display_name(CriterionId c) noexcept;
/// Enumerator spelling ("DepressionMood"); used in records and the HTTP API.
std::string_view enum_name(CriterionId c) noexcept;
/// One-sentence explanation of what the slot checks.
std::string_view explanation(CriterionId c) noexcept;

/// Accepts display names, enumerator names and a few surface variants, case-insensitively.
std::optional<CriterionId> parse_criterion(std::string_view text);

// ---------------------------------------------------------------------------
// Slots
// ---------------------------------------------------------------------------

enum class SlotStatus { Unknown, Present, Absent };

std::string_view to_string(SlotStatus s) noexcept;  // "Unknown" / "True" / "False"

inline constexpr std::size_t kMaxRationaleLength = 200;

class SlotDetermination {
public:
    SlotDetermination() = default;

    /// Throws InvalidValue when the rationale rule is broken
    /// (non-empty iff determined, at most 200 characters).
    SlotDetermination(SlotStatus status, std::string rationale);

    static SlotDetermination present(std::string rationale) {
        return {SlotStatus::Present, std::move(rationale)};
    }
    static SlotDetermination absent(std::string rationale) {
        return {SlotStatus::Absent, std::move(rationale)};
    }

    SlotStatus status() const noexcept { return status_; }
    const std::string& rationale() const noexcept { return rationale_; }
    bool determined() const noexcept { return status_ != SlotStatus::Unknown; }

    friend bool operator==(const SlotDetermination&, const SlotDetermination&) = default;

private:
    SlotStatus status_ = SlotStatus::Unknown;
    std::string rationale_;
};

// Total map from the nine criteria to a determination. Values are immutable:
// set_slot returns a new set.
class SymptomSet {
public:
    SymptomSet() = default;

    const SlotDetermination& operator[](CriterionId c) const noexcept {
        return slots_[index_of(c)];
    }

    /// Write-once update. Unknown -> determined is accepted, re-asserting the
    /// same status is a no-op, anything else throws ConflictingDetermination.
    [[nodiscard]] SymptomSet set_slot(CriterionId c, const SlotDetermination& d) const;

    std::vector<CriterionId> unfilled() const;
    std::size_t determined_count() const noexcept;
    bool complete() const noexcept { return determined_count() == kCriterionCount; }

    friend bool operator==(const SymptomSet&, const SymptomSet&) = default;

private:
    std::array<SlotDetermination, kCriterionCount> slots_{};
};

inline SymptomSet new_symptom_set() { return SymptomSet{}; }

inline SymptomSet set_slot(const SymptomSet& set, CriterionId c, const SlotDetermination& d) {
    return set.set_slot(c, d);
}

inline std::vector<CriterionId> unfilled(const SymptomSet& set) { return set.unfilled(); }

// ---------------------------------------------------------------------------
// Strategy taxonomy
// ---------------------------------------------------------------------------

enum class CoarseStrategy { QuestioningSkill, Empathy, FlowManagement };

inline constexpr std::array<CoarseStrategy, 3> kAllCoarse = {
    CoarseStrategy::QuestioningSkill, CoarseStrategy::Empathy, CoarseStrategy::FlowManagement};

enum class FineStrategy {
    LoadingQuestion,
    NominativeTechnique,
    ForgivingQuestion,
    Clarification,
    Connection,
    Guidance,
    Feedback,
    Bridging,
    CommentThenShift,
};

inline constexpr std::array<FineStrategy, 9> kAllFine = {
    FineStrategy::LoadingQuestion, FineStrategy::NominativeTechnique,
    FineStrategy::ForgivingQuestion, FineStrategy::Clarification,
    FineStrategy::Connection, FineStrategy::Guidance,
    FineStrategy::Feedback, FineStrategy::Bridging,
    FineStrategy::CommentThenShift,
};

CoarseStrategy fine_to_coarse(FineStrategy f) noexcept;

/// Fine strategies belonging to a coarse family, in taxonomy order.
std::vector<FineStrategy> family(CoarseStrategy c);

/// Label used in the selection prompts ("Empathetic Response" for Empathy).
std::string_view prompt_label(CoarseStrategy c) noexcept;
std::string_view enum_name(CoarseStrategy c) noexcept;
std::string_view display_name(FineStrategy f) noexcept;
std::string_view enum_name(FineStrategy f) noexcept;
std::string_view explanation(FineStrategy f) noexcept;
std::string_view example_utterance(FineStrategy f) noexcept;

/// Alias-tolerant parsing of prompt-surface labels ("Empathetic Response",
/// "Comment then Shift", "comment-then-shift", enumerator names, ...).
std::optional<CoarseStrategy> parse_coarse(std::string_view text);
std::optional<FineStrategy> parse_fine(std::string_view text);

// ---------------------------------------------------------------------------
// Dialogue
// ---------------------------------------------------------------------------

enum class Speaker { System, User };

std::string_view to_string(Speaker s) noexcept;  // "system" / "user"

struct TurnAnnotation {
    CriterionId topic{};
    std::optional<CriterionId> prev_topic;
    CoarseStrategy coarse{};
    FineStrategy fine{};
    /// Why-strings in pipeline order: topic, coarse, fine.
    std::vector<std::string> rationales;
    /// Candidate orders shown to the model (shuffled per turn).
    std::vector<std::string> coarse_options;
    std::vector<std::string> fine_options;
    /// Degradations taken while producing this turn ("coarse_fallback", ...).
    std::vector<std::string> flags;

    friend bool operator==(const TurnAnnotation&, const TurnAnnotation&) = default;
};

struct Turn {
    std::size_t index = 0;
    Speaker speaker = Speaker::System;
    std::string text;
    std::optional<TurnAnnotation> annotation;

    friend bool operator==(const Turn&, const Turn&) = default;
};

// Alternating System/User sequence starting with the system.
class DialogueHistory {
public:
    DialogueHistory() = default;

    /// Validates alternation, consecutive indices and annotation placement.
    explicit DialogueHistory(std::vector<Turn> turns);

    void append(Speaker speaker, std::string text, std::optional<TurnAnnotation> annotation = {});

    const std::vector<Turn>& turns() const noexcept { return turns_; }
    std::size_t size() const noexcept { return turns_.size(); }
    bool empty() const noexcept { return turns_.empty(); }
    const Turn& back() const { return turns_.back(); }

    /// Completed (system, user) pairs.
    std::size_t pairs() const noexcept { return turns_.size() / 2; }

    friend bool operator==(const DialogueHistory&, const DialogueHistory&) = default;

private:
    std::vector<Turn> turns_;
};

// ---------------------------------------------------------------------------
// Profiles and outcomes
// ---------------------------------------------------------------------------

enum class SeverityLabel { NonDepression, Mild, Moderate, Severe };

inline constexpr std::array<SeverityLabel, 4> kAllSeverities = {
    SeverityLabel::NonDepression, SeverityLabel::Mild, SeverityLabel::Moderate,
    SeverityLabel::Severe};

std::string_view to_string(SeverityLabel s) noexcept;  // "non-depression", "mild", ...
std::optional<SeverityLabel> parse_severity(std::string_view text);

struct UserProfile {
    std::string id;
    SeverityLabel drisk = SeverityLabel::NonDepression;
    int age = 30;
    std::string gender;
    std::string marital_status;
    std::string occupation;
    std::string summary;

    /// Throws InvalidValue (empty summary, age outside [10, 100]).
    void validate() const;
};

struct StigmaProfile {
    std::string aspect;
    std::string stereotype;
    std::string prejudice;
    std::string discrimination;

    void validate() const;
};

struct SessionOutcome {
    std::string session_id;
    std::string profile_id;
    bool stigma_mode = false;
    DialogueHistory history;
    SymptomSet final_slots;
    std::optional<SeverityLabel> verdict;
    std::string verdict_rationale;
    bool success = false;
    int turn_pairs_used = 0;
    /// Set when the session ended on an unrecoverable gateway failure.
    std::optional<std::string> abort_reason;
};

}  // namespace upsd
