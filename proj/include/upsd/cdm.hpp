#pragma once

#include <optional>
#include <string>
#include <vector>

#include "upsd/domain.hpp"
#include "upsd/pipeline.hpp"

// Conversational diagnosis: slot updates from dialogue evidence, next
// criterion selection, completion logic and the final severity verdict.
namespace upsd::cdm {

inline constexpr int kDefaultMaxPairs = 20;

enum class CompletionStatus { Continue, DiagnoseNow, FailedTurnCap };

std::string_view to_string(CompletionStatus s) noexcept;

struct SlotUpdate {
    SymptomSet slots;
    /// The model never produced a valid symptom set; slots are unchanged.
    bool extraction_failed = false;
    /// Criteria whose determined status the model tried to flip.
    std::vector<CriterionId> conflicts;
};

struct TopicChoice {
    CriterionId topic{};
    std::string why;
    bool fallback = false;
};

struct Verdict {
    SeverityLabel label{};
    std::string rationale;
};

/// Precondition: history ends with a User turn.
SlotUpdate update_slots(const Gateway& gw, const SymptomSet& slots, const DialogueHistory& history);

/// Candidate topics: unfilled criteria plus the previous topic, canonical order.
std::vector<CriterionId> candidate_topics(const SymptomSet& slots,
                                          const std::optional<CriterionId>& prev_topic);

/// Precondition: at least one slot Unknown.
TopicChoice select_criterion(const Gateway& gw, const SymptomSet& slots,
                             const DialogueHistory& history,
                             const std::optional<CriterionId>& prev_topic);

/// Pure. Precondition: 0 <= pairs_used <= max_pairs.
CompletionStatus completion_status(const SymptomSet& slots, int pairs_used,
                                   int max_pairs = kDefaultMaxPairs);

/// Precondition: every slot determined. Throws StructuredOutputFailure.
Verdict assess_diagnosis(const Gateway& gw, const SymptomSet& slots, const DialogueHistory& history);

}  // namespace upsd::cdm
