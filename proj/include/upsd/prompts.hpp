#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "upsd/domain.hpp"

namespace upsd {

enum class TemplateId {
    NonStigmaSimulator,
    WithStigmaSimulator,
    SlotFilling,
    SlotSelecting,
    CoarseSelection,
    FineSelection,
    ResponseGeneration,
    AblationResponse,
    LikertQuestion,
    JudgeEvaluation,
    DiagnosisVerdict,
};

inline constexpr std::array<TemplateId, 11> kAllTemplates = {
    TemplateId::NonStigmaSimulator, TemplateId::WithStigmaSimulator, TemplateId::SlotFilling,
    TemplateId::SlotSelecting,      TemplateId::CoarseSelection,     TemplateId::FineSelection,
    TemplateId::ResponseGeneration, TemplateId::AblationResponse,    TemplateId::LikertQuestion,
    TemplateId::JudgeEvaluation,    TemplateId::DiagnosisVerdict,
};

std::string_view enum_name(TemplateId id) noexcept;
std::optional<TemplateId> parse_template_id(std::string_view name);

/// Placeholder name -> replacement text.
using Binding = std::map<std::string, std::string>;

/// Names of all "<NAME>" markers in a template, in first-occurrence order.
std::vector<std::string> placeholders_in(std::string_view tmpl);

/// True when s contains a "<NAME>" style marker.
bool has_marker(std::string_view s);

class PromptRegistry {
public:
    /// Built-in templates.
    PromptRegistry();

    /// Built-ins, replaced by any "<EnumName>" or "<EnumName>.txt" file in dir.
    static PromptRegistry with_overrides(const std::filesystem::path& dir);

    const std::string& source(TemplateId id) const;

    /// Throws MissingPlaceholder for an unbound marker and InvalidValue when a
    /// bound value itself carries a marker. Extra keys are reported through
    /// `unused` (and logged) without failing.
    std::string render(TemplateId id, const Binding& b,
                       std::vector<std::string>* unused = nullptr) const;

private:
    std::array<std::string, kAllTemplates.size()> sources_;
};

const PromptRegistry& default_registry();

inline std::string render(TemplateId id, const Binding& b) {
    return default_registry().render(id, b);
}

/// "Psychologist: ..." / "Inquirer: ..." lines, one per turn.
std::string history_to_text(const DialogueHistory& h);

/// Rewrites "<NAME>" markers in free text as "(NAME)" so utterances can be bound safely.
std::string neutralize_markers(std::string_view s);

// Binding helpers shared by the pipeline modules.
std::string slot_set_json(const SymptomSet& slots);
std::string criteria_with_explanations(const std::vector<CriterionId>& criteria);
std::string topic_explanation(CriterionId c);

}  // namespace upsd
