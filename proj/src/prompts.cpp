#include "upsd/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "upsd/errors.hpp"
#include "upsd/text.hpp"

namespace upsd {

namespace detail {
extern const std::array<std::pair<std::string_view, std::string_view>, kAllTemplates.size()>
    kEmbeddedPrompts;
}

namespace {

const std::regex& marker_re() {
    static const std::regex re("<([A-Z][A-Z0-9_]*)>");
    return re;
}

std::string strip_trailing_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

}  // namespace

std::string_view enum_name(TemplateId id) noexcept {
    switch (id) {
        case TemplateId::NonStigmaSimulator: return "NonStigmaSimulator";
        case TemplateId::WithStigmaSimulator: return "WithStigmaSimulator";
        case TemplateId::SlotFilling: return "SlotFilling";
        case TemplateId::SlotSelecting: return "SlotSelecting";
        case TemplateId::CoarseSelection: return "CoarseSelection";
        case TemplateId::FineSelection: return "FineSelection";
        case TemplateId::ResponseGeneration: return "ResponseGeneration";
        case TemplateId::AblationResponse: return "AblationResponse";
        case TemplateId::LikertQuestion: return "LikertQuestion";
        case TemplateId::JudgeEvaluation: return "JudgeEvaluation";
        case TemplateId::DiagnosisVerdict: return "DiagnosisVerdict";
    }
    return "";
}

std::optional<TemplateId> parse_template_id(std::string_view name) {
    for (TemplateId id : kAllTemplates)
        if (enum_name(id) == name) return id;
    return std::nullopt;
}

std::vector<std::string> placeholders_in(std::string_view tmpl) {
    std::vector<std::string> out;
    const std::string s(tmpl);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), marker_re()); it != std::sregex_iterator();
         ++it) {
        std::string name = (*it)[1].str();
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
    }
    return out;
}

bool has_marker(std::string_view s) {
    return std::regex_search(s.begin(), s.end(), marker_re());
}

PromptRegistry::PromptRegistry() {
    for (TemplateId id : kAllTemplates) {
        auto it = std::find_if(detail::kEmbeddedPrompts.begin(), detail::kEmbeddedPrompts.end(),
                               [&](const auto& p) { return p.first == enum_name(id); });
        if (it == detail::kEmbeddedPrompts.end())
            throw ConfigError("missing embedded template " + std::string(enum_name(id)));
        sources_[static_cast<std::size_t>(id)] = strip_trailing_newlines(std::string(it->second));
    }
}

PromptRegistry PromptRegistry::with_overrides(const std::filesystem::path& dir) {
    PromptRegistry reg;
    if (!std::filesystem::is_directory(dir))
        throw ConfigError("template override directory not found: " + dir.string());
    for (TemplateId id : kAllTemplates) {
        for (std::string candidate : {std::string(enum_name(id)), std::string(enum_name(id)) + ".txt"}) {
            const auto path = dir / candidate;
            if (!std::filesystem::is_regular_file(path)) continue;
            std::ifstream in(path, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            reg.sources_[static_cast<std::size_t>(id)] = strip_trailing_newlines(ss.str());
            spdlog::info("prompt template {} overridden from {}", enum_name(id), path.string());
            break;
        }
    }
    return reg;
}

const std::string& PromptRegistry::source(TemplateId id) const {
    return sources_[static_cast<std::size_t>(id)];
}

std::string PromptRegistry::render(TemplateId id, const Binding& b,
                                   std::vector<std::string>* unused) const {
    const std::string& tmpl = source(id);
    const std::vector<std::string> names = placeholders_in(tmpl);

    for (const auto& name : names) {
        auto it = b.find(name);
        if (it == b.end()) throw MissingPlaceholder(name);
        if (has_marker(it->second))
            throw InvalidValue("binding for <" + name + "> contains an unresolved placeholder marker");
    }
    std::vector<std::string> extra;
    for (const auto& [key, value] : b)
        if (std::find(names.begin(), names.end(), key) == names.end()) extra.push_back(key);
    if (!extra.empty())
        spdlog::warn("template {} ignores binding(s): {}", enum_name(id), text::join(extra, ", "));
    if (unused) *unused = std::move(extra);

    // Single left-to-right pass so substituted text is never rescanned.
    std::string out;
    out.reserve(tmpl.size() * 2);
    std::size_t last = 0;
    for (auto it = std::sregex_iterator(tmpl.begin(), tmpl.end(), marker_re());
         it != std::sregex_iterator(); ++it) {
        out.append(tmpl, last, static_cast<std::size_t>(it->position()) - last);
        out.append(b.at((*it)[1].str()));
        last = static_cast<std::size_t>(it->position() + it->length());
    }
    out.append(tmpl, last, std::string::npos);
    return out;
}

const PromptRegistry& default_registry() {
    static const PromptRegistry reg;
    return reg;
}

std::string history_to_text(const DialogueHistory& h) {
    std::string out;
    for (const Turn& t : h.turns()) {
        if (!out.empty()) out += '\n';
        out += t.speaker == Speaker::System ? "Psychologist: " : "Inquirer: ";
        out += t.text;
    }
    return out;
}

std::string neutralize_markers(std::string_view s) {
    return std::regex_replace(std::string(s), marker_re(), "($1)");
}

std::string slot_set_json(const SymptomSet& slots) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (CriterionId c : kAllCriteria) {
        const SlotDetermination& d = slots[c];
        obj[std::string(display_name(c))] = {std::string(to_string(d.status())), d.rationale()};
    }
    return obj.dump();
}

std::string criteria_with_explanations(const std::vector<CriterionId>& criteria) {
    std::string out;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        out += '\n';
        out += std::to_string(i + 1) + ". " + std::string(display_name(criteria[i])) + ": " +
               std::string(explanation(criteria[i]));
    }
    return out;
}

std::string topic_explanation(CriterionId c) {
    return std::string(display_name(c)) + ": " + std::string(explanation(c));
}

}  // namespace upsd
