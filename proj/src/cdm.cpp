#include "upsd/cdm.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "upsd/errors.hpp"
#include "upsd/text.hpp"

namespace upsd::cdm {

namespace {

std::vector<CriterionId> all_criteria() { return {kAllCriteria.begin(), kAllCriteria.end()}; }

std::string fit_rationale(std::string why) {
    why = text::trim(why);
    if (why.empty()) return "no reason given";
    if (why.size() > kMaxRationaleLength) why.resize(kMaxRationaleLength);
    return why;
}

}  // namespace

std::string_view to_string(CompletionStatus s) noexcept {
    switch (s) {
        case CompletionStatus::Continue: return "continue";
        case CompletionStatus::DiagnoseNow: return "diagnose_now";
        case CompletionStatus::FailedTurnCap: return "failed_turn_cap";
    }
    return "";
}

SlotUpdate update_slots(const Gateway& gw, const SymptomSet& slots, const DialogueHistory& history) {
    if (history.empty() || history.back().speaker != Speaker::User)
        throw PreconditionViolation("update_slots needs a history ending with a user turn");

    const std::string prompt = gw.prompts.render(
        TemplateId::SlotFilling,
        {{"PREVIOUS_SLOT", slot_set_json(slots)},
         {"DESIGNED_SLOT_AND_EXPLANATION", criteria_with_explanations(all_criteria())},
         {"DIALOGUE_HISTORY", "\n" + history_to_text(history)}});

    SlotUpdate out{slots, false, {}};
    StructuredResult r;
    try {
        r = complete_structured(gw.backend, gw.request(prompt), "symptom_set", gw.max_attempts);
    } catch (const StructuredOutputFailure& e) {
        spdlog::warn("slot update skipped: {}", e.what());
        out.extraction_failed = true;
        return out;
    }

    const auto& doc_slots = r.doc.at("slots");
    for (CriterionId c : kAllCriteria) {
        const auto& entry = doc_slots.at(std::string(enum_name(c)));
        const std::string status = entry.at("status").get<std::string>();
        if (status == "Unknown") continue;
        const SlotStatus s = status == "True" ? SlotStatus::Present : SlotStatus::Absent;
        if (slots[c].status() == s) continue;
        try {
            out.slots = out.slots.set_slot(c, SlotDetermination(s, fit_rationale(entry.at("why").get<std::string>())));
        } catch (const ConflictingDetermination& e) {
            spdlog::info("discarding slot change: {}", e.what());
            out.conflicts.push_back(c);
        }
    }
    return out;
}

std::vector<CriterionId> candidate_topics(const SymptomSet& slots,
                                          const std::optional<CriterionId>& prev_topic) {
    std::vector<CriterionId> out;
    for (CriterionId c : kAllCriteria)
        if (!slots[c].determined() || (prev_topic && *prev_topic == c)) out.push_back(c);
    return out;
}

TopicChoice select_criterion(const Gateway& gw, const SymptomSet& slots,
                             const DialogueHistory& history,
                             const std::optional<CriterionId>& prev_topic) {
    const std::vector<CriterionId> open = slots.unfilled();
    if (open.empty()) throw PreconditionViolation("select_criterion called with every slot filled");
    const std::vector<CriterionId> candidates = candidate_topics(slots, prev_topic);

    std::vector<std::string> quoted;
    for (CriterionId c : candidates) quoted.push_back("\"" + std::string(display_name(c)) + "\"");

    const std::string prompt = gw.prompts.render(
        TemplateId::SlotSelecting,
        {{"PREVIOUS_TOPIC", prev_topic ? std::string(display_name(*prev_topic)) : "None"},
         {"CANDIDATE_TOPIC", "[" + text::join(quoted, ", ") + "]"},
         {"TOPIC_EXPLANATIONS", criteria_with_explanations(candidates)},
         {"DIALOGUE_HISTORY", "\n" + history_to_text(history)},
         {"PREVIOUS_SLOT", slot_set_json(slots)}});

    const SemanticCheck check = [&candidates](const StructuredDoc& doc) -> std::optional<std::string> {
        auto c = parse_criterion(doc.at("topic").get<std::string>());
        if (std::find(candidates.begin(), candidates.end(), *c) == candidates.end())
            return "\"" + std::string(display_name(*c)) + "\" is not one of the candidate Topics";
        return std::nullopt;
    };

    try {
        StructuredResult r =
            complete_structured(gw.backend, gw.request(prompt), "topic_choice", gw.max_attempts, check);
        return TopicChoice{*parse_criterion(r.doc.at("topic").get<std::string>()),
                           r.doc.at("why").get<std::string>(), false};
    } catch (const StructuredOutputFailure& e) {
        spdlog::warn("topic selection fell back to {}: {}", display_name(open.front()), e.what());
        return TopicChoice{open.front(), "fallback: first unfilled criterion", true};
    }
}

CompletionStatus completion_status(const SymptomSet& slots, int pairs_used, int max_pairs) {
    if (max_pairs < 1 || pairs_used < 0 || pairs_used > max_pairs)
        throw PreconditionViolation("completion_status needs 0 <= pairs_used <= max_pairs");
    if (slots.complete()) return CompletionStatus::DiagnoseNow;
    if (pairs_used == max_pairs) return CompletionStatus::FailedTurnCap;
    return CompletionStatus::Continue;
}

Verdict assess_diagnosis(const Gateway& gw, const SymptomSet& slots, const DialogueHistory& history) {
    if (!slots.complete())
        throw PreconditionViolation("diagnosis requires every slot to be determined");
    const std::string prompt = gw.prompts.render(
        TemplateId::DiagnosisVerdict,
        {{"DESIGNED_SLOT_AND_EXPLANATION", criteria_with_explanations(all_criteria())},
         {"PREVIOUS_SLOT", slot_set_json(slots)},
         {"DIALOGUE_HISTORY", "\n" + history_to_text(history)}});
    StructuredResult r =
        complete_structured(gw.backend, gw.request(prompt), "diagnosis_verdict", gw.max_attempts);
    return Verdict{*parse_severity(r.doc.at("label").get<std::string>()),
                   r.doc.at("why").get<std::string>()};
}

}  // namespace upsd::cdm
