#include "upsd/upm.hpp"

#include <spdlog/spdlog.h>

#include "upsd/errors.hpp"
#include "upsd/text.hpp"

namespace upsd::upm {

namespace {

std::string previous_topic_text(const std::optional<CriterionId>& prev) {
    return prev ? std::string(display_name(*prev)) : std::string("None");
}

std::string history_binding(const DialogueHistory& h) { return "\n" + history_to_text(h); }

std::string fine_option_text(FineStrategy f) {
    return std::string(display_name(f)) + ": " + std::string(explanation(f)) + " Example: \"" +
           std::string(example_utterance(f)) + "\"";
}

}  // namespace

std::string coarse_option_line(CoarseStrategy c) {
    switch (c) {
        case CoarseStrategy::FlowManagement:
            return "\"Flow Management\" when the Previous Topic and Current Topic are different.";
        case CoarseStrategy::Empathy:
            return "\"Empathetic Response\" when you decide to give comforting, feedback or guidance.";
        case CoarseStrategy::QuestioningSkill:
            return "\"Questioning Skill\" when you decide to proactively query to probe for "
                   "in-depth information.";
    }
    return {};
}

bool flow_management_allowed(const std::optional<CriterionId>& prev, CriterionId next) noexcept {
    return !prev || *prev != next;
}

CoarseSelection select_coarse(const Gateway& gw, const SelectionContext& ctx) {
    const std::vector<CoarseStrategy> order = shuffle_candidates(
        std::vector<CoarseStrategy>(kAllCoarse.begin(), kAllCoarse.end()), ctx.rng_seed, ctx.turn_index);

    CoarseSelection out;
    std::string options;
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.options.emplace_back(prompt_label(order[i]));
        if (i) options += '\n';
        options += std::to_string(i + 1) + ". " + coarse_option_line(order[i]);
    }

    const std::string prompt = gw.prompts.render(
        TemplateId::CoarseSelection,
        {{"PREVIOUS_TOPIC", previous_topic_text(ctx.prev_topic)},
         {"NEXT_TOPIC", std::string(display_name(ctx.next_topic))},
         {"COARSE_OPTIONS", options},
         {"TOPIC_EXPLANATION", topic_explanation(ctx.next_topic)},
         {"DIALOGUE_HISTORY", history_binding(ctx.history)},
         {"PREVIOUS_SLOT", slot_set_json(ctx.slots)}});

    const bool flow_ok = flow_management_allowed(ctx.prev_topic, ctx.next_topic);
    const SemanticCheck check = [flow_ok](const StructuredDoc& doc) -> std::optional<std::string> {
        if (!flow_ok && doc.at("coarse") == "FlowManagement")
            return "\"Flow Management\" is only allowed when the Previous Topic and Current Topic "
                   "are different, and they are the same here";
        return std::nullopt;
    };

    try {
        StructuredResult r =
            complete_structured(gw.backend, gw.request(prompt), "coarse_choice", gw.max_attempts, check);
        out.coarse = *parse_coarse(r.doc.at("coarse").get<std::string>());
        out.why = r.doc.at("why").get<std::string>();
    } catch (const StructuredOutputFailure& e) {
        spdlog::warn("coarse selection fell back to Questioning Skill: {}", e.what());
        out.coarse = CoarseStrategy::QuestioningSkill;
        out.why = "fallback: no valid coarse strategy from the model";
        out.fallback = true;
    }
    return out;
}

FineSelection select_fine(const Gateway& gw, const SelectionContext& ctx, CoarseStrategy coarse) {
    const std::vector<FineStrategy> members = family(coarse);
    const std::vector<FineStrategy> order = shuffle_candidates(members, ctx.rng_seed, ctx.turn_index);

    FineSelection out;
    std::vector<std::string> quoted;
    std::string explained;
    for (FineStrategy f : order) {
        out.options.emplace_back(display_name(f));
        quoted.push_back("\"" + std::string(display_name(f)) + "\"");
        explained += "\n" + fine_option_text(f);
    }

    const std::string prompt = gw.prompts.render(
        TemplateId::FineSelection,
        {{"NEXT_TOPIC", std::string(display_name(ctx.next_topic))},
         {"COARSE_STRATEGY", std::string(prompt_label(coarse))},
         {"FINE_STRATEGY_NAME", text::join(quoted, ", ")},
         {"FINE_STRATEGY_AND_EXPLANATION", explained},
         {"TOPIC_EXPLANATION", topic_explanation(ctx.next_topic)},
         {"DIALOGUE_HISTORY", history_binding(ctx.history)}});

    const SemanticCheck check = [coarse](const StructuredDoc& doc) -> std::optional<std::string> {
        auto f = parse_fine(doc.at("fine").get<std::string>());
        if (fine_to_coarse(*f) != coarse)
            return "\"" + std::string(display_name(*f)) + "\" is not a " +
                   std::string(prompt_label(coarse)) + " strategy";
        return std::nullopt;
    };

    try {
        StructuredResult r =
            complete_structured(gw.backend, gw.request(prompt), "fine_choice", gw.max_attempts, check);
        out.fine = *parse_fine(r.doc.at("fine").get<std::string>());
        out.why = r.doc.at("why").get<std::string>();
    } catch (const StructuredOutputFailure& e) {
        spdlog::warn("fine selection fell back to {}: {}", display_name(members.front()), e.what());
        out.fine = members.front();
        out.why = "fallback: no valid fine strategy from the model";
        out.fallback = true;
    }
    return out;
}

std::string generate_response(const Gateway& gw, const SelectionContext& ctx,
                              const StrategyChoice& choice) {
    if (fine_to_coarse(choice.fine) != choice.coarse)
        throw PreconditionViolation("strategy choice mixes families");
    const std::string prompt = gw.prompts.render(
        TemplateId::ResponseGeneration,
        {{"NEXT_TOPIC", std::string(display_name(ctx.next_topic))},
         {"FINE_STRATEGY_NAME", std::string(display_name(choice.fine))},
         {"FINE_STRATEGY_AND_EXPLANATION", "\n" + fine_option_text(choice.fine)},
         {"TOPIC_EXPLANATION", topic_explanation(ctx.next_topic)},
         {"DIALOGUE_HISTORY", history_binding(ctx.history)}});
    return gw.generate_text(prompt, "response generation");
}

std::string generate_response_ablation(const Gateway& gw, const SelectionContext& ctx) {
    const std::string prompt = gw.prompts.render(
        TemplateId::AblationResponse,
        {{"NEXT_TOPIC", std::string(display_name(ctx.next_topic))},
         {"TOPIC_EXPLANATION", topic_explanation(ctx.next_topic)},
         {"DIALOGUE_HISTORY", history_binding(ctx.history)}});
    return gw.generate_text(prompt, "ablation response generation");
}

}  // namespace upsd::upm
