#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "upsd/domain.hpp"
#include "upsd/pipeline.hpp"
#include "upsd/rng.hpp"

// Unobtrusive probing: two-stage strategy selection (coarse, then fine inside
// the chosen family) and strategy-conditioned response generation.
namespace upsd::upm {

struct SelectionContext {
    const DialogueHistory& history;
    const SymptomSet& slots;
    std::optional<CriterionId> prev_topic;
    CriterionId next_topic;
    std::int64_t rng_seed = kDefaultSeed;
    /// Keys the candidate shuffles; the runner passes the pair index.
    std::int64_t turn_index = 0;
};

struct CoarseSelection {
    CoarseStrategy coarse{};
    std::string why;
    bool fallback = false;
    std::vector<std::string> options;  // order shown to the model
};

struct FineSelection {
    FineStrategy fine{};
    std::string why;
    bool fallback = false;
    std::vector<std::string> options;
};

struct StrategyChoice {
    CoarseStrategy coarse{};
    FineStrategy fine{};
    std::string coarse_why;
    std::string fine_why;
};

/// Option line for a coarse strategy as listed in the selection prompt.
std::string coarse_option_line(CoarseStrategy c);

/// FlowManagement is legal only when the topic changes.
bool flow_management_allowed(const std::optional<CriterionId>& prev, CriterionId next) noexcept;

CoarseSelection select_coarse(const Gateway& gw, const SelectionContext& ctx);
FineSelection select_fine(const Gateway& gw, const SelectionContext& ctx, CoarseStrategy coarse);

/// Throws PreconditionViolation if choice.fine is not in choice.coarse's family.
std::string generate_response(const Gateway& gw, const SelectionContext& ctx,
                              const StrategyChoice& choice);

/// Strategy-free variant used for the ablation condition.
std::string generate_response_ablation(const Gateway& gw, const SelectionContext& ctx);

}  // namespace upsd::upm
