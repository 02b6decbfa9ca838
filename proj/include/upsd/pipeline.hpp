#pragma once

#include <cstdint>
#include <string>

#include "upsd/gateway.hpp"
#include "upsd/prompts.hpp"
#include "upsd/structured.hpp"

namespace upsd {

// What every model-backed step needs: a backend, the template set and the
// decoding settings of the run.
struct Gateway {
    ChatBackend& backend;
    const PromptRegistry& prompts = default_registry();
    double temperature = kDefaultTemperature;
    std::int64_t seed = kDefaultSeed;
    /// Structured calls: first attempt plus one repair retry.
    int max_attempts = 2;

    ChatRequest request(std::string prompt) const {
        return ChatRequest::from_prompt(std::move(prompt), temperature, seed);
    }

    /// Free-text completion; an empty (after unwrapping) reply is retried
    /// once, then EmptyGeneration.
    std::string generate_text(const std::string& prompt, std::string_view what) const;
};

}  // namespace upsd
