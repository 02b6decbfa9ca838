#include "upsd/pipeline.hpp"

#include <spdlog/spdlog.h>

#include "upsd/errors.hpp"
#include "upsd/text.hpp"

namespace upsd {

std::string Gateway::generate_text(const std::string& prompt, std::string_view what) const {
    const ChatRequest req = request(prompt);
    for (int attempt = 1; attempt <= 2; ++attempt) {
        std::string out = text::unwrap_utterance(backend.complete(req).text);
        if (!out.empty()) return out;
        spdlog::warn("{}: empty generation on attempt {}", what, attempt);
    }
    throw EmptyGeneration(std::string(what) + ": model returned empty text twice");
}

}  // namespace upsd
