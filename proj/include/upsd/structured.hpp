#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "upsd/gateway.hpp"

namespace upsd {

// Normalized documents produced by extract_structured, per schema id:
//
//   coarse_choice      {"coarse": <CoarseStrategy enum name>, "why": str}
//   fine_choice        {"fine": <FineStrategy enum name>, "why": str}
//   topic_choice       {"topic": <CriterionId enum name>, "why": str}
//   symptom_set        {"slots": {<CriterionId enum name>: {"status": "True"|"False"|"Unknown",
//                                                           "why": str}} x 9}
//   eval_result        {"metric": str, "score": 1..5, "why": non-empty str}
//   likert_choice      {"label": str, "value": 1..5}
//   diagnosis_verdict  {"label": <severity string>, "why": non-empty str}
using StructuredDoc = nlohmann::json;

const std::vector<std::string>& schema_ids();
bool schema_registered(std::string_view schema_id);

/// One line restating the reply shape a schema expects.
std::string repair_instruction(std::string_view schema_id);

/// The first balanced {...} span in raw that parses as a JSON object.
std::optional<nlohmann::json> find_first_object(std::string_view raw);

/// Throws NoObjectFound, SchemaViolation or UnknownSchema. Pure.
StructuredDoc extract_structured(std::string_view raw, std::string_view schema_id);

struct StructuredResult {
    StructuredDoc doc;
    int attempts_used = 0;
    std::vector<std::string> raw_attempts;
};

/// Extra domain check run after schema validation; returns a violation
/// message to trigger a repair retry, or nullopt to accept.
using SemanticCheck = std::function<std::optional<std::string>(const StructuredDoc&)>;

/// complete + extract_structured with bounded repair-and-retry. Never makes
/// more than max_attempts backend calls. Gateway errors propagate unchanged;
/// running out of attempts throws StructuredOutputFailure.
StructuredResult complete_structured(ChatBackend& backend, ChatRequest req,
                                     std::string_view schema_id, int max_attempts,
                                     const SemanticCheck& check = {});

}  // namespace upsd
