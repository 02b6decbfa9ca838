#include "upsd/structured.hpp"

#include <array>

#include "upsd/domain.hpp"
#include "upsd/errors.hpp"
#include "upsd/text.hpp"

namespace upsd {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<std::string_view, int>, 5> kLikertLabels = {{
    {"Strongly Disagree", 1},
    {"Disagree", 2},
    {"Neutral", 3},
    {"Agree", 4},
    {"Strongly Agree", 5},
}};

constexpr std::array<std::string_view, 4> kJudgeMetricNames = {"Discreetness", "Empathy",
                                                               "Coherence", "Fluency"};

// Case/punctuation-insensitive key lookup.
const json* find_key(const json& obj, std::string_view key) {
    if (!obj.is_object()) return nullptr;
    const std::string want = text::fold_label(key);
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (text::fold_label(it.key()) == want) return &it.value();
    return nullptr;
}

std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "True" : "False";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_null()) return "";
    return v.dump();
}

// Accepts ["LABEL", "why"], ["LABEL"], or a bare "LABEL".
std::pair<std::string, std::string> label_and_why(const json& v, const std::string& field) {
    if (v.is_string()) return {v.get<std::string>(), ""};
    if (v.is_array() && !v.empty() && v.size() <= 2) {
        std::string why = v.size() == 2 ? scalar_text(v[1]) : "";
        if (!v[0].is_string()) throw SchemaViolation(field, "first element must be a string");
        return {v[0].get<std::string>(), text::trim(why)};
    }
    throw SchemaViolation(field, "expected [\"LABEL\", \"WHY\"]");
}

const json& require(const json& obj, std::string_view key) {
    const json* v = find_key(obj, key);
    if (v == nullptr) throw SchemaViolation(std::string(key), "missing");
    return *v;
}

json validate_coarse(const json& obj) {
    auto [label, why] = label_and_why(require(obj, "Coarse Strategy"), "Coarse Strategy");
    auto c = parse_coarse(label);
    if (!c) throw SchemaViolation("Coarse Strategy", "'" + label + "' is not a coarse strategy");
    return json{{"coarse", enum_name(*c)}, {"why", why}};
}

json validate_fine(const json& obj) {
    const json* v = find_key(obj, "Fine-Grained Strategy");
    if (v == nullptr) v = find_key(obj, "Fine Strategy");
    if (v == nullptr) throw SchemaViolation("Fine-Grained Strategy", "missing");
    auto [label, why] = label_and_why(*v, "Fine-Grained Strategy");
    auto f = parse_fine(label);
    if (!f) throw SchemaViolation("Fine-Grained Strategy", "'" + label + "' is not a fine strategy");
    return json{{"fine", enum_name(*f)}, {"why", why}};
}

json validate_topic(const json& obj) {
    auto [label, why] = label_and_why(require(obj, "Topic"), "Topic");
    auto c = parse_criterion(label);
    if (!c) throw SchemaViolation("Topic", "'" + label + "' is not a diagnostic criterion");
    return json{{"topic", enum_name(*c)}, {"why", why}};
}

std::optional<SlotStatus> parse_slot_status(const json& v) {
    if (v.is_boolean()) return v.get<bool>() ? SlotStatus::Present : SlotStatus::Absent;
    if (v.is_null()) return SlotStatus::Unknown;
    if (!v.is_string()) return std::nullopt;
    const std::string f = text::fold_label(v.get<std::string>());
    if (f == "true" || f == "yes" || f == "present") return SlotStatus::Present;
    if (f == "false" || f == "no" || f == "absent") return SlotStatus::Absent;
    if (f.empty() || f == "unknown" || f == "bool" || f == "none" || f == "null")
        return SlotStatus::Unknown;
    return std::nullopt;
}

json validate_symptom_set(const json& obj) {
    const json* root = &obj;
    if (const json* inner = find_key(obj, "Symptom Set"); inner && inner->is_object()) root = inner;

    json slots = json::object();
    for (CriterionId c : kAllCriteria) {
        const json* v = nullptr;
        for (auto it = root->begin(); it != root->end(); ++it) {
            if (parse_criterion(it.key()) == c) {
                v = &it.value();
                break;
            }
        }
        const std::string field(display_name(c));
        if (v == nullptr) throw SchemaViolation(field, "missing");
        json status_value;
        std::string why;
        if (v->is_array() && !v->empty() && v->size() <= 2) {
            status_value = (*v)[0];
            if (v->size() == 2) why = text::trim(scalar_text((*v)[1]));
        } else if (v->is_string() || v->is_boolean() || v->is_null()) {
            status_value = *v;
        } else {
            throw SchemaViolation(field, "expected [\"True\"|\"False\", \"WHY\"]");
        }
        auto status = parse_slot_status(status_value);
        if (!status) throw SchemaViolation(field, "status must be True, False or Unknown");
        // An echoed placeholder is not a rationale.
        if (text::fold_label(why) == "why") why.clear();
        slots[std::string(enum_name(c))] = json{{"status", to_string(*status)}, {"why", why}};
    }
    return json{{"slots", std::move(slots)}};
}

std::optional<int> int_value(const json& v) {
    if (v.is_number_integer()) return static_cast<int>(v.get<long long>());
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (d == static_cast<double>(static_cast<int>(d))) return static_cast<int>(d);
        return std::nullopt;
    }
    if (v.is_string()) {
        const std::string t = text::trim(v.get<std::string>());
        if (t.size() == 1 && t[0] >= '0' && t[0] <= '9') return t[0] - '0';
    }
    return std::nullopt;
}

json validate_eval(const json& obj) {
    const json* root = find_key(obj, "Evaluation Result");
    if (root == nullptr) root = &obj;
    if (!root->is_object() || root->size() != 1)
        throw SchemaViolation("Evaluation Result", "expected exactly one metric entry");
    const std::string key = root->begin().key();
    std::string metric;
    for (auto name : kJudgeMetricNames)
        if (text::fold_label(name) == text::fold_label(key)) metric = std::string(name);
    if (metric.empty()) throw SchemaViolation("Evaluation Result", "unknown metric '" + key + "'");
    const json& v = root->begin().value();
    if (!v.is_array() || v.size() != 2) throw SchemaViolation(metric, "expected [INT, \"WHY\"]");
    auto score = int_value(v[0]);
    if (!score) throw SchemaViolation(metric, "score is not an integer");
    if (*score < 1 || *score > 5)
        throw SchemaViolation(metric, "score " + std::to_string(*score) + " outside 1..5");
    std::string why = text::trim(scalar_text(v[1]));
    if (why.empty()) throw SchemaViolation(metric, "empty reason");
    return json{{"metric", metric}, {"score", *score}, {"why", why}};
}

json validate_likert(const json& obj) {
    if (obj.size() != 1) throw SchemaViolation("Likert", "expected a single {\"LABEL\": N} pair");
    const std::string key = obj.begin().key();
    for (const auto& [label, value] : kLikertLabels) {
        if (text::fold_label(label) == text::fold_label(key))
            return json{{"label", label}, {"value", value}};
    }
    throw SchemaViolation("Likert", "'" + key + "' is not a Likert option");
}

json validate_verdict(const json& obj) {
    auto [label, why] = label_and_why(require(obj, "Diagnosis"), "Diagnosis");
    auto s = parse_severity(label);
    if (!s) throw SchemaViolation("Diagnosis", "'" + label + "' is not a severity level");
    if (why.empty()) throw SchemaViolation("Diagnosis", "empty reason");
    return json{{"label", to_string(*s)}, {"why", why}};
}

struct SchemaEntry {
    std::string_view id;
    json (*validate)(const json&);
    std::string_view repair;
};

constexpr std::array<SchemaEntry, 7> kSchemas = {{
    {"coarse_choice", validate_coarse,
     R"(Reply with only this JSON object and nothing else: {"Coarse Strategy": ["STRATEGY", "WHY"]} where STRATEGY is one of the listed Coarse Strategies.)"},
    {"fine_choice", validate_fine,
     R"(Reply with only this JSON object and nothing else: {"Fine-Grained Strategy": ["STRATEGY", "WHY"]} where STRATEGY is one of the listed Fine Strategies.)"},
    {"topic_choice", validate_topic,
     R"(Reply with only this JSON object and nothing else: {"Topic": ["TOPIC", "WHY"]} where TOPIC is one of the candidate Topics.)"},
    {"symptom_set", validate_symptom_set,
     R"(Reply with only the JSON Symptom Set: an object with all 9 symptom names as keys, each mapped to ["True" | "False" | "Unknown", "WHY"].)"},
    {"eval_result", validate_eval,
     R"(Reply with only this JSON object and nothing else: {"Evaluation Result": {"METRIC": [SCORE, "WHY"]}} with SCORE an integer from 1 to 5.)"},
    {"likert_choice", validate_likert,
     R"(Reply with only one of {"Strongly Disagree": 1}, {"Disagree": 2}, {"Neutral": 3}, {"Agree": 4}, {"Strongly Agree": 5}.)"},
    {"diagnosis_verdict", validate_verdict,
     R"(Reply with only this JSON object and nothing else: {"Diagnosis": ["LEVEL", "WHY"]} where LEVEL is one of "non-depression", "mild", "moderate", "severe".)"},
}};

const SchemaEntry& schema(std::string_view id) {
    for (const auto& s : kSchemas)
        if (s.id == id) return s;
    throw UnknownSchema("no structured schema named '" + std::string(id) + "'");
}

// End index (inclusive) of the object opening at `open`, honoring JSON strings.
std::optional<std::size_t> balanced_end(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i;
    }
    return std::nullopt;
}

}  // namespace

const std::vector<std::string>& schema_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> out;
        for (const auto& s : kSchemas) out.emplace_back(s.id);
        return out;
    }();
    return ids;
}

bool schema_registered(std::string_view id) {
    for (const auto& s : kSchemas)
        if (s.id == id) return true;
    return false;
}

std::string repair_instruction(std::string_view schema_id) {
    return std::string(schema(schema_id).repair);
}

std::optional<json> find_first_object(std::string_view raw) {
    for (std::size_t i = raw.find('{'); i != std::string_view::npos; i = raw.find('{', i + 1)) {
        auto end = balanced_end(raw, i);
        if (!end) continue;
        json parsed = json::parse(raw.substr(i, *end - i + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    return std::nullopt;
}

StructuredDoc extract_structured(std::string_view raw, std::string_view schema_id) {
    const SchemaEntry& entry = schema(schema_id);
    auto obj = find_first_object(raw);
    if (!obj) throw NoObjectFound("no JSON object in reply");
    return entry.validate(*obj);
}

StructuredResult complete_structured(ChatBackend& backend, ChatRequest req,
                                     std::string_view schema_id, int max_attempts,
                                     const SemanticCheck& check) {
    if (max_attempts < 1) throw PreconditionViolation("max_attempts must be >= 1");
    const std::string repair = repair_instruction(schema_id);

    StructuredResult result;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        ChatResponse resp = backend.complete(req);
        result.raw_attempts.push_back(resp.text);
        try {
            StructuredDoc doc = extract_structured(resp.text, schema_id);
            std::optional<std::string> violation = check ? check(doc) : std::nullopt;
            if (!violation) {
                result.doc = std::move(doc);
                result.attempts_used = attempt;
                return result;
            }
            last_error = *violation;
        } catch (const NoObjectFound& e) {
            last_error = e.what();
        } catch (const SchemaViolation& e) {
            last_error = e.what();
        }
        req.messages.push_back({Role::Assistant, resp.text});
        req.messages.push_back({Role::User, "Your previous reply was rejected: " + last_error +
                                                ". " + repair});
    }
    throw StructuredOutputFailure(std::string(schema_id), std::move(result.raw_attempts),
                                  last_error);
}

}  // namespace upsd
