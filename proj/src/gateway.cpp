#include "upsd/gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>

#include <httplib.h>

#include "upsd/errors.hpp"
#include "upsd/text.hpp"

namespace upsd {

using nlohmann::json;

std::string_view to_string(Role r) noexcept {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

ChatRequest ChatRequest::from_prompt(std::string prompt, double temperature, std::int64_t seed) {
    ChatRequest req;
    req.messages.push_back({Role::User, std::move(prompt)});
    req.temperature = temperature;
    req.seed = seed;
    return req;
}

void ChatRequest::validate() const {
    if (messages.empty()) throw PreconditionViolation("chat request has no messages");
    if (temperature < 0.0) throw PreconditionViolation("temperature must be >= 0");
    if (max_tokens <= 0) throw PreconditionViolation("max_tokens must be positive");
}

std::string ChatRequest::rendered_prompt() const {
    std::string out;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (i) out += "\n\n";
        out += messages[i].content;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spec (de)serialization
// ---------------------------------------------------------------------------

namespace {

ScriptedFixture fixture_from_json(const json& j) {
    ScriptedFixture f;
    if (!j.is_object()) throw ConfigError("fixture entries must be objects");
    if (j.contains("match")) {
        const json& m = j.at("match");
        if (m.is_string()) {
            f.all_of.push_back(m.get<std::string>());
        } else if (m.is_array()) {
            for (const auto& s : m) f.all_of.push_back(s.get<std::string>());
        } else {
            throw ConfigError("fixture 'match' must be a string or a list of strings");
        }
    }
    if (j.contains("pattern")) f.pattern = j.at("pattern").get<std::string>();
    if (!j.contains("reply")) throw ConfigError("fixture without 'reply'");
    f.reply = j.at("reply").get<std::string>();
    f.repeat = j.value("repeat", false);
    if (f.all_of.empty() && !f.pattern) throw ConfigError("fixture needs 'match' or 'pattern'");
    return f;
}

ScriptedSpec scripted_from_json(const json& j, const std::filesystem::path& base_dir) {
    ScriptedSpec spec;
    spec.id = j.value("id", std::string("scripted"));
    if (j.contains("fixture_file")) {
        std::filesystem::path p = j.at("fixture_file").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        ScriptedSpec loaded = load_scripted_spec(p);
        if (!j.contains("id")) spec.id = loaded.id;
        spec.fixtures = std::move(loaded.fixtures);
    }
    if (j.contains("fixtures"))
        for (const auto& f : j.at("fixtures")) spec.fixtures.push_back(fixture_from_json(f));
    return spec;
}

}  // namespace

ScriptedSpec load_scripted_spec(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open fixture file " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("fixture file " + file.string() + ": " + e.what());
    }
    if (j.is_array()) j = json{{"fixtures", j}};
    return scripted_from_json(j, file.parent_path());
}

BackendSpec backend_spec_from_json(const json& j, const std::filesystem::path& base_dir) {
    const std::string kind = j.value("kind", std::string());
    if (kind == "scripted") return scripted_from_json(j, base_dir);
    if (kind != "http_chat") throw ConfigError("backend kind must be http_chat or scripted");

    HttpChatSpec spec;
    spec.base_url = j.value("base_url", std::string());
    spec.model_name = j.value("model", std::string());
    spec.api_key_env = j.value("api_key_env", std::string());
    spec.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    if (spec.base_url.empty()) throw ConfigError("http_chat backend needs base_url");
    if (spec.model_name.empty()) throw ConfigError("http_chat backend needs model");
    if (j.contains("adapter")) {
        const json& a = j.at("adapter");
        auto pick = [&](const char* key, std::string& field) {
            if (a.contains(key)) field = a.at(key).get<std::string>();
        };
        pick("model_field", spec.adapter.model_field);
        pick("messages_field", spec.adapter.messages_field);
        pick("role_field", spec.adapter.role_field);
        pick("content_field", spec.adapter.content_field);
        pick("temperature_field", spec.adapter.temperature_field);
        pick("seed_field", spec.adapter.seed_field);
        pick("max_tokens_field", spec.adapter.max_tokens_field);
        pick("reply_pointer", spec.adapter.reply_pointer);
        pick("auth_header", spec.adapter.auth_header);
        pick("auth_prefix", spec.adapter.auth_prefix);
    }
    return spec;
}

json backend_spec_to_json(const BackendSpec& spec) {
    if (const auto* h = std::get_if<HttpChatSpec>(&spec)) {
        const ProviderAdapter& a = h->adapter;
        return json{{"kind", "http_chat"},
                    {"base_url", h->base_url},
                    {"model", h->model_name},
                    {"api_key_env", h->api_key_env},
                    {"timeout_ms", h->timeout.count()},
                    {"adapter",
                     {{"model_field", a.model_field},
                      {"messages_field", a.messages_field},
                      {"role_field", a.role_field},
                      {"content_field", a.content_field},
                      {"temperature_field", a.temperature_field},
                      {"seed_field", a.seed_field},
                      {"max_tokens_field", a.max_tokens_field},
                      {"reply_pointer", a.reply_pointer},
                      {"auth_header", a.auth_header},
                      {"auth_prefix", a.auth_prefix}}}};
    }
    const auto& s = std::get<ScriptedSpec>(spec);
    json fixtures = json::array();
    for (const auto& f : s.fixtures) {
        json e{{"match", f.all_of}, {"reply", f.reply}, {"repeat", f.repeat}};
        if (f.pattern) e["pattern"] = *f.pattern;
        fixtures.push_back(std::move(e));
    }
    return json{{"kind", "scripted"}, {"id", s.id}, {"fixtures", std::move(fixtures)}};
}

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(ScriptedSpec spec)
    : spec_(std::move(spec)), consumed_(spec_.fixtures.size(), false) {}

ChatResponse ScriptedBackend::complete(const ChatRequest& req) {
    req.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::string prompt = req.rendered_prompt();

    std::lock_guard lock(mu_);
    prompts_.push_back(prompt);
    for (std::size_t i = 0; i < spec_.fixtures.size(); ++i) {
        if (consumed_[i]) continue;
        const ScriptedFixture& f = spec_.fixtures[i];
        bool hit = true;
        for (const auto& needle : f.all_of) {
            if (!text::contains(prompt, needle)) {
                hit = false;
                break;
            }
        }
        if (hit && f.pattern) hit = std::regex_search(prompt, std::regex(*f.pattern));
        if (!hit) continue;
        if (!f.repeat) consumed_[i] = true;
        return ChatResponse{f.reply, spec_.id,
                            std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - start)};
    }
    std::string head = prompt.substr(0, 160);
    throw FixtureExhausted("no unconsumed fixture matches prompt starting: " + head);
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mu_);
    return prompts_.size();
}

std::vector<std::string> ScriptedBackend::prompts() const {
    std::lock_guard lock(mu_);
    return prompts_;
}

// ---------------------------------------------------------------------------
// HTTP chat-completion backend
// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpChatSpec spec) : spec_(std::move(spec)) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(spec_.base_url, m, url_re))
        throw ConfigError("base_url must look like http(s)://host[:port]/path: " + spec_.base_url);
    scheme_host_port_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
}

json HttpChatBackend::build_body(const ChatRequest& req) const {
    const ProviderAdapter& a = spec_.adapter;
    json messages = json::array();
    for (const auto& msg : req.messages)
        messages.push_back(json{{a.role_field, to_string(msg.role)}, {a.content_field, msg.content}});
    json body;
    body[a.model_field] = spec_.model_name;
    body[a.messages_field] = std::move(messages);
    body[a.temperature_field] = req.temperature;
    if (!a.seed_field.empty()) body[a.seed_field] = req.seed;
    body[a.max_tokens_field] = req.max_tokens;
    return body;
}

ChatResponse HttpChatBackend::complete(const ChatRequest& req) {
    req.validate();
    const char* key = spec_.api_key_env.empty() ? nullptr : std::getenv(spec_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
        throw ProviderError("API key environment variable '" + spec_.api_key_env + "' is not set");

    const auto start = std::chrono::steady_clock::now();
    httplib::Client cli(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec_.timeout);
    cli.set_connection_timeout(secs);
    cli.set_read_timeout(secs);
    cli.set_write_timeout(secs);

    httplib::Headers headers{{spec_.adapter.auth_header, spec_.adapter.auth_prefix + key}};
    auto res = cli.Post(path_, headers, build_body(req).dump(), "application/json");
    if (!res) throw TransportError("POST " + spec_.base_url + ": " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw ProviderError("status " + std::to_string(res->status) + ": " + res->body);

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw ProviderError("reply body is not JSON: " + res->body);
    const json::json_pointer ptr(spec_.adapter.reply_pointer);
    if (!reply.contains(ptr) || !reply.at(ptr).is_string())
        throw ProviderError("reply has no text at " + spec_.adapter.reply_pointer + ": " + res->body);
    std::string content = reply.at(ptr).get<std::string>();
    if (content.empty()) throw ProviderError("provider returned empty content: " + res->body);

    return ChatResponse{std::move(content), id(),
                        std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)};
}

std::unique_ptr<ChatBackend> make_backend(const BackendSpec& spec) {
    if (const auto* h = std::get_if<HttpChatSpec>(&spec)) return std::make_unique<HttpChatBackend>(*h);
    return std::make_unique<ScriptedBackend>(std::get<ScriptedSpec>(spec));
}

}  // namespace upsd
