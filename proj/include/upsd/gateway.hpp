#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace upsd {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r) noexcept;

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

inline constexpr double kDefaultTemperature = 0.0;
inline constexpr std::int64_t kDefaultSeed = 42;
inline constexpr int kDefaultMaxTokens = 512;

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = kDefaultTemperature;
    std::int64_t seed = kDefaultSeed;
    int max_tokens = kDefaultMaxTokens;

    /// Single user message carrying a rendered prompt.
    static ChatRequest from_prompt(std::string prompt, double temperature = kDefaultTemperature,
                                   std::int64_t seed = kDefaultSeed);

    /// Throws PreconditionViolation on an empty message list, negative
    /// temperature or non-positive max_tokens.
    void validate() const;

    /// All message contents joined by blank lines; what scripted matchers see.
    std::string rendered_prompt() const;
};

struct ChatResponse {
    std::string text;
    std::string backend_id;
    std::chrono::milliseconds latency{0};
};

// Field names of the chat-completion wire body. Defaults follow the common
// OpenAI-compatible shape; other providers override individual entries.
struct ProviderAdapter {
    std::string model_field = "model";
    std::string messages_field = "messages";
    std::string role_field = "role";
    std::string content_field = "content";
    std::string temperature_field = "temperature";
    std::string seed_field = "seed";  // empty: do not send
    std::string max_tokens_field = "max_tokens";
    std::string reply_pointer = "/choices/0/message/content";
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
};

struct HttpChatSpec {
    std::string base_url;  // full endpoint URL, e.g. https://host/v1/chat/completions
    std::string model_name;
    std::string api_key_env;
    std::chrono::milliseconds timeout{60000};
    ProviderAdapter adapter;
};

struct ScriptedFixture {
    /// Every entry must occur in the rendered prompt.
    std::vector<std::string> all_of;
    /// Optional ECMAScript pattern searched in the rendered prompt.
    std::optional<std::string> pattern;
    std::string reply;
    /// A repeating fixture is never consumed.
    bool repeat = false;
};

struct ScriptedSpec {
    std::string id = "scripted";
    std::vector<ScriptedFixture> fixtures;
};

using BackendSpec = std::variant<HttpChatSpec, ScriptedSpec>;

/// Reads {"kind": "http_chat" | "scripted", ...}. A scripted spec may point
/// to "fixture_file" (resolved against base_dir) instead of inline fixtures.
BackendSpec backend_spec_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
nlohmann::json backend_spec_to_json(const BackendSpec& spec);
ScriptedSpec load_scripted_spec(const std::filesystem::path& file);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
    virtual std::string id() const = 0;
};

// Deterministic fixture replay: declaration order, first unconsumed match wins.
class ScriptedBackend final : public ChatBackend {
public:
    explicit ScriptedBackend(ScriptedSpec spec);

    ChatResponse complete(const ChatRequest& req) override;
    std::string id() const override { return spec_.id; }

    std::size_t calls() const;
    std::vector<std::string> prompts() const;

private:
    ScriptedSpec spec_;
    mutable std::mutex mu_;
    std::vector<bool> consumed_;
    std::vector<std::string> prompts_;
};

class HttpChatBackend final : public ChatBackend {
public:
    explicit HttpChatBackend(HttpChatSpec spec);

    ChatResponse complete(const ChatRequest& req) override;
    std::string id() const override { return "http:" + spec_.model_name; }

    /// The request body this backend would POST.
    nlohmann::json build_body(const ChatRequest& req) const;

private:
    HttpChatSpec spec_;
    std::string scheme_host_port_;
    std::string path_;
};

std::unique_ptr<ChatBackend> make_backend(const BackendSpec& spec);

inline ChatResponse complete(ChatBackend& backend, const ChatRequest& req) {
    return backend.complete(req);
}

}  // namespace upsd
