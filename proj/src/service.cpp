#include "upsd/service.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "upsd/errors.hpp"

namespace upsd {

using nlohmann::json;

namespace {

struct LiveSession {
    std::mutex turn;
    SessionEngine engine;
    bool persisted = false;

    LiveSession(const Runtime& rt, SessionRecord header)
        : engine(rt, std::move(header), make_backend(rt.config().actor_backend)) {}
};

json slot_rows(const SymptomSet& slots) {
    json rows = json::array();
    for (CriterionId c : kAllCriteria)
        rows.push_back({{"criterion", std::string(display_name(c))},
                        {"status", std::string(to_string(slots[c].status()))}});
    return rows;
}

json state_of(const SessionEngine& e, int max_pairs) {
    const SessionRecord& r = e.record();
    json turns = json::array();
    for (const Turn& t : r.history.turns()) {
        json jt{{"idx", t.index}, {"speaker", std::string(to_string(t.speaker))}, {"text", t.text}};
        if (t.annotation) {
            const TurnAnnotation& a = *t.annotation;
            json ja{{"topic", std::string(display_name(a.topic))}, {"rationales", a.rationales}, {"flags", a.flags}};
            if (std::find(a.flags.begin(), a.flags.end(), "ablation") == a.flags.end()) {
                ja["coarse"] = std::string(prompt_label(a.coarse));
                ja["fine"] = std::string(display_name(a.fine));
            }
            jt["annotation"] = std::move(ja);
        }
        turns.push_back(std::move(jt));
    }
    json out{{"session_id", r.session_id},
             {"stigma", r.stigma_mode},
             {"turns", std::move(turns)},
             {"slots", slot_rows(e.slots())},
             {"complete", e.complete()},
             {"pairs_used", r.pairs_used},
             {"max_pairs", max_pairs}};
    if (r.verdict) out["verdict"] = std::string(to_string(*r.verdict));
    if (r.abort_reason) out["aborted"] = *r.abort_reason;
    return out;
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& detail) {
    send_json(res, status, {{"error", code}, {"detail", detail}});
}

}  // namespace

struct ChatService::Impl {
    const Runtime& rt;
    httplib::Server server;
    std::thread thread;
    std::mutex mu;
    std::map<std::string, std::shared_ptr<LiveSession>> sessions;
    int counter = 0;
    bool stopped = false;

    explicit Impl(const Runtime& r) : rt(r) {
        // httplib's default sets SO_REUSEPORT, which lets a second server share the port.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        routes();
    }

    std::filesystem::path dir() const { return std::filesystem::path(rt.config().out_dir) / "live"; }

    void persist(LiveSession& s) {
        save_record(dir(), s.engine.record());
        s.persisted = true;
    }

    std::shared_ptr<LiveSession> find(const std::string& id) {
        std::lock_guard lock(mu);
        auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    void routes() {
        server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            bool stigma = false;
            if (!req.body.empty()) {
                const json body = json::parse(req.body, nullptr, false);
                if (body.is_discarded() || !body.is_object())
                    return send_error(res, 400, "invalid_value", "request body must be a JSON object");
                stigma = body.value("stigma", false);
            }
            SessionRecord header;
            {
                std::lock_guard lock(mu);
                char label[32];
                std::snprintf(label, sizeof label, "live-%04d", ++counter);
                header.profile_id = "human";
                header.session_id = make_session_id(label, stigma, rt.config().ablation, rt.config().seed);
            }
            header.stigma_mode = stigma;
            header.ablation = rt.config().ablation;
            header.seed = rt.config().seed;
            header.config_hash = rt.hash();
            auto s = std::make_shared<LiveSession>(rt, std::move(header));
            const std::string id = s->engine.record().session_id;
            {
                std::lock_guard lock(mu);
                sessions[id] = s;
            }
            send_json(res, 201, {{"session_id", id}, {"greeting", rt.config().greeting}});
        });

        server.Post(R"(/sessions/([^/]+)/message)", [this](const httplib::Request& req, httplib::Response& res) {
            auto s = find(req.matches[1]);
            if (!s) return send_error(res, 404, "not_found", "no such session");
            std::unique_lock turn(s->turn, std::try_to_lock);
            if (!turn.owns_lock())
                return send_error(res, 409, "turn_in_flight", "the previous message is still being processed");
            if (s->engine.complete())
                return send_error(res, 409, "session_complete", "this session has ended");
            const json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string())
                return send_error(res, 400, "invalid_value", "expected {\"text\": string}");
            const std::string text = body["text"].get<std::string>();
            if (text.find_first_not_of(" \t\r\n") == std::string::npos)
                return send_error(res, 400, "invalid_value", "message text is empty");

            SessionEngine::Step step;
            try {
                step = s->engine.user_turn(text);
            } catch (const Error& e) {
                spdlog::warn("live session {} aborted: {}", s->engine.record().session_id, e.what());
                s->engine.abort(e.code() + ": " + e.what());
                persist(*s);
                return send_error(res, 502, e.code(), e.what());
            }
            if (step.complete) persist(*s);
            const SessionRecord& r = s->engine.record();
            json out{{"reply", step.reply ? *step.reply : rt.config().closing},
                     {"slots", slot_rows(s->engine.slots())},
                     {"complete", step.complete}};
            if (r.verdict) out["verdict"] = std::string(to_string(*r.verdict));
            send_json(res, 200, out);
        });

        server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            auto s = find(req.matches[1]);
            if (!s) return send_error(res, 404, "not_found", "no such session");
            std::lock_guard turn(s->turn);
            send_json(res, 200, state_of(s->engine, rt.config().max_pairs));
        });

        server.Delete(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            std::shared_ptr<LiveSession> s;
            {
                std::lock_guard lock(mu);
                auto it = sessions.find(req.matches[1]);
                if (it == sessions.end()) return send_error(res, 404, "not_found", "no such session");
                s = it->second;
                sessions.erase(it);
            }
            std::lock_guard turn(s->turn);
            persist(*s);
            send_json(res, 200, {{"session_id", s->engine.record().session_id}, {"persisted", true}});
        });

        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const Error& e) {
                send_error(res, 400, e.code(), e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        });
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "not_found" : "http_error", "");
        });
    }

    void persist_open() {
        std::map<std::string, std::shared_ptr<LiveSession>> open;
        {
            std::lock_guard lock(mu);
            open.swap(sessions);
        }
        for (auto& [id, s] : open) {
            std::lock_guard turn(s->turn);
            if (!s->persisted) persist(*s);
        }
    }
};

ChatService::ChatService(const Runtime& rt) : impl_(std::make_unique<Impl>(rt)) {}

ChatService::~ChatService() { stop(); }

int ChatService::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) bound = impl_->server.bind_to_any_port(host);
    else if (!impl_->server.bind_to_port(host, port)) bound = -1;
    if (bound <= 0) throw BindError("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    spdlog::info("chat service listening on {}:{}", host, bound);
    return bound;
}

void ChatService::stop() {
    {
        std::lock_guard lock(impl_->mu);
        if (impl_->stopped) return;
        impl_->stopped = true;
    }
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
    impl_->persist_open();
}

std::filesystem::path ChatService::record_dir() const { return impl_->dir(); }

}  // namespace upsd
