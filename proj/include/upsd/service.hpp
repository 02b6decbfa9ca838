#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "upsd/runner.hpp"

namespace upsd {

// HTTP chat service: a human takes the simulator's place in the same
// per-turn pipeline.
//
//   POST   /sessions               {stigma}  -> {session_id, greeting}
//   POST   /sessions/{id}/message  {text}    -> {reply, slots, complete, verdict?}
//   GET    /sessions/{id}                    -> full state
//   DELETE /sessions/{id}                    -> persisted and closed
//
// Errors are {error, detail}. A session handles one message at a time; a
// message arriving while a turn is running gets "turn_in_flight".
class ChatService {
public:
    explicit ChatService(const Runtime& rt);
    ~ChatService();

    ChatService(const ChatService&) = delete;
    ChatService& operator=(const ChatService&) = delete;

    /// Binds and starts serving on a background thread; port 0 picks a free
    /// port. Returns the bound port. Throws BindError.
    int start(const std::string& host, int port);

    /// Stops accepting requests and persists every open session.
    void stop();

    /// Where live sessions are written.
    std::filesystem::path record_dir() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace upsd
