#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "upsd/cdm.hpp"
#include "upsd/domain.hpp"
#include "upsd/evaluator.hpp"
#include "upsd/gateway.hpp"
#include "upsd/prompts.hpp"

namespace upsd {

enum class RunMode { Simulated, Human, Serve };

std::string_view to_string(RunMode m) noexcept;

inline constexpr std::string_view kDefaultGreeting =
    "Hi, I'm here to chat about how you've been lately.";
inline constexpr std::string_view kDefaultClosing =
    "Thank you for talking with me today. That's everything I wanted to ask.";

struct RunConfig {
    BackendSpec actor_backend = ScriptedSpec{};
    BackendSpec simulator_backend = ScriptedSpec{};
    BackendSpec judge_backend = ScriptedSpec{};
    int max_pairs = cdm::kDefaultMaxPairs;
    std::int64_t seed = kDefaultSeed;
    double temperature = kDefaultTemperature;
    RunMode mode = RunMode::Simulated;
    bool stigma = false;
    bool ablation = false;
    bool judge = false;
    std::string profiles_path;
    std::string out_dir = "runs";
    std::string greeting{kDefaultGreeting};
    std::string closing{kDefaultClosing};
    int concurrency = 1;
    int max_attempts = 2;
    /// Directory of template overrides; empty uses the built-in set.
    std::string prompt_dir;

    /// Throws ConfigError.
    void validate() const;
};

/// Relative paths (fixture files, profiles, out_dir, prompt_dir) resolve
/// against base_dir.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& file);

/// UPSD_ACTOR_API_KEY_ENV, UPSD_SIMULATOR_API_KEY_ENV and UPSD_JUDGE_API_KEY_ENV
/// replace the api_key_env of the matching HTTP backend. Nothing else is
/// read from the environment.
void apply_env_overrides(RunConfig& cfg);

/// FNV-1a (hex) over the canonical config JSON, excluding output location
/// and concurrency.
std::string config_hash(const RunConfig& cfg);

// --- Session records --------------------------------------------------------

struct SessionRecord {
    std::string session_id;
    std::string profile_id;
    bool stigma_mode = false;
    std::optional<std::string> stigma_aspect;
    bool ablation = false;
    std::int64_t seed = kDefaultSeed;
    std::string config_hash;
    std::optional<SeverityLabel> gold;

    DialogueHistory history;
    /// Slot state after each turn, parallel to history.turns().
    std::vector<SymptomSet> snapshots;

    bool success = false;
    std::optional<SeverityLabel> verdict;
    std::string verdict_rationale;
    int pairs_used = 0;
    std::optional<std::string> abort_reason;
    std::vector<eval::JudgeScore> judge_scores;

    SymptomSet final_slots() const;
    SessionOutcome outcome() const;
};

std::string record_to_jsonl(const SessionRecord& r);
/// Throws RecordError on malformed input.
SessionRecord record_from_jsonl(std::string_view text);

/// Writes <dir>/<session_id>.jsonl and returns the path.
std::filesystem::path save_record(const std::filesystem::path& dir, const SessionRecord& r);
SessionRecord load_record(const std::filesystem::path& file);
/// Every *.jsonl in dir, in file-name order.
std::vector<SessionRecord> load_records(const std::filesystem::path& dir);

// --- Session execution ------------------------------------------------------

/// Shared, read-only run state: the config and its template set.
class Runtime {
public:
    explicit Runtime(RunConfig cfg);

    const RunConfig& config() const noexcept { return cfg_; }
    const PromptRegistry& prompts() const noexcept { return *prompts_; }
    const std::string& hash() const noexcept { return hash_; }

private:
    RunConfig cfg_;
    std::shared_ptr<const PromptRegistry> prompts_;
    std::string hash_;
};

std::string make_session_id(const std::string& profile_id, bool stigma, bool ablation, std::int64_t seed);

// One dialogue driven turn by turn: the greeting is turn 0, and every user
// reply triggers a slot update followed by either the next probe or the end
// of the session. Not thread-safe; callers serialize turns.
class SessionEngine {
public:
    SessionEngine(const Runtime& rt, SessionRecord header, std::unique_ptr<ChatBackend> actor);

    struct Step {
        /// The next system utterance, absent when the session just ended.
        std::optional<std::string> reply;
        bool complete = false;
    };

    /// Throws PreconditionViolation if the session is already complete.
    /// Gateway failures propagate; the caller decides to abort().
    Step user_turn(const std::string& text);

    void abort(const std::string& reason);

    bool complete() const noexcept { return complete_; }
    const SessionRecord& record() const noexcept { return rec_; }
    SessionRecord& record() noexcept { return rec_; }
    const SymptomSet& slots() const noexcept { return slots_; }

private:
    const Runtime& rt_;
    SessionRecord rec_;
    std::unique_ptr<ChatBackend> actor_;
    SymptomSet slots_;
    std::optional<CriterionId> prev_topic_;
    bool complete_ = false;
};

/// Runs one simulated session to completion and returns its record without
/// persisting or judging it. Aborted sessions come back with abort_reason set.
SessionRecord simulate_session(const Runtime& rt, const UserProfile& profile,
                               const std::optional<StigmaProfile>& stigma);

/// Judges a transcript on all four metrics with a fresh judge backend. A
/// metric whose call fails is left out.
std::vector<eval::JudgeScore> judge_transcript(const Runtime& rt, const DialogueHistory& history);

/// Simulates, optionally judges, and persists one session under
/// <out_dir>/sessions. Throws SessionAborted after persisting a partial
/// record.
SessionOutcome run_session(const Runtime& rt, const UserProfile& profile,
                           const std::optional<StigmaProfile>& stigma);

/// Stigma profile for the i-th profile of a batch.
const StigmaProfile& assigned_stigma(std::size_t i, std::int64_t seed);

struct BatchResult {
    eval::BatchReport report;
    std::vector<SessionRecord> records;
};

/// Runs every profile (concurrently up to cfg.concurrency), writes
/// <out_dir>/sessions/*.jsonl, report.jsonl and report.txt.
BatchResult run_batch(const Runtime& rt, const std::vector<UserProfile>& profiles);

/// Re-aggregates persisted records as stored.
eval::BatchReport report_from_records(const std::vector<SessionRecord>& records);
/// Re-judges each transcript, then aggregates.
eval::BatchReport evaluate_records(const Runtime& rt, std::vector<SessionRecord>& records);

}  // namespace upsd
