#include "upsd/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "upsd/errors.hpp"
#include "upsd/pipeline.hpp"
#include "upsd/rng.hpp"
#include "upsd/simulator.hpp"
#include "upsd/text.hpp"
#include "upsd/upm.hpp"

namespace upsd {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// Keys the stigma assignment shuffle; any value that no turn index can take.
constexpr std::int64_t kStigmaShuffleSalt = -7;

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::optional<RunMode> parse_mode(std::string_view s) {
    const std::string f = text::fold_label(s);
    if (f == "simulated") return RunMode::Simulated;
    if (f == "human") return RunMode::Human;
    if (f == "serve") return RunMode::Serve;
    return std::nullopt;
}

ojson slots_to_json(const SymptomSet& s) {
    ojson j = ojson::object();
    for (CriterionId c : kAllCriteria)
        j[std::string(enum_name(c))] = {{"status", std::string(to_string(s[c].status()))},
                                        {"why", s[c].rationale()}};
    return j;
}

SymptomSet slots_from_json(const json& j) {
    SymptomSet s;
    for (CriterionId c : kAllCriteria) {
        const json& e = j.at(std::string(enum_name(c)));
        const std::string status = e.at("status").get<std::string>();
        if (status == "Unknown") continue;
        if (status != "True" && status != "False") throw RecordError("bad slot status '" + status + "'");
        s = s.set_slot(c, SlotDetermination(status == "True" ? SlotStatus::Present : SlotStatus::Absent,
                                            e.at("why").get<std::string>()));
    }
    return s;
}

std::string sanitize_id(const std::string& s) {
    std::string out;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        out.push_back(std::isalnum(u) || c == '-' || c == '_' ? c : '_');
    }
    return out.empty() ? "profile" : out;
}

std::unique_ptr<ChatBackend> fresh_backend(const BackendSpec& spec) { return make_backend(spec); }

Gateway gateway_for(const Runtime& rt, ChatBackend& backend) {
    const RunConfig& cfg = rt.config();
    return Gateway{backend, rt.prompts(), cfg.temperature, cfg.seed, cfg.max_attempts};
}

std::string describe(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return err->code() + ": " + err->what();
    return std::string("internal: ") + e.what();
}

void write_text(const fs::path& file, const std::string& body) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw RecordError("cannot write " + file.string());
    out << body;
}

fs::path sessions_dir(const RunConfig& cfg) { return fs::path(cfg.out_dir) / "sessions"; }

}  // namespace

std::string_view to_string(RunMode m) noexcept {
    switch (m) {
        case RunMode::Simulated: return "simulated";
        case RunMode::Human: return "human";
        case RunMode::Serve: return "serve";
    }
    return "";
}

// --- Config -------------------------------------------------------------------

void RunConfig::validate() const {
    if (max_pairs < 1) throw ConfigError("max_pairs must be at least 1");
    if (concurrency < 1) throw ConfigError("concurrency must be at least 1");
    if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    if (temperature < 0.0) throw ConfigError("temperature must be non-negative");
    if (text::trim(greeting).empty()) throw ConfigError("greeting must not be empty");
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;
    try {
        if (j.contains("actor_backend")) cfg.actor_backend = backend_spec_from_json(j.at("actor_backend"), base_dir);
        // The simulator and judge default to the actor's backend.
        cfg.simulator_backend = j.contains("simulator_backend")
                                    ? backend_spec_from_json(j.at("simulator_backend"), base_dir)
                                    : cfg.actor_backend;
        cfg.judge_backend = j.contains("judge_backend")
                                ? backend_spec_from_json(j.at("judge_backend"), base_dir)
                                : cfg.actor_backend;
        cfg.max_pairs = j.value("max_pairs", cfg.max_pairs);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.temperature = j.value("temperature", cfg.temperature);
        if (j.contains("mode")) {
            auto m = parse_mode(j.at("mode").get<std::string>());
            if (!m) throw ConfigError("unknown mode '" + j.at("mode").get<std::string>() + "'");
            cfg.mode = *m;
        }
        cfg.stigma = j.value("stigma", cfg.stigma);
        cfg.ablation = j.value("ablation", cfg.ablation);
        cfg.judge = j.value("judge", cfg.judge);
        if (j.contains("profiles_path"))
            cfg.profiles_path = resolve(base_dir, j.at("profiles_path").get<std::string>()).string();
        if (j.contains("out_dir")) cfg.out_dir = resolve(base_dir, j.at("out_dir").get<std::string>()).string();
        cfg.greeting = j.value("greeting", cfg.greeting);
        cfg.closing = j.value("closing", cfg.closing);
        cfg.concurrency = j.value("concurrency", cfg.concurrency);
        cfg.max_attempts = j.value("max_attempts", cfg.max_attempts);
        if (j.contains("prompt_dir"))
            cfg.prompt_dir = resolve(base_dir, j.at("prompt_dir").get<std::string>()).string();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    return json{{"actor_backend", backend_spec_to_json(cfg.actor_backend)},
                {"simulator_backend", backend_spec_to_json(cfg.simulator_backend)},
                {"judge_backend", backend_spec_to_json(cfg.judge_backend)},
                {"max_pairs", cfg.max_pairs},
                {"seed", cfg.seed},
                {"temperature", cfg.temperature},
                {"mode", to_string(cfg.mode)},
                {"stigma", cfg.stigma},
                {"ablation", cfg.ablation},
                {"judge", cfg.judge},
                {"profiles_path", cfg.profiles_path},
                {"out_dir", cfg.out_dir},
                {"greeting", cfg.greeting},
                {"closing", cfg.closing},
                {"concurrency", cfg.concurrency},
                {"max_attempts", cfg.max_attempts},
                {"prompt_dir", cfg.prompt_dir}};
}

RunConfig load_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(file.string() + " is not valid JSON");
    return config_from_json(j, file.parent_path());
}

void apply_env_overrides(RunConfig& cfg) {
    const std::pair<const char*, BackendSpec*> roles[] = {
        {"UPSD_ACTOR_API_KEY_ENV", &cfg.actor_backend},
        {"UPSD_SIMULATOR_API_KEY_ENV", &cfg.simulator_backend},
        {"UPSD_JUDGE_API_KEY_ENV", &cfg.judge_backend}};
    for (const auto& [var, spec] : roles) {
        const char* value = std::getenv(var);
        if (!value || !*value) continue;
        if (auto* http = std::get_if<HttpChatSpec>(spec)) http->api_key_env = value;
    }
}

std::string config_hash(const RunConfig& cfg) {
    json j = config_to_json(cfg);
    j.erase("out_dir");
    j.erase("concurrency");
    const std::string canonical = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --- Records ------------------------------------------------------------------

SymptomSet SessionRecord::final_slots() const {
    return snapshots.empty() ? SymptomSet{} : snapshots.back();
}

SessionOutcome SessionRecord::outcome() const {
    SessionOutcome o;
    o.session_id = session_id;
    o.profile_id = profile_id;
    o.stigma_mode = stigma_mode;
    o.history = history;
    o.final_slots = final_slots();
    o.verdict = verdict;
    o.verdict_rationale = verdict_rationale;
    o.success = success;
    o.turn_pairs_used = pairs_used;
    o.abort_reason = abort_reason;
    return o;
}

std::string record_to_jsonl(const SessionRecord& r) {
    std::string out;
    ojson header{{"type", "header"},
                 {"session_id", r.session_id},
                 {"profile_id", r.profile_id},
                 {"stigma_mode", r.stigma_mode},
                 {"seed", r.seed},
                 {"config_hash", r.config_hash}};
    if (r.gold) header["gold"] = std::string(to_string(*r.gold));
    if (r.stigma_aspect) header["stigma_aspect"] = *r.stigma_aspect;
    header["ablation"] = r.ablation;
    out += header.dump() + "\n";

    const auto& turns = r.history.turns();
    for (std::size_t i = 0; i < turns.size(); ++i) {
        const Turn& t = turns[i];
        ojson line{{"type", "turn"},
                   {"idx", t.index},
                   {"speaker", std::string(to_string(t.speaker))},
                   {"text", t.text}};
        if (t.annotation) {
            const TurnAnnotation& a = *t.annotation;
            const bool strategy_free =
                std::find(a.flags.begin(), a.flags.end(), "ablation") != a.flags.end();
            line["topic"] = std::string(enum_name(a.topic));
            if (!strategy_free) {
                line["coarse"] = std::string(enum_name(a.coarse));
                line["fine"] = std::string(enum_name(a.fine));
            }
            line["prev_topic"] = a.prev_topic ? ojson(std::string(enum_name(*a.prev_topic))) : ojson(nullptr);
            line["rationales"] = a.rationales;
            line["coarse_options"] = a.coarse_options;
            line["fine_options"] = a.fine_options;
            line["flags"] = a.flags;
        }
        line["slots_snapshot"] = i < r.snapshots.size() ? slots_to_json(r.snapshots[i]) : ojson(nullptr);
        out += line.dump() + "\n";
    }

    ojson fin{{"type", "final"}, {"success", r.success}};
    if (r.verdict) fin["verdict"] = std::string(to_string(*r.verdict));
    fin["verdict_rationale"] = r.verdict_rationale;
    fin["pairs_used"] = r.pairs_used;
    fin["aborted"] = r.abort_reason.has_value();
    if (r.abort_reason) fin["error"] = *r.abort_reason;
    ojson scores = ojson::array();
    for (const auto& s : r.judge_scores)
        scores.push_back({{"metric", std::string(eval::name(s.metric))}, {"score", s.score}, {"why", s.why}});
    fin["judge"] = scores;
    out += fin.dump() + "\n";
    return out;
}

SessionRecord record_from_jsonl(std::string_view text) {
    SessionRecord r;
    std::vector<Turn> turns;
    bool have_header = false;
    bool have_final = false;
    std::istringstream in{std::string(text)};
    std::string line;
    try {
        while (std::getline(in, line)) {
            if (text::trim(line).empty()) continue;
            if (have_final) throw RecordError("content after the final record");
            const json j = json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (type == "header") {
                if (have_header) throw RecordError("duplicate header");
                have_header = true;
                r.session_id = j.at("session_id").get<std::string>();
                r.profile_id = j.at("profile_id").get<std::string>();
                r.stigma_mode = j.at("stigma_mode").get<bool>();
                r.seed = j.at("seed").get<std::int64_t>();
                r.config_hash = j.at("config_hash").get<std::string>();
                if (j.contains("gold")) r.gold = parse_severity(j.at("gold").get<std::string>());
                if (j.contains("stigma_aspect")) r.stigma_aspect = j.at("stigma_aspect").get<std::string>();
                r.ablation = j.value("ablation", false);
            } else if (type == "turn") {
                if (!have_header) throw RecordError("turn before header");
                Turn t;
                t.index = j.at("idx").get<std::size_t>();
                const std::string speaker = j.at("speaker").get<std::string>();
                if (speaker == "system") t.speaker = Speaker::System;
                else if (speaker == "user") t.speaker = Speaker::User;
                else throw RecordError("unknown speaker '" + speaker + "'");
                t.text = j.at("text").get<std::string>();
                if (j.contains("topic")) {
                    TurnAnnotation a;
                    auto topic = parse_criterion(j.at("topic").get<std::string>());
                    if (!topic) throw RecordError("unknown topic in record");
                    a.topic = *topic;
                    if (!j.at("prev_topic").is_null()) a.prev_topic = parse_criterion(j.at("prev_topic").get<std::string>());
                    a.rationales = j.at("rationales").get<std::vector<std::string>>();
                    a.coarse_options = j.at("coarse_options").get<std::vector<std::string>>();
                    a.fine_options = j.at("fine_options").get<std::vector<std::string>>();
                    a.flags = j.at("flags").get<std::vector<std::string>>();
                    if (j.contains("fine")) {
                        auto coarse = parse_coarse(j.at("coarse").get<std::string>());
                        auto fine = parse_fine(j.at("fine").get<std::string>());
                        if (!coarse || !fine) throw RecordError("unknown strategy in record");
                        a.coarse = *coarse;
                        a.fine = *fine;
                    } else {
                        a.fine = family(a.coarse).front();
                    }
                    t.annotation = std::move(a);
                }
                turns.push_back(std::move(t));
                r.snapshots.push_back(slots_from_json(j.at("slots_snapshot")));
            } else if (type == "final") {
                if (!have_header) throw RecordError("final record before header");
                have_final = true;
                r.success = j.at("success").get<bool>();
                if (j.contains("verdict")) r.verdict = parse_severity(j.at("verdict").get<std::string>());
                r.verdict_rationale = j.value("verdict_rationale", std::string());
                r.pairs_used = j.at("pairs_used").get<int>();
                if (j.contains("error")) r.abort_reason = j.at("error").get<std::string>();
                for (const json& s : j.value("judge", json::array())) {
                    auto m = eval::parse_metric(s.at("metric").get<std::string>());
                    if (!m) throw RecordError("unknown judge metric in record");
                    r.judge_scores.push_back({*m, s.at("score").get<int>(), s.at("why").get<std::string>()});
                }
            } else {
                throw RecordError("unknown record type '" + type + "'");
            }
        }
    } catch (const json::exception& e) {
        throw RecordError(std::string("malformed session record: ") + e.what());
    } catch (const RecordError&) {
        throw;
    } catch (const Error& e) {
        throw RecordError(std::string("invalid session record: ") + e.what());
    }
    if (!have_header || !have_final) throw RecordError("session record is missing its header or final line");
    try {
        r.history = DialogueHistory(std::move(turns));
    } catch (const Error& e) {
        throw RecordError(std::string("invalid transcript in record: ") + e.what());
    }
    return r;
}

fs::path save_record(const fs::path& dir, const SessionRecord& r) {
    fs::create_directories(dir);
    const fs::path file = dir / (r.session_id + ".jsonl");
    write_text(file, record_to_jsonl(r));
    return file;
}

SessionRecord load_record(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw RecordError("cannot open " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return record_from_jsonl(ss.str());
}

std::vector<SessionRecord> load_records(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw RecordError("record directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<SessionRecord> out;
    for (const auto& f : files) out.push_back(load_record(f));
    return out;
}

// --- Sessions -----------------------------------------------------------------

Runtime::Runtime(RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.prompt_dir.empty())
        prompts_ = std::shared_ptr<const PromptRegistry>(&default_registry(), [](const PromptRegistry*) {});
    else
        prompts_ = std::make_shared<const PromptRegistry>(PromptRegistry::with_overrides(cfg_.prompt_dir));
    hash_ = config_hash(cfg_);
}

std::string make_session_id(const std::string& profile_id, bool stigma, bool ablation, std::int64_t seed) {
    return sanitize_id(profile_id) + (stigma ? "-s" : "-n") + (ablation ? "-abl" : "") + "-seed" +
           std::to_string(seed);
}

SessionEngine::SessionEngine(const Runtime& rt, SessionRecord header, std::unique_ptr<ChatBackend> actor)
    : rt_(rt), rec_(std::move(header)), actor_(std::move(actor)) {
    rec_.history = DialogueHistory{};
    rec_.snapshots.clear();
    rec_.history.append(Speaker::System, rt_.config().greeting);
    rec_.snapshots.push_back(slots_);
}

SessionEngine::Step SessionEngine::user_turn(const std::string& text) {
    if (complete_) throw PreconditionViolation("session " + rec_.session_id + " is complete");
    const RunConfig& cfg = rt_.config();
    const Gateway gw = gateway_for(rt_, *actor_);

    rec_.history.append(Speaker::User, neutralize_markers(text));
    rec_.snapshots.push_back(slots_);
    rec_.pairs_used = static_cast<int>(rec_.history.pairs());

    std::vector<std::string> flags;
    const cdm::SlotUpdate upd = cdm::update_slots(gw, slots_, rec_.history);
    slots_ = upd.slots;
    rec_.snapshots.back() = slots_;
    if (upd.extraction_failed) flags.emplace_back("slot_extraction_failed");
    for (CriterionId c : upd.conflicts) flags.push_back("slot_conflict:" + std::string(enum_name(c)));

    switch (cdm::completion_status(slots_, rec_.pairs_used, cfg.max_pairs)) {
        case cdm::CompletionStatus::DiagnoseNow: {
            const cdm::Verdict v = cdm::assess_diagnosis(gw, slots_, rec_.history);
            rec_.verdict = v.label;
            rec_.verdict_rationale = v.rationale;
            rec_.success = true;
            complete_ = true;
            return Step{std::nullopt, true};
        }
        case cdm::CompletionStatus::FailedTurnCap:
            rec_.success = false;
            complete_ = true;
            return Step{std::nullopt, true};
        case cdm::CompletionStatus::Continue:
            break;
    }

    const cdm::TopicChoice topic = cdm::select_criterion(gw, slots_, rec_.history, prev_topic_);
    if (topic.fallback) flags.emplace_back("topic_fallback");
    const upm::SelectionContext ctx{rec_.history, slots_, prev_topic_, topic.topic, cfg.seed,
                                    static_cast<std::int64_t>(rec_.pairs_used)};

    TurnAnnotation a;
    a.topic = topic.topic;
    a.prev_topic = prev_topic_;
    a.rationales.push_back(topic.why);
    std::string reply;
    if (cfg.ablation) {
        reply = upm::generate_response_ablation(gw, ctx);
        a.fine = family(a.coarse).front();
        flags.emplace_back("ablation");
    } else {
        const upm::CoarseSelection coarse = upm::select_coarse(gw, ctx);
        const upm::FineSelection fine = upm::select_fine(gw, ctx, coarse.coarse);
        if (coarse.fallback) flags.emplace_back("coarse_fallback");
        if (fine.fallback) flags.emplace_back("fine_fallback");
        reply = upm::generate_response(gw, ctx, {coarse.coarse, fine.fine, coarse.why, fine.why});
        a.coarse = coarse.coarse;
        a.fine = fine.fine;
        a.rationales.push_back(coarse.why);
        a.rationales.push_back(fine.why);
        a.coarse_options = coarse.options;
        a.fine_options = fine.options;
    }
    a.flags = std::move(flags);

    reply = neutralize_markers(reply);
    rec_.history.append(Speaker::System, reply, std::move(a));
    rec_.snapshots.push_back(slots_);
    prev_topic_ = topic.topic;
    return Step{reply, false};
}

void SessionEngine::abort(const std::string& reason) {
    rec_.abort_reason = reason;
    rec_.success = false;
    rec_.verdict.reset();
    rec_.pairs_used = static_cast<int>(rec_.history.pairs());
    complete_ = true;
}

SessionRecord simulate_session(const Runtime& rt, const UserProfile& profile,
                               const std::optional<StigmaProfile>& stigma) {
    const RunConfig& cfg = rt.config();
    profile.validate();

    SessionRecord header;
    header.session_id = make_session_id(profile.id, stigma.has_value(), cfg.ablation, cfg.seed);
    header.profile_id = profile.id;
    header.stigma_mode = stigma.has_value();
    if (stigma) header.stigma_aspect = stigma->aspect;
    header.ablation = cfg.ablation;
    header.seed = cfg.seed;
    header.config_hash = rt.hash();
    header.gold = profile.drisk;

    SessionEngine engine(rt, std::move(header), fresh_backend(cfg.actor_backend));
    auto sim_backend = fresh_backend(cfg.simulator_backend);
    const Gateway sim_gw = gateway_for(rt, *sim_backend);
    const sim::SimulatorSpec spec = sim::SimulatorSpec::make(profile, stigma);

    try {
        while (!engine.complete()) {
            const std::string reply = sim::simulate_reply(sim_gw, spec, engine.record().history);
            engine.user_turn(reply);
        }
    } catch (const std::exception& e) {
        spdlog::warn("session {} aborted: {}", engine.record().session_id, e.what());
        engine.abort(describe(e));
    }
    return engine.record();
}

std::vector<eval::JudgeScore> judge_transcript(const Runtime& rt, const DialogueHistory& history) {
    std::vector<eval::JudgeScore> out;
    if (history.empty()) return out;
    auto backend = fresh_backend(rt.config().judge_backend);
    const Gateway gw = gateway_for(rt, *backend);
    for (eval::JudgeMetric m : eval::kAllMetrics) {
        try {
            out.push_back(eval::judge_dialogue(gw, history, m));
        } catch (const Error& e) {
            spdlog::warn("judge skipped {}: {}", eval::name(m), e.what());
        }
    }
    return out;
}

SessionOutcome run_session(const Runtime& rt, const UserProfile& profile,
                           const std::optional<StigmaProfile>& stigma) {
    SessionRecord rec = simulate_session(rt, profile, stigma);
    if (rt.config().judge && !rec.abort_reason) rec.judge_scores = judge_transcript(rt, rec.history);
    save_record(sessions_dir(rt.config()), rec);
    if (rec.abort_reason) {
        const std::string& reason = *rec.abort_reason;
        const auto colon = reason.find(": ");
        throw SessionAborted(rec.session_id, reason.substr(0, colon),
                             colon == std::string::npos ? reason : reason.substr(colon + 2));
    }
    return rec.outcome();
}

const StigmaProfile& assigned_stigma(std::size_t i, std::int64_t seed) {
    const auto& all = sim::builtin_stigma_profiles();
    std::vector<std::size_t> order(all.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    order = shuffle_candidates(std::move(order), seed, kStigmaShuffleSalt);
    return all[order[i % all.size()]];
}

BatchResult run_batch(const Runtime& rt, const std::vector<UserProfile>& profiles) {
    const RunConfig& cfg = rt.config();
    if (profiles.empty()) throw PreconditionViolation("run_batch needs at least one profile");
    std::set<std::string> ids;
    for (const auto& p : profiles)
        if (!ids.insert(make_session_id(p.id, cfg.stigma, cfg.ablation, cfg.seed)).second)
            throw ConfigError("duplicate profile id " + p.id);

    std::vector<SessionRecord> records(profiles.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < profiles.size(); i = next++) {
            std::optional<StigmaProfile> stigma;
            if (cfg.stigma) stigma = assigned_stigma(i, cfg.seed);
            SessionRecord rec = simulate_session(rt, profiles[i], stigma);
            if (cfg.judge && !rec.abort_reason) rec.judge_scores = judge_transcript(rt, rec.history);
            records[i] = std::move(rec);
        }
    };
    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.concurrency), profiles.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    const fs::path dir = sessions_dir(cfg);
    for (const auto& rec : records) save_record(dir, rec);

    BatchResult result{report_from_records(records), std::move(records)};
    write_text(fs::path(cfg.out_dir) / "report.jsonl", eval::report_to_jsonl(result.report));
    write_text(fs::path(cfg.out_dir) / "report.txt", eval::report_to_table(result.report));
    return result;
}

eval::BatchReport report_from_records(const std::vector<SessionRecord>& records) {
    std::vector<SessionOutcome> outcomes;
    eval::JudgeScores judge;
    eval::GoldLabels golds;
    for (const auto& r : records) {
        if (!r.gold) {
            spdlog::warn("record {} has no gold label; left out of the report", r.session_id);
            continue;
        }
        outcomes.push_back(r.outcome());
        golds[r.session_id] = *r.gold;
        if (!r.judge_scores.empty()) judge[r.session_id] = r.judge_scores;
    }
    return eval::aggregate(outcomes, judge, golds);
}

eval::BatchReport evaluate_records(const Runtime& rt, std::vector<SessionRecord>& records) {
    for (auto& r : records) r.judge_scores = judge_transcript(rt, r.history);
    return report_from_records(records);
}

}  // namespace upsd
