// upsd command-line front end: simulated sessions, batches, evaluation,
// the stigma scale and the HTTP chat service.

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "upsd/errors.hpp"
#include "upsd/runner.hpp"
#include "upsd/service.hpp"
#include "upsd/simulator.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct Globals {
    std::string config;
    std::optional<std::int64_t> seed;
    std::optional<int> max_pairs;
    std::string actor_model;
    std::string judge_model;
    std::string log_level = "warn";
};

void set_model(upsd::BackendSpec& spec, const std::string& model, const char* role) {
    if (model.empty()) return;
    if (auto* http = std::get_if<upsd::HttpChatSpec>(&spec)) http->model_name = model;
    else spdlog::warn("--{}-model ignored: the {} backend is scripted", role, role);
}

upsd::RunConfig build_config(const Globals& g) {
    upsd::RunConfig cfg = g.config.empty() ? upsd::RunConfig{} : upsd::load_config(g.config);
    upsd::apply_env_overrides(cfg);
    if (g.seed) cfg.seed = *g.seed;
    if (g.max_pairs) cfg.max_pairs = *g.max_pairs;
    set_model(cfg.actor_backend, g.actor_model, "actor");
    set_model(cfg.simulator_backend, g.actor_model, "actor");
    set_model(cfg.judge_backend, g.judge_model, "judge");
    return cfg;
}

std::pair<upsd::UserProfile, std::size_t> find_profile(const upsd::RunConfig& cfg, const std::string& id) {
    if (cfg.profiles_path.empty()) throw upsd::ConfigError("no profiles_path configured");
    const auto profiles = upsd::sim::load_profiles(cfg.profiles_path);
    for (std::size_t i = 0; i < profiles.size(); ++i)
        if (profiles[i].id == id) return {profiles[i], i};
    throw upsd::ConfigError("profile '" + id + "' not found in " + cfg.profiles_path);
}

void print_transcript(const upsd::DialogueHistory& h) {
    for (const auto& t : h.turns()) {
        std::cout << (t.speaker == upsd::Speaker::System ? "Psychologist: " : "Inquirer: ") << t.text;
        if (t.annotation) {
            std::cout << "    [" << upsd::display_name(t.annotation->topic);
            if (!t.annotation->coarse_options.empty())
                std::cout << " / " << upsd::display_name(t.annotation->fine);
            std::cout << "]";
        }
        std::cout << "\n";
    }
}

void print_outcome(const upsd::SessionOutcome& o) {
    std::cout << "session " << o.session_id << ": " << (o.success ? "diagnosed" : "not diagnosed") << " after "
              << o.turn_pairs_used << " pairs";
    if (o.verdict) std::cout << ", verdict " << upsd::to_string(*o.verdict);
    std::cout << "\n";
}

int run_human(const upsd::Runtime& rt, bool stigma) {
    upsd::SessionRecord header;
    header.profile_id = "human";
    header.session_id = upsd::make_session_id("human", stigma, rt.config().ablation, rt.config().seed);
    header.stigma_mode = stigma;
    header.ablation = rt.config().ablation;
    header.seed = rt.config().seed;
    header.config_hash = rt.hash();
    upsd::SessionEngine engine(rt, std::move(header), upsd::make_backend(rt.config().actor_backend));
    std::cout << "Psychologist: " << rt.config().greeting << "\n";
    std::string line;
    while (!engine.complete()) {
        std::cout << "You: " << std::flush;
        if (!std::getline(std::cin, line)) {
            engine.abort("interrupted: input closed");
            break;
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto step = engine.user_turn(line);
            std::cout << "Psychologist: " << (step.reply ? *step.reply : rt.config().closing) << "\n";
        } catch (const upsd::Error& e) {
            engine.abort(e.code() + ": " + e.what());
            std::cerr << "session aborted: " << e.what() << "\n";
        }
    }
    const auto path = upsd::save_record(std::filesystem::path(rt.config().out_dir) / "sessions", engine.record());
    print_outcome(engine.record().outcome());
    std::cout << "record written to " << path.string() << "\n";
    return engine.record().abort_reason ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unobtrusive depression screening dialogue pipeline"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Run seed (default 42)");
    app.add_option("--max-pairs", g.max_pairs, "Turn-pair cap (default 20)");
    app.add_option("--actor-model", g.actor_model, "Model name for the actor and simulator backends");
    app.add_option("--judge-model", g.judge_model, "Model name for the judge backend");
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");

    auto* run = app.add_subcommand("run", "Run one session");
    std::string profile_id;
    bool stigma = false, ablation = false, human = false;
    run->add_option("--profile-id", profile_id, "Profile to simulate");
    run->add_flag("--stigma", stigma, "Use the with-stigma simulator");
    run->add_flag("--ablation", ablation, "Generate without strategy selection");
    run->add_flag("--human", human, "Read user replies from stdin instead of simulating");

    auto* batch = app.add_subcommand("batch", "Run one session per profile and report metrics");
    std::string profiles_path, out_dir;
    bool judge = false;
    std::optional<int> concurrency;
    batch->add_option("--profiles", profiles_path, "Profile file (one JSON record per line)");
    batch->add_flag("--stigma", stigma, "Use the with-stigma simulator");
    batch->add_flag("--ablation", ablation, "Generate without strategy selection");
    batch->add_flag("--judge", judge, "Score every transcript with the judge");
    batch->add_option("--out", out_dir, "Output directory");
    batch->add_option("--concurrency", concurrency, "Sessions run in parallel");

    auto* evaluate = app.add_subcommand("evaluate", "Re-judge persisted sessions and recompute metrics");
    std::string records;
    evaluate->add_option("--records", records, "Directory of session records")->required();

    auto* scale = app.add_subcommand("stigma-scale", "Administer the stigma scale to a simulator");
    scale->add_option("--profile-id", profile_id, "Profile to simulate")->required();
    scale->add_flag("--stigma", stigma, "Use the with-stigma simulator");

    auto* serve = app.add_subcommand("serve", "Serve the HTTP chat API");
    int port = 8080;
    std::string host = "127.0.0.1";
    serve->add_option("--port", port, "Port (0 picks a free one)");
    serve->add_option("--host", host, "Bind address");

    auto* replay = app.add_subcommand("replay", "Recompute metrics from persisted sessions as stored");
    replay->add_option("--records", records, "Directory of session records")->required();

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    try {
        upsd::RunConfig cfg = build_config(g);
        if (ablation) cfg.ablation = true;

        if (*run) {
            if (human) {
                cfg.mode = upsd::RunMode::Human;
                const upsd::Runtime rt(cfg);
                return run_human(rt, stigma);
            }
            if (profile_id.empty()) throw upsd::ConfigError("--profile-id is required without --human");
            const upsd::Runtime rt(cfg);
            const auto [profile, index] = find_profile(cfg, profile_id);
            std::optional<upsd::StigmaProfile> sp;
            if (stigma) sp = upsd::assigned_stigma(index, cfg.seed);
            try {
                const upsd::SessionOutcome o = upsd::run_session(rt, profile, sp);
                print_transcript(o.history);
                print_outcome(o);
            } catch (const upsd::SessionAborted& e) {
                std::cerr << e.what() << "\n";
                return 1;
            }
            return 0;
        }
        if (*batch) {
            if (!profiles_path.empty()) cfg.profiles_path = profiles_path;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            if (stigma) cfg.stigma = true;
            if (judge) cfg.judge = true;
            if (concurrency) cfg.concurrency = *concurrency;
            if (cfg.profiles_path.empty()) throw upsd::ConfigError("--profiles is required");
            const upsd::Runtime rt(cfg);
            const auto result = upsd::run_batch(rt, upsd::sim::load_profiles(cfg.profiles_path));
            std::cout << upsd::eval::report_to_table(result.report);
            std::cout << "records and report written to " << cfg.out_dir << "\n";
            return 0;
        }
        if (*evaluate) {
            const upsd::Runtime rt(cfg);
            auto recs = upsd::load_records(records);
            std::cout << upsd::eval::report_to_table(upsd::evaluate_records(rt, recs));
            return 0;
        }
        if (*replay) {
            const auto report = upsd::report_from_records(upsd::load_records(records));
            std::cout << upsd::eval::report_to_table(report) << upsd::eval::report_to_jsonl(report);
            return 0;
        }
        if (*scale) {
            const upsd::Runtime rt(cfg);
            const auto [profile, index] = find_profile(cfg, profile_id);
            std::optional<upsd::StigmaProfile> sp;
            if (stigma) sp = upsd::assigned_stigma(index, cfg.seed);
            auto backend = upsd::make_backend(cfg.simulator_backend);
            const upsd::Gateway gw{*backend, rt.prompts(), cfg.temperature, cfg.seed, cfg.max_attempts};
            const auto result = upsd::sim::administer_stigma_scale(gw, upsd::sim::SimulatorSpec::make(profile, sp));
            const auto& questions = upsd::sim::stigma_scale_questions();
            for (std::size_t i = 0; i < result.answers.size(); ++i)
                std::cout << "Q" << i + 1 << " " << result.answers[i].value << "  " << questions[i] << "\n";
            std::cout << "total " << result.total << "\n";
            return 0;
        }
        if (*serve) {
            cfg.mode = upsd::RunMode::Serve;
            const upsd::Runtime rt(cfg);
            upsd::ChatService service(rt);
            const int bound = service.start(host, port);
            std::cout << "listening on http://" << host << ":" << bound << "\n" << std::flush;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
            service.stop();
            std::cout << "open sessions written to " << service.record_dir().string() << "\n";
            return 0;
        }
    } catch (const upsd::Error& e) {
        std::cerr << "error (" << e.code() << "): " << e.what() << "\n";
        return 2;
    }
    return 0;
}
