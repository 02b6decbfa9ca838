// Acceptance suite: one test per criterion, each reported as a single
// PASS/FAIL/SKIP line on stdout.
#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "support.hpp"
#include "upsd/errors.hpp"
#include "upsd/evaluator.hpp"
#include "upsd/runner.hpp"
#include "upsd/simulator.hpp"
#include "upsd/structured.hpp"

using namespace upsd;
using namespace upsd::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string dir_listing(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string out;
    for (const auto& f : files) out += fs::relative(f, dir).string() + "\n" + read_file(f) + "\n";
    return out;
}

RunConfig demo_config(const fs::path& out, std::int64_t seed) {
    RunConfig cfg = load_config(data_path("demo_config.json"));
    cfg.out_dir = out.string();
    cfg.seed = seed;
    return cfg;
}

std::vector<TurnAnnotation> annotations(const std::vector<SessionRecord>& records) {
    std::vector<TurnAnnotation> out;
    for (const auto& r : records)
        for (const Turn& t : r.history.turns())
            if (t.annotation) out.push_back(*t.annotation);
    return out;
}

class CriterionPrinter : public ::testing::EmptyTestEventListener {
    void OnTestEnd(const ::testing::TestInfo& info) override {
        const auto* r = info.result();
        const char* verdict = r->Skipped() ? "SKIP" : (r->Passed() ? "PASS" : "FAIL");
        std::printf("%s %s\n", verdict, info.name());
        std::fflush(stdout);
    }
};

}  // namespace

TEST(Acceptance, SlotMonotonicity) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(42);
    std::size_t accepted = 0, conflicts = 0;
    for (int seq = 0; seq < 1000; ++seq) {
        SymptomSet s;
        const int len = 5 + static_cast<int>(rng() % 40);
        for (int step = 0; step < len; ++step) {
            const CriterionId c = kAllCriteria[rng() % kAllCriteria.size()];
            const SlotDetermination d =
                rng() % 2 ? SlotDetermination::present("seen") : SlotDetermination::absent("denied");
            const SlotStatus before = s[c].status();
            const bool should_conflict = before != SlotStatus::Unknown && before != d.status();
            try {
                const SymptomSet next = s.set_slot(c, d);
                ASSERT_FALSE(should_conflict) << "flip accepted";
                for (CriterionId o : kAllCriteria)
                    if (s[o].determined()) ASSERT_EQ(next[o].status(), s[o].status());
                s = next;
                ++accepted;
            } catch (const ConflictingDetermination&) {
                ASSERT_TRUE(should_conflict) << "spurious conflict";
                ++conflicts;
            }
        }
    }
    EXPECT_GT(conflicts, 0u);
    EXPECT_GT(accepted, 0u);
    EXPECT_LT(seconds_since(t0), 5.0);
}

TEST(Acceptance, TerminationBound) {
    const auto t0 = Clock::now();
    TempDir tmp;
    for (std::uint64_t v = 0; v < 50; ++v) {
        const auto [actor, sim] = adversarial_fixtures(v);
        RunConfig cfg = scripted_config(actor, sim, tmp.path(), 42 + static_cast<std::int64_t>(v));
        cfg.stigma = v % 2 == 1;
        const Runtime rt(cfg);
        const UserProfile p = make_profile("adv" + std::to_string(v), kAllSeverities[v % 4]);
        std::optional<StigmaProfile> stigma;
        if (cfg.stigma) stigma = assigned_stigma(v, cfg.seed);
        std::string id;
        try {
            id = run_session(rt, p, stigma).session_id;
        } catch (const SessionAborted& e) {
            id = e.session_id();
        }
        const SessionRecord r = load_record(tmp / "sessions" / (id + ".jsonl"));
        EXPECT_LE(r.pairs_used, 20) << id;
        EXPECT_EQ(r.history.pairs(), static_cast<std::size_t>(r.pairs_used)) << id;
        EXPECT_EQ(r.success, r.verdict.has_value()) << id;
        EXPECT_TRUE(taxonomy_violations(r).empty()) << id;
    }
    EXPECT_EQ(load_records(tmp / "sessions").size(), 50u);
    EXPECT_LT(seconds_since(t0), 30.0);
}

TEST(Acceptance, StrategyTaxonomy) {
    TempDir tmp;
    std::vector<SessionRecord> all;
    for (std::uint64_t v = 100; v < 130; ++v) {
        const auto [actor, sim] = adversarial_fixtures(v);
        RunConfig cfg = scripted_config(actor, sim, tmp.path(), static_cast<std::int64_t>(v));
        all.push_back(simulate_session(Runtime(cfg), make_profile("t" + std::to_string(v), SeverityLabel::Mild),
                                       std::nullopt));
    }
    for (bool stigma : {false, true}) {
        RunConfig cfg = demo_config(tmp / (stigma ? "s" : "n"), 42);
        cfg.stigma = stigma;
        auto res = run_batch(Runtime(cfg), sim::load_profiles(cfg.profiles_path));
        all.insert(all.end(), res.records.begin(), res.records.end());
    }
    std::size_t scanned = 0;
    for (const auto& r : all) {
        for (const auto& v : taxonomy_violations(r)) ADD_FAILURE() << v;
        for (const Turn& t : r.history.turns()) scanned += t.annotation.has_value();
    }
    EXPECT_GT(scanned, 100u);
}

TEST(Acceptance, Determinism) {
    TempDir a, b, c;
    const auto profiles = sim::load_profiles(data_path("profiles_sample.jsonl"));
    run_batch(Runtime(demo_config(a.path(), 42)), profiles);
    run_batch(Runtime(demo_config(b.path(), 42)), profiles);
    EXPECT_EQ(dir_listing(a.path()), dir_listing(b.path()));

    const auto base = annotations(load_records(a / "sessions"));
    const auto other = annotations(run_batch(Runtime(demo_config(c.path(), 7)), profiles).records);
    ASSERT_EQ(base.size(), other.size());
    bool shuffle_differs = false;
    for (std::size_t i = 0; i < base.size(); ++i)
        shuffle_differs |= base[i].coarse_options != other[i].coarse_options ||
                           base[i].fine_options != other[i].fine_options;
    EXPECT_TRUE(shuffle_differs);
}

TEST(Acceptance, StigmaScaleArithmetic) {
    EXPECT_EQ(sim::score_scale(std::vector<sim::LikertAnswer>(9, {1, ""})), 9);
    EXPECT_EQ(sim::score_scale(std::vector<sim::LikertAnswer>(9, {5, ""})), 45);
    const std::array<double, 9> with_stigma = {3.45, 4.74, 2.67, 1.45, 4.71, 2.63, 4.93, 2.77, 3.94};
    EXPECT_NEAR(sim::total_of_means(with_stigma), 31.29, 1e-9);
}

TEST(Acceptance, FleissKappa) {
    EXPECT_EQ(eval::fleiss_kappa({{3, 0, 0}, {0, 3, 0}, {0, 0, 3}, {3, 0, 0}}), 1.0);
    EXPECT_EQ(eval::fleiss_kappa({{0, 5}, {5, 0}}), 1.0);
    std::mt19937_64 rng(2024);
    int compared = 0;
    while (compared < 200) {
        std::vector<std::vector<int>> m(10, std::vector<int>(3, 0));
        for (auto& row : m)
            for (int r = 0; r < 3; ++r) ++row[rng() % 3];
        const double oracle = kappa_by_pairs(m);
        EXPECT_NEAR(eval::fleiss_kappa(m), oracle, 1e-12);
        ++compared;
    }
    EXPECT_THROW(eval::fleiss_kappa({{3, 0, 0}, {3, 0, 0}}), DegenerateAgreement);
    EXPECT_THROW(eval::fleiss_kappa({{0, 4}, {0, 4}, {0, 4}}), DegenerateAgreement);
}

TEST(Acceptance, WeightedPrf) {
    std::mt19937_64 rng(25);
    for (int t = 0; t < 25; ++t) {
        const std::size_t n = 8 + rng() % 40;
        std::vector<SeverityLabel> p, g;
        for (std::size_t i = 0; i < n; ++i) {
            p.push_back(kAllSeverities[rng() % 4]);
            g.push_back(kAllSeverities[rng() % 4]);
        }
        const auto got = eval::weighted_prf(p, g);
        const auto want = prf_by_confusion(p, g);
        EXPECT_NEAR(got.precision, want.precision, 1e-12);
        EXPECT_NEAR(got.recall, want.recall, 1e-12);
        EXPECT_NEAR(got.f1, want.f1, 1e-12);
    }
    for (int t = 0; t < 25; ++t) {
        const std::size_t per_class = 1 + rng() % 6;
        std::vector<SeverityLabel> p, g;
        for (SeverityLabel s : kAllSeverities)
            for (std::size_t i = 0; i < per_class; ++i) g.push_back(s);
        for (std::size_t i = 0; i < g.size(); ++i) p.push_back(kAllSeverities[rng() % 4]);
        const auto w = eval::weighted_prf(p, g);
        const auto m = macro_by_confusion(p, g);
        EXPECT_NEAR(w.precision, m.precision, 1e-12);
        EXPECT_NEAR(w.recall, m.recall, 1e-12);
        EXPECT_NEAR(w.f1, m.f1, 1e-12);
    }
}

TEST(Acceptance, ParserRobustness) {
    ASSERT_EQ(parser_corpus().size(), 20u);
    int ok = 0;
    for (const auto& c : parser_corpus()) {
        try {
            const auto doc = extract_structured(c.raw, c.schema);
            EXPECT_EQ(doc, c.expected) << c.raw;
            ok += doc == c.expected;
            EXPECT_EQ(extract_structured(wire_text(doc, c.schema), c.schema), doc) << c.raw;
        } catch (const Error& e) {
            ADD_FAILURE() << c.raw << ": " << e.what();
        }
    }
    EXPECT_EQ(ok, 20);
    for (const auto& [raw, schema] : prose_cases()) EXPECT_THROW(extract_structured(raw, schema), NoObjectFound) << raw;
}

TEST(Acceptance, EndToEndFixture) {
    TempDir tmp;
    const ScriptedSpec spec = load_scripted_spec(fixture_path("success_9pair.json"));
    RunConfig cfg = scripted_config(spec, spec, tmp.path());
    cfg.judge = true;
    const auto res = run_batch(Runtime(cfg), {make_profile("e2e", SeverityLabel::Severe)});
    ASSERT_EQ(res.records.size(), 1u);
    const SessionRecord& r = res.records[0];
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.verdict, SeverityLabel::Severe);
    EXPECT_EQ(r.pairs_used, 9);
    EXPECT_EQ(res.report.overall.dx_rate, 1.0);
    EXPECT_EQ(res.report.overall.accuracy, 1.0);
}

TEST(Acceptance, LiveSmoke) {
    const char* path = std::getenv("UPSD_LIVE_CONFIG");
    if (path == nullptr || *path == '\0') GTEST_SKIP() << "UPSD_LIVE_CONFIG not set";
    TempDir tmp;
    RunConfig cfg = load_config(path);
    apply_env_overrides(cfg);
    cfg.out_dir = tmp.path().string();
    const Runtime rt(cfg);
    const UserProfile p = sim::load_profiles(data_path("profiles_sample.jsonl")).at(9);
    const SessionRecord plain = simulate_session(rt, p, std::nullopt);
    const SessionRecord stig = simulate_session(rt, p, assigned_stigma(0, cfg.seed));
    for (const SessionRecord* r : {&plain, &stig}) {
        EXPECT_FALSE(r->abort_reason.has_value()) << r->abort_reason.value_or("");
        for (const Turn& t : r->history.turns())
            if (t.annotation)
                for (const auto& f : t.annotation->flags)
                    EXPECT_TRUE(f == "ablation" || f.rfind("slot_conflict", 0) == 0) << r->session_id << ": " << f;
    }
    EXPECT_LE(stig.final_slots().determined_count(), plain.final_slots().determined_count());
}

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    ::testing::UnitTest::GetInstance()->listeners().Append(new CriterionPrinter);
    return RUN_ALL_TESTS();
}
