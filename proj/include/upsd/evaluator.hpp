#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "upsd/domain.hpp"
#include "upsd/pipeline.hpp"

namespace upsd::eval {

enum class JudgeMetric { Discreetness, Empathy, Coherence, Fluency };

inline constexpr std::array<JudgeMetric, 4> kAllMetrics = {
    JudgeMetric::Discreetness, JudgeMetric::Empathy, JudgeMetric::Coherence, JudgeMetric::Fluency};

std::string_view name(JudgeMetric m) noexcept;
std::optional<JudgeMetric> parse_metric(std::string_view s);
/// One-line explanation shown next to the metric name.
std::string_view explanation(JudgeMetric m) noexcept;
/// Five per-score rubric lines, index 0 is score 1.
const std::array<std::string_view, 5>& rubric(JudgeMetric m) noexcept;

struct JudgeScore {
    JudgeMetric metric{};
    int score = 0;
    std::string why;

    friend bool operator==(const JudgeScore&, const JudgeScore&) = default;
};

/// Scores one transcript on one metric. Throws StructuredOutputFailure.
JudgeScore judge_dialogue(const Gateway& gw, const DialogueHistory& transcript, JudgeMetric m);

// --- Diagnosis metrics ------------------------------------------------------

/// A missing prediction (failed session) counts as wrong.
double accuracy(const std::vector<std::optional<SeverityLabel>>& preds,
                const std::vector<SeverityLabel>& golds);
double accuracy(const std::vector<SeverityLabel>& preds, const std::vector<SeverityLabel>& golds);

double dx_rate(const std::vector<SessionOutcome>& outcomes);

struct PrfScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Per-class scores averaged with weights = gold support / n. Zero-division
/// terms contribute 0. A missing prediction is a miss for its gold class.
PrfScores weighted_prf(const std::vector<std::optional<SeverityLabel>>& preds,
                       const std::vector<SeverityLabel>& golds);
PrfScores weighted_prf(const std::vector<SeverityLabel>& preds, const std::vector<SeverityLabel>& golds);

/// Fleiss' kappa over an items x categories count matrix.
double fleiss_kappa(const std::vector<std::vector<int>>& counts);

// --- Batch aggregation ------------------------------------------------------

struct MetricRow {
    std::size_t n_sessions = 0;
    /// Absent when no judge scores were supplied.
    std::optional<std::array<double, 4>> judge_means;
    std::optional<double> judge_avg;
    double accuracy = 0.0;
    double dx_rate = 0.0;
    PrfScores prf;

    friend bool operator==(const MetricRow& a, const MetricRow& b) {
        return a.n_sessions == b.n_sessions && a.judge_means == b.judge_means &&
               a.judge_avg == b.judge_avg && a.accuracy == b.accuracy && a.dx_rate == b.dx_rate &&
               a.prf.precision == b.prf.precision && a.prf.recall == b.prf.recall &&
               a.prf.f1 == b.prf.f1;
    }
};

struct BatchReport {
    MetricRow overall;
    /// "non-stigma" / "with-stigma"; only modes present in the batch.
    std::map<std::string, MetricRow> by_mode;

    friend bool operator==(const BatchReport&, const BatchReport&) = default;
};

using JudgeScores = std::map<std::string, std::vector<JudgeScore>>;  // session_id -> scores
using GoldLabels = std::map<std::string, SeverityLabel>;             // session_id -> gold

/// Throws InconsistentSessionIds when golds miss a session or either map
/// names an unknown session; EmptyInput on no outcomes.
BatchReport aggregate(const std::vector<SessionOutcome>& outcomes, const JudgeScores& judge_scores,
                      const GoldLabels& golds);

/// One JSON object per line: overall first, then each mode.
std::string report_to_jsonl(const BatchReport& r);
/// Fixed-width table: Disc, Empth, Cohr, Fluen, Avg, Acc, Dx Rate (+ P/R/F1).
std::string report_to_table(const BatchReport& r);

}  // namespace upsd::eval
