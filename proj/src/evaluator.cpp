#include "upsd/evaluator.hpp"

#include <cstdio>
#include <set>

#include "upsd/errors.hpp"
#include "upsd/text.hpp"

namespace upsd::eval {

using nlohmann::json;

namespace {

struct MetricInfo {
    std::string_view name;
    std::string_view explanation;
    std::array<std::string_view, 5> rubric;
};

const std::array<MetricInfo, 4> kMetricInfo = {{
    {"Discreetness",
     "Reward the psychologist's skill in using personal anecdotes and indirect methods to explore "
     "sensitive topics, making the conversation feel less invasive.",
     {"1: The psychologist asks **direct** questions without much subtlety, which might feel "
      "invasive or blunt.",
      "2: The psychologist uses some indirect methods but still **occasionally** resorts to more "
      "direct questioning.",
      "3: The psychologist **skillfully** uses personal anecdotes and hints to guide the "
      "conversation, avoiding direct probes and making the inquirer comfortable.",
      "4: The psychologist **consistently** uses indirect questioning and anecdotes, creating a "
      "safe space for sensitive topics without making the inquirer feel pressured.",
      "5: The psychologist masterfully navigates the most sensitive topics with exceptional tact, "
      "using personal or hypothetical stories that resonate with the inquirer, encouraging "
      "openness without discomfort."}},
    {"Empathy",
     "Emphasize the psychologist's ability to emotional support make the user feel understood by "
     "referencing related experiences or feelings and providing guidance.",
     {"1: The psychologist provides basic acknowledgments of the inquirer's statements without "
      "personal engagement or deep understanding.",
      "2: The psychologist shows *generic* understanding and attempts, but references to feelings "
      "are somewhat generic.",
      "3: The psychologist *effectively* uses shared experiences to make the inquirer feel "
      "understood.",
      "4: The psychologist demonstrates *deep* empathy by consistently referencing common "
      "experiences or feelings that resonate *strongly* with the inquirer, providing meaningful "
      "guidance.",
      "5: The psychologist excels in making the inquirer feel *fully understood and supported*, "
      "seamlessly integrating personal anecdotes and profound emotional insights that perfectly "
      "align with the inquirer's needs."}},
    {"Coherence",
     "Focus on natural flowing transitions in dialogue to keep the conversation continuous.",
     {"1: Conversations may feel a bit disjointed; transitions between content are **abrupt** or "
      "poorly executed.",
      "2: The psychologist makes some effort to transit, but **not related** transitions which "
      "only focuses on depression symptoms.",
      "3: Each transition is **smooth and logical**, maintaining continuity and flow, with all "
      "shifts feeling natural.",
      "4: The psychologist using **indirect references or related anecdotes** to transit "
      "naturally and smoothly.",
      "5: The psychologist demonstrates exceptional skill in conversation flow, with every "
      "transition being **perfectly** timed and executed, enhancing the coherence of the entire "
      "session."}},
    {"Fluency", "A conversational, natural, and non-robotic communication style.",
     {"1: The psychologist's contents are **only understandable** without any other advantage.",
      "2: The psychologist's contents are **clear** without comprehension issues.",
      "3: The psychologist's contents are **fluent** but only focus on depression symptoms.",
      "4: The psychologist's contents are **engaging and natural** which express sharing related "
      "experiences.",
      "5: The psychologist achieves **perfect** fluency, with every content not only being clear "
      "and engaging but also enhancing the therapeutic effectiveness of the conversation."}},
}};

const MetricInfo& info(JudgeMetric m) { return kMetricInfo[static_cast<std::size_t>(m)]; }

void check_lengths(std::size_t preds, std::size_t golds) {
    if (preds != golds)
        throw LengthMismatch(std::to_string(preds) + " predictions vs " + std::to_string(golds) +
                             " gold labels");
    if (preds == 0) throw EmptyInput("metric inputs are empty");
}

std::string mode_name(bool stigma) { return stigma ? "with-stigma" : "non-stigma"; }

MetricRow compute_row(const std::vector<const SessionOutcome*>& rows, const JudgeScores& judge,
                      const GoldLabels& golds) {
    MetricRow row;
    row.n_sessions = rows.size();

    std::vector<std::optional<SeverityLabel>> preds;
    std::vector<SeverityLabel> gold_list;
    std::size_t successes = 0;
    for (const SessionOutcome* o : rows) {
        preds.push_back(o->verdict);
        gold_list.push_back(golds.at(o->session_id));
        if (o->success) ++successes;
    }
    row.accuracy = accuracy(preds, gold_list);
    row.dx_rate = static_cast<double>(successes) / static_cast<double>(rows.size());
    row.prf = weighted_prf(preds, gold_list);

    std::array<double, 4> sums{};
    std::array<int, 4> counts{};
    for (const SessionOutcome* o : rows) {
        auto it = judge.find(o->session_id);
        if (it == judge.end()) continue;
        for (const JudgeScore& s : it->second) {
            sums[static_cast<std::size_t>(s.metric)] += s.score;
            counts[static_cast<std::size_t>(s.metric)] += 1;
        }
    }
    if (std::all_of(counts.begin(), counts.end(), [](int c) { return c > 0; })) {
        std::array<double, 4> means{};
        for (std::size_t i = 0; i < 4; ++i) means[i] = sums[i] / counts[i];
        row.judge_means = means;
        row.judge_avg = (means[0] + means[1] + means[2] + means[3]) / 4.0;
    }
    return row;
}

json row_to_json(const std::string& label, const MetricRow& r) {
    json j{{"row", label},
           {"n_sessions", r.n_sessions},
           {"accuracy", r.accuracy},
           {"dx_rate", r.dx_rate},
           {"precision", r.prf.precision},
           {"recall", r.prf.recall},
           {"f1", r.prf.f1}};
    if (r.judge_means) {
        for (JudgeMetric m : kAllMetrics)
            j[text::to_lower(name(m))] = (*r.judge_means)[static_cast<std::size_t>(m)];
        j["avg"] = *r.judge_avg;
    }
    return j;
}

std::string fmt_row(const std::string& label, const MetricRow& r) {
    char buf[256];
    auto judge = [&](std::size_t i) -> std::string {
        if (!r.judge_means) return "-";
        char b[16];
        std::snprintf(b, sizeof b, "%.2f", (*r.judge_means)[i]);
        return b;
    };
    std::string avg = "-";
    if (r.judge_avg) {
        char b[16];
        std::snprintf(b, sizeof b, "%.2f", *r.judge_avg);
        avg = b;
    }
    std::snprintf(buf, sizeof buf, "%-12s %4zu %6s %6s %6s %6s %6s %7.2f%% %7.2f%% %6.3f %6.3f %6.3f\n",
                  label.c_str(), r.n_sessions, judge(0).c_str(), judge(1).c_str(), judge(2).c_str(),
                  judge(3).c_str(), avg.c_str(), r.accuracy * 100.0, r.dx_rate * 100.0,
                  r.prf.precision, r.prf.recall, r.prf.f1);
    return buf;
}

}  // namespace

std::string_view name(JudgeMetric m) noexcept { return info(m).name; }
std::string_view explanation(JudgeMetric m) noexcept { return info(m).explanation; }
const std::array<std::string_view, 5>& rubric(JudgeMetric m) noexcept { return info(m).rubric; }

std::optional<JudgeMetric> parse_metric(std::string_view s) {
    for (JudgeMetric m : kAllMetrics)
        if (text::fold_label(name(m)) == text::fold_label(s)) return m;
    return std::nullopt;
}

JudgeScore judge_dialogue(const Gateway& gw, const DialogueHistory& transcript, JudgeMetric m) {
    if (transcript.empty()) throw PreconditionViolation("cannot judge an empty transcript");
    std::string rubric_text;
    for (std::string_view line : rubric(m)) {
        if (!rubric_text.empty()) rubric_text += '\n';
        rubric_text += line;
    }
    const std::string prompt = gw.prompts.render(
        TemplateId::JudgeEvaluation, {{"METRIC", std::string(name(m))},
                                      {"METRIC_HUMAN_EXPLANATION", std::string(explanation(m))},
                                      {"COARSE_GRAINED_EXPLANATION", rubric_text},
                                      {"DIALOGUE_HISTORY", history_to_text(transcript)}});
    const SemanticCheck check = [m](const StructuredDoc& doc) -> std::optional<std::string> {
        if (doc.at("metric").get<std::string>() != name(m))
            return "expected an evaluation of \"" + std::string(name(m)) + "\"";
        return std::nullopt;
    };
    StructuredResult r =
        complete_structured(gw.backend, gw.request(prompt), "eval_result", gw.max_attempts, check);
    return JudgeScore{m, r.doc.at("score").get<int>(), r.doc.at("why").get<std::string>()};
}

double accuracy(const std::vector<std::optional<SeverityLabel>>& preds,
                const std::vector<SeverityLabel>& golds) {
    check_lengths(preds.size(), golds.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] && *preds[i] == golds[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double accuracy(const std::vector<SeverityLabel>& preds, const std::vector<SeverityLabel>& golds) {
    return accuracy(std::vector<std::optional<SeverityLabel>>(preds.begin(), preds.end()), golds);
}

double dx_rate(const std::vector<SessionOutcome>& outcomes) {
    if (outcomes.empty()) throw EmptyInput("dx_rate over no sessions");
    const auto ok = std::count_if(outcomes.begin(), outcomes.end(),
                                  [](const SessionOutcome& o) { return o.success; });
    return static_cast<double>(ok) / static_cast<double>(outcomes.size());
}

PrfScores weighted_prf(const std::vector<std::optional<SeverityLabel>>& preds,
                       const std::vector<SeverityLabel>& golds) {
    check_lengths(preds.size(), golds.size());
    constexpr std::size_t K = kAllSeverities.size();
    std::array<double, K> tp{}, pred_count{}, support{};
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto g = static_cast<std::size_t>(golds[i]);
        support[g] += 1;
        if (!preds[i]) continue;
        const auto p = static_cast<std::size_t>(*preds[i]);
        pred_count[p] += 1;
        if (p == g) tp[g] += 1;
    }
    const double n = static_cast<double>(golds.size());
    PrfScores out;
    for (std::size_t k = 0; k < K; ++k) {
        if (support[k] == 0) continue;
        const double precision = pred_count[k] > 0 ? tp[k] / pred_count[k] : 0.0;
        const double recall = tp[k] / support[k];
        const double f1 =
            precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        const double w = support[k] / n;
        out.precision += w * precision;
        out.recall += w * recall;
        out.f1 += w * f1;
    }
    return out;
}

PrfScores weighted_prf(const std::vector<SeverityLabel>& preds, const std::vector<SeverityLabel>& golds) {
    return weighted_prf(std::vector<std::optional<SeverityLabel>>(preds.begin(), preds.end()), golds);
}

double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
    if (counts.empty()) throw EmptyInput("fleiss_kappa needs at least one item");
    const std::size_t k = counts.front().size();
    if (k == 0) throw RaggedMatrix("rating matrix has no categories");
    long long raters = -1;
    for (const auto& row : counts) {
        if (row.size() != k) throw RaggedMatrix("rows have different category counts");
        long long sum = 0;
        for (int c : row) {
            if (c < 0) throw RaggedMatrix("negative rating count");
            sum += c;
        }
        if (raters < 0) raters = sum;
        if (sum != raters) throw RaggedMatrix("items were rated by different numbers of raters");
    }
    if (raters < 2) throw RaggedMatrix("need at least two raters per item");

    const double n_items = static_cast<double>(counts.size());
    const double r = static_cast<double>(raters);

    std::vector<long long> column(k, 0);
    double agreement_sum = 0.0;
    for (const auto& row : counts) {
        long long sq = 0;
        for (std::size_t j = 0; j < k; ++j) {
            sq += static_cast<long long>(row[j]) * row[j];
            column[j] += row[j];
        }
        agreement_sum += static_cast<double>(sq - raters) / (r * (r - 1.0));
    }
    const double p_bar = agreement_sum / n_items;

    const auto used = std::count_if(column.begin(), column.end(), [](long long c) { return c > 0; });
    if (used <= 1) throw DegenerateAgreement("all ratings fall in a single category");
    double p_e = 0.0;
    for (long long c : column) {
        const double p = static_cast<double>(c) / (n_items * r);
        p_e += p * p;
    }
    return (p_bar - p_e) / (1.0 - p_e);
}

BatchReport aggregate(const std::vector<SessionOutcome>& outcomes, const JudgeScores& judge_scores,
                      const GoldLabels& golds) {
    if (outcomes.empty()) throw EmptyInput("no sessions to aggregate");
    std::set<std::string> ids;
    for (const auto& o : outcomes) {
        if (!ids.insert(o.session_id).second)
            throw InconsistentSessionIds("duplicate session id " + o.session_id);
        if (!golds.count(o.session_id))
            throw InconsistentSessionIds("no gold label for session " + o.session_id);
    }
    for (const auto& [id, _] : golds)
        if (!ids.count(id)) throw InconsistentSessionIds("gold label for unknown session " + id);
    for (const auto& [id, _] : judge_scores)
        if (!ids.count(id)) throw InconsistentSessionIds("judge scores for unknown session " + id);

    BatchReport report;
    std::vector<const SessionOutcome*> all;
    std::map<std::string, std::vector<const SessionOutcome*>> modes;
    for (const auto& o : outcomes) {
        all.push_back(&o);
        modes[mode_name(o.stigma_mode)].push_back(&o);
    }
    report.overall = compute_row(all, judge_scores, golds);
    for (const auto& [mode, rows] : modes) report.by_mode[mode] = compute_row(rows, judge_scores, golds);
    return report;
}

std::string report_to_jsonl(const BatchReport& r) {
    std::string out = row_to_json("overall", r.overall).dump() + "\n";
    for (const auto& [mode, row] : r.by_mode) out += row_to_json(mode, row).dump() + "\n";
    return out;
}

std::string report_to_table(const BatchReport& r) {
    char header[256];
    std::snprintf(header, sizeof header, "%-12s %4s %6s %6s %6s %6s %6s %8s %8s %6s %6s %6s\n", "Rows",
                  "N", "Disc", "Empth", "Cohr", "Fluen", "Avg", "Acc", "Dx Rate", "W-P", "W-R",
                  "W-F1");
    std::string out = header;
    out += fmt_row("overall", r.overall);
    for (const auto& [mode, row] : r.by_mode) out += fmt_row(mode, row);
    return out;
}

}  // namespace upsd::eval
