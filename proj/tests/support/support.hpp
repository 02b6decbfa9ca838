#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "upsd/domain.hpp"
#include "upsd/evaluator.hpp"
#include "upsd/gateway.hpp"
#include "upsd/runner.hpp"

namespace upsd::testing {

std::filesystem::path fixture_path(const std::string& name);
std::filesystem::path data_path(const std::string& name);
std::string read_file(const std::filesystem::path& p);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

private:
    std::filesystem::path path_;
};

UserProfile make_profile(const std::string& id, SeverityLabel drisk);

RunConfig scripted_config(const ScriptedSpec& actor, const ScriptedSpec& simulator,
                          const std::filesystem::path& out_dir, std::int64_t seed = 42);

ScriptedFixture fixture(std::vector<std::string> all_of, std::string reply, bool repeat = false,
                        std::optional<std::string> pattern = std::nullopt);

/// Symptom Set reply naming every criterion; absent entries are "Unknown".
std::string symptom_reply(const std::map<CriterionId, SlotStatus>& set);

/// Topic (first Unknown slot), coarse (Empathy on the opening turn,
/// Questioning Skill on the same topic, Flow Management on a shift), a
/// matching fine strategy and a fixed response.
std::vector<ScriptedFixture> strategy_fixtures();

/// Actor fixtures for a session that fills slots one per pair in canonical
/// order (statuses as given) and ends with `verdict`.
ScriptedSpec schedule_actor(const std::vector<SlotStatus>& statuses, SeverityLabel verdict);

/// Simulator that answers every probe with the same line.
ScriptedSpec echo_simulator(const std::string& line);

/// Actor and simulator fixtures mixing refusals, prose, malformed JSON,
/// conflicting updates, off-list labels and empty generations. Different
/// variants give different mixes.
std::pair<ScriptedSpec, ScriptedSpec> adversarial_fixtures(std::uint64_t variant);

// --- Parser corpus ----------------------------------------------------------

struct ParserCase {
    std::string raw;
    std::string schema;
    nlohmann::json expected;
};

/// Twenty noisy model replies with their hand-parsed normalized documents.
const std::vector<ParserCase>& parser_corpus();

/// Replies with no JSON object in them, paired with the schema asked for.
const std::vector<std::pair<std::string, std::string>>& prose_cases();

/// Prefix/suffix noise seen around real replies.
const std::vector<std::pair<std::string, std::string>>& noise_wrappers();

/// Valid normalized document for a schema, drawn at random.
nlohmann::json random_doc(const std::string& schema, std::mt19937_64& rng);

/// The reply text a model would send for a normalized document.
std::string wire_text(const nlohmann::json& doc, const std::string& schema);

// --- Oracles ------------------------------------------------------------------

/// Fleiss' kappa from explicit pairwise agreement counts.
double kappa_by_pairs(const std::vector<std::vector<int>>& counts);

/// Support-weighted precision / recall / F1 read off a confusion matrix.
eval::PrfScores prf_by_confusion(const std::vector<SeverityLabel>& preds,
                                 const std::vector<SeverityLabel>& golds);

/// Unweighted mean of the per-class scores over classes with support.
eval::PrfScores macro_by_confusion(const std::vector<SeverityLabel>& preds,
                                   const std::vector<SeverityLabel>& golds);

/// Every annotated turn: fine within coarse, no Flow Management on an
/// unchanged topic. Returns violation descriptions.
std::vector<std::string> taxonomy_violations(const SessionRecord& r);

}  // namespace upsd::testing
