#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "upsd/domain.hpp"
#include "upsd/pipeline.hpp"

// Profile-driven user simulators (with optional stigma injection) and the
// nine-item Depression Stigma Scale.
namespace upsd::sim {

/// "low likely" / "moderately might" / "likely" / "highly likely", by drisk.
std::string_view drisk_to_probability(SeverityLabel d) noexcept;

struct SimulatorSpec {
    UserProfile profile;
    std::optional<StigmaProfile> stigma;
    std::string probability_phrase;

    /// Derives the probability phrase from the profile's drisk.
    static SimulatorSpec make(UserProfile profile, std::optional<StigmaProfile> stigma = {});
};

/// PROFILE_DATA binding: the profile attributes as a JSON object.
std::string profile_data(const UserProfile& p);
/// STIGMA_DATA binding: stereotype / prejudice / discrimination lines.
std::string stigma_data(const StigmaProfile& s);

/// Precondition: history ends with a System turn. Throws EmptyGeneration.
std::string simulate_reply(const Gateway& gw, const SimulatorSpec& spec, const DialogueHistory& history);

/// The ten built-in stigma profiles, one per life aspect.
const std::array<StigmaProfile, 10>& builtin_stigma_profiles();

// --- Depression Stigma Scale -------------------------------------------------

inline constexpr int kScaleItems = 9;

const std::array<std::string_view, kScaleItems>& stigma_scale_questions();

struct LikertAnswer {
    int value = 0;
    std::string raw;
};

struct ScaleResult {
    std::vector<LikertAnswer> answers;
    int total = 0;
};

/// Object form {"Agree": 4}, a bare label ("strongly agree."), or a lone digit.
std::optional<int> parse_likert(std::string_view raw);

/// Sum of exactly nine answers; throws WrongArity otherwise.
int score_scale(const std::vector<LikertAnswer>& answers);

/// Per-item means over several administrations; throws EmptyInput.
std::array<double, kScaleItems> item_means(const std::vector<ScaleResult>& results);
/// Sum of the per-item means.
double total_of_means(const std::array<double, kScaleItems>& means);

/// Asks each question in order with up to two re-asks; throws UnparseableAnswer.
ScaleResult administer_stigma_scale(const Gateway& gw, const SimulatorSpec& spec);

// --- Profile ingestion ------------------------------------------------------

UserProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const UserProfile& p);

/// One JSON record per line; blank lines skipped. Every profile validated.
std::vector<UserProfile> load_profiles(const std::filesystem::path& file);

}  // namespace upsd::sim
