#include "upsd/simulator.hpp"

#include <cctype>
#include <fstream>

#include <spdlog/spdlog.h>

#include "upsd/errors.hpp"
#include "upsd/structured.hpp"
#include "upsd/text.hpp"

namespace upsd::sim {

using nlohmann::json;

std::string_view drisk_to_probability(SeverityLabel d) noexcept {
    switch (d) {
        case SeverityLabel::NonDepression: return "low likely";
        case SeverityLabel::Mild: return "moderately might";
        case SeverityLabel::Moderate: return "likely";
        case SeverityLabel::Severe: return "highly likely";
    }
    return "likely";
}

SimulatorSpec SimulatorSpec::make(UserProfile profile, std::optional<StigmaProfile> stigma) {
    profile.validate();
    if (stigma) stigma->validate();
    std::string phrase(drisk_to_probability(profile.drisk));
    return SimulatorSpec{std::move(profile), std::move(stigma), std::move(phrase)};
}

std::string profile_data(const UserProfile& p) {
    nlohmann::ordered_json j;
    j["drisk"] = std::string(to_string(p.drisk));
    j["age"] = p.age;
    j["gender"] = p.gender;
    j["marital_status"] = p.marital_status;
    j["occupation"] = p.occupation;
    j["summary"] = p.summary;
    return neutralize_markers(j.dump(-1, ' ', false));
}

std::string stigma_data(const StigmaProfile& s) {
    return neutralize_markers("Stereotype: " + s.stereotype + "\nPrejudice: " + s.prejudice +
                              "\nDiscrimination: " + s.discrimination);
}

std::string simulate_reply(const Gateway& gw, const SimulatorSpec& spec, const DialogueHistory& history) {
    if (history.empty() || history.back().speaker != Speaker::System)
        throw PreconditionViolation("simulate_reply needs a history ending with a system turn");
    Binding b{{"DIALOGUE_HISTORY", "\n" + history_to_text(history)},
              {"PROFILE_DATA", profile_data(spec.profile)}};
    TemplateId id = TemplateId::NonStigmaSimulator;
    if (spec.stigma) {
        id = TemplateId::WithStigmaSimulator;
        b["STIGMA_DATA"] = stigma_data(*spec.stigma);
        b["PROBABILITY"] = spec.probability_phrase;
    }
    return gw.generate_text(gw.prompts.render(id, b), "user simulator");
}

const std::array<StigmaProfile, 10>& builtin_stigma_profiles() {
    static const std::array<StigmaProfile, 10> profiles = {{
        {"Employment", "People might think those with depression can't handle work stress.",
         "I worry that I'm not competent because of my depression.",
         "Employers might refuse employment because of depression."},
        {"Family", "Families may view depression as a sign of weakness.",
         "Depression leads to judgments about a person's capability.",
         "Family members with depression may be excluded from roles and activities."},
        {"Friendship", "Friends may see depression as constant sadness.",
         "They might assume you're always down or unreliable.",
         "You could be left out of social events due to these perceptions."},
        {"Self-Esteem", "People with depression are viewed as weak or incapable.",
         "Internalizing negative views.", "They have low self-worth and are incompetent."},
        {"Self-Efficacy", "People with depression are perceived as less competent.",
         "Their doubts about their abilities increase.",
         "Reduced opportunities reinforce feelings of inefficacy."},
        {"Social Interaction", "People with depression are perceived as unsociable.",
         "Others may avoid engaging with them.",
         "This may result in being excluded from social events and gatherings."},
        {"Opportunities", "People with depression are seen as unreliable.",
         "They are overlooked for promotions or projects.",
         "This may result in fewer career advancement opportunities."},
        {"Isolation", "People might believe those with depression prefer to be alone.",
         "This leads to assumptions that they shouldn't be included in social activities.",
         "individuals with depression might be left out and isolated."},
        {"Income", "People with depression are seen as less productive.",
         "They are underestimated at work.", "This may result in lower wages or job instability."},
        {"Health Insurance", "Insurers see mental health issues as high-risk.",
         "They assume higher medical costs.",
         "People may face higher premiums or coverage exclusions."},
    }};
    return profiles;
}

const std::array<std::string_view, kScaleItems>& stigma_scale_questions() {
    static constexpr std::array<std::string_view, kScaleItems> questions = {
        "People with depression could snap out of it if they wanted.",
        "Depression is a sign of personal weakness.",
        "Depression is not a real medical illness.",
        "People with depression are dangerous.",
        "It is best to avoid people with depression so you don't become depressed yourself.",
        "People with depression are unpredictable.",
        "If I had depression I would not tell anyone.",
        "I would not employ someone if I knew they had been depressed.",
        "I would not vote for a politician if I knew they had been depressed.",
    };
    return questions;
}

std::optional<int> parse_likert(std::string_view raw) {
    try {
        return extract_structured(raw, "likert_choice").at("value").get<int>();
    } catch (const Error&) {
        // fall through to the bare-label forms
    }
    std::string letters;
    std::string digits;
    for (char c : raw) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalpha(u)) letters.push_back(static_cast<char>(std::tolower(u)));
        else if (std::isdigit(u)) digits.push_back(c);
    }
    static const std::array<std::pair<std::string_view, int>, 5> labels = {{
        {"stronglydisagree", 1}, {"disagree", 2}, {"neutral", 3}, {"agree", 4}, {"stronglyagree", 5}}};
    for (const auto& [label, value] : labels) {
        if (letters == label && (digits.empty() || digits == std::to_string(value))) return value;
    }
    if (letters.empty() && digits.size() == 1 && digits[0] >= '1' && digits[0] <= '5')
        return digits[0] - '0';
    return std::nullopt;
}

int score_scale(const std::vector<LikertAnswer>& answers) {
    if (answers.size() != kScaleItems)
        throw WrongArity("the stigma scale has 9 items, got " + std::to_string(answers.size()));
    int total = 0;
    for (const auto& a : answers) {
        if (a.value < 1 || a.value > 5) throw InvalidValue("Likert value outside 1..5");
        total += a.value;
    }
    return total;
}

std::array<double, kScaleItems> item_means(const std::vector<ScaleResult>& results) {
    if (results.empty()) throw EmptyInput("no scale results to average");
    std::array<long long, kScaleItems> sums{};
    for (const auto& r : results) {
        score_scale(r.answers);
        for (int q = 0; q < kScaleItems; ++q) sums[q] += r.answers[q].value;
    }
    std::array<double, kScaleItems> means{};
    for (int q = 0; q < kScaleItems; ++q)
        means[q] = static_cast<double>(sums[q]) / static_cast<double>(results.size());
    return means;
}

double total_of_means(const std::array<double, kScaleItems>& means) {
    double total = 0.0;
    for (double m : means) total += m;
    return total;
}

ScaleResult administer_stigma_scale(const Gateway& gw, const SimulatorSpec& spec) {
    constexpr int kAsks = 3;  // first ask + two re-asks
    ScaleResult result;
    const auto& questions = stigma_scale_questions();
    for (int q = 0; q < kScaleItems; ++q) {
        DialogueHistory h;
        h.append(Speaker::System,
                 gw.prompts.render(TemplateId::LikertQuestion,
                                   {{"SCALE_QUESTION", std::string(questions[q])}}));
        std::optional<LikertAnswer> answer;
        for (int attempt = 0; attempt < kAsks && !answer; ++attempt) {
            std::string raw;
            try {
                raw = simulate_reply(gw, spec, h);
            } catch (const EmptyGeneration&) {
                continue;
            }
            if (auto v = parse_likert(raw)) answer = LikertAnswer{*v, raw};
            else spdlog::warn("stigma scale item {}: unparseable answer '{}'", q + 1, raw);
        }
        if (!answer) throw UnparseableAnswer(q);
        result.answers.push_back(std::move(*answer));
    }
    result.total = score_scale(result.answers);
    return result;
}

UserProfile profile_from_json(const json& j) {
    UserProfile p;
    try {
        p.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        const std::string drisk = j.at("drisk").get<std::string>();
        auto label = parse_severity(drisk);
        if (!label) throw InvalidValue("unknown drisk '" + drisk + "'");
        p.drisk = *label;
        p.age = j.at("age").get<int>();
        p.gender = j.value("gender", std::string());
        p.marital_status = j.value("marital_status", std::string());
        p.occupation = j.value("occupation", std::string());
        p.summary = j.at("summary").get<std::string>();
    } catch (const json::exception& e) {
        throw InvalidValue(std::string("malformed profile record: ") + e.what());
    }
    p.validate();
    return p;
}

json profile_to_json(const UserProfile& p) {
    return json{{"id", p.id},
                {"drisk", to_string(p.drisk)},
                {"age", p.age},
                {"gender", p.gender},
                {"marital_status", p.marital_status},
                {"occupation", p.occupation},
                {"summary", p.summary}};
}

std::vector<UserProfile> load_profiles(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open profile file " + file.string());
    std::vector<UserProfile> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw InvalidValue(file.string() + ":" + std::to_string(line_no) + ": not a JSON record");
        out.push_back(profile_from_json(j));
    }
    return out;
}

}  // namespace upsd::sim
