#include "upsd/domain.hpp"

#include <algorithm>

#include "upsd/text.hpp"

namespace upsd {

namespace {

struct CriterionInfo {
    std::string_view display;
    std::string_view enum_name;
    std::string_view explanation;
};

constexpr std::array<CriterionInfo, kCriterionCount> kCriterionInfo = {{
    {"Depression Mood", "DepressionMood",
     "Whether the user has a long-time depressive mood or hopelessness, or sadness, or "
     "meaninglessness, or desperation."},
    {"Loss of Interest", "LossOfInterest",
     "Whether the user has a lack of interest in everything, for most of the day almost every "
     "day."},
    {"Decreased Energy", "DecreasedEnergy",
     "Whether the user has strong fatigue, lacks energy, and finds it difficult to complete "
     "even simple tasks."},
    {"Self-Loathing", "SelfLoathing",
     "Whether the user has a strong guilt or self-blame, or a strong sense of worthless."},
    {"Suicidal Tendency", "SuicidalTendency", "Whether the user has a thought of self-harm, suicide."},
    {"Poor Concentration", "PoorConcentration",
     "Whether the user has attention and concentration problems, memory problems, or "
     "decision-making difficulties."},
    {"Disrupted Sleep", "DisruptedSleep",
     "Whether the user has insomnia (sleep much less) or drowsiness (sleep much more), or "
     "wakes up frequently at night."},
    {"Changed Appetite or Weight", "ChangedAppetiteOrWeight",
     "Whether the user eats too much or too less, or has a large change in weight."},
    {"Psychomotor Agitation or Retardation", "PsychomotorChange",
     "Whether the user has a slowed movement and thinking, or is feeling restless and "
     "agitated."},
}};

struct FineInfo {
    CoarseStrategy parent;
    std::string_view display;
    std::string_view enum_name;
    std::string_view explanation;
    std::string_view example;
};

constexpr std::array<FineInfo, 9> kFineInfo = {{
    {CoarseStrategy::QuestioningSkill, "Loading Question", "LoadingQuestion",
     "Use assumptions or hints to guide the inquirer towards his relevant symptom.",
     "Looking ahead, the future is bright, wouldn't you say?"},
    {CoarseStrategy::QuestioningSkill, "Nominative Technique", "NominativeTechnique",
     "Mention others' experiences first, then ask for the user's view or feeling.",
     "Some people go through this that they want to stop all. How about you?"},
    {CoarseStrategy::QuestioningSkill, "Forgiving Question", "ForgivingQuestion",
     "Use forgiving and respectful open-ended questions his relevant symptom.",
     "Could you share with me what's been on your mind about the future lately?"},
    {CoarseStrategy::QuestioningSkill, "Clarification", "Clarification",
     "Ask a clarification for something in the user's previous utterance.",
     "You mentioned feeling desperate. Could you tell me more about that?"},
    {CoarseStrategy::Empathy, "Connection", "Connection",
     "Express support through agreeing, consoling, encouraging, or caring.",
     "I'm here for you, and together, we can find a way forward."},
    {CoarseStrategy::Empathy, "Guidance", "Guidance",
     "Provide suggestions or share personal views to help users find solutions.",
     "I can understand your feelings, and sometimes talking about it can help."},
    {CoarseStrategy::Empathy, "Feedback", "Feedback",
     "Provide feedback by appreciating, disapproving, or sharing experiences.",
     "It sounds like you have a really tough time, feeling hopeless is understandable."},
    {CoarseStrategy::FlowManagement, "Bridging", "Bridging",
     "Use a term from the user's last response as a bridge to introduce a related topic.",
     "That hopelessness can really mess with your whole life."},
    {CoarseStrategy::FlowManagement, "Comment then Shift", "CommentThenShift",
     "Comment on the user's last response then shift to a related topic.",
     "Feeling hopeless is really tough, and it can even impact things like eating."},
}};

const FineInfo& info(FineStrategy f) { return kFineInfo[static_cast<std::size_t>(f)]; }

}  // namespace

std::string_view display_name(CriterionId c) noexcept { return kCriterionInfo[index_of(c)].display; }
std::string_view enum_name(CriterionId c) noexcept { return kCriterionInfo[index_of(c)].enum_name; }
std::string_view explanation(CriterionId c) noexcept {
    return kCriterionInfo[index_of(c)].explanation;
}

std::optional<CriterionId> parse_criterion(std::string_view s) {
    const std::string folded = text::fold_label(s);
    if (folded.empty()) return std::nullopt;
    for (CriterionId c : kAllCriteria) {
        if (folded == text::fold_label(display_name(c)) || folded == text::fold_label(enum_name(c)))
            return c;
    }
    // Surface variants seen in model output.
    static const std::array<std::pair<std::string_view, CriterionId>, 10> aliases = {{
        {"depressedmood", CriterionId::DepressionMood},
        {"depressivemood", CriterionId::DepressionMood},
        {"suicidetendency", CriterionId::SuicidalTendency},
        {"suicidalideation", CriterionId::SuicidalTendency},
        {"selfloathing", CriterionId::SelfLoathing},
        {"sleepdisturbance", CriterionId::DisruptedSleep},
        {"changedappetite", CriterionId::ChangedAppetiteOrWeight},
        {"appetiteorweightchange", CriterionId::ChangedAppetiteOrWeight},
        {"psychomotoragitation", CriterionId::PsychomotorChange},
        {"psychomotorretardation", CriterionId::PsychomotorChange},
    }};
    for (const auto& [alias, c] : aliases)
        if (folded == alias) return c;
    return std::nullopt;
}

std::string_view to_string(SlotStatus s) noexcept {
    switch (s) {
        case SlotStatus::Present: return "True";
        case SlotStatus::Absent: return "False";
        case SlotStatus::Unknown: break;
    }
    return "Unknown";
}

SlotDetermination::SlotDetermination(SlotStatus status, std::string rationale)
    : status_(status), rationale_(std::move(rationale)) {
    if (status_ == SlotStatus::Unknown && !rationale_.empty())
        throw InvalidValue("an Unknown slot carries no rationale");
    if (status_ != SlotStatus::Unknown && rationale_.empty())
        throw InvalidValue("a determined slot needs a rationale");
    if (rationale_.size() > kMaxRationaleLength)
        throw InvalidValue("slot rationale longer than 200 characters");
}

SymptomSet SymptomSet::set_slot(CriterionId c, const SlotDetermination& d) const {
    if (!d.determined()) throw PreconditionViolation("set_slot requires a determined status");
    const SlotDetermination& current = slots_[index_of(c)];
    if (current.determined()) {
        if (current.status() == d.status()) return *this;
        throw ConflictingDetermination(std::string(display_name(c)) + " is already " +
                                       std::string(to_string(current.status())) +
                                       "; refusing to change it to " +
                                       std::string(to_string(d.status())));
    }
    SymptomSet next = *this;
    next.slots_[index_of(c)] = d;
    return next;
}

std::vector<CriterionId> SymptomSet::unfilled() const {
    std::vector<CriterionId> out;
    for (CriterionId c : kAllCriteria)
        if (!slots_[index_of(c)].determined()) out.push_back(c);
    return out;
}

std::size_t SymptomSet::determined_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        slots_.begin(), slots_.end(), [](const SlotDetermination& d) { return d.determined(); }));
}

CoarseStrategy fine_to_coarse(FineStrategy f) noexcept { return info(f).parent; }

std::vector<FineStrategy> family(CoarseStrategy c) {
    std::vector<FineStrategy> out;
    for (FineStrategy f : kAllFine)
        if (fine_to_coarse(f) == c) out.push_back(f);
    return out;
}

std::string_view prompt_label(CoarseStrategy c) noexcept {
    switch (c) {
        case CoarseStrategy::QuestioningSkill: return "Questioning Skill";
        case CoarseStrategy::Empathy: return "Empathetic Response";
        case CoarseStrategy::FlowManagement: return "Flow Management";
    }
    return "";
}

std::string_view enum_name(CoarseStrategy c) noexcept {
    switch (c) {
        case CoarseStrategy::QuestioningSkill: return "QuestioningSkill";
        case CoarseStrategy::Empathy: return "Empathy";
        case CoarseStrategy::FlowManagement: return "FlowManagement";
    }
    return "";
}

std::string_view display_name(FineStrategy f) noexcept { return info(f).display; }
std::string_view enum_name(FineStrategy f) noexcept { return info(f).enum_name; }
std::string_view explanation(FineStrategy f) noexcept { return info(f).explanation; }
std::string_view example_utterance(FineStrategy f) noexcept { return info(f).example; }

std::optional<CoarseStrategy> parse_coarse(std::string_view s) {
    static const std::array<std::pair<std::string_view, CoarseStrategy>, 10> aliases = {{
        {"questioningskill", CoarseStrategy::QuestioningSkill},
        {"questioningskills", CoarseStrategy::QuestioningSkill},
        {"discreetprobing", CoarseStrategy::QuestioningSkill},
        {"discreetprobingviaquestioningskills", CoarseStrategy::QuestioningSkill},
        {"empathy", CoarseStrategy::Empathy},
        {"empatheticresponse", CoarseStrategy::Empathy},
        {"empatheticresponses", CoarseStrategy::Empathy},
        {"empathicresponse", CoarseStrategy::Empathy},
        {"flowmanagement", CoarseStrategy::FlowManagement},
        {"topicshift", CoarseStrategy::FlowManagement},
    }};
    const std::string folded = text::fold_label(s);
    for (const auto& [alias, c] : aliases)
        if (folded == alias) return c;
    return std::nullopt;
}

std::optional<FineStrategy> parse_fine(std::string_view s) {
    const std::string folded = text::fold_label(s);
    if (folded.empty()) return std::nullopt;
    for (FineStrategy f : kAllFine) {
        if (folded == text::fold_label(display_name(f)) || folded == text::fold_label(enum_name(f)))
            return f;
    }
    if (folded == "loadingquestions") return FineStrategy::LoadingQuestion;
    if (folded == "forgivingquestions") return FineStrategy::ForgivingQuestion;
    if (folded == "commentandshift") return FineStrategy::CommentThenShift;
    if (folded == "bridge") return FineStrategy::Bridging;
    return std::nullopt;
}

std::string_view to_string(Speaker s) noexcept {
    return s == Speaker::System ? "system" : "user";
}

DialogueHistory::DialogueHistory(std::vector<Turn> turns) {
    for (auto& t : turns) {
        if (t.index != turns_.size())
            throw InvalidHistory("turn indices must be consecutive from 0");
        append(t.speaker, std::move(t.text), std::move(t.annotation));
    }
}

void DialogueHistory::append(Speaker speaker, std::string text,
                             std::optional<TurnAnnotation> annotation) {
    const Speaker expected = turns_.size() % 2 == 0 ? Speaker::System : Speaker::User;
    if (speaker != expected)
        throw InvalidHistory("turn " + std::to_string(turns_.size()) + " must be spoken by the " +
                             std::string(to_string(expected)));
    if (speaker == Speaker::User && annotation)
        throw InvalidHistory("user turns carry no strategy annotation");
    if (annotation && fine_to_coarse(annotation->fine) != annotation->coarse)
        throw InvalidHistory("annotation pairs a fine strategy with the wrong coarse family");
    turns_.push_back(Turn{turns_.size(), speaker, std::move(text), std::move(annotation)});
}

std::string_view to_string(SeverityLabel s) noexcept {
    switch (s) {
        case SeverityLabel::NonDepression: return "non-depression";
        case SeverityLabel::Mild: return "mild";
        case SeverityLabel::Moderate: return "moderate";
        case SeverityLabel::Severe: return "severe";
    }
    return "";
}

std::optional<SeverityLabel> parse_severity(std::string_view s) {
    const std::string folded = text::fold_label(s);
    for (SeverityLabel l : kAllSeverities)
        if (folded == text::fold_label(to_string(l))) return l;
    if (folded == "nondepressed" || folded == "none" || folded == "nodepression" ||
        folded == "normal")
        return SeverityLabel::NonDepression;
    if (folded == "milddepression") return SeverityLabel::Mild;
    if (folded == "moderatedepression") return SeverityLabel::Moderate;
    if (folded == "severedepression") return SeverityLabel::Severe;
    return std::nullopt;
}

void UserProfile::validate() const {
    if (id.empty()) throw InvalidValue("profile id is empty");
    if (text::trim(summary).empty()) throw InvalidValue("profile " + id + " has an empty summary");
    if (age < 10 || age > 100)
        throw InvalidValue("profile " + id + " age " + std::to_string(age) + " outside [10, 100]");
}

void StigmaProfile::validate() const {
    if (text::trim(stereotype).empty() || text::trim(prejudice).empty() ||
        text::trim(discrimination).empty())
        throw InvalidValue("stigma profile '" + aspect + "' needs all three lines");
}

}  // namespace upsd
