#include "kindred/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "kindred/errors.hpp"

namespace kindred {

namespace {

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

void require_text(const std::string& value, const char* field) {
    if (blank(value)) throw ValidationError(field, "must be non-empty");
}

template <typename E, std::size_t N>
E enum_from(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
            const char* what) {
    for (const auto& [e, name] : table) {
        if (name == s) return e;
    }
    throw ParseError(std::string("unknown ") + what + ": '" + std::string(s) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_to(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [e, name] : table) {
        if (e == v) return name;
    }
    return "?";
}

constexpr std::array<std::pair<Role, std::string_view>, 2> kRoles{{
    {Role::user, "user"},
    {Role::agent, "agent"},
}};
constexpr std::array<std::pair<Origin, std::string_view>, 3> kOrigins{{
    {Origin::user_initiated, "user_initiated"},
    {Origin::passive_reply, "passive_reply"},
    {Origin::proactive, "proactive"},
}};
constexpr std::array<std::pair<EventCategory, std::string_view>, 5> kCategories{{
    {EventCategory::physical_condition, "physical_condition"},
    {EventCategory::negative_feeling, "negative_feeling"},
    {EventCategory::challenge, "challenge"},
    {EventCategory::plan, "plan"},
    {EventCategory::unknown, "unknown"},
}};
constexpr std::array<std::pair<EntrySource, std::string_view>, 2> kSources{{
    {EntrySource::daily_init, "daily_init"},
    {EntrySource::event_detector, "event_detector"},
}};
constexpr std::array<std::pair<EntryState, std::string_view>, 4> kStates{{
    {EntryState::pending, "pending"},
    {EntryState::dispatched, "dispatched"},
    {EntryState::skipped, "skipped"},
    {EntryState::expired, "expired"},
}};
constexpr std::array<std::pair<Strategy, std::string_view>, 7> kStrategyIds{{
    {Strategy::self_disclosure, "self_disclosure"},
    {Strategy::inquiring, "inquiring"},
    {Strategy::affirmation_and_reassurance, "affirmation_and_reassurance"},
    {Strategy::invite_users_to_think, "invite_users_to_think"},
    {Strategy::reflection_of_feelings, "reflection_of_feelings"},
    {Strategy::restatement_or_paraphrasing, "restatement_or_paraphrasing"},
    {Strategy::answer, "answer"},
}};

struct StrategyText {
    std::string_view name;
    std::string_view description;
    std::string_view example;
};

// Indexed by Strategy.
constexpr std::array<StrategyText, 7> kStrategyText{{
    {"Self-disclosure",
     "Disclose personal information to users, including but not limited to your own similar "
     "experiences, feelings, behaviors, and thoughts.",
     "I also have a similar experience! I did such a thing last time!"},
    {"Inquiring",
     "Explore users' subjective experiences or ask users to concretize imprecise factual "
     "information.",
     "Are you feeling better now? How do you feel now?"},
    {"Affirmation and Reassurance",
     "Affirm users' strengths, motivations, and abilities, normalize their emotions and "
     "motivations, and provide comfort, encouragement, and reinforcement.",
     "I believe you can! It will get better soon! I will support you no matter what!"},
    {"Invite users to think",
     "Guide users to think about their situation from a new angle, for example by asking an "
     "open question or pointing at something worth considering first.",
     "Taking a deep breath may be a good way to relax, but it's important to first identify the "
     "root cause of the problem."},
    {"Reflection of feelings",
     "Use tentative or affirmative sentence patterns to explicitly reflect the users' mood, "
     "feelings, or emotional states.",
     "I understand your current annoyance."},
    {"Restatement or Paraphrasing",
     "Reflect the content and meaning expressed in users' statements to obtain explicit or "
     "implicit feedback from users.",
     "It sounds like you think everyone is ignoring you, right?"},
    {"Answer", "Answer the questions that users ask about the conversation topics.",
     "I think you need to read the book 'Learning Neural Networks' now."},
}};

Json::const_reference field(const Json& j, const char* name) {
    if (!j.is_object()) throw ValidationError(name, "expected a JSON object");
    auto it = j.find(name);
    if (it == j.end()) throw ValidationError(name, "missing");
    return *it;
}

template <typename T>
T get_field(const Json& j, const char* name) {
    try {
        return field(j, name).get<T>();
    } catch (const Json::exception& e) {
        throw ValidationError(name, e.what());
    }
}

}  // namespace

// ---------------------------------------------------------------------------

const Persona& validate_persona(const Persona& p) {
    require_text(p.name, "name");
    if (p.age <= 0) throw ValidationError("age", "must be positive");
    require_text(p.gender, "gender");
    require_text(p.personality, "personality");
    require_text(p.occupation_or_major, "occupation_or_major");
    require_text(p.background, "background");
    require_text(p.hobbies, "hobbies");
    require_text(p.language_style, "language_style");
    require_text(p.relationship_with_user, "relationship_with_user");
    if (p.example_dialogues.size() != kExampleDialogueCount) {
        throw ValidationError("example_dialogues",
                              "need exactly 4 pairs, got " +
                                  std::to_string(p.example_dialogues.size()));
    }
    for (const auto& d : p.example_dialogues) {
        if (blank(d.user_line) || blank(d.agent_line)) {
            throw ValidationError("example_dialogues", "lines must be non-empty");
        }
    }
    return p;
}

const Message& validate_message(const Message& m) {
    require_text(m.content, "content");
    if (m.origin == Origin::proactive && m.role != Role::agent) {
        throw ValidationError("origin", "proactive messages must come from the agent");
    }
    if (m.origin == Origin::passive_reply && m.role != Role::agent) {
        throw ValidationError("origin", "passive replies must come from the agent");
    }
    if (m.origin == Origin::user_initiated && m.role != Role::user) {
        throw ValidationError("origin", "agent messages need an agent origin");
    }
    return m;
}

const WorldInfo& validate_world_info(const WorldInfo& w) {
    if (w.temp_low > w.temp_high) throw ValidationError("temp_low", "must be <= temp_high");
    return w;
}

bool is_proactive_allowed(Strategy s) {
    return std::find(kProactiveAllowed.begin(), kProactiveAllowed.end(), s) !=
           kProactiveAllowed.end();
}

std::string_view display_name(Strategy s) { return kStrategyText[static_cast<int>(s)].name; }
std::string_view strategy_description(Strategy s) {
    return kStrategyText[static_cast<int>(s)].description;
}
std::string_view strategy_example(Strategy s) { return kStrategyText[static_cast<int>(s)].example; }

std::string_view to_string(Role v) { return enum_to(v, kRoles); }
std::string_view to_string(Origin v) { return enum_to(v, kOrigins); }
std::string_view to_string(EventCategory v) { return enum_to(v, kCategories); }
std::string_view to_string(EntrySource v) { return enum_to(v, kSources); }
std::string_view to_string(EntryState v) { return enum_to(v, kStates); }
std::string_view to_string(Strategy v) { return enum_to(v, kStrategyIds); }

Role role_from_string(std::string_view s) { return enum_from(s, kRoles, "role"); }
Origin origin_from_string(std::string_view s) { return enum_from(s, kOrigins, "origin"); }
EventCategory category_from_string(std::string_view s) {
    return enum_from(s, kCategories, "category");
}
EntrySource source_from_string(std::string_view s) { return enum_from(s, kSources, "source"); }
EntryState state_from_string(std::string_view s) { return enum_from(s, kStates, "state"); }
Strategy strategy_from_string(std::string_view s) {
    return enum_from(s, kStrategyIds, "strategy");
}

// ---------------------------------------------------------------------------
// JSON

void to_json(Json& j, const DialoguePair& v) {
    j = Json{{"user_line", v.user_line}, {"agent_line", v.agent_line}};
}

void from_json(const Json& j, DialoguePair& v) {
    v.user_line = get_field<std::string>(j, "user_line");
    v.agent_line = get_field<std::string>(j, "agent_line");
}

void to_json(Json& j, const Persona& v) {
    j = Json{{"name", v.name},
             {"age", v.age},
             {"gender", v.gender},
             {"personality", v.personality},
             {"occupation_or_major", v.occupation_or_major},
             {"background", v.background},
             {"hobbies", v.hobbies},
             {"language_style", v.language_style},
             {"relationship_with_user", v.relationship_with_user},
             {"example_dialogues", v.example_dialogues}};
}

void from_json(const Json& j, Persona& v) {
    static const std::set<std::string> kKnown = {
        "name",       "age",     "gender",         "personality",           "occupation_or_major",
        "background", "hobbies", "language_style", "relationship_with_user", "example_dialogues"};
    if (!j.is_object()) throw ValidationError("persona", "expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!kKnown.count(key)) throw ValidationError(key, "unknown persona field");
    }
    v.name = get_field<std::string>(j, "name");
    v.age = get_field<int>(j, "age");
    v.gender = get_field<std::string>(j, "gender");
    v.personality = get_field<std::string>(j, "personality");
    v.occupation_or_major = get_field<std::string>(j, "occupation_or_major");
    v.background = get_field<std::string>(j, "background");
    v.hobbies = get_field<std::string>(j, "hobbies");
    v.language_style = get_field<std::string>(j, "language_style");
    v.relationship_with_user = get_field<std::string>(j, "relationship_with_user");
    const auto& dialogues = field(j, "example_dialogues");
    if (!dialogues.is_array()) throw ValidationError("example_dialogues", "expected an array");
    v.example_dialogues.clear();
    for (const auto& d : dialogues) {
        if (d.is_array() && d.size() == 2 && d[0].is_string() && d[1].is_string()) {
            v.example_dialogues.push_back({d[0].get<std::string>(), d[1].get<std::string>()});
        } else {
            try {
                v.example_dialogues.push_back(d.get<DialoguePair>());
            } catch (const ValidationError&) {
                throw ValidationError("example_dialogues", "malformed pair");
            }
        }
    }
}

void to_json(Json& j, const Message& v) {
    j = Json{{"id", v.id},
             {"role", to_string(v.role)},
             {"content", v.content},
             {"sent_at", format_timestamp(v.sent_at)},
             {"origin", to_string(v.origin)}};
}

void from_json(const Json& j, Message& v) {
    v.id = get_field<MessageId>(j, "id");
    v.role = role_from_string(get_field<std::string>(j, "role"));
    v.content = get_field<std::string>(j, "content");
    v.sent_at = parse_timestamp(get_field<std::string>(j, "sent_at"));
    v.origin = origin_from_string(get_field<std::string>(j, "origin"));
}

void to_json(Json& j, const MemoryObject& v) {
    j = Json{{"pair_id", v.pair_id},
             {"user_message", v.user_message ? Json(*v.user_message) : Json(nullptr)},
             {"agent_message", v.agent_message},
             {"embedding", v.embedding ? Json(*v.embedding) : Json(nullptr)},
             {"created_at", format_timestamp(v.created_at)}};
}

void from_json(const Json& j, MemoryObject& v) {
    v.pair_id = get_field<std::string>(j, "pair_id");
    const auto& um = field(j, "user_message");
    v.user_message = um.is_null() ? std::nullopt : std::optional<Message>(um.get<Message>());
    v.agent_message = field(j, "agent_message").get<Message>();
    const auto& emb = field(j, "embedding");
    v.embedding = emb.is_null() ? std::nullopt
                                : std::optional<std::vector<double>>(emb.get<std::vector<double>>());
    v.created_at = parse_timestamp(get_field<std::string>(j, "created_at"));
}

void to_json(Json& j, const DetectedEvent& v) {
    j = Json{{"timing", format_time_of_day(v.timing)},
             {"content", v.content},
             {"detected_at", format_timestamp(v.detected_at)},
             {"category", to_string(v.category)}};
}

void from_json(const Json& j, DetectedEvent& v) {
    v.timing = parse_time_of_day(get_field<std::string>(j, "timing"));
    v.content = get_field<std::string>(j, "content");
    v.detected_at = parse_timestamp(get_field<std::string>(j, "detected_at"));
    v.category = category_from_string(get_field<std::string>(j, "category"));
}

void to_json(Json& j, const ScheduleEntry& v) {
    j = Json{{"id", v.id},
             {"timing", format_time_of_day(v.timing)},
             {"content", v.content},
             {"importance", v.importance},
             {"source", to_string(v.source)},
             {"state", to_string(v.state)}};
}

void from_json(const Json& j, ScheduleEntry& v) {
    v.id = get_field<EntryId>(j, "id");
    v.timing = parse_time_of_day(get_field<std::string>(j, "timing"));
    v.content = get_field<std::string>(j, "content");
    v.importance = get_field<double>(j, "importance");
    if (!(v.importance >= 0.0 && v.importance <= 1.0)) {
        throw ValidationError("importance", "must lie in [0,1]");
    }
    v.source = source_from_string(get_field<std::string>(j, "source"));
    v.state = state_from_string(get_field<std::string>(j, "state"));
}

void to_json(Json& j, const Reflection& v) {
    j = Json{{"for_day", format_date(v.for_day)},
             {"negative_emotions", v.negative_emotions},
             {"challenges", v.challenges},
             {"plans_tomorrow", v.plans_tomorrow}};
}

void from_json(const Json& j, Reflection& v) {
    v.for_day = parse_date(get_field<std::string>(j, "for_day"));
    v.negative_emotions = get_field<std::string>(j, "negative_emotions");
    v.challenges = get_field<std::string>(j, "challenges");
    v.plans_tomorrow = get_field<std::string>(j, "plans_tomorrow");
}

void to_json(Json& j, const WorldInfo& v) {
    j = Json{{"date", format_date(v.date)},
             {"weekday", v.weekday},
             {"weather", v.weather},
             {"temp_low", v.temp_low},
             {"temp_high", v.temp_high}};
}

void from_json(const Json& j, WorldInfo& v) {
    v.date = parse_date(get_field<std::string>(j, "date"));
    v.weekday = get_field<std::string>(j, "weekday");
    v.weather = get_field<std::string>(j, "weather");
    v.temp_low = get_field<int>(j, "temp_low");
    v.temp_high = get_field<int>(j, "temp_high");
    validate_world_info(v);
}

}  // namespace kindred
