#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kindred/time.hpp"

namespace kindred {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Persona

struct DialoguePair {
    std::string user_line;
    std::string agent_line;

    bool operator==(const DialoguePair&) const = default;
};

inline constexpr std::size_t kExampleDialogueCount = 4;

struct Persona {
    std::string name;
    int age = 0;
    std::string gender;
    std::string personality;
    std::string occupation_or_major;
    std::string background;
    std::string hobbies;
    std::string language_style;
    std::string relationship_with_user;
    std::vector<DialoguePair> example_dialogues;

    bool operator==(const Persona&) const = default;
};

// Returns p unchanged, or throws ValidationError naming the first bad field
// (fields are checked in declaration order).
const Persona& validate_persona(const Persona& p);

// ---------------------------------------------------------------------------
// Messages and memory

enum class Role { user, agent };
enum class Origin { user_initiated, passive_reply, proactive };

using MessageId = std::uint64_t;

struct Message {
    MessageId id = 0;
    Role role = Role::user;
    std::string content;
    Timestamp sent_at;
    Origin origin = Origin::user_initiated;

    bool operator==(const Message&) const = default;
};

const Message& validate_message(const Message& m);

struct MemoryObject {
    std::string pair_id;
    // Absent for a proactive message that was never answered.
    std::optional<Message> user_message;
    Message agent_message;
    std::optional<std::vector<double>> embedding;
    Timestamp created_at;

    bool operator==(const MemoryObject&) const = default;

    std::size_t message_count() const { return user_message ? 2 : 1; }
};

// ---------------------------------------------------------------------------
// Events, schedule, strategies

enum class EventCategory { physical_condition, negative_feeling, challenge, plan, unknown };

struct DetectedEvent {
    TimeOfDay timing;
    std::string content;
    Timestamp detected_at;
    EventCategory category = EventCategory::unknown;

    bool operator==(const DetectedEvent&) const = default;
};

enum class EntrySource { daily_init, event_detector };
enum class EntryState { pending, dispatched, skipped, expired };

using EntryId = std::uint64_t;

struct ScheduleEntry {
    EntryId id = 0;  // insertion order
    TimeOfDay timing;
    std::string content;
    double importance = 0.0;
    EntrySource source = EntrySource::daily_init;
    EntryState state = EntryState::pending;

    bool operator==(const ScheduleEntry&) const = default;
};

enum class Strategy {
    self_disclosure,
    inquiring,
    affirmation_and_reassurance,
    invite_users_to_think,
    reflection_of_feelings,
    restatement_or_paraphrasing,
    answer,
};

inline constexpr std::array<Strategy, 7> kAllStrategies = {
    Strategy::self_disclosure,        Strategy::inquiring,
    Strategy::affirmation_and_reassurance, Strategy::invite_users_to_think,
    Strategy::reflection_of_feelings, Strategy::restatement_or_paraphrasing,
    Strategy::answer,
};

// Strategies usable without the user speaking first.
inline constexpr std::array<Strategy, 4> kProactiveAllowed = {
    Strategy::self_disclosure,
    Strategy::inquiring,
    Strategy::affirmation_and_reassurance,
    Strategy::invite_users_to_think,
};

bool is_proactive_allowed(Strategy s);
// Human-facing name used inside prompts, e.g. "Affirmation and Reassurance".
std::string_view display_name(Strategy s);
std::string_view strategy_description(Strategy s);
std::string_view strategy_example(Strategy s);

struct Reflection {
    CalendarDate for_day;  // the day this reflection seeds
    std::string negative_emotions;
    std::string challenges;
    std::string plans_tomorrow;

    bool operator==(const Reflection&) const = default;
};

inline constexpr std::string_view kNoneStated = "none stated";

struct WorldInfo {
    CalendarDate date;
    std::string weekday;
    std::string weather;
    int temp_low = 0;
    int temp_high = 0;

    bool operator==(const WorldInfo&) const = default;
};

const WorldInfo& validate_world_info(const WorldInfo& w);

// ---------------------------------------------------------------------------
// Enum <-> text

std::string_view to_string(Role v);
std::string_view to_string(Origin v);
std::string_view to_string(EventCategory v);
std::string_view to_string(EntrySource v);
std::string_view to_string(EntryState v);
std::string_view to_string(Strategy v);

Role role_from_string(std::string_view s);
Origin origin_from_string(std::string_view s);
EventCategory category_from_string(std::string_view s);
EntrySource source_from_string(std::string_view s);
EntryState state_from_string(std::string_view s);
Strategy strategy_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Canonical JSON. Field names are lower_snake_case; timestamps are
// "YYYY-MM-DDTHH:MM:SS", times of day "HH:MM", dates "YYYY-MM-DD".

void to_json(Json& j, const DialoguePair& v);
void from_json(const Json& j, DialoguePair& v);
void to_json(Json& j, const Persona& v);
void from_json(const Json& j, Persona& v);
void to_json(Json& j, const Message& v);
void from_json(const Json& j, Message& v);
void to_json(Json& j, const MemoryObject& v);
void from_json(const Json& j, MemoryObject& v);
void to_json(Json& j, const DetectedEvent& v);
void from_json(const Json& j, DetectedEvent& v);
void to_json(Json& j, const ScheduleEntry& v);
void from_json(const Json& j, ScheduleEntry& v);
void to_json(Json& j, const Reflection& v);
void from_json(const Json& j, Reflection& v);
void to_json(Json& j, const WorldInfo& v);
void from_json(const Json& j, WorldInfo& v);

}  // namespace kindred
