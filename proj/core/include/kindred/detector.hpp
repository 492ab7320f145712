#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kindred/domain.hpp"
#include "kindred/llm.hpp"

namespace kindred {

inline constexpr std::chrono::seconds kRoundIdle{5 * 60};

// A stretch of dialogue that ended once the user went quiet.
struct ConversationRound {
    std::vector<Message> messages;
    Timestamp opened_at;
    Timestamp closed_at;

    bool has_user_message() const;
};

// True once the user has been silent for at least `idle` (closed interval).
bool round_boundary(Timestamp last_user_msg_at, Timestamp now,
                    std::chrono::seconds idle = kRoundIdle);

// Keeps a model-proposed timing if it is still ahead of now; otherwise moves
// it to now + 60 minutes, capped at 23:59 of the same day.
TimeOfDay validate_event_timing(TimeOfDay raw, Timestamp now);

struct RawEvent {
    TimeOfDay timing;
    std::string content;
    EventCategory category = EventCategory::unknown;
};

// Reads a detector answer: {"Timing": "HH:MM", "Content": "..."} (a "Timing:
// ... Content: ..." pair of lines is also accepted) or an empty answer / ""
// meaning no event. Throws ParseError on anything else.
std::optional<RawEvent> parse_detector_output(std::string_view answer);

ChatRequest build_detector_request(const ConversationRound& round, Timestamp now);

// Runs the event-detector prompt over a closed round. Returns nullopt for "no
// event", and also after a repeated parse failure or provider failure (both
// logged). Rounds without a user message are never sent to the model.
std::optional<DetectedEvent> detect(const ConversationRound& round, Timestamp now,
                                    Provider& provider);

}  // namespace kindred
