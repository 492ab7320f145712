#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kindred/domain.hpp"
#include "kindred/llm.hpp"

namespace kindred {

enum class GenerationMode { passive, proactive };

struct StrategySelection {
    std::vector<Strategy> strategies;  // non-empty, canonical order, no repeats
    GenerationMode mode = GenerationMode::passive;

    bool operator==(const StrategySelection&) const = default;
};

// Strategy names found in a selector answer, matched exactly (ignoring case)
// against the seven catalogue names. Reads the quoted list after "Adopted
// Strategy" when present, otherwise the whole answer. ParseError when nothing
// matches.
std::vector<Strategy> parse_strategies(std::string_view answer);

// Passive: context must end with a user message. Falls back to affirmation and
// reassurance after two unreadable answers.
StrategySelection select_strategies(std::span<const Message> context, Provider& provider);
// Proactive: only the four proactive strategies survive; an emptied set
// becomes {inquiring}, which is also the fallback.
StrategySelection select_strategies(const ScheduleEntry& entry, Provider& provider);

ChatRequest build_reply_request(std::span<const Message> context, const StrategySelection& sel,
                                const Persona& persona, std::span<const MemoryObject> memories);
ChatRequest build_proactive_request(const ScheduleEntry& entry, const StrategySelection& sel,
                                    const Persona& persona);

// Passive reply in the persona's voice. Provider errors propagate. The
// returned message has id 0; the caller assigns one.
Message generate_reply(std::span<const Message> context, const StrategySelection& sel,
                       const Persona& persona, std::span<const MemoryObject> memories,
                       Provider& provider, Timestamp now);

// Proactive opener for a dispatched entry. Rejects a selection outside the
// proactive set before any provider call.
Message generate_proactive(const ScheduleEntry& entry, const StrategySelection& sel,
                           const Persona& persona, Provider& provider, Timestamp now);

// Whitespace-separated words, with each CJK character counted as one word.
std::size_t count_words(std::string_view text);

inline constexpr std::size_t kMinWords = 20;
inline constexpr std::size_t kMaxWords = 50;

// Advisory length check against the 20-50 word style target.
std::vector<std::string> style_check(const Message& m);

}  // namespace kindred
