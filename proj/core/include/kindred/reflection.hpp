#pragma once

#include <span>
#include <string_view>

#include "kindred/domain.hpp"
#include "kindred/llm.hpp"

namespace kindred {

// Positional read of a numbered three-line answer ("1. ...", "2) ...").
// Missing or blank answers become "none stated"; fewer than three numbered
// items is a ParseError.
Reflection parse_reflection(std::string_view answer, CalendarDate for_day);

// Summarizes the day before `for_day` into three answers: negative emotions,
// challenges, and plans for the next day. Only messages dated for_day - 1 are
// read. An empty day makes no provider call.
Reflection reflect(std::span<const Message> prev_day_dialogues, CalendarDate for_day,
                   Provider& provider);

Reflection empty_reflection(CalendarDate for_day);

}  // namespace kindred
