#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace kindred {

// All times are local to the agent's single configured zone. A Timestamp is
// the number of seconds since 1970-01-01T00:00:00 in that zone; no DST.

struct CalendarDate {
    std::int32_t days_since_epoch = 0;

    auto operator<=>(const CalendarDate&) const = default;

    CalendarDate next() const { return {days_since_epoch + 1}; }
    CalendarDate prev() const { return {days_since_epoch - 1}; }
};

struct TimeOfDay {
    std::int32_t minutes = 0;  // [0, 1440)

    auto operator<=>(const TimeOfDay&) const = default;

    static TimeOfDay hm(int hours, int minutes);
    int hour() const { return minutes / 60; }
    int minute() const { return minutes % 60; }
};

inline constexpr TimeOfDay kEndOfDay{23 * 60 + 59};

struct Timestamp {
    std::int64_t seconds = 0;

    auto operator<=>(const Timestamp&) const = default;

    Timestamp plus_seconds(std::int64_t s) const { return {seconds + s}; }
    Timestamp plus_minutes(std::int64_t m) const { return {seconds + 60 * m}; }
};

Timestamp make_timestamp(CalendarDate date, TimeOfDay tod, int second = 0);
CalendarDate date_of(Timestamp t);
TimeOfDay time_of_day(Timestamp t);
int second_of(Timestamp t);
inline Timestamp midnight_of(CalendarDate d) { return make_timestamp(d, TimeOfDay{}); }

CalendarDate make_date(int year, unsigned month, unsigned day);
// "Monday" .. "Sunday"
std::string weekday_name(CalendarDate d);

// "HH:MM" 24-hour; single-digit hours are accepted. Throws ParseError.
TimeOfDay parse_time_of_day(std::string_view s);
std::string format_time_of_day(TimeOfDay t);

// "YYYY-MM-DD"
CalendarDate parse_date(std::string_view s);
std::string format_date(CalendarDate d);

// "YYYY-MM-DDTHH:MM" or "YYYY-MM-DDTHH:MM:SS" (a space may replace the T).
Timestamp parse_timestamp(std::string_view s);
// Always "YYYY-MM-DDTHH:MM:SS".
std::string format_timestamp(Timestamp t);

}  // namespace kindred
