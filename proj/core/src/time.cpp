#include "kindred/time.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>

#include "kindred/errors.hpp"

namespace kindred {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

bool parse_uint(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

TimeOfDay TimeOfDay::hm(int hours, int minutes) {
    if (hours < 0 || hours > 23 || minutes < 0 || minutes > 59) {
        throw ParseError("time of day out of range: " + std::to_string(hours) + ":" +
                         std::to_string(minutes));
    }
    return TimeOfDay{hours * 60 + minutes};
}

Timestamp make_timestamp(CalendarDate date, TimeOfDay tod, int second) {
    return Timestamp{static_cast<std::int64_t>(date.days_since_epoch) * kSecondsPerDay +
                     tod.minutes * 60 + second};
}

CalendarDate date_of(Timestamp t) {
    return CalendarDate{static_cast<std::int32_t>(floor_div(t.seconds, kSecondsPerDay))};
}

TimeOfDay time_of_day(Timestamp t) {
    const std::int64_t in_day = t.seconds - floor_div(t.seconds, kSecondsPerDay) * kSecondsPerDay;
    return TimeOfDay{static_cast<std::int32_t>(in_day / 60)};
}

int second_of(Timestamp t) {
    const std::int64_t in_day = t.seconds - floor_div(t.seconds, kSecondsPerDay) * kSecondsPerDay;
    return static_cast<int>(in_day % 60);
}

CalendarDate make_date(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                             std::chrono::day{day}};
    if (!ymd.ok()) throw ParseError("invalid calendar date");
    return CalendarDate{static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count())};
}

std::string weekday_name(CalendarDate d) {
    static constexpr std::array<const char*, 7> kNames = {
        "Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"};
    const std::chrono::sys_days sd{std::chrono::days{d.days_since_epoch}};
    return kNames[std::chrono::weekday{sd}.c_encoding()];
}

TimeOfDay parse_time_of_day(std::string_view s) {
    const auto colon = s.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon > 2 || s.size() - colon != 3) {
        throw ParseError("expected HH:MM, got '" + std::string(s) + "'");
    }
    int h = 0;
    int m = 0;
    if (!parse_uint(s.substr(0, colon), h) || !parse_uint(s.substr(colon + 1), m)) {
        throw ParseError("expected HH:MM, got '" + std::string(s) + "'");
    }
    return TimeOfDay::hm(h, m);
}

std::string format_time_of_day(TimeOfDay t) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%02d:%02d", t.hour(), t.minute());
    return buf;
}

CalendarDate parse_date(std::string_view s) {
    int y = 0;
    int mo = 0;
    int d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !parse_uint(s.substr(0, 4), y) ||
        !parse_uint(s.substr(5, 2), mo) || !parse_uint(s.substr(8, 2), d)) {
        throw ParseError("expected YYYY-MM-DD, got '" + std::string(s) + "'");
    }
    return make_date(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
}

std::string format_date(CalendarDate d) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{d.days_since_epoch}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Timestamp parse_timestamp(std::string_view s) {
    if (s.size() < 16 || (s[10] != 'T' && s[10] != ' ')) {
        throw ParseError("expected YYYY-MM-DDTHH:MM[:SS], got '" + std::string(s) + "'");
    }
    const CalendarDate date = parse_date(s.substr(0, 10));
    const TimeOfDay tod = parse_time_of_day(s.substr(11, 5));
    int sec = 0;
    if (s.size() != 16) {
        if (s.size() != 19 || s[16] != ':' || !parse_uint(s.substr(17, 2), sec) || sec > 59) {
            throw ParseError("bad seconds in timestamp '" + std::string(s) + "'");
        }
    }
    return make_timestamp(date, tod, sec);
}

std::string format_timestamp(Timestamp t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, ":%02d", second_of(t));
    return format_date(date_of(t)) + "T" + format_time_of_day(time_of_day(t)) + buf;
}

}  // namespace kindred
