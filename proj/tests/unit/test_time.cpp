#include <ctime>
#include <random>

#include <doctest.h>

#include "kindred/errors.hpp"
#include "kindred/time.hpp"

using namespace kindred;

namespace {

// libc's UTC conversion, independent of the library's calendar code.
std::int64_t libc_seconds(int y, int mo, int d, int h, int mi, int s) {
    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = s;
    return static_cast<std::int64_t>(timegm(&tm));
}

}  // namespace

TEST_SUITE("time") {
    TEST_CASE("clock time parses as hours and minutes") {
        const TimeOfDay t = parse_time_of_day("20:30");
        CHECK(t.hour() == 20);
        CHECK(t.minute() == 30);
        CHECK(parse_time_of_day("8:05") == TimeOfDay::hm(8, 5));
        CHECK(format_time_of_day(TimeOfDay::hm(8, 5)) == "08:05");
    }

    TEST_CASE("malformed clock times are rejected") {
        for (const char* bad : {"24:00", "12:60", "1230", "", "ab:cd", "-1:00", "12:5"}) {
            CAPTURE(bad);
            CHECK_THROWS_AS(parse_time_of_day(bad), ParseError);
        }
    }

    TEST_CASE("timestamps agree with libc timegm") {
        std::mt19937 gen(7);
        std::uniform_int_distribution<int> year(1971, 2090), month(1, 12), day(1, 28),
            hour(0, 23), minute(0, 59), second(0, 59);
        for (int i = 0; i < 2000; ++i) {
            const int y = year(gen), mo = month(gen), d = day(gen), h = hour(gen),
                      mi = minute(gen), s = second(gen);
            const Timestamp t = make_timestamp(make_date(y, mo, d), TimeOfDay::hm(h, mi), s);
            REQUIRE(t.seconds == libc_seconds(y, mo, d, h, mi, s));
            CHECK(parse_timestamp(format_timestamp(t)) == t);
            CHECK(time_of_day(t) == TimeOfDay::hm(h, mi));
            CHECK(second_of(t) == s);
        }
    }

    TEST_CASE("dates before the epoch floor correctly") {
        const Timestamp t = parse_timestamp("1969-12-31T23:59:30");
        CHECK(t.seconds == -30);
        CHECK(format_date(date_of(t)) == "1969-12-31");
        CHECK(time_of_day(t) == TimeOfDay::hm(23, 59));
    }

    TEST_CASE("weekday names") {
        CHECK(weekday_name(make_date(1970, 1, 1)) == "Thursday");
        CHECK(weekday_name(make_date(2024, 3, 1)) == "Friday");
        CHECK(weekday_name(make_date(2024, 3, 4)) == "Monday");
    }

    TEST_CASE("timestamp text forms") {
        CHECK(parse_timestamp("2024-03-04 10:15") == parse_timestamp("2024-03-04T10:15:00"));
        CHECK(format_timestamp(parse_timestamp("2024-03-04T10:15")) == "2024-03-04T10:15:00");
        CHECK_THROWS_AS(parse_timestamp("2024-02-30T10:00"), ParseError);
        CHECK_THROWS_AS(parse_timestamp("yesterday"), ParseError);
    }

    TEST_CASE("date stepping") {
        const CalendarDate d = parse_date("2024-02-28");
        CHECK(format_date(d.next()) == "2024-02-29");
        CHECK(format_date(d.next().next()) == "2024-03-01");
        CHECK(format_date(parse_date("2024-01-01").prev()) == "2023-12-31");
    }
}
