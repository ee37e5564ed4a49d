#include <doctest.h>

#include <chrono>

#include "wardcast/calendar.hpp"

using namespace wardcast;
using namespace std::chrono;

TEST_CASE("parse_date handles valid ISO dates") {
    auto d = parse_date("2020-04-05");
    REQUIRE(d.has_value());
    CHECK(*d == sys_days{2020y / 4 / 5});
    CHECK(format_date(*d) == "2020-04-05");
}

TEST_CASE("parse_date rejects malformed input") {
    CHECK_FALSE(parse_date("").has_value());
    CHECK_FALSE(parse_date("2020/04/05").has_value());
    CHECK_FALSE(parse_date("2020-4-5").has_value());
    CHECK_FALSE(parse_date("2020-13-01").has_value());
    CHECK_FALSE(parse_date("2020-02-30").has_value());
    CHECK_FALSE(parse_date("20200405").has_value());
    CHECK_FALSE(parse_date("2020-04-05 ").has_value());
    CHECK_FALSE(parse_date("abcd-ef-gh").has_value());
}

TEST_CASE("date round-trip over a dense range") {
    // Every day across a leap year boundary survives format -> parse.
    for (sys_days d = sys_days{2019y / 12 / 1}; d <= sys_days{2020y / 3 / 15}; d += days{1}) {
        auto back = parse_date(format_date(d));
        REQUIRE(back.has_value());
        CHECK(*back == d);
    }
}

TEST_CASE("WeekStamp ordering and stepping") {
    WeekStamp a{sys_days{2020y / 4 / 5}};
    WeekStamp b = a.next();
    CHECK(b.week_ending - a.week_ending == days{7});
    CHECK(b.prev() == a);
    CHECK(a < b);
    CHECK(week_diff(a, b) == 1);
    CHECK(week_diff(b, a) == -1);
    CHECK(week_diff(a, a) == 0);
}

TEST_CASE("parse_week and format_week round-trip") {
    auto w = parse_week("2021-01-03");
    REQUIRE(w.has_value());
    CHECK(format_week(*w) == "2021-01-03");
    CHECK_FALSE(parse_week("not a date").has_value());
}

TEST_CASE("week convention maps days to their ending stamp") {
    WeekConvention conv;  // Sunday-ending by default
    // 2020-04-05 is a Sunday; the whole preceding Mon..Sun block maps to it.
    const sys_days sunday = sys_days{2020y / 4 / 5};
    for (int offset = 0; offset < 7; ++offset) {
        const sys_days d = sunday - days{offset};
        CHECK(conv.week_of(d).week_ending == sunday);
    }
    CHECK(conv.week_of(sunday - days{7}).week_ending == sunday - days{7});
}

TEST_CASE("week convention honors other ending days") {
    auto sat = parse_weekday("Saturday");
    REQUIRE(sat.has_value());
    WeekConvention conv{*sat};
    CHECK(conv.week_of(sys_days{2020y / 4 / 5}).week_ending == sys_days{2020y / 4 / 11});
    CHECK(conv.week_of(sys_days{2020y / 4 / 11}).week_ending == sys_days{2020y / 4 / 11});
}

TEST_CASE("weekday names round-trip") {
    const char* names[] = {"Sunday",   "Monday", "Tuesday", "Wednesday",
                           "Thursday", "Friday", "Saturday"};
    for (const char* n : names) {
        auto wd = parse_weekday(n);
        REQUIRE(wd.has_value());
        CHECK(weekday_name(*wd) == n);
    }
    CHECK_FALSE(parse_weekday("Someday").has_value());
    CHECK_FALSE(parse_weekday("").has_value());
}
