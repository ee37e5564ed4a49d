#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace wardcast {

/**
 * Week-ending date identifying one panel week.
 *
 * A county series advances in exact 7-day steps, so consecutive stamps for
 * the same county always differ by one calendar week.
 */
struct WeekStamp {
    std::chrono::sys_days week_ending{};

    friend auto operator<=>(const WeekStamp&, const WeekStamp&) = default;

    WeekStamp next() const { return {week_ending + std::chrono::days{7}}; }
    WeekStamp prev() const { return {week_ending - std::chrono::days{7}}; }
};

// "2020-04-06" -> sys_days; nullopt on malformed or non-existent dates.
std::optional<std::chrono::sys_days> parse_date(std::string_view iso);
std::string format_date(std::chrono::sys_days day);

std::optional<WeekStamp> parse_week(std::string_view iso);
std::string format_week(WeekStamp week);

// Signed number of weeks from a to b. Stamps are assumed grid-aligned;
// a 7-day step gives +1.
long week_diff(WeekStamp a, WeekStamp b);

/**
 * Maps arbitrary calendar dates onto week-ending stamps.
 *
 * A date belongs to the week ending on the next occurrence of `end_day`
 * (a date already falling on `end_day` maps to itself).
 */
struct WeekConvention {
    std::chrono::weekday end_day{std::chrono::Sunday};

    WeekStamp week_of(std::chrono::sys_days day) const;
};

std::optional<std::chrono::weekday> parse_weekday(std::string_view name);
std::string weekday_name(std::chrono::weekday wd);

}  // namespace wardcast
