#include "wardcast/calendar.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace wardcast {

namespace {

bool parse_int(std::string_view text, int& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::optional<std::chrono::sys_days> parse_date(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!parse_int(iso.substr(0, 4), y) || !parse_int(iso.substr(5, 2), m) ||
        !parse_int(iso.substr(8, 2), d)) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                    std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) return std::nullopt;
    return std::chrono::sys_days{ymd};
}

std::string format_date(std::chrono::sys_days day) {
    std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

std::optional<WeekStamp> parse_week(std::string_view iso) {
    auto day = parse_date(iso);
    if (!day) return std::nullopt;
    return WeekStamp{*day};
}

std::string format_week(WeekStamp week) { return format_date(week.week_ending); }

long week_diff(WeekStamp a, WeekStamp b) {
    return (b.week_ending - a.week_ending).count() / 7;
}

WeekStamp WeekConvention::week_of(std::chrono::sys_days day) const {
    auto wd = std::chrono::weekday{day};
    auto ahead = (end_day - wd).count();  // 0..6 days until the closing weekday
    return WeekStamp{day + std::chrono::days{ahead}};
}

std::optional<std::chrono::weekday> parse_weekday(std::string_view name) {
    static constexpr std::array<std::string_view, 7> names = {
        "Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"};
    for (unsigned i = 0; i < names.size(); ++i) {
        if (name == names[i]) return std::chrono::weekday{i};
    }
    return std::nullopt;
}

std::string weekday_name(std::chrono::weekday wd) {
    static constexpr std::array<const char*, 7> names = {
        "Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"};
    return names[wd.c_encoding()];
}

}  // namespace wardcast
