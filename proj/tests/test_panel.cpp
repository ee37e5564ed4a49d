#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "test_support.hpp"
#include "wardcast/panel.hpp"

using namespace wardcast;
using testsupport::week_at;

namespace {

SchemaConfig weekly_schema() {
    SchemaConfig schema;
    schema.daily = false;
    schema.columns = {
        {"county", "county", AggregateMode::Mean},
        {"week_end", "date", AggregateMode::Mean},
        {"hosp", "y", AggregateMode::Mean},
        {"icu_beds", "x_b", AggregateMode::Mean},
    };
    return schema;
}

bool rows_equal(const PanelRow& a, const PanelRow& b) {
    return a.county == b.county && a.week == b.week && a.y == b.y && a.x_b == b.x_b &&
           a.x_v == b.x_v && a.s_t == b.s_t && a.extra_indicators == b.extra_indicators &&
           a.state_filled == b.state_filled && a.materialized_gap == b.materialized_gap;
}

}  // namespace

TEST_CASE("county_name_equal normalizes case and the County suffix") {
    CHECK(county_name_equal("Adams", "adams county"));
    CHECK(county_name_equal("ADAMS COUNTY", "Adams"));
    CHECK(county_name_equal("York County", "york"));
    CHECK_FALSE(county_name_equal("Adams", "York"));
    CHECK_FALSE(county_name_equal("Countyshire", "shire"));
}

TEST_CASE("make_panel sorts rows and derives counties and week range") {
    Panel p = testsupport::synth_panel(3, 10);
    REQUIRE(p.counties.size() == 3);
    CHECK(std::is_sorted(p.rows.begin(), p.rows.end(), [](const PanelRow& a, const PanelRow& b) {
        return std::tie(a.county.name, a.week) < std::tie(b.county.name, b.week);
    }));
    REQUIRE(p.week_range.has_value());
    CHECK(p.week_range->first == week_at(0));
    CHECK(p.week_range->second == week_at(9));

    auto span = p.county_rows(p.counties[1].name);
    CHECK(span.size() == 10);
    const PanelRow* row = p.find_row(p.counties[1].name, week_at(4));
    REQUIRE(row != nullptr);
    CHECK(row->week == week_at(4));
    CHECK(p.find_row(p.counties[1].name, week_at(99)) == nullptr);
    CHECK(p.find_county("No Such County") == nullptr);
    CHECK(p.state_county() == nullptr);
}

TEST_CASE("load_panel drops excluded counties, merges duplicates, fills gaps") {
    testsupport::TempDir dir("panel_load");
    const std::string path = dir.file("weekly.csv");
    testsupport::write_text_file(path,
                                 "county,week_end,hosp,icu_beds\n"
                                 "Adams,2020-04-05,1.0,10\n"
                                 "Adams,2020-04-12,2.0,\n"
                                 "adams county,2020-04-12,,11\n"
                                 "Adams,2020-04-26,4.0,13\n"
                                 "Adams,2020-04-08,1.5,\n"
                                 "Forest,2020-04-05,9.0,9\n"
                                 "FOREST COUNTY,2020-04-12,9.5,9\n"
                                 "Pennsylvania,2020-04-05,100.0,1000\n"
                                 "Pennsylvania,2020-04-12,110.0,1100\n"
                                 "Pennsylvania,2020-04-26,120.0,1200\n"
                                 "York,2020-04-05,not_a_number,30\n"
                                 "York,2020-04-12,-5,31\n");
    auto result = load_panel({{path}}, weekly_schema());
    const Panel& p = result.panel;
    const LoadReport& rep = result.report;

    // Forest is excluded; Adams, Pennsylvania, York remain.
    REQUIRE(p.counties.size() == 3);
    CHECK(p.find_county("Adams") != nullptr);
    CHECK(p.find_county("York") != nullptr);
    REQUIRE(p.state_county() != nullptr);
    CHECK(p.state_county()->name == "Pennsylvania");
    CHECK(rep.rows_dropped_excluded == 2);
    CHECK(rep.excluded_seen.count("Forest") == 1);
    CHECK(rep.excluded_seen.count("FOREST COUNTY") == 1);

    // Duplicate stamps for the same normalized county merge by column.
    const PanelRow* adams2 = p.find_row("Adams", *parse_week("2020-04-12"));
    REQUIRE(adams2 != nullptr);
    CHECK(adams2->y == 2.0);
    CHECK(adams2->x_b == 11.0);

    // The missing week inside each span is materialized.
    const PanelRow* gap = p.find_row("Adams", *parse_week("2020-04-19"));
    REQUIRE(gap != nullptr);
    CHECK(gap->materialized_gap);
    CHECK_FALSE(gap->y.has_value());
    CHECK_FALSE(gap->x_b.has_value());
    CHECK(rep.gap_rows_inserted == 2);  // Adams and Pennsylvania each skip 04-19

    // Off-grid stamps are warned about, not silently merged.
    CHECK(p.find_row("Adams", *parse_week("2020-04-08")) == nullptr);
    CHECK(std::any_of(rep.warnings.begin(), rep.warnings.end(), [](const std::string& w) {
        return w.find("off the weekly grid") != std::string::npos;
    }));

    // Unparseable and negative cells become missing and are counted.
    const PanelRow* york1 = p.find_row("York", *parse_week("2020-04-05"));
    REQUIRE(york1 != nullptr);
    CHECK_FALSE(york1->y.has_value());
    CHECK(york1->x_b == 30.0);
    const PanelRow* york2 = p.find_row("York", *parse_week("2020-04-12"));
    REQUIRE(york2 != nullptr);
    CHECK_FALSE(york2->y.has_value());
    CHECK(rep.cells_unparseable == 2);
}

TEST_CASE("load_panel merges columns across multiple sources") {
    testsupport::TempDir dir("panel_multi");
    const std::string a = dir.file("a.csv");
    const std::string b = dir.file("b.csv");
    testsupport::write_text_file(a,
                                 "county,week_end,hosp\n"
                                 "Adams,2020-04-05,1.0\n"
                                 "Adams,2020-04-12,2.0\n");
    testsupport::write_text_file(b,
                                 "county,week_end,icu_beds\n"
                                 "Adams,2020-04-05,10\n"
                                 "Adams,2020-04-12,20\n");
    auto result = load_panel({{a}, {b}}, weekly_schema());
    const PanelRow* row = result.panel.find_row("Adams", *parse_week("2020-04-12"));
    REQUIRE(row != nullptr);
    CHECK(row->y == 2.0);
    CHECK(row->x_b == 20.0);
}

TEST_CASE("load_panel requires county and date columns") {
    testsupport::TempDir dir("panel_cols");
    const std::string path = dir.file("bad.csv");
    testsupport::write_text_file(path, "region,week_end,hosp\nAdams,2020-04-05,1\n");
    CHECK_THROWS_AS(load_panel({{path}}, weekly_schema()), std::runtime_error);
}

TEST_CASE("daily sources aggregate per column mode") {
    testsupport::TempDir dir("panel_daily");
    const std::string path = dir.file("daily.csv");
    std::string body = "county,date,searches,staff\n";
    // 2020-03-30 (Mon) .. 2020-04-05 (Sun): a full week of 1s.
    for (int d = 0; d < 7; ++d) {
        using namespace std::chrono;
        body += "Bucks," + format_date(sys_days{2020y / 3 / 30} + days{d}) + ",1,1\n";
    }
    body += "Bucks,2020-04-06,3,3\n";
    body += "Bucks,2020-04-07,4,4\n";
    testsupport::write_text_file(path, body);

    SchemaConfig schema;
    schema.daily = true;
    schema.columns = {
        {"county", "county", AggregateMode::Mean},
        {"date", "date", AggregateMode::Mean},
        {"searches", "s_t", AggregateMode::Sum},
        {"staff", "x_v", AggregateMode::Mean},
    };
    auto result = load_panel({{path}}, schema);
    const PanelRow* w1 = result.panel.find_row("Bucks", *parse_week("2020-04-05"));
    REQUIRE(w1 != nullptr);
    CHECK(w1->s_t == doctest::Approx(7.0));
    CHECK(w1->x_v == doctest::Approx(1.0));
    const PanelRow* w2 = result.panel.find_row("Bucks", *parse_week("2020-04-12"));
    REQUIRE(w2 != nullptr);
    CHECK(w2->s_t == doctest::Approx(7.0));   // 3 + 4 over a partial week
    CHECK(w2->x_v == doctest::Approx(3.5));  // mean of 3, 4
}

TEST_CASE("aggregate_daily_to_weekly sums, averages, and validates order") {
    using namespace std::chrono;
    std::vector<std::pair<sys_days, double>> daily;
    for (int d = 0; d < 7; ++d) daily.emplace_back(sys_days{2020y / 3 / 30} + days{d}, 1.0);
    auto sum = aggregate_daily_to_weekly(daily, AggregateMode::Sum);
    REQUIRE(sum.size() == 1);
    CHECK(sum[0].first == week_at(0));
    CHECK(sum[0].second == doctest::Approx(7.0));
    auto mean = aggregate_daily_to_weekly(daily, AggregateMode::Mean);
    CHECK(mean[0].second == doctest::Approx(1.0));

    std::vector<std::pair<sys_days, double>> partial = {{sys_days{2020y / 4 / 6}, 3.0},
                                                        {sys_days{2020y / 4 / 7}, 4.0}};
    auto pm = aggregate_daily_to_weekly(partial, AggregateMode::Mean);
    REQUIRE(pm.size() == 1);
    CHECK(pm[0].second == doctest::Approx(3.5));

    std::vector<std::pair<sys_days, double>> unsorted = {{sys_days{2020y / 4 / 7}, 1.0},
                                                         {sys_days{2020y / 4 / 6}, 2.0}};
    CHECK_THROWS_AS(aggregate_daily_to_weekly(unsorted, AggregateMode::Sum),
                    std::invalid_argument);
}

TEST_CASE("state fallback fills gaps without overwriting observations") {
    std::vector<PanelRow> rows;
    auto add = [&](std::string name, bool state, int t, std::optional<double> y,
                   std::optional<double> x_b) {
        PanelRow row;
        row.county = {std::move(name), state};
        row.week = week_at(t);
        row.y = y;
        row.x_b = x_b;
        rows.push_back(std::move(row));
    };
    add("Pennsylvania", true, 0, 100.0, 1000.0);
    add("Pennsylvania", true, 1, 110.0, std::nullopt);
    add("Adams County", false, 0, 1.0, std::nullopt);  // filled from state
    add("Adams County", false, 1, 2.0, 7.0);           // observed, kept
    add("York County", false, 0, 3.0, 9.0);            // observed, kept

    Panel filled = apply_state_fallback(make_panel(rows), "x_b");
    const PanelRow* adams0 = filled.find_row("Adams County", week_at(0));
    REQUIRE(adams0 != nullptr);
    CHECK(adams0->x_b == 1000.0);
    CHECK(adams0->state_filled.count("x_b") == 1);
    const PanelRow* adams1 = filled.find_row("Adams County", week_at(1));
    REQUIRE(adams1 != nullptr);
    CHECK(adams1->x_b == 7.0);
    CHECK(adams1->state_filled.empty());
    const PanelRow* york0 = filled.find_row("York County", week_at(0));
    CHECK(york0->x_b == 9.0);
    CHECK(york0->state_filled.empty());

    SUBCASE("no state series leaves the panel unchanged with a warning") {
        std::vector<PanelRow> no_state(rows.begin() + 2, rows.end());
        std::vector<std::string> warnings;
        Panel same = apply_state_fallback(make_panel(no_state), "x_b", &warnings);
        CHECK(warnings.size() == 1);
        const PanelRow* row = same.find_row("Adams County", week_at(0));
        CHECK_FALSE(row->x_b.has_value());
    }
}

TEST_CASE("state fallback covers extra indicators only when known panel-wide") {
    std::vector<PanelRow> rows;
    PanelRow state;
    state.county = {"Pennsylvania", true};
    state.week = week_at(0);
    state.extra_indicators["mobility"] = 55.0;
    rows.push_back(state);
    PanelRow county;
    county.county = {"Adams County", false};
    county.week = week_at(0);
    county.y = 1.0;
    rows.push_back(county);

    Panel filled = apply_state_fallback(make_panel(rows), "mobility");
    const PanelRow* adams = filled.find_row("Adams County", week_at(0));
    REQUIRE(adams != nullptr);
    REQUIRE(adams->extra_indicators.count("mobility") == 1);
    CHECK(adams->extra_indicators.at("mobility") == 55.0);
    CHECK(adams->state_filled.count("mobility") == 1);

    // An indicator nobody carries is a no-op.
    Panel untouched = apply_state_fallback(filled, "unknown_indicator");
    const PanelRow* again = untouched.find_row("Adams County", week_at(0));
    CHECK(again->extra_indicators.count("unknown_indicator") == 0);
}

TEST_CASE("assign_tertiles splits seven counties 3/2/2 ascending") {
    std::vector<PanelRow> rows;
    const char* names[] = {"Gamma County", "Alpha County", "Beta County",  "Delta County",
                           "Zeta County",  "Eta County",   "Theta County"};
    // Mean y equals its index+1; Alpha and Gamma tie at the bottom pair.
    const double means[] = {1.0, 1.0, 3.0, 4.0, 5.0, 6.0, 7.0};
    for (int c = 0; c < 7; ++c) {
        for (int t = 0; t < 3; ++t) {
            PanelRow row;
            row.county = {names[c], false};
            row.week = week_at(t);
            row.y = means[c];
            if (t == 2) row.extra_indicators["population"] = 1000.0 * (c + 1);
            rows.push_back(std::move(row));
        }
    }
    // State series must be ignored even though its mean is huge.
    PanelRow state;
    state.county = {"Pennsylvania", true};
    state.week = week_at(0);
    state.y = 1e9;
    rows.push_back(state);
    // A county with no y inside the window is skipped with a warning.
    PanelRow silent;
    silent.county = {"Silent County", false};
    silent.week = week_at(0);
    rows.push_back(silent);

    Panel p = make_panel(rows);
    std::vector<std::string> warnings;
    auto meta = assign_tertiles(p, {week_at(0), week_at(2)}, &warnings);
    REQUIRE(meta.size() == 7);
    CHECK(warnings.size() == 1);

    auto tertile_of = [&](const char* name) {
        auto it = meta.find(CountyId{name, false});
        REQUIRE(it != meta.end());
        return it->second.tertile;
    };
    // Ascending by (mean, name): Alpha(1), Gamma(1), Beta(3) | Delta(4),
    // Zeta(5) | Eta(6), Theta(7).
    CHECK(tertile_of("Alpha County") == Tertile::Low);
    CHECK(tertile_of("Gamma County") == Tertile::Low);
    CHECK(tertile_of("Beta County") == Tertile::Low);
    CHECK(tertile_of("Delta County") == Tertile::Mid);
    CHECK(tertile_of("Zeta County") == Tertile::Mid);
    CHECK(tertile_of("Eta County") == Tertile::High);
    CHECK(tertile_of("Theta County") == Tertile::High);

    auto gamma = meta.find(CountyId{"Gamma County", false});
    CHECK(gamma->second.population == 1000);
    CHECK(gamma->second.mean_weekly_y == doctest::Approx(1.0));

    SUBCASE("six counties split evenly") {
        std::vector<PanelRow> six;
        for (const PanelRow& row : p.rows) {
            if (row.county.name != "Theta County" && !row.county.state_level &&
                row.county.name != "Silent County") {
                six.push_back(row);
            }
        }
        auto m6 = assign_tertiles(make_panel(six), {week_at(0), week_at(2)});
        REQUIRE(m6.size() == 6);
        int low = 0, mid = 0, high = 0;
        for (const auto& [id, cm] : m6) {
            (void)id;
            low += cm.tertile == Tertile::Low;
            mid += cm.tertile == Tertile::Mid;
            high += cm.tertile == Tertile::High;
        }
        CHECK(low == 2);
        CHECK(mid == 2);
        CHECK(high == 2);
    }

    SUBCASE("window restriction changes the means used") {
        // Only week 0..0: all means unchanged here, but restricting to a
        // window containing no observations skips everyone.
        std::vector<std::string> w2;
        auto empty = assign_tertiles(p, {week_at(10), week_at(12)}, &w2);
        CHECK(empty.empty());
    }
}

TEST_CASE("rank_indicators orders by absolute correlation and skips degenerate columns") {
    std::vector<PanelRow> rows;
    for (int c = 0; c < 2; ++c) {
        for (int t = 0; t < 5; ++t) {
            PanelRow row;
            row.county = {c == 0 ? "Alpha County" : "Beta County", false};
            row.week = week_at(t);
            const double y = t + c;
            row.y = y;
            row.x_b = 2.0 * y + 3.0;   // r = +1
            row.x_v = 100.0 - y;       // r = -1
            row.s_t = 42.0;            // constant: omitted
            row.extra_indicators["curvature"] = y * y;
            row.extra_indicators["population"] = 12345.0;  // excluded by name
            rows.push_back(std::move(row));
        }
    }
    // State rows must not contribute pairs.
    PanelRow state;
    state.county = {"Pennsylvania", true};
    state.week = week_at(0);
    state.y = 0.0;
    state.x_b = -1e9;
    rows.push_back(state);

    Panel p = make_panel(rows);
    auto ranked = rank_indicators(p);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].indicator == "x_b");
    CHECK(ranked[1].indicator == "x_v");
    CHECK(ranked[2].indicator == "curvature");
    CHECK(ranked[0].r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ranked[1].r == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(ranked[0].n_obs == 10);
    CHECK(ranked[1].n_obs == 10);

    std::vector<double> ys, curv;
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 5; ++t) {
            ys.push_back(t + c);
            curv.push_back(double(t + c) * (t + c));
        }
    auto want = testsupport::pearson_oracle(ys, curv);
    REQUIRE(want.has_value());
    CHECK(ranked[2].r == doctest::Approx(*want).epsilon(1e-12));
}

TEST_CASE("panel JSON artifact round-trips exactly") {
    Panel p = testsupport::synth_panel(3, 8);
    // Exercise the optional-bearing fields too.
    p.rows[2].y.reset();
    p.rows[2].materialized_gap = true;
    p.rows[3].extra_indicators["mobility"] = 1.25;
    p.rows[3].extra_indicators["empty"] = std::nullopt;
    p.rows[4].state_filled.insert("x_b");
    p.rows[5].county.state_level = false;

    testsupport::TempDir dir("panel_json");
    const std::string path = dir.file("panel.json");
    write_panel_json(p, path);
    Panel back = read_panel_json(path);

    REQUIRE(back.rows.size() == p.rows.size());
    for (std::size_t i = 0; i < p.rows.size(); ++i) CHECK(rows_equal(back.rows[i], p.rows[i]));
    CHECK(back.counties.size() == p.counties.size());
    CHECK(back.week_range == p.week_range);

    // Writing the reloaded panel reproduces the file byte for byte.
    const std::string again = dir.file("panel2.json");
    write_panel_json(back, again);
    CHECK(testsupport::read_text_file(again) == testsupport::read_text_file(path));
}
