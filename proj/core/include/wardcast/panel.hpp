#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wardcast/calendar.hpp"

namespace wardcast {

struct CountyId {
    std::string name;          // canonical display name, e.g. "Adams County"
    bool state_level = false;  // synthetic state-aggregate series

    friend auto operator<=>(const CountyId&, const CountyId&) = default;
};

/**
 * One county-week. `y` is the 14-day average hospitalized patients; the
 * three named exogenous columns and any extra indicators may be missing.
 * Rows materialized to fill week gaps have every value missing and
 * `materialized_gap` set.
 */
struct PanelRow {
    CountyId county;
    WeekStamp week;
    std::optional<double> y;
    std::optional<double> x_b;  // adult ICU beds, weekly mean
    std::optional<double> x_v;  // patients on ventilators, weekly mean
    std::optional<double> s_t;  // anosmia/ageusia search volume, weekly sum
    std::map<std::string, std::optional<double>> extra_indicators;
    std::set<std::string> state_filled;  // columns substituted from the state series
    bool materialized_gap = false;
};

/**
 * Immutable weekly county panel. Rows are sorted by (county name, week) and
 * each county's weeks form a contiguous 7-day grid. All operations on a
 * loaded panel are pure and safe to call concurrently.
 */
struct Panel {
    std::vector<PanelRow> rows;
    std::vector<CountyId> counties;  // sorted by name; may include the state series
    std::optional<std::pair<WeekStamp, WeekStamp>> week_range;

    std::span<const PanelRow> county_rows(std::string_view county_name) const;
    const CountyId* find_county(std::string_view county_name) const;
    const PanelRow* find_row(std::string_view county_name, WeekStamp week) const;
    const CountyId* state_county() const;
};

enum class Tertile { Low, Mid, High };

std::string to_string(Tertile t);

struct CountyMeta {
    CountyId county;
    long long population = 0;
    double mean_weekly_y = 0.0;
    Tertile tertile = Tertile::Low;
};

struct IndicatorCorrelation {
    std::string indicator;
    double r = 0.0;
    std::size_t n_obs = 0;
};

enum class AggregateMode { Sum, Mean };

// CSV column → panel role. Roles: county, date, y, x_b, x_v, s_t,
// population, indicator:<name>. The mode applies when daily rows are rolled
// up to weeks.
struct ColumnSpec {
    std::string column;
    std::string role;
    AggregateMode mode = AggregateMode::Mean;
};

struct SourceSpec {
    std::string path;
};

struct SchemaConfig {
    std::vector<ColumnSpec> columns;
    WeekConvention week{};
    bool daily = false;  // true: dates are daily and aggregated per-column; false: dates are week-ending stamps
    std::vector<std::string> excluded_counties = default_excluded_counties();
    std::string state_name = "Pennsylvania";

    static std::vector<std::string> default_excluded_counties();
};

struct LoadReport {
    std::vector<std::string> warnings;
    std::size_t rows_dropped_excluded = 0;
    std::size_t cells_unparseable = 0;
    std::size_t gap_rows_inserted = 0;
    std::set<std::string> excluded_seen;  // excluded county names found in the input
};

struct LoadResult {
    Panel panel;
    LoadReport report;
};

// Assembles a Panel from loose rows: sorts by (county, week) and derives the
// county set and week range. Rows are taken as-is; no grid filling.
Panel make_panel(std::vector<PanelRow> rows);

/**
 * Reads one or more CSV snapshots and merges them into a Panel.
 *
 * Every source needs the county and date columns; other mapped columns are
 * picked up wherever they appear. Rows for excluded counties are dropped,
 * unparseable cells become missing with a warning, and week gaps are
 * materialized as missing rows so each county spans a contiguous grid.
 * Throws std::runtime_error when a file is unreadable or lacks the county
 * or date column.
 */
LoadResult load_panel(const std::vector<SourceSpec>& sources, const SchemaConfig& schema);

// Rolls a strictly increasing daily series up to weekly points. Weeks with
// no observations produce no output point.
std::vector<std::pair<WeekStamp, double>> aggregate_daily_to_weekly(
    const std::vector<std::pair<std::chrono::sys_days, double>>& daily, AggregateMode mode,
    const WeekConvention& week = {});

/**
 * Fills missing county cells of one indicator column from the state-level
 * series, marking substituted cells in PanelRow::state_filled. Observed
 * county values are never overwritten. Without a state series the panel is
 * returned unchanged and a warning is appended.
 */
Panel apply_state_fallback(Panel panel, const std::string& indicator,
                           std::vector<std::string>* warnings = nullptr);

/**
 * Ranks counties by mean observed y over the window and splits them into
 * Low/Mid/High thirds (ascending). When the count is not divisible by 3 the
 * remainder goes to the lower tertiles first, so 7 counties split (3,2,2).
 * Ties are broken by county name. The state series and counties with no
 * observed y in the window are left out (the latter with a warning).
 */
std::map<CountyId, CountyMeta> assign_tertiles(const Panel& panel,
                                               const std::pair<WeekStamp, WeekStamp>& window,
                                               std::vector<std::string>* warnings = nullptr);

/**
 * Pearson correlation of every indicator column against y over county-weeks
 * where both are observed (state series excluded), sorted by |r| descending.
 * Indicators with fewer than 3 complete pairs or a constant series are
 * omitted.
 */
std::vector<IndicatorCorrelation> rank_indicators(const Panel& panel);

// Deterministic JSON artifact round-trip for a loaded panel.
void write_panel_json(const Panel& panel, const std::string& path);
Panel read_panel_json(const std::string& path);

// Case-insensitive county-name comparison ignoring a trailing " County".
bool county_name_equal(std::string_view a, std::string_view b);

}  // namespace wardcast
