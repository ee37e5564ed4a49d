#include "wardcast/panel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "wardcast/csv.hpp"
#include "wardcast/stats.hpp"

namespace wardcast {

namespace {

constexpr std::size_t kMaxWarnings = 100;

void warn(LoadReport& report, std::string message) {
    if (report.warnings.size() < kMaxWarnings) {
        report.warnings.push_back(std::move(message));
    } else if (report.warnings.size() == kMaxWarnings) {
        report.warnings.push_back("further warnings suppressed");
    }
}

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin])) != 0) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1])) != 0) --end;
    return std::string(s.substr(begin, end - begin));
}

std::string normalized_county_key(std::string_view name) {
    std::string t = trim(name);
    std::string lower;
    lower.reserve(t.size());
    for (char c : t) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    constexpr std::string_view suffix = " county";
    if (lower.size() > suffix.size() && lower.ends_with(suffix)) {
        lower.resize(lower.size() - suffix.size());
    }
    return lower;
}

bool is_missing_token(std::string_view cell) {
    const std::string t = trim(cell);
    if (t.empty()) return true;
    std::string lower;
    for (char c : t) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return lower == "na" || lower == "n/a" || lower == "nan" || lower == "null" || lower == ".";
}

std::optional<double> parse_numeric_cell(std::string_view cell, bool* unparseable) {
    *unparseable = false;
    if (is_missing_token(cell)) return std::nullopt;
    const std::string t = trim(cell);
    double value = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        *unparseable = true;
        return std::nullopt;
    }
    return value;
}

struct ColumnBinding {
    int index = -1;
    std::string key;  // "y", "x_b", "x_v", "s_t", "population", or extra indicator name
    AggregateMode mode = AggregateMode::Mean;
    bool nonnegative = false;
};

std::optional<std::string> role_to_key(const std::string& role) {
    if (role == "y" || role == "x_b" || role == "x_v" || role == "s_t" || role == "population") {
        return role;
    }
    constexpr std::string_view prefix = "indicator:";
    if (role.starts_with(prefix) && role.size() > prefix.size()) {
        return role.substr(prefix.size());
    }
    return std::nullopt;
}

struct CountyAccum {
    std::string display_name;
    bool state_level = false;
    // week -> column key -> observed values (aggregated later)
    std::map<WeekStamp, std::map<std::string, std::vector<double>>> cells;
};

double aggregate(const std::vector<double>& values, AggregateMode mode) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return mode == AggregateMode::Sum ? sum : sum / static_cast<double>(values.size());
}

std::optional<double>* row_column(PanelRow& row, const std::string& key, bool create_extra) {
    if (key == "y") return &row.y;
    if (key == "x_b") return &row.x_b;
    if (key == "x_v") return &row.x_v;
    if (key == "s_t") return &row.s_t;
    if (create_extra) return &row.extra_indicators[key];
    auto it = row.extra_indicators.find(key);
    return it == row.extra_indicators.end() ? nullptr : &it->second;
}

const std::optional<double>* row_column(const PanelRow& row, const std::string& key) {
    return row_column(const_cast<PanelRow&>(row), key, false);
}

}  // namespace

std::vector<std::string> SchemaConfig::default_excluded_counties() {
    return {"Forest", "Juniata", "Perry", "Pike", "Snyder", "Cameron", "Sullivan"};
}

Panel make_panel(std::vector<PanelRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const PanelRow& a, const PanelRow& b) {
        if (a.county.name != b.county.name) return a.county.name < b.county.name;
        return a.week < b.week;
    });

    Panel panel;
    panel.rows = std::move(rows);
    for (const PanelRow& row : panel.rows) {
        if (panel.counties.empty() || panel.counties.back().name != row.county.name) {
            panel.counties.push_back(row.county);
        }
        if (!panel.week_range) {
            panel.week_range = {row.week, row.week};
        } else {
            panel.week_range->first = std::min(panel.week_range->first, row.week);
            panel.week_range->second = std::max(panel.week_range->second, row.week);
        }
    }
    return panel;
}

std::string to_string(Tertile t) {
    switch (t) {
        case Tertile::Low: return "low";
        case Tertile::Mid: return "mid";
        case Tertile::High: return "high";
    }
    throw std::logic_error("unknown tertile");
}

bool county_name_equal(std::string_view a, std::string_view b) {
    return normalized_county_key(a) == normalized_county_key(b);
}

std::span<const PanelRow> Panel::county_rows(std::string_view county_name) const {
    auto lo = std::lower_bound(rows.begin(), rows.end(), county_name,
                               [](const PanelRow& row, std::string_view name) {
                                   return row.county.name < name;
                               });
    auto hi = std::upper_bound(rows.begin(), rows.end(), county_name,
                               [](std::string_view name, const PanelRow& row) {
                                   return name < row.county.name;
                               });
    return {rows.data() + (lo - rows.begin()), static_cast<std::size_t>(hi - lo)};
}

const CountyId* Panel::find_county(std::string_view county_name) const {
    for (const CountyId& county : counties) {
        if (county.name == county_name) return &county;
    }
    return nullptr;
}

const PanelRow* Panel::find_row(std::string_view county_name, WeekStamp week) const {
    const auto span = county_rows(county_name);
    auto it = std::lower_bound(span.begin(), span.end(), week,
                               [](const PanelRow& row, WeekStamp w) { return row.week < w; });
    if (it == span.end() || it->week != week) return nullptr;
    return &*it;
}

const CountyId* Panel::state_county() const {
    for (const CountyId& county : counties) {
        if (county.state_level) return &county;
    }
    return nullptr;
}

LoadResult load_panel(const std::vector<SourceSpec>& sources, const SchemaConfig& schema) {
    LoadReport report;

    std::vector<std::string> excluded_keys;
    excluded_keys.reserve(schema.excluded_counties.size());
    for (const std::string& name : schema.excluded_counties) {
        excluded_keys.push_back(normalized_county_key(name));
    }
    const std::string state_key = normalized_county_key(schema.state_name);

    std::map<std::string, CountyAccum> accum;  // keyed by normalized county name

    for (const SourceSpec& source : sources) {
        const csv::Table table = csv::read_file(source.path);

        int county_col = -1;
        int date_col = -1;
        std::vector<ColumnBinding> bindings;
        for (const ColumnSpec& spec : schema.columns) {
            const int idx = table.column(spec.column);
            if (spec.role == "county") {
                if (idx >= 0) county_col = idx;
                continue;
            }
            if (spec.role == "date") {
                if (idx >= 0) date_col = idx;
                continue;
            }
            const auto key = role_to_key(spec.role);
            if (!key) {
                throw std::runtime_error("load_panel: unknown column role '" + spec.role + "'");
            }
            if (idx < 0) continue;  // column lives in another source
            ColumnBinding binding;
            binding.index = idx;
            binding.key = *key;
            binding.mode = spec.mode;
            binding.nonnegative =
                *key == "y" || *key == "x_b" || *key == "x_v" || *key == "s_t";
            bindings.push_back(std::move(binding));
        }
        if (county_col < 0) {
            throw std::runtime_error("load_panel: " + source.path + " lacks the county column");
        }
        if (date_col < 0) {
            throw std::runtime_error("load_panel: " + source.path + " lacks the date column");
        }
        if (bindings.empty()) {
            warn(report, source.path + ": no mapped value columns present");
            continue;
        }

        std::size_t line = 1;
        for (const auto& row : table.rows) {
            ++line;
            if (county_col >= static_cast<int>(row.size()) ||
                date_col >= static_cast<int>(row.size())) {
                warn(report, source.path + ":" + std::to_string(line) + ": short row skipped");
                continue;
            }
            const std::string raw_name = trim(row[static_cast<std::size_t>(county_col)]);
            if (raw_name.empty()) {
                warn(report, source.path + ":" + std::to_string(line) + ": empty county name");
                continue;
            }
            const std::string key = normalized_county_key(raw_name);
            if (std::find(excluded_keys.begin(), excluded_keys.end(), key) !=
                excluded_keys.end()) {
                ++report.rows_dropped_excluded;
                report.excluded_seen.insert(raw_name);
                continue;
            }

            const auto date = parse_date(trim(row[static_cast<std::size_t>(date_col)]));
            if (!date) {
                warn(report, source.path + ":" + std::to_string(line) + ": unparseable date '" +
                                 trim(row[static_cast<std::size_t>(date_col)]) + "'");
                continue;
            }
            const WeekStamp week =
                schema.daily ? schema.week.week_of(*date) : WeekStamp{*date};

            CountyAccum& county = accum[key];
            if (county.display_name.empty()) {
                county.display_name = raw_name;
                county.state_level = key == state_key;
            }

            for (const ColumnBinding& binding : bindings) {
                if (binding.index >= static_cast<int>(row.size())) continue;
                bool unparseable = false;
                auto value =
                    parse_numeric_cell(row[static_cast<std::size_t>(binding.index)], &unparseable);
                if (unparseable) {
                    ++report.cells_unparseable;
                    warn(report, source.path + ":" + std::to_string(line) + ": unparseable " +
                                     binding.key + " cell treated as missing");
                    continue;
                }
                if (!value) continue;
                if (binding.nonnegative && *value < 0.0) {
                    ++report.cells_unparseable;
                    warn(report, source.path + ":" + std::to_string(line) + ": negative " +
                                     binding.key + " treated as missing");
                    continue;
                }
                county.cells[week][binding.key].push_back(*value);
            }
        }
    }

    std::vector<PanelRow> rows;
    for (auto& [key, county] : accum) {
        (void)key;
        if (county.cells.empty()) continue;
        const CountyId id{county.display_name, county.state_level};
        const WeekStamp first = county.cells.begin()->first;
        const WeekStamp last = county.cells.rbegin()->first;
        for (WeekStamp week = first; week <= last; week = week.next()) {
            PanelRow row;
            row.county = id;
            row.week = week;
            auto it = county.cells.find(week);
            if (it == county.cells.end()) {
                row.materialized_gap = true;
                ++report.gap_rows_inserted;
                warn(report, id.name + ": inserted missing week " + format_week(week));
            } else {
                for (const auto& [column, values] : it->second) {
                    const double value = aggregate(values, [&] {
                        for (const ColumnSpec& spec : schema.columns) {
                            const auto k = role_to_key(spec.role);
                            if (k && *k == column) return spec.mode;
                        }
                        return AggregateMode::Mean;
                    }());
                    *row_column(row, column, true) = value;
                }
                // Off-grid weekly stamps that do not land on the 7-day grid
                // anchored at `first` would have been merged above only if
                // equal; anything between grid points is unreachable because
                // the grid is advanced from observed stamps. Stamps not on
                // the grid surface as extra map entries handled below.
            }
            rows.push_back(std::move(row));
        }
        // Weekly-mode inputs may carry stamps off the 7-day grid anchored at
        // `first`; those were skipped by the loop above. Surface them as
        // warnings so misaligned snapshots are caught early.
        for (const auto& [week, cells] : county.cells) {
            (void)cells;
            if (week_diff(first, week) * 7 !=
                (week.week_ending - first.week_ending).count()) {
                warn(report, id.name + ": stamp " + format_week(week) +
                                 " is off the weekly grid and was ignored");
            }
        }
    }

    return {make_panel(std::move(rows)), std::move(report)};
}

std::vector<std::pair<WeekStamp, double>> aggregate_daily_to_weekly(
    const std::vector<std::pair<std::chrono::sys_days, double>>& daily, AggregateMode mode,
    const WeekConvention& week) {
    for (std::size_t i = 1; i < daily.size(); ++i) {
        if (daily[i].first <= daily[i - 1].first) {
            throw std::invalid_argument("aggregate_daily_to_weekly: dates must strictly increase");
        }
    }
    std::map<WeekStamp, std::vector<double>> buckets;
    for (const auto& [date, value] : daily) {
        buckets[week.week_of(date)].push_back(value);
    }
    std::vector<std::pair<WeekStamp, double>> out;
    out.reserve(buckets.size());
    for (const auto& [stamp, values] : buckets) {
        out.emplace_back(stamp, aggregate(values, mode));
    }
    return out;
}

Panel apply_state_fallback(Panel panel, const std::string& indicator,
                           std::vector<std::string>* warnings) {
    const CountyId* state = panel.state_county();
    if (state == nullptr) {
        if (warnings != nullptr) {
            warnings->push_back("apply_state_fallback: no state-level series; panel unchanged");
        }
        return panel;
    }

    std::map<WeekStamp, double> state_values;
    for (const PanelRow& row : panel.county_rows(state->name)) {
        const std::optional<double>* cell = row_column(row, indicator);
        if (cell != nullptr && cell->has_value()) {
            state_values[row.week] = **cell;
        }
    }

    for (PanelRow& row : panel.rows) {
        if (row.county.state_level) continue;
        auto it = state_values.find(row.week);
        if (it == state_values.end()) continue;
        std::optional<double>* cell = row_column(row, indicator, false);
        if (cell != nullptr && cell->has_value()) continue;  // never overwrite observed values
        if (cell == nullptr) {
            const bool known_extra = std::any_of(
                panel.rows.begin(), panel.rows.end(), [&](const PanelRow& r) {
                    return r.extra_indicators.count(indicator) > 0;
                });
            if (!known_extra) continue;  // indicator absent from the panel entirely
            cell = row_column(row, indicator, true);
        }
        *cell = it->second;
        row.state_filled.insert(indicator);
    }
    return panel;
}

std::map<CountyId, CountyMeta> assign_tertiles(const Panel& panel,
                                               const std::pair<WeekStamp, WeekStamp>& window,
                                               std::vector<std::string>* warnings) {
    struct Ranked {
        CountyId county;
        double mean = 0.0;
        long long population = 0;
    };
    std::vector<Ranked> ranked;

    for (const CountyId& county : panel.counties) {
        if (county.state_level) continue;
        double sum = 0.0;
        std::size_t n = 0;
        long long population = 0;
        for (const PanelRow& row : panel.county_rows(county.name)) {
            auto pop = row.extra_indicators.find("population");
            if (pop != row.extra_indicators.end() && pop->second.has_value()) {
                population = std::llround(*pop->second);
            }
            if (row.week < window.first || row.week > window.second) continue;
            if (!row.y) continue;
            sum += *row.y;
            ++n;
        }
        if (n == 0) {
            if (warnings != nullptr) {
                warnings->push_back("assign_tertiles: " + county.name +
                                    " has no observed y in the window; excluded");
            }
            continue;
        }
        ranked.push_back({county, sum / static_cast<double>(n), population});
    }

    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.mean != b.mean) return a.mean < b.mean;
        return a.county.name < b.county.name;
    });

    const std::size_t n = ranked.size();
    const std::size_t base = n / 3;
    const std::size_t rem = n % 3;
    const std::size_t low_size = base + (rem >= 1 ? 1 : 0);
    const std::size_t mid_size = base + (rem >= 2 ? 1 : 0);

    std::map<CountyId, CountyMeta> out;
    for (std::size_t i = 0; i < n; ++i) {
        Tertile tertile = Tertile::High;
        if (i < low_size) {
            tertile = Tertile::Low;
        } else if (i < low_size + mid_size) {
            tertile = Tertile::Mid;
        }
        out.emplace(ranked[i].county,
                    CountyMeta{ranked[i].county, ranked[i].population, ranked[i].mean, tertile});
    }
    return out;
}

std::vector<IndicatorCorrelation> rank_indicators(const Panel& panel) {
    std::vector<std::string> keys = {"x_b", "x_v", "s_t"};
    std::set<std::string> extras;
    for (const PanelRow& row : panel.rows) {
        for (const auto& [name, value] : row.extra_indicators) {
            (void)value;
            if (name != "population") extras.insert(name);
        }
    }
    keys.insert(keys.end(), extras.begin(), extras.end());

    std::vector<IndicatorCorrelation> out;
    for (const std::string& key : keys) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (const PanelRow& row : panel.rows) {
            if (row.county.state_level) continue;
            const std::optional<double>* cell = row_column(row, key);
            if (cell == nullptr || !cell->has_value() || !row.y) continue;
            xs.push_back(**cell);
            ys.push_back(*row.y);
        }
        const auto r = stats::pearson(xs, ys);
        if (!r) continue;
        out.push_back({key, *r, xs.size()});
    }

    std::sort(out.begin(), out.end(), [](const IndicatorCorrelation& a,
                                         const IndicatorCorrelation& b) {
        const double am = std::fabs(a.r);
        const double bm = std::fabs(b.r);
        if (am != bm) return am > bm;
        return a.indicator < b.indicator;
    });
    return out;
}

namespace {

nlohmann::json optional_to_json(const std::optional<double>& value) {
    if (!value) return nullptr;
    return *value;
}

std::optional<double> optional_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

void write_panel_json(const Panel& panel, const std::string& path) {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const PanelRow& row : panel.rows) {
        nlohmann::json r;
        r["county"] = row.county.name;
        r["state_level"] = row.county.state_level;
        r["week"] = format_week(row.week);
        r["y"] = optional_to_json(row.y);
        r["x_b"] = optional_to_json(row.x_b);
        r["x_v"] = optional_to_json(row.x_v);
        r["s_t"] = optional_to_json(row.s_t);
        if (!row.extra_indicators.empty()) {
            nlohmann::json extra;
            for (const auto& [name, value] : row.extra_indicators) {
                extra[name] = optional_to_json(value);
            }
            r["extra"] = std::move(extra);
        }
        if (!row.state_filled.empty()) {
            r["state_filled"] = row.state_filled;
        }
        if (row.materialized_gap) {
            r["gap"] = true;
        }
        j["rows"].push_back(std::move(r));
    }

    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_panel_json: cannot open " + path);
    }
    out << j.dump(2) << '\n';
}

Panel read_panel_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_panel_json: cannot open " + path);
    }
    nlohmann::json j;
    in >> j;

    std::vector<PanelRow> rows;
    for (const auto& r : j.at("rows")) {
        PanelRow row;
        row.county.name = r.at("county").get<std::string>();
        row.county.state_level = r.value("state_level", false);
        const auto week = parse_week(r.at("week").get<std::string>());
        if (!week) {
            throw std::runtime_error("read_panel_json: bad week stamp in " + path);
        }
        row.week = *week;
        row.y = optional_from_json(r.at("y"));
        row.x_b = optional_from_json(r.at("x_b"));
        row.x_v = optional_from_json(r.at("x_v"));
        row.s_t = optional_from_json(r.at("s_t"));
        if (r.contains("extra")) {
            for (const auto& [name, value] : r.at("extra").items()) {
                row.extra_indicators[name] = optional_from_json(value);
            }
        }
        if (r.contains("state_filled")) {
            for (const auto& name : r.at("state_filled")) {
                row.state_filled.insert(name.get<std::string>());
            }
        }
        row.materialized_gap = r.value("gap", false);
        rows.push_back(std::move(row));
    }
    return make_panel(std::move(rows));
}

}  // namespace wardcast
