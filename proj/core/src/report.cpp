#include "wardcast/report.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "wardcast/context.hpp"
#include "wardcast/csv.hpp"

namespace wardcast::report {

namespace {

std::ofstream open_out(const std::string& path, const char* op) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error(std::string(op) + ": cannot open " + path);
    }
    return out;
}

std::string num(double value) { return context::format_number(value); }

}  // namespace

void write_records_jsonl(const std::vector<eval::ForecastRecord>& records,
                         const std::string& path) {
    std::ofstream out = open_out(path, "write_records_jsonl");
    for (const eval::ForecastRecord& r : records) {
        nlohmann::json j;
        j["county"] = r.county.name;
        j["week"] = format_week(r.week);
        j["model"] = models::to_string(r.model);
        j["run"] = r.run;
        j["y_hat"] = r.y_hat;
        j["y_true"] = r.y_true;
        j["pct_error"] = r.pct_error;
        j["fallback_used"] = r.fallback_used;
        if (r.stage1_exog) {
            j["stage1"] = {{"x_b", r.stage1_exog->x_b},
                           {"x_v", r.stage1_exog->x_v},
                           {"s_t", r.stage1_exog->s_t}};
        }
        if (r.stage1_flags) {
            j["stage1_flags"] = {{"x_b_fallback", r.stage1_flags->x_b_fallback},
                                 {"x_v_fallback", r.stage1_flags->x_v_fallback},
                                 {"s_t_fallback", r.stage1_flags->s_t_fallback},
                                 {"retried", r.stage1_flags->retried},
                                 {"transport_failed", r.stage1_flags->transport_failed}};
        }
        out << j.dump() << '\n';
    }
}

std::vector<eval::ForecastRecord> read_records_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_records_jsonl: cannot open " + path);
    }
    std::vector<eval::ForecastRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("read_records_jsonl: " + path + ":" +
                                     std::to_string(lineno) + ": " + e.what());
        }
        eval::ForecastRecord r;
        r.county.name = j.at("county").get<std::string>();
        const auto week = parse_week(j.at("week").get<std::string>());
        if (!week) {
            throw std::runtime_error("read_records_jsonl: " + path + ":" +
                                     std::to_string(lineno) + ": bad week stamp");
        }
        r.week = *week;
        const auto model = models::model_from_string(j.at("model").get<std::string>());
        if (!model) {
            throw std::runtime_error("read_records_jsonl: " + path + ":" +
                                     std::to_string(lineno) + ": unknown model");
        }
        r.model = *model;
        r.run = j.at("run").get<int>();
        r.y_hat = j.at("y_hat").get<double>();
        r.y_true = j.at("y_true").get<double>();
        r.pct_error = j.at("pct_error").get<double>();
        r.fallback_used = j.value("fallback_used", false);
        if (j.contains("stage1")) {
            models::ExogNext e;
            e.x_b = j["stage1"].at("x_b").get<double>();
            e.x_v = j["stage1"].at("x_v").get<double>();
            e.s_t = j["stage1"].at("s_t").get<double>();
            r.stage1_exog = e;
        }
        if (j.contains("stage1_flags")) {
            hybrid::Stage1Flags f;
            const auto& jf = j["stage1_flags"];
            f.x_b_fallback = jf.value("x_b_fallback", false);
            f.x_v_fallback = jf.value("x_v_fallback", false);
            f.s_t_fallback = jf.value("s_t_fallback", false);
            f.retried = jf.value("retried", false);
            f.transport_failed = jf.value("transport_failed", false);
            r.stage1_flags = f;
        }
        records.push_back(std::move(r));
    }
    return records;
}

void write_summary_csv(const std::vector<eval::TertileSummary>& rows, const std::string& path) {
    std::ofstream out = open_out(path, "write_summary_csv");
    csv::write_row(out, {"model", "metric", "stratum", "mean", "sd", "n_counties"});
    for (const eval::TertileSummary& row : rows) {
        csv::write_row(out, {models::to_string(row.model), eval::to_string(row.metric),
                             eval::to_string(row.stratum), num(row.mean), num(row.sd),
                             std::to_string(row.n_counties)});
    }
}

namespace {

std::string tertile_of(const std::map<CountyId, CountyMeta>& tertiles, const CountyId& county) {
    const auto it = tertiles.find(county);
    if (it == tertiles.end()) return "";
    return to_string(it->second.tertile);
}

}  // namespace

void write_county_metrics_csv(const std::vector<eval::CountyMetrics>& rows,
                              const std::map<CountyId, CountyMeta>& tertiles,
                              const std::string& path) {
    std::ofstream out = open_out(path, "write_county_metrics_csv");
    csv::write_row(out, {"county", "tertile", "model", "mape_mean", "mape_sd", "mpe_mean",
                         "mpe_sd", "n_weeks"});
    for (const eval::CountyMetrics& row : rows) {
        csv::write_row(out, {row.county.name, tertile_of(tertiles, row.county),
                             models::to_string(row.model), num(row.mape_mean), num(row.mape_sd),
                             num(row.mpe_mean), num(row.mpe_sd), std::to_string(row.n_weeks)});
    }
}

void write_county_leadlag_csv(const std::vector<eval::CountyLeadLag>& rows,
                              const std::map<CountyId, CountyMeta>& tertiles,
                              const std::string& path) {
    std::ofstream out = open_out(path, "write_county_leadlag_csv");
    csv::write_row(out, {"county", "tertile", "model", "ell_star", "rho_star"});
    for (const eval::CountyLeadLag& row : rows) {
        csv::write_row(out, {row.county.name, tertile_of(tertiles, row.county),
                             models::to_string(row.model), num(row.ell_star),
                             num(row.rho_star)});
    }
}

void write_run_level_csv(const std::vector<eval::ForecastRecord>& records,
                         const std::string& path) {
    // (model name, county, run) -> records
    std::map<std::tuple<std::string, std::string, int>, std::vector<eval::ForecastRecord>>
        groups;
    for (const eval::ForecastRecord& r : records) {
        groups[{models::to_string(r.model), r.county.name, r.run}].push_back(r);
    }

    std::ofstream out = open_out(path, "write_run_level_csv");
    csv::write_row(out, {"model", "county", "run", "mape_mean", "mape_sd", "mpe_mean", "mpe_sd",
                         "n_weeks"});
    for (const auto& [key, recs] : groups) {
        const eval::MeanSd a = eval::mape(recs);
        const eval::MeanSd s = eval::mpe(recs);
        csv::write_row(out, {std::get<0>(key), std::get<1>(key),
                             std::to_string(std::get<2>(key)), num(a.mean), num(a.sd),
                             num(s.mean), num(s.sd), std::to_string(recs.size())});
    }
}

void write_indicator_csv(const std::vector<IndicatorCorrelation>& rows,
                         const std::string& path) {
    std::ofstream out = open_out(path, "write_indicator_csv");
    csv::write_row(out, {"indicator", "r", "n_obs"});
    for (const IndicatorCorrelation& row : rows) {
        csv::write_row(out, {row.indicator, num(row.r), std::to_string(row.n_obs)});
    }
}

}  // namespace wardcast::report
