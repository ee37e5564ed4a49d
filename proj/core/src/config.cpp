#include "wardcast/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace wardcast::config {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& detail) {
    throw std::runtime_error("config " + path + ": " + detail);
}

WeekStamp parse_week_or_fail(const std::string& path, const nlohmann::json& j,
                             const char* key) {
    const auto text = j.get<std::string>();
    const auto week = parse_week(text);
    if (!week) fail(path, std::string(key) + ": bad date '" + text + "'");
    return *week;
}

bool valid_role(const std::string& role) {
    static const std::set<std::string> plain = {"county", "date",  "y",
                                                "x_b",    "x_v",   "s_t",
                                                "population"};
    if (plain.count(role) > 0) return true;
    return role.starts_with("indicator:") && role.size() > std::string("indicator:").size();
}

}  // namespace

std::pair<WeekStamp, WeekStamp> RunConfig::default_stratification_window() {
    using namespace std::chrono;
    return {WeekStamp{sys_days{year{2020} / 3 / 1}}, WeekStamp{sys_days{year{2022} / 1 / 31}}};
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config " + path + ": cannot open file");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(path, std::string("invalid JSON: ") + e.what());
    }

    RunConfig cfg;

    if (j.contains("data")) {
        const auto& data = j["data"];
        for (const auto& source : data.value("sources", nlohmann::json::array())) {
            cfg.sources.push_back({source.get<std::string>()});
        }
        cfg.schema.daily = data.value("daily", false);
        if (data.contains("week_end_day")) {
            const auto name = data["week_end_day"].get<std::string>();
            const auto day = parse_weekday(name);
            if (!day) fail(path, "data.week_end_day: unknown weekday '" + name + "'");
            cfg.schema.week.end_day = *day;
        }
        if (data.contains("state_name")) {
            cfg.schema.state_name = data["state_name"].get<std::string>();
        }
        if (data.contains("excluded_counties")) {
            cfg.schema.excluded_counties.clear();
            for (const auto& name : data["excluded_counties"]) {
                cfg.schema.excluded_counties.push_back(name.get<std::string>());
            }
        }
        for (const auto& col : data.value("columns", nlohmann::json::array())) {
            ColumnSpec spec;
            spec.column = col.at("column").get<std::string>();
            spec.role = col.at("role").get<std::string>();
            if (!valid_role(spec.role)) {
                fail(path, "data.columns: unknown role '" + spec.role + "'");
            }
            const auto mode = col.value("mode", std::string("mean"));
            if (mode == "sum") {
                spec.mode = AggregateMode::Sum;
            } else if (mode == "mean") {
                spec.mode = AggregateMode::Mean;
            } else {
                fail(path, "data.columns: unknown mode '" + mode + "'");
            }
            cfg.schema.columns.push_back(std::move(spec));
        }
    }

    if (j.contains("stratification")) {
        const auto& s = j["stratification"];
        cfg.stratification_window.first =
            parse_week_or_fail(path, s.at("start"), "stratification.start");
        cfg.stratification_window.second =
            parse_week_or_fail(path, s.at("end"), "stratification.end");
    }

    if (j.contains("eval")) {
        const auto& e = j["eval"];
        cfg.eval.window_len = e.value("window_len", cfg.eval.window_len);
        cfg.eval.n_runs = e.value("n_runs", cfg.eval.n_runs);
        cfg.eval.lag_max = e.value("lag_max", cfg.eval.lag_max);
        cfg.eval.strict_context = e.value("strict_context", cfg.eval.strict_context);
        cfg.eval.threads = e.value("threads", cfg.eval.threads);
        cfg.eval.backoff = std::chrono::milliseconds{e.value("backoff_ms", 0)};
        if (e.contains("period")) {
            cfg.eval.eval_period = {
                parse_week_or_fail(path, e["period"].at("start"), "eval.period.start"),
                parse_week_or_fail(path, e["period"].at("end"), "eval.period.end")};
        }
    }

    for (const auto& name : j.value("models", nlohmann::json::array())) {
        const auto text = name.get<std::string>();
        const auto model = models::model_from_string(text);
        if (!model) fail(path, "models: unknown model '" + text + "'");
        cfg.model_list.push_back(*model);
    }

    if (j.contains("backend")) {
        const auto& b = j["backend"];
        cfg.backend_kind = b.value("kind", cfg.backend_kind);
        static const std::set<std::string> kinds = {"none", "http", "persistence", "oracle",
                                                    "scripted"};
        if (kinds.count(cfg.backend_kind) == 0) {
            fail(path, "backend.kind: unknown kind '" + cfg.backend_kind + "'");
        }
        cfg.backend.endpoint_url = b.value("endpoint_url", cfg.backend.endpoint_url);
        cfg.backend.model_name = b.value("model_name", cfg.backend.model_name);
        cfg.backend.api_key_env_var = b.value("api_key_env_var", cfg.backend.api_key_env_var);
        cfg.backend.timeout = std::chrono::milliseconds{
            b.value("timeout_ms", static_cast<int>(cfg.backend.timeout.count()))};
        cfg.backend.max_concurrency = b.value("max_concurrency", cfg.backend.max_concurrency);
        cfg.script_path = b.value("script_path", cfg.script_path);
        if (cfg.backend.timeout.count() <= 0) {
            fail(path, "backend.timeout_ms: must be positive");
        }
        if (cfg.backend.max_concurrency < 1) {
            fail(path, "backend.max_concurrency: must be at least 1");
        }
    }

    if (j.contains("paths")) {
        const auto& p = j["paths"];
        cfg.panel_path = p.value("panel", cfg.panel_path);
        cfg.records_path = p.value("records", cfg.records_path);
        cfg.transcript_path = p.value("transcript", cfg.transcript_path);
        cfg.output_dir = p.value("output_dir", cfg.output_dir);
    }

    if (cfg.eval.window_len < 2) fail(path, "eval.window_len: must be at least 2");
    if (cfg.eval.n_runs < 1) fail(path, "eval.n_runs: must be at least 1");
    if (cfg.eval.lag_max < 1) fail(path, "eval.lag_max: must be at least 1");

    return cfg;
}

}  // namespace wardcast::config
