#include <doctest.h>

#include <chrono>

#include "test_support.hpp"
#include "wardcast/config.hpp"
#include "wardcast/csv.hpp"
#include "wardcast/evaluate.hpp"
#include "wardcast/manifest.hpp"
#include "wardcast/report.hpp"

using namespace wardcast;
using testsupport::week_at;

namespace {

std::vector<eval::ForecastRecord> sample_records() {
    Panel panel = testsupport::synth_panel(2, 12);
    eval::EvalConfig cfg;
    cfg.threads = 1;
    auto records = eval::rolling_origin(panel, models::ModelId::Ar1, cfg);
    auto lag1 = eval::rolling_origin(panel, models::ModelId::Lag1, cfg);
    records.insert(records.end(), lag1.begin(), lag1.end());
    eval::sort_records(records);
    return records;
}

}  // namespace

TEST_CASE("forecast records survive the JSONL round-trip bit for bit") {
    auto records = sample_records();
    // Give one record the optional hybrid payload.
    records[0].stage1_exog = models::ExogNext{1.25, 0.5, 7.0};
    hybrid::Stage1Flags flags;
    flags.x_v_fallback = true;
    flags.retried = true;
    records[0].stage1_flags = flags;
    records[0].fallback_used = true;

    testsupport::TempDir dir("records");
    const std::string path = dir.file("records.jsonl");
    report::write_records_jsonl(records, path);
    auto back = report::read_records_jsonl(path);

    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& a = records[i];
        const auto& b = back[i];
        CHECK(a.county == b.county);
        CHECK(a.week == b.week);
        CHECK(a.model == b.model);
        CHECK(a.run == b.run);
        CHECK(a.y_hat == b.y_hat);
        CHECK(a.y_true == b.y_true);
        CHECK(a.pct_error == b.pct_error);
        CHECK(a.fallback_used == b.fallback_used);
        CHECK(a.stage1_exog.has_value() == b.stage1_exog.has_value());
        CHECK(a.stage1_flags.has_value() == b.stage1_flags.has_value());
    }
    REQUIRE(back[0].stage1_exog.has_value());
    CHECK(back[0].stage1_exog->x_b == 1.25);
    CHECK(back[0].stage1_exog->s_t == 7.0);
    REQUIRE(back[0].stage1_flags.has_value());
    CHECK(back[0].stage1_flags->x_v_fallback);
    CHECK(back[0].stage1_flags->retried);
    CHECK_FALSE(back[0].stage1_flags->x_b_fallback);

    // Rewriting the reloaded records reproduces the file exactly.
    const std::string path2 = dir.file("records2.jsonl");
    report::write_records_jsonl(back, path2);
    CHECK(testsupport::read_text_file(path2) == testsupport::read_text_file(path));
}

TEST_CASE("read_records_jsonl points at the offending line") {
    testsupport::TempDir dir("records_bad");
    const std::string path = dir.file("r.jsonl");
    testsupport::write_text_file(path, "not json at all\n");
    try {
        report::read_records_jsonl(path);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        CHECK(what.find(path) != std::string::npos);
        CHECK(what.find(":1") != std::string::npos);
    }
    CHECK_THROWS_AS(report::read_records_jsonl(dir.file("missing.jsonl")), std::runtime_error);
}

TEST_CASE("summary csv lays out one row per stratum") {
    std::vector<eval::TertileSummary> rows;
    eval::TertileSummary s;
    s.stratum = eval::Stratum::Low;
    s.model = models::ModelId::Ar1;
    s.metric = eval::SummaryMetric::Mape;
    s.mean = 23.5;
    s.sd = 4.25;
    s.n_counties = 20;
    rows.push_back(s);
    s.stratum = eval::Stratum::Overall;
    s.n_counties = 60;
    rows.push_back(s);

    testsupport::TempDir dir("summary");
    const std::string path = dir.file("summary.csv");
    report::write_summary_csv(rows, path);
    csv::Table t = csv::read_file(path);
    CHECK(t.header ==
          std::vector<std::string>{"model", "metric", "stratum", "mean", "sd", "n_counties"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"ar1", "mape", "low", "23.5", "4.25", "20"});
    CHECK(t.rows[1][2] == "overall");
    CHECK(t.rows[1][5] == "60");
}

TEST_CASE("county metrics and lead-lag csvs carry tertile labels") {
    std::map<CountyId, CountyMeta> tertiles;
    CountyMeta meta;
    meta.county = {"Alpha County", false};
    meta.tertile = Tertile::High;
    tertiles[meta.county] = meta;

    std::vector<eval::CountyMetrics> metrics;
    eval::CountyMetrics m;
    m.county = {"Alpha County", false};
    m.model = models::ModelId::Holt;
    m.mape_mean = 12.5;
    m.mape_sd = 1.5;
    m.mpe_mean = -3.25;
    m.mpe_sd = 2.0;
    m.n_weeks = 42;
    metrics.push_back(m);

    testsupport::TempDir dir("county_csv");
    const std::string mpath = dir.file("metrics.csv");
    report::write_county_metrics_csv(metrics, tertiles, mpath);
    csv::Table mt = csv::read_file(mpath);
    CHECK(mt.header == std::vector<std::string>{"county", "tertile", "model", "mape_mean",
                                                "mape_sd", "mpe_mean", "mpe_sd", "n_weeks"});
    REQUIRE(mt.rows.size() == 1);
    CHECK(mt.rows[0][0] == "Alpha County");
    CHECK(mt.rows[0][1] == "high");
    CHECK(mt.rows[0][2] == "es");
    CHECK(mt.rows[0][3] == "12.5");
    CHECK(mt.rows[0][7] == "42");

    std::vector<eval::CountyLeadLag> leadlag;
    eval::CountyLeadLag ll;
    ll.county = {"Alpha County", false};
    ll.model = models::ModelId::Holt;
    ll.ell_star = -0.5;
    ll.rho_star = 0.75;
    leadlag.push_back(ll);
    const std::string lpath = dir.file("leadlag.csv");
    report::write_county_leadlag_csv(leadlag, tertiles, lpath);
    csv::Table lt = csv::read_file(lpath);
    CHECK(lt.header ==
          std::vector<std::string>{"county", "tertile", "model", "ell_star", "rho_star"});
    REQUIRE(lt.rows.size() == 1);
    CHECK(lt.rows[0] ==
          std::vector<std::string>{"Alpha County", "high", "es", "-0.5", "0.75"});
}

TEST_CASE("run-level csv reports one row per run before averaging") {
    auto records = sample_records();
    testsupport::TempDir dir("run_csv");
    const std::string path = dir.file("runs.csv");
    report::write_run_level_csv(records, path);
    csv::Table t = csv::read_file(path);
    CHECK(t.header == std::vector<std::string>{"model", "county", "run", "mape_mean", "mape_sd",
                                               "mpe_mean", "mpe_sd", "n_weeks"});
    // 2 models x 2 counties x 3 runs.
    CHECK(t.rows.size() == 12);
    const int run_col = t.column("run");
    CHECK(t.rows[0][run_col] == "1");
    CHECK(t.rows[1][run_col] == "2");
    CHECK(t.rows[2][run_col] == "3");
}

TEST_CASE("indicator csv mirrors the ranking") {
    std::vector<IndicatorCorrelation> rows = {{"x_b", 0.9, 120}, {"curvature", -0.5, 80}};
    testsupport::TempDir dir("ind_csv");
    const std::string path = dir.file("indicators.csv");
    report::write_indicator_csv(rows, path);
    csv::Table t = csv::read_file(path);
    CHECK(t.header == std::vector<std::string>{"indicator", "r", "n_obs"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"x_b", "0.9", "120"});
    CHECK(t.rows[1] == std::vector<std::string>{"curvature", "-0.5", "80"});
}

TEST_CASE("run config defaults cover every section") {
    testsupport::TempDir dir("config_min");
    const std::string path = dir.file("min.json");
    testsupport::write_text_file(path, "{}");
    config::RunConfig cfg = config::load_run_config(path);
    CHECK(cfg.sources.empty());
    CHECK(cfg.eval.window_len == 8);
    CHECK(cfg.eval.n_runs == 3);
    CHECK(cfg.eval.lag_max == 4);
    CHECK(cfg.eval.strict_context);
    CHECK(cfg.backend_kind == "none");
    CHECK(cfg.model_list.empty());
    CHECK(cfg.panel_path == "out/panel.json");
    CHECK(cfg.schema.excluded_counties == SchemaConfig::default_excluded_counties());
    CHECK(cfg.schema.state_name == "Pennsylvania");
    CHECK(cfg.stratification_window.first.week_ending ==
          std::chrono::sys_days{std::chrono::year{2020} / 3 / 1});
    CHECK(cfg.stratification_window.second.week_ending ==
          std::chrono::sys_days{std::chrono::year{2022} / 1 / 31});
}

TEST_CASE("run config parses a fully specified file") {
    testsupport::TempDir dir("config_full");
    const std::string path = dir.file("full.json");
    testsupport::write_text_file(path, R"({
      "data": {
        "sources": ["a.csv", "b.csv"],
        "daily": true,
        "week_end_day": "Saturday",
        "state_name": "Commonwealth",
        "excluded_counties": ["Nowhere"],
        "columns": [
          {"column": "county", "role": "county"},
          {"column": "date", "role": "date"},
          {"column": "hosp", "role": "y", "mode": "mean"},
          {"column": "searches", "role": "s_t", "mode": "sum"},
          {"column": "mobility", "role": "indicator:mobility"}
        ]
      },
      "stratification": {"start": "2020-05-01", "end": "2021-06-01"},
      "eval": {
        "window_len": 6, "n_runs": 2, "lag_max": 3,
        "strict_context": false, "threads": 2, "backoff_ms": 5,
        "period": {"start": "2020-06-01", "end": "2020-12-01"}
      },
      "models": ["lag1", "es", "hybrid_arx"],
      "backend": {
        "kind": "http",
        "endpoint_url": "https://example.test/v1/chat/completions",
        "model_name": "test-model",
        "api_key_env_var": "TEST_KEY",
        "timeout_ms": 1000,
        "max_concurrency": 2
      },
      "paths": {
        "panel": "x/panel.json",
        "records": "x/records.jsonl",
        "transcript": "x/t.jsonl",
        "output_dir": "x"
      }
    })");
    config::RunConfig cfg = config::load_run_config(path);
    REQUIRE(cfg.sources.size() == 2);
    CHECK(cfg.sources[1].path == "b.csv");
    CHECK(cfg.schema.daily);
    CHECK(cfg.schema.week.end_day == std::chrono::Saturday);
    CHECK(cfg.schema.state_name == "Commonwealth");
    CHECK(cfg.schema.excluded_counties == std::vector<std::string>{"Nowhere"});
    REQUIRE(cfg.schema.columns.size() == 5);
    CHECK(cfg.schema.columns[3].mode == AggregateMode::Sum);
    CHECK(cfg.schema.columns[4].role == "indicator:mobility");
    CHECK(cfg.eval.window_len == 6);
    CHECK(cfg.eval.n_runs == 2);
    CHECK_FALSE(cfg.eval.strict_context);
    CHECK(cfg.eval.backoff == std::chrono::milliseconds{5});
    REQUIRE(cfg.eval.eval_period.has_value());
    CHECK(format_week(cfg.eval.eval_period->first) == "2020-06-01");
    REQUIRE(cfg.model_list.size() == 3);
    CHECK(cfg.model_list[1] == models::ModelId::Holt);
    CHECK(cfg.model_list[2] == models::ModelId::HybridArx);
    CHECK(cfg.backend_kind == "http");
    CHECK(cfg.backend.model_name == "test-model");
    CHECK(cfg.backend.api_key_env_var == "TEST_KEY");
    CHECK(cfg.backend.timeout == std::chrono::milliseconds{1000});
    CHECK(cfg.backend.max_concurrency == 2);
    CHECK(cfg.panel_path == "x/panel.json");
    CHECK(cfg.records_path == "x/records.jsonl");
    CHECK(cfg.transcript_path == "x/t.jsonl");
    CHECK(cfg.output_dir == "x");
}

TEST_CASE("run config rejects malformed input with the offending key") {
    testsupport::TempDir dir("config_bad");
    auto expect_failure = [&](const char* name, const std::string& body,
                              const std::string& needle) {
        const std::string path = dir.file(name);
        testsupport::write_text_file(path, body);
        try {
            config::load_run_config(path);
            FAIL_CHECK("expected failure for ", name);
        } catch (const std::runtime_error& e) {
            const std::string what = e.what();
            CAPTURE(what);
            CHECK(what.find(needle) != std::string::npos);
        }
    };

    expect_failure("role.json",
                   R"({"data":{"columns":[{"column":"a","role":"bogus"}]}})", "bogus");
    expect_failure("mode.json",
                   R"({"data":{"columns":[{"column":"a","role":"y","mode":"median"}]}})",
                   "median");
    expect_failure("model.json", R"({"models":["quantum"]})", "quantum");
    expect_failure("weekday.json", R"({"data":{"week_end_day":"Caturday"}})", "Caturday");
    expect_failure("date.json", R"({"stratification":{"start":"soon","end":"2022-01-31"}})",
                   "soon");
    expect_failure("json.json", "{not json", "invalid JSON");

    CHECK_THROWS_AS(config::load_run_config(dir.file("missing.json")), std::runtime_error);
}

TEST_CASE("manifest round-trips and timestamps are ISO formatted") {
    config::RunManifest m;
    m.config_hash = "aaa";
    m.panel_fingerprint = "bbb";
    m.models_run = {"lag1", "es"};
    m.n_runs = 3;
    m.created_at = config::utc_timestamp_now();
    m.backend_kind = "none";
    m.transcript_path = "t.jsonl";
    m.records_path = "r.jsonl";

    testsupport::TempDir dir("manifest");
    const std::string path = dir.file("manifest.json");
    config::write_manifest(m, path);
    config::RunManifest back = config::read_manifest(path);
    CHECK(back.config_hash == m.config_hash);
    CHECK(back.panel_fingerprint == m.panel_fingerprint);
    CHECK(back.models_run == m.models_run);
    CHECK(back.n_runs == m.n_runs);
    CHECK(back.created_at == m.created_at);
    CHECK(back.backend_kind == m.backend_kind);

    // "YYYY-MM-DDTHH:MM:SSZ"
    REQUIRE(m.created_at.size() == 20);
    CHECK(m.created_at[4] == '-');
    CHECK(m.created_at[10] == 'T');
    CHECK(m.created_at[19] == 'Z');
}
