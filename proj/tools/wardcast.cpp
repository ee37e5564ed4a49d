// Command-line front end: ingest CSV snapshots into a panel artifact, rank
// indicators, run rolling-origin evaluations, and render report tables.
//
// Exit codes: 0 = success (data-quality issues are warnings), 1 = unusable
// input data, 2 = configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wardcast/config.hpp"
#include "wardcast/context.hpp"
#include "wardcast/evaluate.hpp"
#include "wardcast/manifest.hpp"
#include "wardcast/panel.hpp"
#include "wardcast/report.hpp"
#include "wardcast/sha256.hpp"
#include "wardcast/transcript.hpp"

namespace {

namespace fs = std::filesystem;
using namespace wardcast;

void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) {
        fs::create_directories(parent);
    }
}

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string part =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!part.empty()) parts.push_back(part);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return parts;
}

struct CommonArgs {
    std::string config_path;
};

struct EvaluateArgs {
    std::string models;   // comma-separated override
    std::string backend;  // kind override
    int runs = 0;         // 0 = keep config value
    int seed = 0;         // accepted for bookkeeping; the pipeline is deterministic
    std::string out_dir;
};

Panel load_panel_artifact(const config::RunConfig& cfg) {
    if (!fs::exists(cfg.panel_path)) {
        throw std::runtime_error("panel artifact " + cfg.panel_path +
                                 " not found; run `wardcast ingest` first");
    }
    return read_panel_json(cfg.panel_path);
}

int cmd_ingest(const CommonArgs& common) {
    const config::RunConfig cfg = config::load_run_config(common.config_path);
    if (cfg.sources.empty()) {
        throw std::runtime_error("config " + common.config_path + ": data.sources is empty");
    }

    std::string y_column;
    for (const ColumnSpec& col : cfg.schema.columns) {
        if (col.role == "y") y_column = col.column;
    }
    if (y_column.empty()) {
        throw std::runtime_error("config " + common.config_path +
                                 ": no column mapped to role y");
    }

    auto [panel, report] = load_panel(cfg.sources, cfg.schema);

    bool any_y = false;
    for (const PanelRow& row : panel.rows) {
        if (row.y) {
            any_y = true;
            break;
        }
    }
    if (!any_y) {
        throw std::runtime_error("column '" + y_column +
                                 "' (role y) produced no values in any source");
    }

    std::vector<std::string> fallback_warnings;
    for (const std::string& indicator : {"x_b", "x_v", "s_t"}) {
        panel = apply_state_fallback(std::move(panel), indicator, &fallback_warnings);
    }

    ensure_parent_dir(cfg.panel_path);
    write_panel_json(panel, cfg.panel_path);

    std::size_t substituted = 0;
    std::map<std::string, std::size_t> observed;
    std::size_t county_rows = 0;
    for (const PanelRow& row : panel.rows) {
        if (row.county.state_level) continue;
        ++county_rows;
        substituted += row.state_filled.size();
        if (row.y) ++observed["y"];
        if (row.x_b) ++observed["x_b"];
        if (row.x_v) ++observed["x_v"];
        if (row.s_t) ++observed["s_t"];
        for (const auto& [name, value] : row.extra_indicators) {
            if (value) ++observed[name];
        }
    }

    std::cout << "panel: " << cfg.panel_path << "\n"
              << "counties: " << panel.counties.size() << " (state series "
              << (panel.state_county() != nullptr ? "present" : "absent") << ")\n"
              << "rows: " << panel.rows.size() << "\n"
              << "excluded counties seen: " << report.excluded_seen.size();
    for (const std::string& name : report.excluded_seen) std::cout << " " << name;
    std::cout << "\n"
              << "rows dropped (excluded): " << report.rows_dropped_excluded << "\n"
              << "unparseable cells: " << report.cells_unparseable << "\n"
              << "gap rows inserted: " << report.gap_rows_inserted << "\n"
              << "state-fallback substitutions: " << substituted << "\n";
    for (const auto& [name, count] : observed) {
        std::cout << "coverage " << name << ": " << count << "/" << county_rows << "\n";
    }
    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
    for (const std::string& w : fallback_warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_correlate(const CommonArgs& common, const std::string& output_override) {
    const config::RunConfig cfg = config::load_run_config(common.config_path);
    const Panel panel = load_panel_artifact(cfg);

    const auto ranking = rank_indicators(panel);
    const std::string out_path = output_override.empty()
                                     ? (fs::path(cfg.output_dir) / "indicators.csv").string()
                                     : output_override;
    ensure_parent_dir(out_path);
    report::write_indicator_csv(ranking, out_path);

    std::cout << "indicators ranked: " << ranking.size() << " -> " << out_path << "\n";
    for (const IndicatorCorrelation& row : ranking) {
        std::cout << "  " << row.indicator << " r=" << context::format_number(row.r)
                  << " n=" << row.n_obs << "\n";
    }
    return 0;
}

std::shared_ptr<context::TextBackend> make_backend(const config::RunConfig& cfg,
                                                   const std::shared_ptr<const Panel>& panel) {
    const std::string& kind = cfg.backend_kind;
    if (kind == "none") return nullptr;
    if (kind == "http") return std::make_shared<context::HttpBackend>(cfg.backend);
    if (kind == "persistence") return std::make_shared<context::PersistenceBackend>();
    if (kind == "oracle") return std::make_shared<context::OracleBackend>(panel);
    if (kind == "scripted") {
        if (cfg.script_path.empty()) {
            throw std::runtime_error("backend.script_path is required for the scripted backend");
        }
        std::ifstream in(cfg.script_path);
        if (!in) {
            throw std::runtime_error("cannot open script file " + cfg.script_path);
        }
        nlohmann::json j;
        in >> j;
        std::vector<context::BackendReply> replies;
        for (const auto& reply : j) {
            replies.push_back(context::ScriptedBackend::text(reply.get<std::string>()));
        }
        return std::make_shared<context::ScriptedBackend>(std::move(replies));
    }
    throw std::runtime_error("unknown backend kind '" + kind + "'");
}

int cmd_evaluate(const CommonArgs& common, const EvaluateArgs& args) {
    config::RunConfig cfg = config::load_run_config(common.config_path);
    if (!args.models.empty()) {
        cfg.model_list.clear();
        for (const std::string& name : split_csv_list(args.models)) {
            const auto model = models::model_from_string(name);
            if (!model) {
                throw std::runtime_error("unknown model '" + name + "'");
            }
            cfg.model_list.push_back(*model);
        }
    }
    if (!args.backend.empty()) cfg.backend_kind = args.backend;
    if (args.runs > 0) cfg.eval.n_runs = args.runs;
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    if (cfg.model_list.empty()) {
        throw std::runtime_error("no models selected (config `models` or --models)");
    }

    auto panel = std::make_shared<const Panel>(load_panel_artifact(cfg));

    std::shared_ptr<context::TextBackend> backend = make_backend(cfg, panel);
    std::shared_ptr<context::TranscriptCache> transcript;
    bool backend_required = false;
    for (const models::ModelId model : cfg.model_list) {
        backend_required = backend_required || models::model_needs_backend(model);
    }
    if (backend_required && !backend) {
        throw std::runtime_error(
            "selected models need a backend; set backend.kind or --backend");
    }
    if (backend) {
        ensure_parent_dir(cfg.transcript_path);
        transcript = std::make_shared<context::TranscriptCache>(cfg.transcript_path);
        const std::string cache_key =
            cfg.backend_kind == "http" ? cfg.backend.model_name : cfg.backend_kind;
        backend = std::make_shared<context::CachingBackend>(backend, transcript, cache_key);
    }

    const auto tertiles = assign_tertiles(*panel, cfg.stratification_window);

    std::vector<eval::ForecastRecord> records;
    eval::RollingReport rolling;
    for (const models::ModelId model : cfg.model_list) {
        auto model_records =
            eval::rolling_origin(*panel, model, cfg.eval, backend.get(), &rolling);
        records.insert(records.end(), std::make_move_iterator(model_records.begin()),
                       std::make_move_iterator(model_records.end()));
    }
    eval::sort_records(records);

    fs::create_directories(cfg.output_dir);
    ensure_parent_dir(cfg.records_path);
    report::write_records_jsonl(records, cfg.records_path);

    const auto metrics = eval::county_metrics(records);
    std::vector<std::string> agg_warnings;
    const auto leadlag = eval::county_lead_lag(records, cfg.eval.lag_max, &agg_warnings);
    const auto summary = eval::aggregate(metrics, leadlag, tertiles, &agg_warnings);

    const fs::path out_dir(cfg.output_dir);
    report::write_summary_csv(summary, (out_dir / "summary.csv").string());
    report::write_county_metrics_csv(metrics, tertiles,
                                     (out_dir / "per_county_metrics.csv").string());
    report::write_county_leadlag_csv(leadlag, tertiles,
                                     (out_dir / "per_county_leadlag.csv").string());
    report::write_run_level_csv(records, (out_dir / "run_level.csv").string());

    config::RunManifest manifest;
    manifest.config_hash = file_sha256(common.config_path);
    manifest.panel_fingerprint = file_sha256(cfg.panel_path);
    for (const models::ModelId model : cfg.model_list) {
        manifest.models_run.push_back(models::to_string(model));
    }
    manifest.n_runs = cfg.eval.n_runs;
    manifest.created_at = config::utc_timestamp_now();
    manifest.backend_kind = cfg.backend_kind;
    manifest.transcript_path = backend ? cfg.transcript_path : "";
    manifest.records_path = cfg.records_path;
    config::write_manifest(manifest, (out_dir / "manifest.json").string());

    std::cout << "records: " << records.size() << " -> " << cfg.records_path << "\n"
              << "summary rows: " << summary.size() << " -> "
              << (out_dir / "summary.csv").string() << "\n"
              << "manifest: " << (out_dir / "manifest.json").string() << "\n";
    if (rolling.windows_skipped > 0) {
        std::cout << "windows skipped (missing y): " << rolling.windows_skipped << "\n";
    }
    if (rolling.llm_missing > 0) {
        std::cout << "unusable backend replies (records omitted): " << rolling.llm_missing
                  << "\n";
    }
    (void)args.seed;
    for (const std::string& w : rolling.warnings) std::cerr << "warning: " << w << "\n";
    for (const std::string& w : agg_warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_report(const CommonArgs& common, const std::string& records_override,
               const std::string& out_dir_override) {
    config::RunConfig cfg = config::load_run_config(common.config_path);
    if (!records_override.empty()) cfg.records_path = records_override;
    if (!out_dir_override.empty()) cfg.output_dir = out_dir_override;

    const auto records = report::read_records_jsonl(cfg.records_path);
    if (records.empty()) {
        std::cerr << "error: no records in " << cfg.records_path << "\n";
        return 1;
    }

    const Panel panel = load_panel_artifact(cfg);
    const auto tertiles = assign_tertiles(panel, cfg.stratification_window);

    const auto metrics = eval::county_metrics(records);
    std::vector<std::string> warnings;
    const auto leadlag = eval::county_lead_lag(records, cfg.eval.lag_max, &warnings);
    const auto summary = eval::aggregate(metrics, leadlag, tertiles, &warnings);

    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    report::write_summary_csv(summary, (out_dir / "summary.csv").string());
    report::write_county_metrics_csv(metrics, tertiles,
                                     (out_dir / "per_county_metrics.csv").string());
    report::write_county_leadlag_csv(leadlag, tertiles,
                                     (out_dir / "per_county_leadlag.csv").string());
    report::write_run_level_csv(records, (out_dir / "run_level.csv").string());
    report::write_indicator_csv(rank_indicators(panel),
                                (out_dir / "indicators.csv").string());

    std::cout << "records: " << records.size() << "\n"
              << "summary rows: " << summary.size() << " -> "
              << (out_dir / "summary.csv").string() << "\n";
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weekly county hospitalization forecasting toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    EvaluateArgs eval_args;
    std::string correlate_output;
    std::string report_records;
    std::string report_out_dir;

    CLI::App* ingest = app.add_subcommand("ingest", "Build the panel artifact from CSV sources");
    ingest->add_option("--config", common.config_path, "Run config file")->required();

    CLI::App* correlate =
        app.add_subcommand("correlate", "Rank indicator correlations against y");
    correlate->add_option("--config", common.config_path, "Run config file")->required();
    correlate->add_option("--output", correlate_output, "Output CSV path");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Run rolling-origin evaluation");
    evaluate->add_option("--config", common.config_path, "Run config file")->required();
    evaluate->add_option("--models", eval_args.models, "Comma-separated model list override");
    evaluate->add_option("--backend", eval_args.backend,
                         "Backend override: none|http|persistence|oracle|scripted");
    evaluate->add_option("--runs", eval_args.runs, "Number of repeated runs override");
    evaluate->add_option("--seed", eval_args.seed,
                         "Recorded for bookkeeping; the pipeline is deterministic");
    evaluate->add_option("--out-dir", eval_args.out_dir, "Output directory override");

    CLI::App* report_cmd = app.add_subcommand("report", "Render tables from a records file");
    report_cmd->add_option("--config", common.config_path, "Run config file")->required();
    report_cmd->add_option("--records", report_records, "Records JSONL path override");
    report_cmd->add_option("--out-dir", report_out_dir, "Output directory override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(common);
        if (correlate->parsed()) return cmd_correlate(common, correlate_output);
        if (evaluate->parsed()) return cmd_evaluate(common, eval_args);
        if (report_cmd->parsed()) return cmd_report(common, report_records, report_out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
