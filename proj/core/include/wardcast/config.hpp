#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wardcast/context.hpp"
#include "wardcast/evaluate.hpp"
#include "wardcast/panel.hpp"

namespace wardcast::config {

/**
 * One structured file drives the whole pipeline: data schema, evaluation
 * window, model list, backend, and output paths. Every section is optional
 * and falls back to the defaults below, so a minimal config only names its
 * data sources and models.
 */
struct RunConfig {
    std::vector<SourceSpec> sources;
    SchemaConfig schema;
    std::pair<WeekStamp, WeekStamp> stratification_window = default_stratification_window();
    eval::EvalConfig eval;
    std::vector<models::ModelId> model_list;
    std::string backend_kind = "none";  // none | http | persistence | oracle | scripted
    context::BackendConfig backend;
    std::string script_path;  // scripted backend: JSON array of reply strings
    std::string panel_path = "out/panel.json";
    std::string records_path = "out/records.jsonl";
    std::string transcript_path = "out/transcript.jsonl";
    std::string output_dir = "out";

    static std::pair<WeekStamp, WeekStamp> default_stratification_window();
};

// Parses and validates a JSON run config; throws std::runtime_error with the
// offending key on any malformed or unknown value.
RunConfig load_run_config(const std::string& path);

}  // namespace wardcast::config
