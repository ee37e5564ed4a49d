#pragma once

#include <string>
#include <vector>

namespace wardcast::config {

/**
 * Provenance stamp for one evaluation run. config_hash and
 * panel_fingerprint are SHA-256 digests of the inputs; with the same
 * manifest and transcript, deterministic models reproduce their outputs
 * byte for byte.
 */
struct RunManifest {
    std::string config_hash;
    std::string panel_fingerprint;
    std::vector<std::string> models_run;
    int n_runs = 1;
    std::string created_at;  // ISO-8601 UTC
    std::string backend_kind;
    std::string transcript_path;
    std::string records_path;
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest read_manifest(const std::string& path);

// Current time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp_now();

}  // namespace wardcast::config
