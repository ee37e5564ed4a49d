#include "wardcast/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace wardcast::config {

std::string utc_timestamp_now() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["config_hash"] = manifest.config_hash;
    j["panel_fingerprint"] = manifest.panel_fingerprint;
    j["models_run"] = manifest.models_run;
    j["n_runs"] = manifest.n_runs;
    j["created_at"] = manifest.created_at;
    j["backend_kind"] = manifest.backend_kind;
    j["transcript_path"] = manifest.transcript_path;
    j["records_path"] = manifest.records_path;

    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_manifest: cannot open " + path);
    }
    out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_manifest: cannot open " + path);
    }
    nlohmann::json j;
    in >> j;

    RunManifest m;
    m.config_hash = j.value("config_hash", std::string{});
    m.panel_fingerprint = j.value("panel_fingerprint", std::string{});
    for (const auto& name : j.value("models_run", nlohmann::json::array())) {
        m.models_run.push_back(name.get<std::string>());
    }
    m.n_runs = j.value("n_runs", 1);
    m.created_at = j.value("created_at", std::string{});
    m.backend_kind = j.value("backend_kind", std::string{});
    m.transcript_path = j.value("transcript_path", std::string{});
    m.records_path = j.value("records_path", std::string{});
    return m;
}

}  // namespace wardcast::config
