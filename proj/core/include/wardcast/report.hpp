#pragma once

#include <map>
#include <string>
#include <vector>

#include "wardcast/evaluate.hpp"
#include "wardcast/panel.hpp"

namespace wardcast::report {

// One JSON object per line, records in their given order. Numbers use the
// shortest round-trip rendering, so rewriting unmodified records is
// byte-stable.
void write_records_jsonl(const std::vector<eval::ForecastRecord>& records,
                         const std::string& path);
std::vector<eval::ForecastRecord> read_records_jsonl(const std::string& path);

// model,metric,stratum,mean,sd,n_counties
void write_summary_csv(const std::vector<eval::TertileSummary>& rows, const std::string& path);

// county,tertile,model,mape_mean,mape_sd,mpe_mean,mpe_sd,n_weeks
void write_county_metrics_csv(const std::vector<eval::CountyMetrics>& rows,
                              const std::map<CountyId, CountyMeta>& tertiles,
                              const std::string& path);

// county,tertile,model,ell_star,rho_star
void write_county_leadlag_csv(const std::vector<eval::CountyLeadLag>& rows,
                              const std::map<CountyId, CountyMeta>& tertiles,
                              const std::string& path);

// Per-run county metrics before run averaging:
// model,county,run,mape_mean,mape_sd,mpe_mean,mpe_sd,n_weeks
void write_run_level_csv(const std::vector<eval::ForecastRecord>& records,
                         const std::string& path);

// indicator,r,n_obs — the plot-data artifact for the indicator ranking.
void write_indicator_csv(const std::vector<IndicatorCorrelation>& rows, const std::string& path);

}  // namespace wardcast::report
