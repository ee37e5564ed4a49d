#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wardcast/context.hpp"
#include "wardcast/hybrid.hpp"
#include "wardcast/models.hpp"
#include "wardcast/panel.hpp"

namespace wardcast::eval {

struct EvalConfig {
    std::size_t window_len = 8;  // L
    int n_runs = 3;
    int lag_max = 4;
    // Target weeks to evaluate; unset means every week with a full lookback.
    std::optional<std::pair<WeekStamp, WeekStamp>> eval_period;
    bool strict_context = true;   // discard stage-1 triples missing any label
    std::chrono::milliseconds backoff{0};
    std::size_t threads = 0;  // 0 = hardware concurrency
};

/**
 * One forecast at one county-week for one run. pct_error is always
 * 100·(y_hat − y_true)/max(y_true, 1). Hybrid records carry the stage-1
 * exogenous values and flags.
 */
struct ForecastRecord {
    CountyId county;
    WeekStamp week;  // target week t+1
    models::ModelId model = models::ModelId::Lag1;
    int run = 1;
    double y_hat = 0.0;
    double y_true = 0.0;
    double pct_error = 0.0;
    bool fallback_used = false;
    std::optional<models::ExogNext> stage1_exog;
    std::optional<hybrid::Stage1Flags> stage1_flags;
};

double pct_error(double y_hat, double y_true);

struct RollingReport {
    std::vector<std::string> warnings;
    std::size_t windows_skipped = 0;  // missing y in window or target
    std::size_t llm_missing = 0;      // unusable reply after retry; record omitted
};

/**
 * Rolling-origin one-step-ahead evaluation of one model over every county.
 *
 * A window is valid when the L consecutive weeks before the target and the
 * target's y are all observed; the model sees only data dated at or before
 * the origin, with classical exogenous models receiving last-window
 * persistence values in place of unknown next-week inputs. Counties are
 * processed concurrently; output order is (county, week, run) regardless of
 * scheduling. Backend-driven models require `backend`.
 */
std::vector<ForecastRecord> rolling_origin(const Panel& panel, models::ModelId model,
                                           const EvalConfig& cfg,
                                           context::TextBackend* backend = nullptr,
                                           RollingReport* report = nullptr);

// Canonical record order: (model, county, week, run).
void sort_records(std::vector<ForecastRecord>& records);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  // population SD
};

// Mean and population SD of |pct_error| / pct_error over the given records.
MeanSd mape(std::span<const ForecastRecord> records);
MeanSd mpe(std::span<const ForecastRecord> records);

struct LeadLagResult {
    std::map<int, double> profile;  // lag -> correlation; lags with <3 pairs excluded
    int ell_star = 0;
    double rho_star = 0.0;
};

/**
 * Correlates week-over-week changes of predictions against actuals at
 * integer offsets in [-lag_max, lag_max]: rho(l) pairs the prediction change
 * at week t-l with the actual change at week t. Changes are formed only
 * between weeks exactly 7 days apart. ell_star maximizes rho; ties prefer
 * the lag closest to 0, then the negative one. Returns nullopt when no lag
 * has 3 overlapping pairs or every pairing is degenerate.
 */
std::optional<LeadLagResult> lead_lag(const std::vector<std::pair<WeekStamp, double>>& pred,
                                      const std::vector<std::pair<WeekStamp, double>>& actual,
                                      int lag_max);

struct CountyMetrics {
    CountyId county;
    models::ModelId model = models::ModelId::Lag1;
    double mape_mean = 0.0;
    double mape_sd = 0.0;
    double mpe_mean = 0.0;
    double mpe_sd = 0.0;
    std::size_t n_weeks = 0;
};

struct CountyLeadLag {
    CountyId county;
    models::ModelId model = models::ModelId::Lag1;
    double ell_star = 0.0;  // run-averaged, hence real-valued
    double rho_star = 0.0;
    std::map<int, double> profile;  // run-averaged per lag
};

// Per-point errors roll up within each run first; the per-run means and SDs
// are then averaged across runs into one row per (county, model).
std::vector<CountyMetrics> county_metrics(const std::vector<ForecastRecord>& records);

std::vector<CountyLeadLag> county_lead_lag(const std::vector<ForecastRecord>& records,
                                           int lag_max,
                                           std::vector<std::string>* warnings = nullptr);

enum class Stratum { Low, Mid, High, Overall };
enum class SummaryMetric { Mape, Mpe, EllStar, RhoStar };

std::string to_string(Stratum s);
std::string to_string(SummaryMetric m);

struct TertileSummary {
    Stratum stratum = Stratum::Low;
    models::ModelId model = models::ModelId::Lag1;
    SummaryMetric metric = SummaryMetric::Mape;
    double mean = 0.0;
    double sd = 0.0;  // population SD across counties
    std::size_t n_counties = 0;
};

/**
 * Cross-county mean ± population SD per tertile plus an Overall row per
 * metric. Lead–lag rows are never produced for Lag-1 (its profile peaks at
 * -1 by construction). Counties without a tertile are skipped with a
 * warning; empty strata are omitted.
 */
std::vector<TertileSummary> aggregate(const std::vector<CountyMetrics>& metrics,
                                      const std::vector<CountyLeadLag>& leadlag,
                                      const std::map<CountyId, CountyMeta>& tertiles,
                                      std::vector<std::string>* warnings = nullptr);

}  // namespace wardcast::eval
