#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wardcast/calendar.hpp"

namespace wardcast::models {

enum class ModelId {
    Lag1,
    Ar1,
    Holt,
    Arx,
    LinReg,
    LlmDirect,
    HybridArx,
    HybridLinReg,
};

std::string to_string(ModelId model);
std::optional<ModelId> model_from_string(std::string_view name);
bool model_needs_backend(ModelId model);

/**
 * Rolling window of target observations, most recent last.
 * Weeks are consecutive; the harness only builds fully observed windows.
 */
struct History {
    std::vector<WeekStamp> weeks;
    std::vector<double> y;

    std::size_t size() const { return y.size(); }
};

// Exogenous columns aligned 1:1 with a History window. Cells may be missing;
// impute_window resolves them before any fit.
struct ExogWindow {
    std::vector<WeekStamp> weeks;
    std::vector<std::optional<double>> x_b;  // adult ICU beds, weekly mean
    std::vector<std::optional<double>> x_v;  // patients on ventilators, weekly mean
    std::vector<std::optional<double>> s_t;  // anosmia/ageusia search volume, weekly sum

    std::size_t size() const { return weeks.size(); }
};

// Next-week exogenous values, observed or predicted.
struct ExogNext {
    double x_b = 0.0;
    double x_v = 0.0;
    double s_t = 0.0;
};

// Carries each column's last observed window value forward (0 when a column
// was never observed). The leak-free stand-in for unknown next-week values.
ExogNext persistence_exog(const ExogWindow& w);

struct Forecast {
    double value = 0.0;
    ModelId model = ModelId::Lag1;
    bool fallback_used = false;
};

struct FitDiagnostics {
    std::vector<double> coefficients;  // intercept first
    double residual_sse = 0.0;
    bool rank_deficient = false;

    std::string to_json() const;
};

// Persistence: next week equals the most recent observation.
Forecast forecast_lag1(const History& h);

/**
 * First-order autoregression with intercept, fitted by least squares over
 * the window's lagged pairs. A constant window makes the design
 * rank-deficient; the forecast then falls back to Lag-1.
 */
std::pair<Forecast, FitDiagnostics> fit_forecast_ar1(const History& h);

/**
 * Holt's linear trend (additive level + trend, no seasonality).
 *
 * Smoothing weights are chosen to minimize in-window one-step squared error
 * on a coarse (alpha, beta) grid followed by one local refinement pass, so
 * fits are reproducible across platforms. Windows shorter than 4 fall back
 * to Lag-1.
 */
Forecast fit_forecast_holt(const History& h);

// Column-wise mean imputation within the window; columns with no observed
// cells become zero. Output has no missing cells and the call is idempotent.
ExogWindow impute_window(ExogWindow w);

/**
 * AR(1) augmented with the three exogenous columns: regress y_t on
 * [1, y_{t-1}, x_b_t, x_v_t, s_t_t] over the window, then evaluate at
 * (last y, next-week exogenous). Missing exogenous cells are imputed first.
 * Rank-deficient designs take the minimum-norm solution; a non-finite
 * result falls back to AR(1), then Lag-1.
 */
std::pair<Forecast, FitDiagnostics> fit_forecast_arx(const History& h, const ExogWindow& w,
                                                     const ExogNext& next);

// Plain regression of y_t on [1, x_b_t, x_v_t, s_t_t] (no lag term),
// evaluated at the next-week exogenous values.
std::pair<Forecast, FitDiagnostics> fit_forecast_linreg(const History& h, const ExogWindow& w,
                                                        const ExogNext& next);

// Exposed for tests: the optimized smoothing state behind fit_forecast_holt.
struct HoltFit {
    double alpha = 0.0;
    double beta = 0.0;
    double level = 0.0;
    double trend = 0.0;
    double sse = 0.0;
};

HoltFit fit_holt_parameters(std::span<const double> y);

}  // namespace wardcast::models
