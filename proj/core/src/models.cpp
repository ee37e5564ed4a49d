#include "wardcast/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "wardcast/ols.hpp"

namespace wardcast::models {

namespace {

double clip_nonnegative(double v) { return v < 0.0 ? 0.0 : v; }

void require_window(const History& h, std::size_t min_size, const char* op) {
    if (h.y.size() != h.weeks.size()) {
        throw std::invalid_argument(std::string(op) + ": history weeks/values length mismatch");
    }
    if (h.size() < min_size) {
        throw std::invalid_argument(std::string(op) + ": window too short");
    }
}

double holt_sse(std::span<const double> y, double alpha, double beta, double* out_level,
                double* out_trend) {
    double level = y[0];
    double trend = 0.0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        trend += y[i] - y[i - 1];
    }
    trend /= static_cast<double>(y.size() - 1);

    double sse = 0.0;
    for (std::size_t t = 1; t < y.size(); ++t) {
        const double pred = level + trend;
        const double err = y[t] - pred;
        sse += err * err;
        const double new_level = alpha * y[t] + (1.0 - alpha) * (level + trend);
        const double new_trend = beta * (new_level - level) + (1.0 - beta) * trend;
        level = new_level;
        trend = new_trend;
    }
    if (out_level != nullptr) *out_level = level;
    if (out_trend != nullptr) *out_trend = trend;
    return sse;
}

}  // namespace

std::string to_string(ModelId model) {
    switch (model) {
        case ModelId::Lag1: return "lag1";
        case ModelId::Ar1: return "ar1";
        case ModelId::Holt: return "es";
        case ModelId::Arx: return "arx";
        case ModelId::LinReg: return "linreg";
        case ModelId::LlmDirect: return "llm";
        case ModelId::HybridArx: return "hybrid_arx";
        case ModelId::HybridLinReg: return "hybrid_lr";
    }
    throw std::logic_error("unknown model id");
}

std::optional<ModelId> model_from_string(std::string_view name) {
    if (name == "lag1") return ModelId::Lag1;
    if (name == "ar1") return ModelId::Ar1;
    if (name == "es") return ModelId::Holt;
    if (name == "arx") return ModelId::Arx;
    if (name == "linreg") return ModelId::LinReg;
    if (name == "llm") return ModelId::LlmDirect;
    if (name == "hybrid_arx") return ModelId::HybridArx;
    if (name == "hybrid_lr") return ModelId::HybridLinReg;
    return std::nullopt;
}

bool model_needs_backend(ModelId model) {
    return model == ModelId::LlmDirect || model == ModelId::HybridArx ||
           model == ModelId::HybridLinReg;
}

std::string FitDiagnostics::to_json() const {
    nlohmann::json j;
    j["coefficients"] = coefficients;
    j["residual_sse"] = residual_sse;
    j["rank_deficient"] = rank_deficient;
    return j.dump();
}

Forecast forecast_lag1(const History& h) {
    require_window(h, 1, "forecast_lag1");
    return Forecast{clip_nonnegative(h.y.back()), ModelId::Lag1, false};
}

std::pair<Forecast, FitDiagnostics> fit_forecast_ar1(const History& h) {
    require_window(h, 2, "fit_forecast_ar1");

    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    rows.reserve(h.size() - 1);
    targets.reserve(h.size() - 1);
    for (std::size_t t = 1; t < h.size(); ++t) {
        rows.push_back({1.0, h.y[t - 1]});
        targets.push_back(h.y[t]);
    }

    const auto fit = ols::solve_least_squares(rows, targets);
    FitDiagnostics diag{fit.coefficients, fit.residual_sse, fit.rank_deficient};

    if (fit.rank_deficient) {
        Forecast fallback = forecast_lag1(h);
        fallback.model = ModelId::Ar1;
        fallback.fallback_used = true;
        return {fallback, diag};
    }

    const double raw = fit.coefficients[0] + fit.coefficients[1] * h.y.back();
    if (!std::isfinite(raw)) {
        Forecast fallback = forecast_lag1(h);
        fallback.model = ModelId::Ar1;
        fallback.fallback_used = true;
        return {fallback, diag};
    }
    return {Forecast{clip_nonnegative(raw), ModelId::Ar1, false}, diag};
}

HoltFit fit_holt_parameters(std::span<const double> y) {
    if (y.size() < 4) {
        throw std::invalid_argument("fit_holt_parameters: need at least 4 observations");
    }

    HoltFit best;
    best.sse = std::numeric_limits<double>::infinity();

    auto consider = [&](double alpha, double beta) {
        double level = 0.0;
        double trend = 0.0;
        const double sse = holt_sse(y, alpha, beta, &level, &trend);
        if (sse < best.sse) {
            best = HoltFit{alpha, beta, level, trend, sse};
        }
    };

    // Coarse pass, then one refinement pass around the winner. Scan order is
    // fixed (alpha outer ascending, beta inner ascending) with strict
    // improvement, so ties resolve to the earliest grid point.
    for (double alpha = 0.01; alpha < 1.0; alpha += 0.02) {
        for (double beta = 0.01; beta < 1.0; beta += 0.02) {
            consider(alpha, beta);
        }
    }

    const double alpha0 = best.alpha;
    const double beta0 = best.beta;
    for (int i = -10; i <= 10; ++i) {
        const double alpha = std::clamp(alpha0 + 0.002 * i, 0.001, 0.999);
        for (int k = -10; k <= 10; ++k) {
            const double beta = std::clamp(beta0 + 0.002 * k, 0.001, 0.999);
            consider(alpha, beta);
        }
    }
    return best;
}

Forecast fit_forecast_holt(const History& h) {
    require_window(h, 1, "fit_forecast_holt");
    if (h.size() < 4) {
        Forecast fallback = forecast_lag1(h);
        fallback.model = ModelId::Holt;
        fallback.fallback_used = true;
        return fallback;
    }

    const HoltFit fit = fit_holt_parameters(h.y);
    const double raw = fit.level + fit.trend;
    if (!std::isfinite(raw)) {
        Forecast fallback = forecast_lag1(h);
        fallback.model = ModelId::Holt;
        fallback.fallback_used = true;
        return fallback;
    }
    return Forecast{clip_nonnegative(raw), ModelId::Holt, false};
}

ExogNext persistence_exog(const ExogWindow& w) {
    auto last_observed = [](const std::vector<std::optional<double>>& col) {
        for (auto it = col.rbegin(); it != col.rend(); ++it) {
            if (it->has_value()) return **it;
        }
        return 0.0;
    };
    return ExogNext{last_observed(w.x_b), last_observed(w.x_v), last_observed(w.s_t)};
}

ExogWindow impute_window(ExogWindow w) {
    auto impute_column = [](std::vector<std::optional<double>>& col) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& cell : col) {
            if (cell.has_value()) {
                sum += *cell;
                ++n;
            }
        }
        const double fill = n == 0 ? 0.0 : sum / static_cast<double>(n);
        for (auto& cell : col) {
            if (!cell.has_value()) cell = fill;
        }
    };
    impute_column(w.x_b);
    impute_column(w.x_v);
    impute_column(w.s_t);
    return w;
}

namespace {

void require_exog(const History& h, const ExogWindow& w, const char* op) {
    if (w.size() != h.size() || w.x_b.size() != w.size() || w.x_v.size() != w.size() ||
        w.s_t.size() != w.size()) {
        throw std::invalid_argument(std::string(op) + ": exogenous window shape mismatch");
    }
}

}  // namespace

std::pair<Forecast, FitDiagnostics> fit_forecast_arx(const History& h, const ExogWindow& w,
                                                     const ExogNext& next) {
    require_window(h, 2, "fit_forecast_arx");
    require_exog(h, w, "fit_forecast_arx");

    const ExogWindow filled = impute_window(w);

    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    rows.reserve(h.size() - 1);
    targets.reserve(h.size() - 1);
    for (std::size_t t = 1; t < h.size(); ++t) {
        rows.push_back({1.0, h.y[t - 1], *filled.x_b[t], *filled.x_v[t], *filled.s_t[t]});
        targets.push_back(h.y[t]);
    }

    const auto fit = ols::solve_least_squares(rows, targets);
    FitDiagnostics diag{fit.coefficients, fit.residual_sse, fit.rank_deficient};

    const double raw = fit.coefficients[0] + fit.coefficients[1] * h.y.back() +
                       fit.coefficients[2] * next.x_b + fit.coefficients[3] * next.x_v +
                       fit.coefficients[4] * next.s_t;
    if (!std::isfinite(raw)) {
        auto [fallback, ar_diag] = fit_forecast_ar1(h);
        (void)ar_diag;
        fallback.model = ModelId::Arx;
        fallback.fallback_used = true;
        return {fallback, diag};
    }
    return {Forecast{clip_nonnegative(raw), ModelId::Arx, false}, diag};
}

std::pair<Forecast, FitDiagnostics> fit_forecast_linreg(const History& h, const ExogWindow& w,
                                                        const ExogNext& next) {
    require_window(h, 1, "fit_forecast_linreg");
    require_exog(h, w, "fit_forecast_linreg");

    const ExogWindow filled = impute_window(w);

    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    rows.reserve(h.size());
    targets.reserve(h.size());
    for (std::size_t t = 0; t < h.size(); ++t) {
        rows.push_back({1.0, *filled.x_b[t], *filled.x_v[t], *filled.s_t[t]});
        targets.push_back(h.y[t]);
    }

    const auto fit = ols::solve_least_squares(rows, targets);
    FitDiagnostics diag{fit.coefficients, fit.residual_sse, fit.rank_deficient};

    const double raw = fit.coefficients[0] + fit.coefficients[1] * next.x_b +
                       fit.coefficients[2] * next.x_v + fit.coefficients[3] * next.s_t;
    if (!std::isfinite(raw)) {
        Forecast fallback = forecast_lag1(h);
        fallback.model = ModelId::LinReg;
        fallback.fallback_used = true;
        return {fallback, diag};
    }
    return {Forecast{clip_nonnegative(raw), ModelId::LinReg, false}, diag};
}

}  // namespace wardcast::models
