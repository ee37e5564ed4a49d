#include "wardcast/hybrid.hpp"

#include <stdexcept>

namespace wardcast::hybrid {

HybridOutcome hybrid_forecast(const models::History& h, const models::ExogWindow& w,
                              const HybridConfig& cfg) {
    if (cfg.backend == nullptr) {
        throw std::invalid_argument("hybrid_forecast: backend is required");
    }
    if (cfg.run_id < 1) {
        throw std::invalid_argument("hybrid_forecast: run_id must be positive");
    }
    if (w.size() != h.size() || h.size() == 0) {
        throw std::invalid_argument("hybrid_forecast: history and window must align");
    }

    const WeekStamp prediction = h.weeks.back().next();
    const std::string prompt =
        context::build_prompt(context::make_context_spec(cfg.geography, h, w, prediction));

    const context::QueryResult q = context::query_with_retry(
        *cfg.backend, prompt, cfg.run_id,
        [](const std::string& text) { return context::parse_context(text).complete; },
        cfg.backoff);

    context::ParsedContext parsed;
    if (!q.transport_failed) {
        parsed = context::parse_context(q.raw);
    }

    HybridOutcome out;
    out.flags.retried = q.retried;
    out.flags.transport_failed = q.transport_failed;
    out.raw_reply = q.raw;

    const models::ExogNext fallback = models::persistence_exog(w);
    if (cfg.strict && !parsed.complete) {
        out.exog = fallback;
        out.flags.x_b_fallback = true;
        out.flags.x_v_fallback = true;
        out.flags.s_t_fallback = true;
    } else {
        out.flags.x_b_fallback = !parsed.x_b.has_value();
        out.flags.x_v_fallback = !parsed.x_v.has_value();
        out.flags.s_t_fallback = !parsed.s_t.has_value();
        out.exog.x_b = parsed.x_b.value_or(fallback.x_b);
        out.exog.x_v = parsed.x_v.value_or(fallback.x_v);
        out.exog.s_t = parsed.s_t.value_or(fallback.s_t);
    }

    auto [forecast, diagnostics] = cfg.downstream == Downstream::Arx
                                       ? models::fit_forecast_arx(h, w, out.exog)
                                       : models::fit_forecast_linreg(h, w, out.exog);
    forecast.model = cfg.downstream == Downstream::Arx ? models::ModelId::HybridArx
                                                       : models::ModelId::HybridLinReg;
    out.forecast = forecast;
    out.diagnostics = std::move(diagnostics);
    return out;
}

}  // namespace wardcast::hybrid
