#pragma once

#include <chrono>
#include <string>

#include "wardcast/context.hpp"
#include "wardcast/models.hpp"

namespace wardcast::hybrid {

enum class Downstream { Arx, LinReg };

/**
 * Two-stage pipeline configuration. Stage 1 asks the backend for next-week
 * context values; stage 2 hands them to the downstream regression. In strict
 * mode (the default) a reply missing any of the three labels discards the
 * whole triple and every component falls back to persistence; otherwise only
 * the missing components fall back.
 */
struct HybridConfig {
    Downstream downstream = Downstream::Arx;
    context::TextBackend* backend = nullptr;
    int run_id = 1;
    bool strict = true;
    std::string geography;
    std::chrono::milliseconds backoff{0};
};

struct Stage1Flags {
    bool x_b_fallback = false;
    bool x_v_fallback = false;
    bool s_t_fallback = false;
    bool retried = false;
    bool transport_failed = false;

    bool any_fallback() const { return x_b_fallback || x_v_fallback || s_t_fallback; }
};

struct HybridOutcome {
    models::Forecast forecast;
    models::FitDiagnostics diagnostics;
    models::ExogNext exog;  // the values stage 2 actually received
    Stage1Flags flags;
    std::string raw_reply;  // last stage-1 response text
};

/**
 * Runs stage 1 (ContextTriple prompt, query with retry, parse) and stage 2
 * (ARX or linear regression at the predicted exogenous point). Stage 2 sees
 * only the window plus the three ExogNext components, so nothing else about
 * the next week can leak into the forecast. Deterministic given the window,
 * the backend's replies, and run_id.
 */
HybridOutcome hybrid_forecast(const models::History& h, const models::ExogWindow& w,
                              const HybridConfig& cfg);

}  // namespace wardcast::hybrid
