// Microbenchmarks for the hot paths: the Holt grid search, the least-squares
// fits behind ARX, the full rolling evaluation loop, and lead-lag profiling.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "wardcast/calendar.hpp"
#include "wardcast/evaluate.hpp"
#include "wardcast/models.hpp"
#include "wardcast/panel.hpp"

namespace {

using namespace wardcast;

WeekStamp week_at(int i) {
    using namespace std::chrono;
    return WeekStamp{sys_days{2020y / 4 / 5} + days{7 * i}};
}

std::pair<models::History, models::ExogWindow> random_window(std::mt19937_64& rng,
                                                             std::size_t len) {
    std::uniform_real_distribution<double> y_d(1.0, 60.0);
    std::uniform_real_distribution<double> x_d(0.0, 30.0);
    models::History h;
    models::ExogWindow w;
    for (std::size_t t = 0; t < len; ++t) {
        h.weeks.push_back(week_at(static_cast<int>(t)));
        h.y.push_back(y_d(rng));
        w.weeks.push_back(h.weeks.back());
        w.x_b.push_back(x_d(rng));
        w.x_v.push_back(x_d(rng));
        w.s_t.push_back(x_d(rng));
    }
    return {std::move(h), std::move(w)};
}

Panel synthetic_panel(int n_counties, int n_weeks) {
    std::vector<PanelRow> rows;
    for (int c = 0; c < n_counties; ++c) {
        for (int t = 0; t < n_weeks; ++t) {
            PanelRow row;
            row.county.name = "County " + std::to_string(c);
            row.week = week_at(t);
            row.y = std::max(0.0, 8.0 + 2.0 * c + 3.0 * std::sin(0.3 * t + 0.1 * c));
            row.x_b = 15.0 + c + 0.2 * t;
            row.x_v = 4.0 + 0.5 * std::sin(0.2 * t);
            row.s_t = 12.0 + 3.0 * std::sin(0.3 * t);
            rows.push_back(std::move(row));
        }
    }
    return make_panel(std::move(rows));
}

void BM_HoltFit(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto [h, w] = random_window(rng, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(models::fit_forecast_holt(h));
    }
}
BENCHMARK(BM_HoltFit);

void BM_ArxFit(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto [h, w] = random_window(rng, 8);
    const models::ExogNext next = models::persistence_exog(w);
    for (auto _ : state) {
        benchmark::DoNotOptimize(models::fit_forecast_arx(h, w, next));
    }
}
BENCHMARK(BM_ArxFit);

void BM_RollingOrigin(benchmark::State& state) {
    const Panel panel = synthetic_panel(static_cast<int>(state.range(0)), 92);
    eval::EvalConfig cfg;
    cfg.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            eval::rolling_origin(panel, models::ModelId::Arx, cfg, nullptr, nullptr));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RollingOrigin)->Arg(4)->Arg(16)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_LeadLag(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> step(0.0, 2.0);
    std::vector<std::pair<WeekStamp, double>> pred;
    std::vector<std::pair<WeekStamp, double>> actual;
    double y = 25.0;
    for (int t = 0; t < 100; ++t) {
        if (t > 0) pred.emplace_back(week_at(t), y);
        y = std::max(0.0, y + step(rng));
        actual.emplace_back(week_at(t), y);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval::lead_lag(pred, actual, 4));
    }
}
BENCHMARK(BM_LeadLag);

}  // namespace

BENCHMARK_MAIN();
