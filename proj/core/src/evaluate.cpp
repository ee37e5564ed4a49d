#include "wardcast/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "wardcast/stats.hpp"

namespace wardcast::eval {

double pct_error(double y_hat, double y_true) {
    return 100.0 * (y_hat - y_true) / std::max(y_true, 1.0);
}

namespace {

void validate(const EvalConfig& cfg) {
    if (cfg.window_len < 2) {
        throw std::invalid_argument("EvalConfig: window_len must be at least 2");
    }
    if (cfg.n_runs < 1) {
        throw std::invalid_argument("EvalConfig: n_runs must be at least 1");
    }
    if (cfg.lag_max < 1) {
        throw std::invalid_argument("EvalConfig: lag_max must be at least 1");
    }
}

struct CountyOutput {
    std::vector<ForecastRecord> records;
    std::vector<std::string> warnings;
    std::size_t windows_skipped = 0;
    std::size_t llm_missing = 0;
};

CountyOutput evaluate_county(const Panel& panel, const CountyId& county, models::ModelId model,
                             const EvalConfig& cfg, context::TextBackend* backend) {
    CountyOutput out;
    const auto rows = panel.county_rows(county.name);
    const std::size_t L = cfg.window_len;
    bool any_valid = false;

    for (std::size_t i = L; i < rows.size(); ++i) {
        const PanelRow& target = rows[i];
        if (cfg.eval_period && (target.week < cfg.eval_period->first ||
                                target.week > cfg.eval_period->second)) {
            continue;
        }

        bool observed = target.y.has_value();
        for (std::size_t k = i - L; observed && k < i; ++k) {
            observed = rows[k].y.has_value();
        }
        if (!observed) {
            ++out.windows_skipped;
            continue;
        }
        any_valid = true;

        models::History h;
        models::ExogWindow w;
        h.weeks.reserve(L);
        h.y.reserve(L);
        w.weeks.reserve(L);
        for (std::size_t k = i - L; k < i; ++k) {
            h.weeks.push_back(rows[k].week);
            h.y.push_back(*rows[k].y);
            w.weeks.push_back(rows[k].week);
            w.x_b.push_back(rows[k].x_b);
            w.x_v.push_back(rows[k].x_v);
            w.s_t.push_back(rows[k].s_t);
        }

        // Deterministic models produce identical records for every run, so
        // the fit happens once and is replicated below.
        std::optional<models::Forecast> fixed;
        switch (model) {
            case models::ModelId::Lag1:
                fixed = models::forecast_lag1(h);
                break;
            case models::ModelId::Ar1:
                fixed = models::fit_forecast_ar1(h).first;
                break;
            case models::ModelId::Holt:
                fixed = models::fit_forecast_holt(h);
                break;
            case models::ModelId::Arx:
                fixed = models::fit_forecast_arx(h, w, models::persistence_exog(w)).first;
                break;
            case models::ModelId::LinReg:
                fixed = models::fit_forecast_linreg(h, w, models::persistence_exog(w)).first;
                break;
            default:
                break;
        }

        for (int run = 1; run <= cfg.n_runs; ++run) {
            ForecastRecord rec;
            rec.county = county;
            rec.week = target.week;
            rec.model = model;
            rec.run = run;
            rec.y_true = *target.y;

            switch (model) {
                case models::ModelId::Lag1:
                case models::ModelId::Ar1:
                case models::ModelId::Holt:
                case models::ModelId::Arx:
                case models::ModelId::LinReg:
                    rec.y_hat = fixed->value;
                    rec.fallback_used = fixed->fallback_used;
                    break;
                case models::ModelId::LlmDirect: {
                    const std::string prompt = context::build_prompt(
                        context::make_univariate_spec(county.name, h, target.week));
                    const auto q = context::query_with_retry(
                        *backend, prompt, run,
                        [](const std::string& t) {
                            return context::parse_y(t).value.has_value();
                        },
                        cfg.backoff);
                    const context::ParsedY parsed =
                        q.transport_failed ? context::ParsedY{} : context::parse_y(q.raw);
                    if (!parsed.value) {
                        ++out.llm_missing;
                        out.warnings.push_back(county.name + " " + format_week(target.week) +
                                               " run " + std::to_string(run) +
                                               ": no usable reply; record omitted");
                        continue;
                    }
                    rec.y_hat = *parsed.value;
                    break;
                }
                case models::ModelId::HybridArx:
                case models::ModelId::HybridLinReg: {
                    hybrid::HybridConfig hc;
                    hc.downstream = model == models::ModelId::HybridArx
                                        ? hybrid::Downstream::Arx
                                        : hybrid::Downstream::LinReg;
                    hc.backend = backend;
                    hc.run_id = run;
                    hc.strict = cfg.strict_context;
                    hc.geography = county.name;
                    hc.backoff = cfg.backoff;
                    const auto o = hybrid::hybrid_forecast(h, w, hc);
                    rec.y_hat = o.forecast.value;
                    rec.fallback_used = o.forecast.fallback_used;
                    rec.stage1_exog = o.exog;
                    rec.stage1_flags = o.flags;
                    break;
                }
            }

            rec.pct_error = pct_error(rec.y_hat, rec.y_true);
            out.records.push_back(std::move(rec));
        }
    }

    if (!any_valid) {
        out.warnings.push_back(county.name + ": no valid windows");
    } else if (out.windows_skipped > 0) {
        out.warnings.push_back(county.name + ": skipped " +
                               std::to_string(out.windows_skipped) +
                               " window(s) with unobserved y");
    }
    return out;
}

}  // namespace

std::vector<ForecastRecord> rolling_origin(const Panel& panel, models::ModelId model,
                                           const EvalConfig& cfg,
                                           context::TextBackend* backend,
                                           RollingReport* report) {
    validate(cfg);
    if (models::model_needs_backend(model) && backend == nullptr) {
        throw std::invalid_argument("rolling_origin: " + models::to_string(model) +
                                    " requires a backend");
    }

    std::vector<const CountyId*> counties;
    for (const CountyId& county : panel.counties) {
        if (!county.state_level) counties.push_back(&county);
    }

    std::vector<CountyOutput> outputs(counties.size());
    std::size_t n_threads = cfg.threads != 0 ? cfg.threads : std::thread::hardware_concurrency();
    n_threads = std::max<std::size_t>(1, std::min(n_threads, counties.size()));

    if (n_threads <= 1) {
        for (std::size_t i = 0; i < counties.size(); ++i) {
            outputs[i] = evaluate_county(panel, *counties[i], model, cfg, backend);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            try {
                for (std::size_t i = next.fetch_add(1); i < counties.size();
                     i = next.fetch_add(1)) {
                    outputs[i] = evaluate_county(panel, *counties[i], model, cfg, backend);
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<ForecastRecord> records;
    for (CountyOutput& out : outputs) {
        records.insert(records.end(), std::make_move_iterator(out.records.begin()),
                       std::make_move_iterator(out.records.end()));
        if (report != nullptr) {
            report->windows_skipped += out.windows_skipped;
            report->llm_missing += out.llm_missing;
            report->warnings.insert(report->warnings.end(),
                                    std::make_move_iterator(out.warnings.begin()),
                                    std::make_move_iterator(out.warnings.end()));
        }
    }
    return records;
}

void sort_records(std::vector<ForecastRecord>& records) {
    std::sort(records.begin(), records.end(),
              [](const ForecastRecord& a, const ForecastRecord& b) {
                  return std::tuple(models::to_string(a.model), a.county.name, a.week, a.run) <
                         std::tuple(models::to_string(b.model), b.county.name, b.week, b.run);
              });
}

namespace {

MeanSd summarize(const std::vector<double>& points) {
    return {stats::mean(points), stats::pop_sd(points)};
}

}  // namespace

MeanSd mape(std::span<const ForecastRecord> records) {
    if (records.empty()) {
        throw std::invalid_argument("mape: need at least one record");
    }
    std::vector<double> points;
    points.reserve(records.size());
    for (const ForecastRecord& r : records) points.push_back(std::fabs(r.pct_error));
    return summarize(points);
}

MeanSd mpe(std::span<const ForecastRecord> records) {
    if (records.empty()) {
        throw std::invalid_argument("mpe: need at least one record");
    }
    std::vector<double> points;
    points.reserve(records.size());
    for (const ForecastRecord& r : records) points.push_back(r.pct_error);
    return summarize(points);
}

namespace {

std::map<WeekStamp, double> week_diffs(const std::vector<std::pair<WeekStamp, double>>& series) {
    std::map<WeekStamp, double> values(series.begin(), series.end());
    std::map<WeekStamp, double> diffs;
    for (const auto& [week, value] : values) {
        const auto prev = values.find(week.prev());
        if (prev != values.end()) {
            diffs[week] = value - prev->second;
        }
    }
    return diffs;
}

}  // namespace

std::optional<LeadLagResult> lead_lag(const std::vector<std::pair<WeekStamp, double>>& pred,
                                      const std::vector<std::pair<WeekStamp, double>>& actual,
                                      int lag_max) {
    if (lag_max < 1) {
        throw std::invalid_argument("lead_lag: lag_max must be at least 1");
    }
    const auto dp = week_diffs(pred);
    const auto da = week_diffs(actual);

    LeadLagResult out;
    for (int lag = -lag_max; lag <= lag_max; ++lag) {
        std::vector<double> xs;
        std::vector<double> ys;
        for (const auto& [week, dy] : da) {
            const WeekStamp shifted{week.week_ending - std::chrono::days{7 * lag}};
            const auto it = dp.find(shifted);
            if (it == dp.end()) continue;
            xs.push_back(it->second);
            ys.push_back(dy);
        }
        if (const auto rho = stats::pearson(xs, ys)) {
            out.profile[lag] = *rho;
        }
    }
    if (out.profile.empty()) return std::nullopt;

    bool first = true;
    for (const auto& [lag, rho] : out.profile) {
        bool take = first;
        if (!take && rho > out.rho_star) take = true;
        if (!take && rho == out.rho_star) {
            if (std::abs(lag) < std::abs(out.ell_star)) {
                take = true;
            } else if (std::abs(lag) == std::abs(out.ell_star) && lag < out.ell_star) {
                take = true;
            }
        }
        if (take) {
            out.ell_star = lag;
            out.rho_star = rho;
            first = false;
        }
    }
    return out;
}

namespace {

using GroupKey = std::pair<std::string, models::ModelId>;  // (county name, model)

std::map<GroupKey, std::map<int, std::vector<const ForecastRecord*>>> group_records(
    const std::vector<ForecastRecord>& records) {
    std::map<GroupKey, std::map<int, std::vector<const ForecastRecord*>>> groups;
    for (const ForecastRecord& r : records) {
        groups[{r.county.name, r.model}][r.run].push_back(&r);
    }
    return groups;
}

double mean_of(const std::vector<double>& values) { return stats::mean(values); }

}  // namespace

std::vector<CountyMetrics> county_metrics(const std::vector<ForecastRecord>& records) {
    std::vector<CountyMetrics> out;
    for (const auto& [key, runs] : group_records(records)) {
        CountyMetrics row;
        row.model = key.second;

        std::vector<double> mape_means;
        std::vector<double> mape_sds;
        std::vector<double> mpe_means;
        std::vector<double> mpe_sds;
        std::set<WeekStamp> weeks;
        for (const auto& [run, recs] : runs) {
            (void)run;
            std::vector<double> abs_points;
            std::vector<double> signed_points;
            abs_points.reserve(recs.size());
            for (const ForecastRecord* r : recs) {
                abs_points.push_back(std::fabs(r->pct_error));
                signed_points.push_back(r->pct_error);
                weeks.insert(r->week);
                row.county = r->county;
            }
            mape_means.push_back(stats::mean(abs_points));
            mape_sds.push_back(stats::pop_sd(abs_points));
            mpe_means.push_back(stats::mean(signed_points));
            mpe_sds.push_back(stats::pop_sd(signed_points));
        }
        row.mape_mean = mean_of(mape_means);
        row.mape_sd = mean_of(mape_sds);
        row.mpe_mean = mean_of(mpe_means);
        row.mpe_sd = mean_of(mpe_sds);
        row.n_weeks = weeks.size();
        out.push_back(std::move(row));
    }
    std::sort(out.begin(), out.end(), [](const CountyMetrics& a, const CountyMetrics& b) {
        return std::tuple(models::to_string(a.model), a.county.name) <
               std::tuple(models::to_string(b.model), b.county.name);
    });
    return out;
}

std::vector<CountyLeadLag> county_lead_lag(const std::vector<ForecastRecord>& records,
                                           int lag_max, std::vector<std::string>* warnings) {
    std::vector<CountyLeadLag> out;
    for (const auto& [key, runs] : group_records(records)) {
        CountyLeadLag row;
        row.model = key.second;

        std::vector<double> ells;
        std::vector<double> rhos;
        std::map<int, std::vector<double>> profiles;
        for (const auto& [run, recs] : runs) {
            (void)run;
            std::vector<std::pair<WeekStamp, double>> pred;
            std::vector<std::pair<WeekStamp, double>> actual;
            pred.reserve(recs.size());
            actual.reserve(recs.size());
            for (const ForecastRecord* r : recs) {
                pred.emplace_back(r->week, r->y_hat);
                actual.emplace_back(r->week, r->y_true);
                row.county = r->county;
            }
            const auto result = lead_lag(pred, actual, lag_max);
            if (!result) continue;
            ells.push_back(static_cast<double>(result->ell_star));
            rhos.push_back(result->rho_star);
            for (const auto& [lag, rho] : result->profile) {
                profiles[lag].push_back(rho);
            }
        }
        if (ells.empty()) {
            if (warnings != nullptr) {
                warnings->push_back(key.first + "/" + models::to_string(key.second) +
                                    ": lead-lag undefined (degenerate difference series)");
            }
            continue;
        }
        row.ell_star = mean_of(ells);
        row.rho_star = mean_of(rhos);
        for (const auto& [lag, rhos_at_lag] : profiles) {
            row.profile[lag] = mean_of(rhos_at_lag);
        }
        out.push_back(std::move(row));
    }
    std::sort(out.begin(), out.end(), [](const CountyLeadLag& a, const CountyLeadLag& b) {
        return std::tuple(models::to_string(a.model), a.county.name) <
               std::tuple(models::to_string(b.model), b.county.name);
    });
    return out;
}

std::string to_string(Stratum s) {
    switch (s) {
        case Stratum::Low: return "low";
        case Stratum::Mid: return "mid";
        case Stratum::High: return "high";
        case Stratum::Overall: return "overall";
    }
    throw std::logic_error("unknown stratum");
}

std::string to_string(SummaryMetric m) {
    switch (m) {
        case SummaryMetric::Mape: return "mape";
        case SummaryMetric::Mpe: return "mpe";
        case SummaryMetric::EllStar: return "ell_star";
        case SummaryMetric::RhoStar: return "rho_star";
    }
    throw std::logic_error("unknown summary metric");
}

namespace {

Stratum stratum_of(Tertile t) {
    switch (t) {
        case Tertile::Low: return Stratum::Low;
        case Tertile::Mid: return Stratum::Mid;
        case Tertile::High: return Stratum::High;
    }
    throw std::logic_error("unknown tertile");
}

}  // namespace

std::vector<TertileSummary> aggregate(const std::vector<CountyMetrics>& metrics,
                                      const std::vector<CountyLeadLag>& leadlag,
                                      const std::map<CountyId, CountyMeta>& tertiles,
                                      std::vector<std::string>* warnings) {
    // (model, metric) -> stratum -> per-county values
    std::map<std::pair<models::ModelId, SummaryMetric>, std::map<Stratum, std::vector<double>>>
        buckets;

    auto place = [&](const CountyId& county, models::ModelId model, SummaryMetric metric,
                     double value) {
        const auto it = tertiles.find(county);
        if (it == tertiles.end()) {
            if (warnings != nullptr) {
                warnings->push_back("aggregate: " + county.name + " has no tertile; skipped");
            }
            return;
        }
        auto& per_stratum = buckets[{model, metric}];
        per_stratum[stratum_of(it->second.tertile)].push_back(value);
        per_stratum[Stratum::Overall].push_back(value);
    };

    for (const CountyMetrics& row : metrics) {
        place(row.county, row.model, SummaryMetric::Mape, row.mape_mean);
        place(row.county, row.model, SummaryMetric::Mpe, row.mpe_mean);
    }
    for (const CountyLeadLag& row : leadlag) {
        if (row.model == models::ModelId::Lag1) continue;  // peak at -1 by construction
        place(row.county, row.model, SummaryMetric::EllStar, row.ell_star);
        place(row.county, row.model, SummaryMetric::RhoStar, row.rho_star);
    }

    std::vector<TertileSummary> out;
    for (const auto& [key, per_stratum] : buckets) {
        for (const Stratum stratum :
             {Stratum::Low, Stratum::Mid, Stratum::High, Stratum::Overall}) {
            const auto it = per_stratum.find(stratum);
            if (it == per_stratum.end() || it->second.empty()) {
                if (warnings != nullptr && stratum != Stratum::Overall) {
                    warnings->push_back("aggregate: empty stratum " + to_string(stratum) +
                                        " for " + models::to_string(key.first) + "/" +
                                        to_string(key.second));
                }
                continue;
            }
            TertileSummary row;
            row.stratum = stratum;
            row.model = key.first;
            row.metric = key.second;
            row.mean = stats::mean(it->second);
            row.sd = stats::pop_sd(it->second);
            row.n_counties = it->second.size();
            out.push_back(row);
        }
    }

    std::sort(out.begin(), out.end(), [](const TertileSummary& a, const TertileSummary& b) {
        return std::tuple(models::to_string(a.model), static_cast<int>(a.metric),
                          static_cast<int>(a.stratum)) <
               std::tuple(models::to_string(b.model), static_cast<int>(b.metric),
                          static_cast<int>(b.stratum));
    });
    return out;
}

}  // namespace wardcast::eval
