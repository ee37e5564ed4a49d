#include "wardcast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wardcast::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("stats::mean: empty sample");
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / double(xs.size());
}

double pop_variance(std::span<const double> xs) {
    double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / double(xs.size());
}

double pop_sd(std::span<const double> xs) { return std::sqrt(pop_variance(xs)); }

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys,
                              std::size_t min_pairs) {
    if (xs.size() != ys.size()) throw std::invalid_argument("stats::pearson: length mismatch");
    if (xs.size() < min_pairs) return std::nullopt;
    double mx = mean(xs);
    double my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx;
        double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

}  // namespace wardcast::stats
