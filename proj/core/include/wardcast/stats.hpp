#pragma once

#include <optional>
#include <span>

namespace wardcast::stats {

double mean(std::span<const double> xs);

// Population variance / SD (divide by n).
double pop_variance(std::span<const double> xs);
double pop_sd(std::span<const double> xs);

/**
 * Pearson correlation over paired samples, clamped to [-1, 1].
 *
 * Undefined (nullopt) when fewer than `min_pairs` points are supplied or
 * either side is constant.
 */
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys,
                              std::size_t min_pairs = 3);

}  // namespace wardcast::stats
