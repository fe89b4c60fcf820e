#pragma once

#include <functional>
#include <span>
#include <vector>

#include "grpolab/rng.hpp"

namespace grpolab {

double mean(std::span<const double> values);
double variance_population(std::span<const double> values);
double variance_sample(std::span<const double> values);
double covariance_sample(std::span<const double> xs, std::span<const double> ys);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares(std::span<const double> xs, std::span<const double> ys);

// Least-squares slope of y against index 0..n-1.
double slope_over_index(std::span<const double> ys);

struct BootstrapCi {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap CI of a statistic over item indices [0, n).
/// `statistic` receives a resampled index multiset of size n.
BootstrapCi percentile_bootstrap(std::size_t n, int resamples, double confidence,
                                 RngStream stream,
                                 const std::function<double(std::span<const std::size_t>)>& statistic);

/// One-sided sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
/// Ties are excluded by the caller.
double sign_test_pvalue(int wins, int losses);

}  // namespace grpolab
