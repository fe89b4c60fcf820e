#include "grpolab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "grpolab/errors.hpp"

namespace grpolab {

double mean(std::span<const double> values) {
  if (values.empty()) throw_invalid_input("mean of empty range");
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

double variance_population(std::span<const double> values) {
  const double mu = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(values.size());
}

double variance_sample(std::span<const double> values) {
  if (values.size() < 2) throw_invalid_input("sample variance needs at least 2 values");
  const double mu = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(values.size() - 1);
}

double covariance_sample(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw_invalid_input("covariance needs two equal ranges with >= 2 values");
  const double mx = mean(xs);
  const double my = mean(ys);
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += (xs[i] - mx) * (ys[i] - my);
  return acc / static_cast<double>(xs.size() - 1);
}

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw_invalid_input("least_squares needs two equal ranges with >= 2 values");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) return LineFit{0.0, my};
  const double slope = sxy / sxx;
  return LineFit{slope, my - slope * mx};
}

double slope_over_index(std::span<const double> ys) {
  std::vector<double> xs(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
  return least_squares(xs, ys).slope;
}

BootstrapCi percentile_bootstrap(std::size_t n, int resamples, double confidence,
                                 RngStream stream,
                                 const std::function<double(std::span<const std::size_t>)>& statistic) {
  if (n == 0) throw_invalid_input("percentile_bootstrap: empty sample");
  if (resamples < 2) throw_invalid_input("percentile_bootstrap: need >= 2 resamples");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw_invalid_input("percentile_bootstrap: confidence must be in (0, 1)");

  std::vector<std::size_t> indices(n);
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    RngStream s = stream.substream(static_cast<std::uint64_t>(r));
    for (std::size_t i = 0; i < n; ++i)
      indices[i] = static_cast<std::size_t>(s.next_index(n));
    stats[static_cast<std::size_t>(r)] = statistic(indices);
  }
  std::sort(stats.begin(), stats.end());

  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(stats.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, stats.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return stats[lo] * (1.0 - frac) + stats[hi] * frac;
  };
  const double tail = (1.0 - confidence) / 2.0;
  return BootstrapCi{quantile(tail), quantile(1.0 - tail)};
}

double sign_test_pvalue(int wins, int losses) {
  if (wins < 0 || losses < 0) throw_invalid_input("sign_test: negative counts");
  const int n = wins + losses;
  if (n == 0) return 1.0;
  // P(X >= wins) for X ~ Binomial(n, 1/2), exact summation.
  long double coeff = 1.0L;  // C(n, 0)
  long double tail = 0.0L;
  for (int k = 0; k <= n; ++k) {
    if (k >= wins) tail += coeff;
    coeff = coeff * static_cast<long double>(n - k) / static_cast<long double>(k + 1);
  }
  const long double p = tail * std::pow(0.5L, static_cast<long double>(n));
  return static_cast<double>(std::min(1.0L, p));
}

}  // namespace grpolab
