#include <doctest.h>

#include <cmath>
#include <vector>

#include "grpolab/errors.hpp"
#include "grpolab/stats.hpp"

using namespace grpolab;

TEST_CASE("moments") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(xs) == 2.5);
  CHECK(variance_population(xs) == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(variance_sample(xs) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(mean(std::vector<double>{}), Error);
}

TEST_CASE("least squares recovers an exact line") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(static_cast<double>(i));
    ys.push_back(3.0 - 0.25 * i);
  }
  const LineFit fit = least_squares(xs, ys);
  CHECK(fit.slope == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(slope_over_index(ys) == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("least squares on constant data has zero slope") {
  const std::vector<double> ys(10, 4.2);
  CHECK(slope_over_index(ys) == 0.0);
}

TEST_CASE("sign test exact tail probabilities") {
  CHECK(sign_test_pvalue(15, 5) == doctest::Approx(21700.0 / 1048576.0).epsilon(1e-12));
  CHECK(sign_test_pvalue(14, 6) == doctest::Approx(60460.0 / 1048576.0).epsilon(1e-12));
  CHECK(sign_test_pvalue(3, 0) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(sign_test_pvalue(0, 3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sign_test_pvalue(0, 0) == 1.0);
  CHECK_THROWS_AS(sign_test_pvalue(-1, 2), Error);
}

TEST_CASE("percentile bootstrap brackets the sample mean of iid data") {
  RngStream data_stream(314);
  std::vector<double> values(400);
  for (double& v : values) v = 2.0 + data_stream.next_gaussian();

  const auto stat = [&](std::span<const std::size_t> idx) {
    double acc = 0.0;
    for (std::size_t i : idx) acc += values[i];
    return acc / static_cast<double>(idx.size());
  };
  const BootstrapCi ci = percentile_bootstrap(values.size(), 1000, 0.95, RngStream(1), stat);
  CHECK(ci.low < 2.0);
  CHECK(ci.high > 2.0);
  CHECK(ci.high - ci.low < 0.5);

  SUBCASE("deterministic given the stream") {
    const BootstrapCi again = percentile_bootstrap(values.size(), 1000, 0.95, RngStream(1), stat);
    CHECK(again.low == ci.low);
    CHECK(again.high == ci.high);
  }
}

TEST_CASE("rng streams are reproducible and key-separated") {
  RngStream a = RngStream::from_key({1, 2, 3});
  RngStream b = RngStream::from_key({1, 2, 3});
  RngStream c = RngStream::from_key({1, 2, 4});
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() == b.next_u64());
  RngStream a2 = RngStream::from_key({1, 2, 3});
  CHECK(a2.next_u64() != c.next_u64());

  SUBCASE("substreams do not disturb the parent") {
    RngStream parent(10);
    RngStream sibling(10);
    (void)parent.substream(5);
    CHECK(parent.next_u64() == sibling.next_u64());
  }
  SUBCASE("unit variates stay in range") {
    RngStream s(3);
    for (int i = 0; i < 10000; ++i) {
      const double u = s.next_unit();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      const double v = s.next_open_unit();
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
  }
  SUBCASE("gaussian moments are sane") {
    RngStream s(4);
    double sum = 0.0, sum_sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double z = s.next_gaussian();
      sum += z;
      sum_sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sum_sq / n - 1.0) < 0.05);
  }
}
