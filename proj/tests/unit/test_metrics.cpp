#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "spikenet/error.hpp"
#include "spikenet/metrics.hpp"
#include "spikenet/quantile_table.hpp"
#include "spikenet/rng.hpp"

using namespace spikenet;

namespace {

double w1(const std::vector<double>& a, const std::vector<double>& b) {
  return w1_empirical(EmpiricalDistribution(a), EmpiricalDistribution(b));
}

std::vector<double> draw(RngStream& rng, std::size_t n, double scale = 3.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.uniform();
  return v;
}

}  // namespace

TEST_CASE("W1 examples") {
  CHECK(w1({0.5, 1.0, 2.0}, {2.0, 0.5, 1.0}) == 0.0);
  CHECK(w1({0}, {1}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w1({0, 2}, {1, 3}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(oracle::w1_bruteforce_equal({0, 2}, {1, 3}) == doctest::Approx(1.0));
  CHECK(w1({0}, {0, 2}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(oracle::w1_assignment({0}, {0, 2}) == doctest::Approx(1.0));
}

TEST_CASE("W1 input validation") {
  CHECK_THROWS_AS(EmpiricalDistribution(std::vector<double>{}), Error);
  try {
    EmpiricalDistribution(std::vector<double>{});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDistribution);
  }
  CHECK_THROWS_AS(EmpiricalDistribution({1.0, NAN}), Error);
  CHECK_THROWS_AS(EmpiricalDistribution({-1.0}), Error);
}

TEST_CASE("W1 equals the exhaustive assignment minimum for equal sizes up to 6") {
  RngStream rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 6;
    const bool lattice = trial % 4 == 0;
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = lattice ? static_cast<double>(rng.below(3)) : 4.0 * rng.uniform();
    for (auto& x : b) x = lattice ? static_cast<double>(rng.below(3)) : 4.0 * rng.uniform();
    CHECK(std::abs(w1(a, b) - oracle::w1_bruteforce_equal(a, b)) <= 1e-12);
  }
}

TEST_CASE("W1 matches the replicated assignment oracle for unequal sizes") {
  RngStream rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(6), m = 1 + rng.below(6);
    const auto a = draw(rng, n), b = draw(rng, m);
    CHECK(std::abs(w1(a, b) - oracle::w1_assignment(a, b)) <= 1e-12);
  }
}

TEST_CASE("W1 metric properties") {
  RngStream rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = draw(rng, 1 + rng.below(7));
    const auto b = draw(rng, 1 + rng.below(7));
    const auto c = draw(rng, 1 + rng.below(7));
    CHECK(w1(a, c) <= w1(a, b) + w1(b, c) + 1e-12);
    CHECK(w1(a, b) == doctest::Approx(w1(b, a)).epsilon(1e-12));
    CHECK(w1(a, b) >= 0.0);
    const double shift = 10.0 * rng.uniform();
    auto as = a, bs = b;
    for (auto& x : as) x += shift;
    for (auto& x : bs) x += shift;
    CHECK(std::abs(w1(as, bs) - w1(a, b)) <= 1e-12);
  }
}

TEST_CASE("mean omega") {
  const ModelParams p{1, 1, 2, 1};
  const Estimate z = mean_omega(EmpiricalDistribution({0, 0, 0}), p);
  CHECK(z.value == 0.0);
  CHECK(z.ci_half == 0.0);
  const Estimate one = mean_omega(EmpiricalDistribution({0.7}), p);
  CHECK(one.value == doctest::Approx(1 - std::exp(-0.7)).epsilon(1e-15));
  const Estimate four = mean_omega(EmpiricalDistribution({1, 1, 1, 1}), p);
  CHECK(four.value == doctest::Approx(0.632121).epsilon(1e-6));
  const ModelParams q{2, 1, 2, 1};  // gamma/mu = 0.5
  CHECK(mean_omega(EmpiricalDistribution({2}), q).value == doctest::Approx(1 - std::exp(-1.0)));
}

TEST_CASE("KS examples") {
  std::vector<double> a(40), b(40);
  for (int i = 0; i < 40; ++i) {
    a[i] = i * 0.1;
    b[i] = 10 + i * 0.1;
  }
  CHECK(ks_two_sample(EmpiricalDistribution(a), EmpiricalDistribution(a)).statistic == 0.0);
  CHECK(ks_two_sample(EmpiricalDistribution(a), EmpiricalDistribution(a)).p_value == doctest::Approx(1.0));
  const KsResult r = ks_two_sample(EmpiricalDistribution(a), EmpiricalDistribution(b));
  CHECK(r.statistic == 1.0);
  CHECK(r.p_value < 1e-10);
  CHECK_THROWS_AS(ks_two_sample(EmpiricalDistribution(std::vector<double>(24, 1.0)), EmpiricalDistribution(a)),
                  Error);
}

TEST_CASE("KS statistic matches an independent implementation") {
  RngStream rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(30 + rng.below(50)), b(30 + rng.below(50));
    for (auto& x : a) x = rng.exponential();
    for (auto& x : b) x = 1.1 * rng.exponential();
    if (trial % 5 == 0)
      for (auto& x : b) x = std::floor(x * 3.0);
    if (trial % 5 == 0)
      for (auto& x : a) x = std::floor(x * 3.0);
    CHECK(ks_two_sample(EmpiricalDistribution(a), EmpiricalDistribution(b)).statistic ==
          doctest::Approx(oracle::ks_two_sample(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("Kolmogorov survival function") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.0494).epsilon(0.01));
  CHECK(kolmogorov_survival(1.6276) == doctest::Approx(0.01).epsilon(0.01));
  CHECK(kolmogorov_survival(3.0) < 1e-6);
}

TEST_CASE("KS calibration at the 1% level") {
  RngStream rng(15);
  int rejections = 0;
  const int reps = 1000;
  for (int k = 0; k < reps; ++k) {
    std::vector<double> a(2000), b(2000);
    for (auto& x : a) x = rng.exponential();
    for (auto& x : b) x = rng.exponential();
    rejections += ks_two_sample(EmpiricalDistribution(a), EmpiricalDistribution(b)).p_value < 0.01;
  }
  // Binomial(1000, 0.01): mean 10, sd ~3.1
  CHECK(rejections >= 2);
  CHECK(rejections <= 22);
}

TEST_CASE("fit examples") {
  const std::vector<double> n = {50, 100, 200, 400, 800};
  std::vector<double> y, z;
  for (double x : n) {
    y.push_back(std::pow(x, -1.0 / 3.0));
    z.push_back(2.0 + 3.0 * std::log(x));
  }
  const FitResult a = fit_log_scaling(n, y, FitMode::LogLog);
  CHECK(std::abs(a.slope + 1.0 / 3.0) <= 1e-12);
  CHECK(a.r2 == doctest::Approx(1.0));
  const FitResult b = fit_log_scaling(n, z, FitMode::LogX);
  CHECK(b.slope == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(b.intercept == doctest::Approx(2.0).epsilon(1e-12));
  std::vector<double> t = {0, 1, 2, 3}, g;
  for (double s : t) g.push_back(5.0 * std::exp(0.7 * s));
  const FitResult c = fit_log_scaling(t, g, FitMode::LogY);
  CHECK(c.slope == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(std::exp(c.intercept) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("fit errors") {
  const std::vector<double> x = {1, 2, 3}, bad = {1, -1, 2};
  try {
    fit_log_scaling(x, bad, FitMode::LogLog);
    FAIL("expected NonPositiveValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveValue);
  }
  CHECK_NOTHROW(fit_log_scaling(x, bad, FitMode::LogX));
  const std::vector<double> zero_x = {0, 1, 2};
  CHECK_THROWS_AS(fit_log_scaling(zero_x, x, FitMode::LogX), Error);
  CHECK_THROWS_AS(fit_log_scaling(std::vector<double>{1, 2}, std::vector<double>{1, 2}, FitMode::LogLog), Error);
}

TEST_CASE("fit CI calibration under 5% multiplicative noise") {
  RngStream rng(16);
  const std::vector<double> n = {50, 100, 200, 400, 800};
  int covered_t = 0, covered_w = 0;
  const int reps = 1000;
  for (int k = 0; k < reps; ++k) {
    std::vector<double> y, s;
    for (double x : n) {
      // Box-Muller normal
      const double g = std::sqrt(-2.0 * std::log(rng.uniform_pos())) * std::cos(2 * M_PI * rng.uniform());
      const double v = std::pow(x, -0.4) * (1.0 + 0.05 * g);
      y.push_back(v);
      s.push_back(0.05 * std::pow(x, -0.4));
    }
    const FitResult f = fit_log_scaling(n, y, FitMode::LogLog);
    covered_t += f.slope_lo() <= -0.4 && -0.4 <= f.slope_hi();
    const FitResult w = fit_log_scaling(n, y, FitMode::LogLog, s);
    covered_w += w.slope_lo() <= -0.4 && -0.4 <= w.slope_hi();
  }
  CHECK(covered_t >= 900);
  CHECK(covered_w >= 900);
}

TEST_CASE("median estimate") {
  const Estimate m = median_estimate(std::vector<double>{3, 1, 2});
  CHECK(m.value == 2.0);
  std::vector<double> xs;
  for (int i = 0; i < 101; ++i) xs.push_back(i);
  const Estimate e = median_estimate(xs);
  CHECK(e.value == 50.0);
  CHECK(e.lo() <= 50.0);
  CHECK(e.hi() >= 50.0);
  CHECK(e.ci_half > 0.0);
  std::vector<double> censored(10, INFINITY);
  censored[0] = 1.0;
  CHECK(std::isinf(median_estimate(censored).value));
  CHECK_THROWS_AS(median_estimate(std::vector<double>{}), Error);
}

TEST_CASE("median interval covers the true median about 95% of the time") {
  RngStream rng(17);
  int covered = 0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> xs(200);
    for (auto& x : xs) x = rng.exponential();
    const Estimate e = median_estimate(xs);
    covered += e.lo() <= std::log(2.0) && std::log(2.0) <= e.hi();
  }
  CHECK(covered >= 920);
  CHECK(covered <= 985);
}

TEST_CASE("quantile table rows and lookup") {
  QuantileTable t;
  CHECK(t.empty());
  t.add_row(0.0, {3, 1, 2});
  t.add_row(0.5, {0.5});
  CHECK(t.rows() == 2);
  CHECK(t.row(0)[0] == 1.0);
  CHECK(t.row(0)[2] == 3.0);
  CHECK(t.max_value() == 3.0);
  CHECK(t.min_row_size() == 1);
  CHECK(t.row_index_at(0.0) == 0);
  CHECK(t.row_index_at(0.49) == 0);
  CHECK(t.row_index_at(0.5) == 1);
  CHECK(t.row_index_at(7.0) == 1);
  CHECK(t.row_exact(0.5)[0] == 0.5);
  CHECK_THROWS_AS(t.row_exact(0.25), Error);
  CHECK_THROWS_AS(t.row_index_at(-0.1), Error);
  CHECK_THROWS_AS(t.add_row(0.5, {1}), Error);
  CHECK_THROWS_AS(t.add_row(1.0, {}), Error);
  CHECK_THROWS_AS(t.add_row(1.0, {-1}), Error);
}

TEST_CASE("quantile table round trip") {
  QuantileTable t;
  t.add_row(0.0, {0.1, 1.0 / 3.0});
  t.add_row(1.25, {2.0, 0.0, 1e-300});
  std::stringstream ss;
  t.write(ss);
  const QuantileTable u = QuantileTable::read(ss);
  REQUIRE(u.rows() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(u.times()[k] == t.times()[k]);
    REQUIRE(u.row_size(k) == t.row_size(k));
    for (std::size_t j = 0; j < t.row_size(k); ++j) CHECK(u.row(k)[j] == t.row(k)[j]);
  }
}
