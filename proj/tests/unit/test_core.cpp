#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "spikenet/core.hpp"
#include "spikenet/error.hpp"
#include "spikenet/rng.hpp"

using namespace spikenet;
using boost::multiprecision::cpp_bin_float_50;

namespace {

double theta_reference(double mu, double gamma, int kappa, double rho) {
  const cpp_bin_float_50 x = cpp_bin_float_50(rho) * gamma / mu;
  return static_cast<double>(kappa * (1 - exp(-x)));
}

}  // namespace

TEST_CASE("reproduction number examples") {
  CHECK(reproduction_number({1.0, std::log(2.0), 2, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(reproduction_number({1, 1, 2, 1}) - theta_reference(1, 1, 2, 1)) < 1e-15);
  CHECK(reproduction_number({1, 1, 2, 1}) == doctest::Approx(1.264241).epsilon(1e-6));
  CHECK(reproduction_number({1, 1, 1, 1}) == doctest::Approx(0.632121).epsilon(1e-6));
  CHECK(std::abs(reproduction_number({1, 0.2, 2, 1}) - theta_reference(1, 0.2, 2, 1)) < 1e-15);
}

TEST_CASE("chaos threshold examples") {
  CHECK(chaos_threshold({1, 1, 2, 1}) == 2.0);
  CHECK(chaos_threshold({1, 0.5, 2, 1}) == 1.0);
  CHECK(chaos_threshold({1, 2, 3, 0.5}) == 3.0);
}

TEST_CASE("omega distance examples") {
  const ModelParams p{1, 1, 2, 1};
  CHECK(omega_distance(3.7, 3.7, p) == 0.0);
  CHECK(omega_distance(1, 0, p) == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-15));
  CHECK(omega_distance(0, 1, p) == omega_distance(1, 0, p));
  CHECK(omega_distance(0, 30, p) < 1.0);
  CHECK(omega_distance(0, 30, p) > 1.0 - 1e-12);
}

TEST_CASE("regime classification") {
  CHECK(classify_regime({1, std::log(2.0), 2, 1}, 1e-12).tag == RegimeTag::Critical);
  CHECK(classify_regime({1, 1, 2, 1}, 1e-6).tag == RegimeTag::Supercritical);
  CHECK(classify_regime({1, 0.2, 2, 1}, 1e-6).tag == RegimeTag::Subcritical);
  CHECK(classify_regime({1, 0.2, 2, 1}, 1e-6).theta == doctest::Approx(0.36254).epsilon(1e-4));
  CHECK_THROWS_AS(classify_regime({1, 1, 2, 1}, -1.0), Error);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(ModelParams(0, 1, 2, 1), Error);
  CHECK_THROWS_AS(ModelParams(1, -1, 2, 1), Error);
  CHECK_THROWS_AS(ModelParams(1, 1, 0, 1), Error);
  CHECK_THROWS_AS(ModelParams(1, 1, 2, 0), Error);
  CHECK_THROWS_AS(ModelParams(1, NAN, 2, 1), Error);
  try {
    ModelParams(1, 1, 0, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("benchmarks") {
  CHECK(benchmark_params(Benchmark::Sub).gamma() == 0.2);
  CHECK(benchmark_params(Benchmark::Crit).theta() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(benchmark_params(Benchmark::Super).gamma() == 1.0);
  CHECK(parse_benchmark("CRIT") == Benchmark::Crit);
  CHECK_THROWS_AS(parse_benchmark("HOT"), Error);
}

TEST_CASE("properties over random parameter grids") {
  RngStream rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const double mu = 0.05 + 5 * rng.uniform();
    const double gamma = 0.01 + 5 * rng.uniform();
    const int kappa = 1 + static_cast<int>(rng.below(6));
    const double rho = 0.01 + 5 * rng.uniform();
    const ModelParams p(mu, gamma, kappa, rho);
    CHECK(p.theta() > 0.0);
    CHECK(p.theta() <= kappa);
    // kappa * e^{-x} drops below half an ulp of kappa near x = 37.
    if (rho * gamma / mu < 30) CHECK(p.theta() < kappa);
    CHECK(p.theta() <= p.theta_c());
    CHECK(std::abs(p.theta() - theta_reference(mu, gamma, kappa, rho)) <= 4e-16 * kappa);

    const double x = 10 * rng.uniform(), y = 10 * rng.uniform(), z = 10 * rng.uniform();
    CHECK(omega_distance(x, z, p) <= omega_distance(x, y, p) + omega_distance(y, z, p) + 1e-15);

    // Rescalings that keep rho*gamma and gamma/mu fixed keep the regime.
    const double c = 0.1 + 3 * rng.uniform();
    const auto tag = classify_regime(p, 1e-6).tag;
    CHECK(classify_regime({mu, gamma * c, kappa, rho / c}, 1e-6).tag == tag);
    CHECK(classify_regime({mu * c, gamma * c, kappa, rho}, 1e-6).tag == tag);
  }
}
