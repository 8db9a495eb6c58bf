#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "spikenet/error.hpp"
#include "spikenet/mean_field.hpp"

using namespace spikenet;

namespace {

const ModelParams kSuper{1, 1, 2, 1};
const ModelParams kSub{1, 0.2, 2, 1};

std::size_t node(const EnsembleCurves& c, double t) {
  return static_cast<std::size_t>(std::llround(t / (c.times[1] - c.times[0])));
}

EnsembleSnapshot snap(double t, std::vector<double> v) { return {t, std::move(v)}; }

}  // namespace

TEST_CASE("linearized process with zero rate and zero start stays at zero") {
  const RateCurve r = RateCurve::constant(0.0, 0.01, 301, 0.0);
  const auto res = simulate_linearized(kSuper, r, InitLaw::constant(0.0), 500, 3.0, RngStream(1));
  for (std::size_t k = 0; k < res.curves.nodes(); ++k) {
    CHECK(res.curves.m1[k] == 0.0);
    CHECK(res.curves.p[k] == 1.0);
    CHECK(res.curves.h[k] == 1.0);
  }
}

TEST_CASE("linearized process with zero rate: decay with at most one reset") {
  const double z0 = 1.5;
  const RateCurve r = RateCurve::constant(0.0, 0.01, 301, 0.0);
  const auto res = simulate_linearized(kSuper, r, InitLaw::constant(z0), 20000, 3.0, RngStream(2));
  for (double t : {0.5, 1.0, 2.0, 3.0}) {
    const std::size_t k = node(res.curves, t);
    const double mu = kSuper.mu(), c = kSuper.gamma_over_mu();
    const double expected = z0 * std::exp(-mu * t) * std::exp(-c * z0 * (1 - std::exp(-mu * t)));
    CHECK(std::abs(res.curves.m1[k] - expected) <= 3 * res.curves.m1_se[k]);
    // P(reset by t) is the complement of the survival factor
    CHECK(std::abs(res.curves.p[k] - (1 - std::exp(-c * z0 * (1 - std::exp(-mu * t))))) <=
          3 * res.curves.p_se[k] + 1e-12);
  }
}

TEST_CASE("excitation-only linearized process solves the linear ODE") {
  const double rate = 0.4;
  const RateCurve r = RateCurve::constant(0.0, 0.01, 401, rate);
  LinearizedOptions opt;
  opt.disable_firing = true;
  const auto res = simulate_linearized(kSuper, r, InitLaw::constant(0.0), 20000, 4.0, RngStream(3), opt);
  const double a = kSuper.rho() * kSuper.gamma() * kSuper.kappa() * rate;
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    const std::size_t k = node(res.curves, t);
    const double expected = a / kSuper.mu() * (1 - std::exp(-kSuper.mu() * t));
    CHECK(std::abs(res.curves.m1[k] - expected) <= 3 * res.curves.m1_se[k]);
  }
}

TEST_CASE("linearized horizon must lie on the curve") {
  const RateCurve r = RateCurve::constant(0.0, 0.01, 101, 0.1);
  try {
    simulate_linearized(kSuper, r, InitLaw::constant(1.0), 10, 2.0, RngStream(4));
    FAIL("expected OutOfDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfDomain);
  }
}

TEST_CASE("linearized snapshots and table rows are path aligned") {
  const RateCurve r = RateCurve::constant(0.0, 0.01, 201, 0.3);
  LinearizedOptions opt;
  opt.snapshot_times = {0.5, 1.0};
  opt.table_times = {1.0, 2.0};
  const auto res = simulate_linearized(kSuper, r, InitLaw::exponential(1.0), 400, 2.0, RngStream(5), opt);
  REQUIRE(res.snapshots.size() == 2);
  CHECK(res.snapshots[1].time == doctest::Approx(1.0));
  REQUIRE(res.table.rows() == 2);
  std::vector<double> sorted = res.snapshots[1].values;
  std::sort(sorted.begin(), sorted.end());
  const auto row = res.table.row_exact(1.0);
  REQUIRE(row.size() == sorted.size());
  CHECK(std::equal(sorted.begin(), sorted.end(), row.begin()));
  double mean = 0.0;
  for (double v : res.snapshots[1].values) mean += v / 400.0;
  CHECK(mean == doctest::Approx(res.curves.m1[node(res.curves, 1.0)]).epsilon(1e-12));
}

TEST_CASE("zero start is a Picard fixed point") {
  const MeanFieldSolution s = picard_solve(kSuper, InitLaw::constant(0.0), 3.0, 0.01, RngStream(6));
  CHECK(s.picard_iters == 1);
  for (double v : s.rate.values()) CHECK(v == 0.0);
  CHECK(s.residual == 0.0);
}

TEST_CASE("supercritical Picard solve: contraction, ranges, persistence") {
  PicardOptions po;
  po.paths = 4000;
  po.tol = 1e-4;
  const MeanFieldSolution s = picard_solve(kSuper, InitLaw::constant(1.0), 6.0, 0.01, RngStream(7), po);
  CHECK(s.residual <= s.tol);
  // increments shrink until they reach the resampling floor, then plateau
  for (const auto& w : s.contraction) {
    for (std::size_t k = 1; k < w.size() && w[k - 1] > 1e-2; ++k) CHECK(w[k] < w[k - 1]);
    if (w.size() > 1) CHECK(w.back() < 0.1 * w.front());
  }
  for (std::size_t k = 0; k < s.curves.nodes(); ++k) {
    CHECK(s.curves.h[k] >= 0.0);
    CHECK(s.curves.h[k] <= 1.0);
    CHECK(s.curves.p[k] >= 0.0);
    CHECK(s.curves.p[k] <= 1.0);
    CHECK(s.rate.values()[k] >= 0.0);
  }
  CHECK(*std::min_element(s.rate.values().begin(), s.rate.values().end()) > 0.05);
  // the stored rate is the input of the last iterate; its image is the curve
  for (std::size_t k = 0; k < s.curves.nodes(); ++k)
    CHECK(std::abs(s.curves.m1[k] - s.rate.values()[k]) <= s.residual + 1e-12);
}

TEST_CASE("Picard reports non-convergence with the residual") {
  PicardOptions po;
  po.paths = 500;
  po.tol = 1e-12;
  po.max_iters = 2;
  try {
    picard_solve(kSuper, InitLaw::constant(1.0), 2.0, 0.01, RngStream(8), po);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("subcritical mean-field omega decay envelope") {
  PicardOptions po;
  po.paths = 4000;
  const MeanFieldSolution s = picard_solve(kSub, InitLaw::constant(1.0), 10.0, 0.01, RngStream(9), po);
  const double omega0 = 1 - std::exp(-kSub.gamma_over_mu());
  for (std::size_t k = 0; k < s.curves.nodes(); k += 50) {
    const double t = s.curves.times[k];
    CHECK(1 - s.curves.h[k] <= omega0 * std::exp(-(1 - kSub.theta()) * t) + 3 * s.curves.h_se[k]);
  }
  // eventually decreasing
  const auto r = s.rate.values();
  for (std::size_t k = 300; k + 100 < r.size(); k += 100) CHECK(r[k + 100] < r[k]);
}

TEST_CASE("Picard result does not depend on the worker count") {
  PicardOptions a, b;
  a.paths = b.paths = 1500;
  a.workers = 1;
  b.workers = 3;
  const auto s1 = picard_solve(kSuper, InitLaw::exponential(1.0), 2.0, 0.01, RngStream(10), a);
  const auto s2 = picard_solve(kSuper, InitLaw::exponential(1.0), 2.0, 0.01, RngStream(10), b);
  REQUIRE(s1.rate.nodes() == s2.rate.nodes());
  for (std::size_t k = 0; k < s1.rate.nodes(); ++k) CHECK(s1.rate.values()[k] == s2.rate.values()[k]);
  CHECK(s1.curves.m2 == s2.curves.m2);
}

TEST_CASE("self-consistent particles with zero start stay at zero") {
  const auto r = simulate_self_consistent(kSuper, 200, InitLaw::constant(0.0), 2.0, 0.01, RngStream(11));
  for (double v : r.curves.m1) CHECK(v == 0.0);
}

TEST_CASE("self-consistent rate is robust to halving the window") {
  constexpr int reps = 4;
  std::vector<std::vector<double>> a(reps), b(reps);
  for (int k = 0; k < reps; ++k) {
    const auto coarse = simulate_self_consistent(kSuper, 10000, InitLaw::constant(1.0), 4.0, 0.01,
                                                 RngStream(12).child(k));
    const auto fine = simulate_self_consistent(kSuper, 10000, InitLaw::constant(1.0), 4.0, 0.005,
                                               RngStream(13).child(k));
    a[k] = coarse.curves.m1;
    for (std::size_t j = 0; j < fine.curves.nodes(); j += 2) b[k].push_back(fine.curves.m1[j]);
  }
  const RateComparison c = compare_replicated_rates(a, b, {}, {}, 0.01);
  double mean_ratio = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 1; j < c.diff.size(); ++j) {
    mean_ratio += c.diff[j] / c.combined_se[j];
    ++used;
  }
  CHECK(mean_ratio / static_cast<double>(used) < 1.0);
}

TEST_CASE("replicated rate comparison") {
  const std::vector<std::vector<double>> a = {{1, 1, 1}}, b = {{1, 2, 4}};
  const std::vector<double> sa = {0.3, 0.3, 0.3}, sb = {0.4, 0.4, 0.4};
  const RateComparison one = compare_replicated_rates(a, b, sa, sb, 0.1);
  CHECK(one.diff[2] == 3.0);
  CHECK(one.combined_se[0] == doctest::Approx(0.5));
  const std::vector<std::vector<double>> a2 = {{0, 0}, {2, 2}}, b2 = {{1, 1}, {1, 1}};
  const RateComparison two = compare_replicated_rates(a2, b2, {}, {}, 1.0, 0.0);
  CHECK(two.diff[0] == 0.0);
  // replicate variance 2 for a, 0 for b, over 2 replicates
  CHECK(two.combined_se[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(compare_replicated_rates(a, b2, {}, {}, 1.0), Error);
}

TEST_CASE("h closed form") {
  const RateCurve zero = RateCurve::constant(0.0, 0.1, 11, 0.0);
  for (double v : h_curve_closed_form(kSuper, zero, 0.3).values) CHECK(v == doctest::Approx(0.3));
  const RateCurve big = RateCurve::constant(0.0, 1.0, 101, 1.0);
  CHECK(h_curve_closed_form(kSuper, big, 0.2).values.back() == doctest::Approx(0.790988).epsilon(1e-6));
  CHECK(1.0 / kSuper.theta() == doctest::Approx(0.790988).epsilon(1e-6));
  CHECK_THROWS_AS(h_curve_closed_form(kSuper, zero, 1.5), Error);
}

TEST_CASE("resting fraction closed form") {
  const RateCurve r = RateCurve::constant(0.0, 0.05, 21, 3.0);
  for (double v : resting_fraction_closed_form(kSuper, r, 0.5).values) CHECK(v == doctest::Approx(0.5));
  const RateCurve half_ln2 = RateCurve::constant(0.0, 0.5, 3, std::log(2.0) / 2.0);
  const auto p = resting_fraction_closed_form(kSuper, half_ln2, 1.0);
  CHECK(half_ln2.cumulative(1.0) == doctest::Approx(std::log(2.0) / 2.0));
  CHECK(p.values[2] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK_THROWS_AS(resting_fraction_closed_form(kSuper, r, -0.1), Error);
}

TEST_CASE("moment residual edge cases") {
  const std::vector<double> zeros(1000, 0.0);
  for (int r = 1; r <= 3; ++r) {
    const Estimate e = moment_residual(kSuper, snap(0.99, zeros), snap(1.0, zeros), snap(1.01, zeros), r);
    CHECK(e.value == 0.0);
    CHECK(e.ci_half == 0.0);
  }
  const std::vector<double> few(999, 0.0);
  try {
    moment_residual(kSuper, snap(0.99, few), snap(1.0, few), snap(1.01, few), 1);
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSamples);
  }
  CHECK_THROWS_AS(moment_residual(kSuper, snap(0.99, zeros), snap(1.0, zeros), snap(1.01, zeros), 4), Error);
}

TEST_CASE("moment residual of a supercritical ensemble contains zero") {
  PicardOptions po;
  po.paths = 20000;
  po.snapshot_times = {0.99, 1.0, 1.01};
  const auto s = picard_solve(kSuper, InitLaw::constant(1.0), 2.0, 0.01, RngStream(14), po);
  REQUIRE(s.snapshots.size() == 3);
  const Estimate e = moment_residual(kSuper, s.snapshots[0], s.snapshots[1], s.snapshots[2], 1);
  CHECK(e.contains(0.0));
}

TEST_CASE("explicit moment bounds") {
  const MomentBounds b = moment_bounds(kSuper, InitLaw::constant(1.0));
  CHECK(b.c1 == doctest::Approx(1.0));
  CHECK(b.c2 == doctest::Approx(8.0));
  CHECK(b.c3 == doctest::Approx(4374.0));
  const MomentBounds big = moment_bounds(kSub, InitLaw::constant(5.0));
  CHECK(big.c1 == doctest::Approx(5.0));
  CHECK(big.c2 >= 25.0);
  CHECK(big.c3 >= 125.0);
}

TEST_CASE("observables csv layout") {
  PicardOptions po;
  po.paths = 300;
  const auto s = picard_solve(kSuper, InitLaw::constant(1.0), 0.5, 0.01, RngStream(15), po);
  std::ostringstream out;
  write_observables_csv(out, s);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,h_closed,h_mc,p_closed,p_mc,m1,m2,m3");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == s.curves.nodes());
}
