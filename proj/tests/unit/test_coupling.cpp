#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "spikenet/coupling.hpp"
#include "spikenet/error.hpp"
#include "spikenet/mean_field.hpp"
#include "spikenet/metrics.hpp"

using namespace spikenet;

namespace {

const ModelParams kSuper{1, 1, 2, 1};
const ModelParams kSub{1, 0.2, 2, 1};

QuantileTable zero_table(double horizon) {
  QuantileTable t;
  t.add_row(0.0, {0.0});
  t.add_row(horizon, {0.0});
  return t;
}

}  // namespace

TEST_CASE("coupling map examples") {
  RngStream rng(1);
  const std::vector<double> row = {1.5};
  const std::vector<double> same = {1.5, 1.5, 1.5};
  for (std::size_t s = 0; s < 3; ++s) CHECK(optimal_coupling_map(row, same, s, rng) == 1.5);
  const std::vector<double> ref = {1, 3}, others = {0, 2};
  for (int k = 0; k < 20; ++k) {
    CHECK(optimal_coupling_map(ref, others, 0, rng) == 1.0);
    CHECK(optimal_coupling_map(ref, others, 1, rng) == 3.0);
  }
  const std::vector<double> unsorted = {2, 0};
  CHECK(optimal_coupling_map(ref, unsorted, 0, rng) == 3.0);
  CHECK(optimal_coupling_map(ref, unsorted, 1, rng) == 1.0);
}

TEST_CASE("coupling map rejects an empty reference") {
  RngStream rng(2);
  const std::vector<double> empty, others = {1.0, 2.0};
  try {
    optimal_coupling_map(empty, others, 0, rng);
    FAIL("expected EmptyReference");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyReference);
  }
}

TEST_CASE("coupling map reproduces the reference marginal") {
  RngStream rng(3);
  std::vector<double> row(50);
  for (auto& v : row) v = rng.exponential();
  std::sort(row.begin(), row.end());
  std::vector<double> others(37);
  for (std::size_t i = 0; i < others.size(); ++i) others[i] = i % 4 == 0 ? 0.0 : rng.uniform();
  std::vector<double> counts(row.size(), 0.0);
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    const std::size_t sel = rng.below(others.size());
    const double v = optimal_coupling_map(row, others, sel, rng);
    const auto it = std::lower_bound(row.begin(), row.end(), v);
    REQUIRE(it != row.end());
    REQUIRE(*it == v);
    counts[static_cast<std::size_t>(it - row.begin())] += 1.0;
  }
  const std::vector<double> probs(row.size(), 1.0 / static_cast<double>(row.size()));
  CHECK(oracle::chi_square(counts, probs) < oracle::chi_square_critical_001(static_cast<int>(row.size()) - 1));
}

TEST_CASE("coupling map attains W1 on small laws") {
  RngStream rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(4), m = 1 + rng.below(4);
    std::vector<double> others(n), row(m);
    for (auto& v : others) v = trial % 3 == 0 ? static_cast<double>(rng.below(3)) : 2.0 * rng.uniform();
    for (auto& v : row) v = trial % 3 == 0 ? static_cast<double>(rng.below(3)) : 2.0 * rng.uniform();
    std::sort(row.begin(), row.end());
    const double exact = w1_empirical(EmpiricalDistribution(others), EmpiricalDistribution(row));
    CHECK(std::abs(exact - oracle::w1_assignment(others, row)) <= 1e-12);
    std::vector<double> gaps(30000);
    for (auto& g : gaps) {
      const std::size_t sel = rng.below(n);
      g = std::abs(others[sel] - optimal_coupling_map(row, others, sel, rng));
    }
    const double se = oracle::standard_error(gaps);
    CHECK(std::abs(oracle::mean(gaps) - exact) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("excluding variant agrees with the explicit one") {
  RngStream rng(5);
  std::vector<double> row(20);
  for (auto& v : row) v = rng.exponential();
  std::sort(row.begin(), row.end());
  std::vector<double> x(9);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 3 == 0 ? 0.5 : rng.uniform();
  for (std::size_t skip = 0; skip < x.size(); ++skip) {
    std::vector<double> others;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (i != skip) others.push_back(x[i]);
    for (std::size_t sel = 0; sel < x.size(); ++sel) {
      if (sel == skip) continue;
      RngStream a(100 + skip * 10 + sel), b(100 + skip * 10 + sel);
      const std::size_t idx = sel < skip ? sel : sel - 1;
      CHECK(optimal_coupling_map_excluding(row, x, skip, sel, a) == optimal_coupling_map(row, others, idx, b));
    }
  }
}

TEST_CASE("coupled system argument checks") {
  CoupledOptions opt;
  opt.replicas = 2;
  opt.eval_times = {0.0, 0.5};
  const QuantileTable t = zero_table(1.0);
  const ModelParams k3{1, 1, 3, 1};
  CHECK_THROWS_AS(simulate_coupled_system(k3, 10, InitLaw::constant(0.0), t, 1.0, 10, RngStream(6), opt), Error);
  try {
    simulate_coupled_system(kSuper, 10, InitLaw::constant(0.0), t, 2.0, 10, RngStream(6), opt);
    FAIL("expected OutOfDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfDomain);
  }
  QuantileTable late;
  late.add_row(0.5, {0.0});
  late.add_row(1.0, {0.0});
  CHECK_THROWS_AS(simulate_coupled_system(kSuper, 10, InitLaw::constant(0.0), late, 1.0, 10, RngStream(6), opt),
                  Error);
}

TEST_CASE("degenerate table with a dead start keeps distance zero") {
  CoupledOptions opt;
  opt.replicas = 20;
  opt.eval_times = {0.0, 0.5, 1.0};
  const CouplingCurve c =
      simulate_coupled_system(kSuper, 20, InitLaw::constant(0.0), zero_table(1.0), 1.0, 20, RngStream(7), opt);
  for (double h : c.h_hat) CHECK(h == 0.0);
}

TEST_CASE("coupled system starts at distance zero and stays inside the crude bound") {
  PicardOptions po;
  po.paths = 3000;
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(0.1 * k);
  po.table_times = grid;
  const auto sol = picard_solve(kSuper, InitLaw::constant(1.0), 2.0, 0.01, RngStream(8), po);
  CoupledOptions opt;
  opt.replicas = 60;
  opt.eval_times = grid;
  const CouplingCurve c = simulate_coupled_system(kSuper, 60, InitLaw::constant(1.0), sol.table, 2.0, 30,
                                                  RngStream(9), opt);
  CHECK(c.h_hat.front() == 0.0);
  CHECK(c.tracked == 30);
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    CHECK(c.h_hat[k] >= 0.0);
    CHECK(c.h_hat[k] <= c.x_mean[k] + c.z_mean[k] + 1e-12);
  }
  CHECK(c.h_hat.back() > 0.0);
  opt.workers = 3;
  const CouplingCurve d = simulate_coupled_system(kSuper, 60, InitLaw::constant(1.0), sol.table, 2.0, 30,
                                                  RngStream(9), opt);
  CHECK(c.h_hat == d.h_hat);
}

TEST_CASE("chaos error needs exact table rows") {
  QuantileTable t = zero_table(1.0);
  const std::vector<std::size_t> ns = {5};
  const std::vector<double> bad = {0.5};
  ChaosOptions co;
  co.replicas = 3;
  try {
    chaos_error_curve(kSub, ns, bad, InitLaw::constant(1.0), t, RngStream(10), co);
    FAIL("expected OutOfDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfDomain);
  }
}

TEST_CASE("i.i.d. control decays like the empirical-measure rate") {
  RngStream rng(11);
  QuantileTable t;
  std::vector<double> row(20000);
  for (auto& v : row) v = rng.exponential();
  t.add_row(0.0, row);
  t.add_row(1.0, row);
  ChaosOptions co;
  co.replicas = 300;
  co.iid_control = true;
  const std::vector<std::size_t> ns = {50, 200, 800};
  const std::vector<double> times = {1.0};
  const auto rows = chaos_error_curve(kSub, ns, times, InitLaw::constant(1.0), t, RngStream(12), co);
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.push_back(static_cast<double>(r.n));
    y.push_back(r.w1.value);
  }
  const FitResult f = fit_log_scaling(x, y, FitMode::LogLog);
  CHECK(f.slope > -0.6);
  CHECK(f.slope < -0.4);
}

TEST_CASE("chaos and coupling csv layout") {
  ChaosRow r;
  r.n = 10;
  r.t = 1.0;
  r.w1.value = 0.5;
  r.w1.ci_half = 0.1;
  r.replicas = 3;
  r.table_m = 7;
  std::ostringstream a;
  write_chaos_csv(a, std::vector<ChaosRow>{r});
  CHECK(a.str() == "N,t,w1_mean,w1_ci,replicas,table_M\n10,1,0.5,0.1,3,7\n");
  CouplingCurve c;
  c.n = 4;
  c.times = {0.0};
  c.h_hat = {0.0};
  c.ci_half = {0.0};
  std::ostringstream b;
  write_coupling_csv(b, std::vector<CouplingCurve>{c});
  CHECK(b.str() == "t,h_hat,ci,N\n0,0,0,4\n");
}
