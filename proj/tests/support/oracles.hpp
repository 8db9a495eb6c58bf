#pragma once

// Test-side reference computations. Nothing here calls into the library
// code it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

/// sup |F_n - F| for a continuous reference CDF.
inline double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Two-sample KS statistic by direct merge.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                             static_cast<double>(j) / static_cast<double>(b.size())));
  }
  return d;
}

/// Asymptotic 1% critical value of the KS statistic, c(0.01) = 1.6276.
inline double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return 1.6276 * std::sqrt((nn + mm) / (nn * mm));
}

/// Pearson chi-square statistic for observed counts vs expected probabilities.
inline double chi_square(const std::vector<double>& counts, const std::vector<double>& probs) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  double s = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double e = n * probs[k];
    s += (counts[k] - e) * (counts[k] - e) / e;
  }
  return s;
}

/// Upper 0.1% point of chi-square with `dof` degrees of freedom
/// (Wilson-Hilferty, accurate to a few percent for dof >= 1).
inline double chi_square_critical_001(int dof) {
  const double k = dof;
  const double z = 3.090232306167813;
  const double c = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * c * c * c;
}

inline double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double standard_error(const std::vector<double>& xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

/// Minimum over all permutations of the mean absolute matched difference.
inline double w1_bruteforce_equal(std::vector<double> a, std::vector<double> b) {
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[perm[i]]);
    best = std::min(best, s / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Exact W1 for unequal sizes: replicate each point so both sets have
/// lcm(n, m) atoms of equal mass, then solve the square assignment problem
/// with the Hungarian algorithm.
inline double w1_assignment(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t l = std::lcm(a.size(), b.size());
  std::vector<double> aa;
  std::vector<double> bb;
  for (double v : a)
    for (std::size_t k = 0; k < l / a.size(); ++k) aa.push_back(v);
  for (double v : b)
    for (std::size_t k = 0; k < l / b.size(); ++k) bb.push_back(v);
  const std::size_t n = l;
  // Hungarian algorithm (potentials form), 1-based.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), INFINITY);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = INFINITY;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = std::abs(aa[i0 - 1] - bb[j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double cost = 0.0;
  for (std::size_t j = 1; j <= n; ++j) cost += std::abs(aa[p[j] - 1] - bb[j - 1]);
  return cost / static_cast<double>(n);
}

}  // namespace oracle
