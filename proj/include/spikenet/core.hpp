#pragma once

#include <string>

namespace spikenet {

/// Rates of the spiking network: decay `mu`, firing slope `gamma`,
/// impulse range `kappa` and impulse magnitude `rho`.
///
/// Validated on construction. The reproduction number and the chaos
/// threshold are computed once and cached, since both feed hot loops and
/// every acceptance check.
class ModelParams {
 public:
  ModelParams(double mu, double gamma, int kappa, double rho);

  double mu() const noexcept { return mu_; }
  double gamma() const noexcept { return gamma_; }
  int kappa() const noexcept { return kappa_; }
  double rho() const noexcept { return rho_; }

  /// gamma / mu, the scale of the omega metric and of the firing-time law.
  double gamma_over_mu() const noexcept { return gamma_ / mu_; }
  double theta() const noexcept { return theta_; }
  double theta_c() const noexcept { return theta_c_; }

  ModelParams with_gamma(double gamma) const { return {mu_, gamma, kappa_, rho_}; }

  bool operator==(const ModelParams&) const = default;

 private:
  double mu_;
  double gamma_;
  int kappa_;
  double rho_;
  double theta_;
  double theta_c_;
};

enum class RegimeTag { Subcritical, Critical, Supercritical };

struct Regime {
  RegimeTag tag;
  double theta;
};

inline constexpr double kDefaultCriticalTol = 1e-9;

/// kappa * (1 - exp(-rho*gamma/mu)), in (0, kappa).
double reproduction_number(const ModelParams& params);

/// kappa * rho * gamma / mu; never below the reproduction number.
double chaos_threshold(const ModelParams& params);

/// 1 - exp(-(gamma/mu)|x - y|), a bounded metric on [0, inf).
double omega_distance(double x, double y, const ModelParams& params);

Regime classify_regime(const ModelParams& params, double tol = kDefaultCriticalTol);

const char* regime_name(RegimeTag tag) noexcept;

/// Benchmark sets shared by the scenarios: kappa=2, rho=mu=1 and
/// gamma = 0.2 (SUB), ln 2 (CRIT) or 1 (SUPER).
enum class Benchmark { Sub, Crit, Super };

ModelParams benchmark_params(Benchmark which);
Benchmark parse_benchmark(const std::string& name);
const char* benchmark_name(Benchmark which) noexcept;

}  // namespace spikenet
