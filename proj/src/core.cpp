#include "spikenet/core.hpp"

#include <cmath>
#include <numbers>

#include "spikenet/error.hpp"

namespace spikenet {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AllSilent: return "AllSilent";
    case ErrorCode::RangeTooLarge: return "RangeTooLarge";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::EmptyDistribution: return "EmptyDistribution";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

ModelParams::ModelParams(double mu, double gamma, int kappa, double rho)
    : mu_(mu), gamma_(gamma), kappa_(kappa), rho_(rho) {
  if (!positive_finite(mu)) fail(ErrorCode::InvalidArgument, "mu must be a positive finite rate");
  if (!positive_finite(gamma))
    fail(ErrorCode::InvalidArgument, "gamma must be a positive finite rate");
  if (kappa < 1) fail(ErrorCode::InvalidArgument, "kappa must be an integer >= 1");
  if (!positive_finite(rho)) fail(ErrorCode::InvalidArgument, "rho must be a positive finite magnitude");
  const double x = rho * gamma / mu;
  // expm1 keeps full relative precision when rho*gamma/mu is small.
  theta_ = -static_cast<double>(kappa) * std::expm1(-x);
  theta_c_ = static_cast<double>(kappa) * x;
}

double reproduction_number(const ModelParams& params) { return params.theta(); }

double chaos_threshold(const ModelParams& params) { return params.theta_c(); }

double omega_distance(double x, double y, const ModelParams& params) {
  return -std::expm1(-params.gamma_over_mu() * std::abs(x - y));
}

Regime classify_regime(const ModelParams& params, double tol) {
  if (!(tol >= 0.0)) fail(ErrorCode::InvalidArgument, "regime tolerance must be >= 0");
  const double theta = params.theta();
  RegimeTag tag = RegimeTag::Critical;
  if (theta < 1.0 - tol) tag = RegimeTag::Subcritical;
  else if (theta > 1.0 + tol) tag = RegimeTag::Supercritical;
  return {tag, theta};
}

const char* regime_name(RegimeTag tag) noexcept {
  switch (tag) {
    case RegimeTag::Subcritical: return "Subcritical";
    case RegimeTag::Critical: return "Critical";
    case RegimeTag::Supercritical: return "Supercritical";
  }
  return "Unknown";
}

ModelParams benchmark_params(Benchmark which) {
  switch (which) {
    case Benchmark::Sub: return {1.0, 0.2, 2, 1.0};
    case Benchmark::Crit: return {1.0, std::numbers::ln2, 2, 1.0};
    case Benchmark::Super: return {1.0, 1.0, 2, 1.0};
  }
  fail(ErrorCode::InvalidArgument, "unknown benchmark");
}

Benchmark parse_benchmark(const std::string& name) {
  if (name == "SUB") return Benchmark::Sub;
  if (name == "CRIT") return Benchmark::Crit;
  if (name == "SUPER") return Benchmark::Super;
  fail(ErrorCode::ConfigError, "unknown benchmark '" + name + "' (expected SUB, CRIT or SUPER)");
}

const char* benchmark_name(Benchmark which) noexcept {
  switch (which) {
    case Benchmark::Sub: return "SUB";
    case Benchmark::Crit: return "CRIT";
    case Benchmark::Super: return "SUPER";
  }
  return "?";
}

}  // namespace spikenet
