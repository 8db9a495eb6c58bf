#include "spikenet/spikenet.h"

#include <cmath>
#include <exception>
#include <new>
#include <string>

#include "spikenet/core.hpp"
#include "spikenet/error.hpp"
#include "spikenet/experiments.hpp"
#include "spikenet/validation.hpp"

struct spikenet_config {
  spikenet::ExperimentConfig cfg;
  std::string json;
};

struct spikenet_manifest {
  spikenet::RunManifest m;
  std::string json;
  std::string dir;
};

struct spikenet_report {
  spikenet::ValidationReport r;
  std::string json;
};

namespace {

thread_local std::string g_last_error;

spikenet_status to_status(spikenet::ErrorCode c) {
  using spikenet::ErrorCode;
  switch (c) {
    case ErrorCode::InvalidArgument: return SPIKENET_INVALID_ARGUMENT;
    case ErrorCode::AllSilent: return SPIKENET_ALL_SILENT;
    case ErrorCode::RangeTooLarge: return SPIKENET_RANGE_TOO_LARGE;
    case ErrorCode::OutOfDomain: return SPIKENET_OUT_OF_DOMAIN;
    case ErrorCode::TooFewSamples: return SPIKENET_TOO_FEW_SAMPLES;
    case ErrorCode::NoConvergence: return SPIKENET_NO_CONVERGENCE;
    case ErrorCode::EmptyReference: return SPIKENET_EMPTY_REFERENCE;
    case ErrorCode::EmptyDistribution: return SPIKENET_EMPTY_DISTRIBUTION;
    case ErrorCode::NonPositiveValue: return SPIKENET_NON_POSITIVE_VALUE;
    case ErrorCode::UnknownScenario: return SPIKENET_UNKNOWN_SCENARIO;
    case ErrorCode::ConfigError: return SPIKENET_CONFIG_ERROR;
    case ErrorCode::IoError: return SPIKENET_IO_ERROR;
  }
  return SPIKENET_INTERNAL_ERROR;
}

template <class F>
spikenet_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return SPIKENET_OK;
  } catch (const spikenet::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SPIKENET_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SPIKENET_INTERNAL_ERROR;
  }
}

spikenet_status null_arg(const char* what) {
  g_last_error = std::string(what) + " is NULL";
  return SPIKENET_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* spikenet_version(void) { return spikenet::kArtifactVersion; }

const char* spikenet_status_name(spikenet_status s) {
  switch (s) {
    case SPIKENET_OK: return "OK";
    case SPIKENET_INVALID_ARGUMENT: return "InvalidArgument";
    case SPIKENET_ALL_SILENT: return "AllSilent";
    case SPIKENET_RANGE_TOO_LARGE: return "RangeTooLarge";
    case SPIKENET_OUT_OF_DOMAIN: return "OutOfDomain";
    case SPIKENET_TOO_FEW_SAMPLES: return "TooFewSamples";
    case SPIKENET_NO_CONVERGENCE: return "NoConvergence";
    case SPIKENET_EMPTY_REFERENCE: return "EmptyReference";
    case SPIKENET_EMPTY_DISTRIBUTION: return "EmptyDistribution";
    case SPIKENET_NON_POSITIVE_VALUE: return "NonPositiveValue";
    case SPIKENET_UNKNOWN_SCENARIO: return "UnknownScenario";
    case SPIKENET_CONFIG_ERROR: return "ConfigError";
    case SPIKENET_IO_ERROR: return "IoError";
    case SPIKENET_INTERNAL_ERROR: return "InternalError";
  }
  return "Unknown";
}

const char* spikenet_last_error(void) { return g_last_error.c_str(); }

spikenet_status spikenet_reproduction_number(double mu, double gamma, int kappa, double rho, double* out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = spikenet::ModelParams(mu, gamma, kappa, rho).theta(); });
}

spikenet_status spikenet_chaos_threshold(double mu, double gamma, int kappa, double rho, double* out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = spikenet::ModelParams(mu, gamma, kappa, rho).theta_c(); });
}

spikenet_status spikenet_classify_regime(double mu, double gamma, int kappa, double rho, const char** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = spikenet::regime_name(spikenet::classify_regime({mu, gamma, kappa, rho}).tag);
  });
}

spikenet_status spikenet_config_parse(const char* json_text, spikenet_config** out) {
  if (!json_text) return null_arg("json_text");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto* c = new spikenet_config{spikenet::parse_config(json_text), {}};
    c->json = spikenet::config_to_json(c->cfg);
    *out = c;
  });
}

spikenet_status spikenet_config_load(const char* path, spikenet_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto* c = new spikenet_config{spikenet::load_config(path), {}};
    c->json = spikenet::config_to_json(c->cfg);
    *out = c;
  });
}

void spikenet_config_free(spikenet_config* config) { delete config; }

spikenet_status spikenet_config_set_seed(spikenet_config* config, uint64_t seed) {
  if (!config) return null_arg("config");
  return guarded([&] {
    config->cfg.seed = seed;
    config->json = spikenet::config_to_json(config->cfg);
  });
}

spikenet_status spikenet_config_set_workers(spikenet_config* config, unsigned workers) {
  if (!config) return null_arg("config");
  return guarded([&] {
    spikenet::ExperimentConfig next = config->cfg;
    next.workers = workers;
    spikenet::validate_config(next);
    config->cfg = next;
    config->json = spikenet::config_to_json(config->cfg);
  });
}

spikenet_status spikenet_config_set_output_dir(spikenet_config* config, const char* dir) {
  if (!config) return null_arg("config");
  if (!dir) return null_arg("dir");
  return guarded([&] {
    config->cfg.output_dir = dir;
    config->json = spikenet::config_to_json(config->cfg);
  });
}

spikenet_status spikenet_config_set_format(spikenet_config* config, const char* format) {
  if (!config) return null_arg("config");
  if (!format) return null_arg("format");
  return guarded([&] {
    spikenet::ExperimentConfig next = config->cfg;
    next.format = format;
    spikenet::validate_config(next);
    config->cfg = next;
    config->json = spikenet::config_to_json(config->cfg);
  });
}

const char* spikenet_config_scenario(const spikenet_config* config) {
  return config ? config->cfg.scenario.c_str() : "";
}

const char* spikenet_config_json(const spikenet_config* config) { return config ? config->json.c_str() : ""; }

spikenet_status spikenet_run_scenario(const spikenet_config* config, spikenet_manifest** out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto* m = new spikenet_manifest{spikenet::run_scenario(config->cfg), {}, {}};
    m->json = m->m.to_json(config->cfg);
    m->dir = m->m.output_dir.string();
    *out = m;
  });
}

void spikenet_manifest_free(spikenet_manifest* manifest) { delete manifest; }

int spikenet_manifest_passed(const spikenet_manifest* manifest) {
  return manifest && manifest->m.all_passed() ? 1 : 0;
}

const char* spikenet_manifest_json(const spikenet_manifest* manifest) {
  return manifest ? manifest->json.c_str() : "";
}

const char* spikenet_manifest_output_dir(const spikenet_manifest* manifest) {
  return manifest ? manifest->dir.c_str() : "";
}

size_t spikenet_manifest_assertion_count(const spikenet_manifest* manifest) {
  return manifest ? manifest->m.assertions.size() : 0;
}

spikenet_status spikenet_manifest_assertion(const spikenet_manifest* manifest, size_t index,
                                            const char** name, int* pass, const char** detail) {
  if (!manifest) return null_arg("manifest");
  if (index >= manifest->m.assertions.size()) {
    g_last_error = "assertion index out of range";
    return SPIKENET_OUT_OF_DOMAIN;
  }
  const auto& a = manifest->m.assertions[index];
  if (name) *name = a.name.c_str();
  if (pass) *pass = a.pass ? 1 : 0;
  if (detail) *detail = a.detail.c_str();
  return SPIKENET_OK;
}

void spikenet_validate_options_init(spikenet_validate_options* options) {
  if (!options) return;
  *options = spikenet_validate_options{nullptr, 0, 1, 0, nullptr, nullptr, nullptr};
}

spikenet_status spikenet_validate(const spikenet_validate_options* options, spikenet_report** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  spikenet_validate_options o;
  spikenet_validate_options_init(&o);
  if (options) o = *options;
  if (o.only_count > 0 && !o.only) return null_arg("only");
  return guarded([&] {
    spikenet::ValidationOptions vo;
    vo.only.assign(o.only, o.only + o.only_count);
    vo.workers = o.workers == 0 ? 1 : o.workers;
    if (o.scratch_dir) vo.scratch_dir = o.scratch_dir;
    if (o.inject_theta_fault)
      vo.theta = [](const spikenet::ModelParams& p) {
        return p.kappa() * (1.0 - std::exp(p.rho() * p.gamma() / p.mu()));
      };
    if (o.on_result) {
      const auto cb = o.on_result;
      void* user = o.user;
      vo.on_result = [cb, user](const spikenet::CriterionResult& r) {
        cb(r.id, r.name.c_str(), r.pass ? 1 : 0, r.detail.c_str(), r.seconds, user);
      };
    }
    auto* rep = new spikenet_report{spikenet::validate(vo), {}};
    rep->json = rep->r.to_json();
    *out = rep;
  });
}

void spikenet_report_free(spikenet_report* report) { delete report; }

int spikenet_report_passed(const spikenet_report* report) { return report && report->r.all_passed() ? 1 : 0; }

size_t spikenet_report_count(const spikenet_report* report) { return report ? report->r.results.size() : 0; }

spikenet_status spikenet_report_criterion(const spikenet_report* report, size_t index, int* id, int* pass,
                                          const char** name, const char** detail) {
  if (!report) return null_arg("report");
  if (index >= report->r.results.size()) {
    g_last_error = "criterion index out of range";
    return SPIKENET_OUT_OF_DOMAIN;
  }
  const auto& c = report->r.results[index];
  if (id) *id = c.id;
  if (pass) *pass = c.pass ? 1 : 0;
  if (name) *name = c.name.c_str();
  if (detail) *detail = c.detail.c_str();
  return SPIKENET_OK;
}

const char* spikenet_report_json(const spikenet_report* report) { return report ? report->json.c_str() : ""; }

}  // extern "C"
