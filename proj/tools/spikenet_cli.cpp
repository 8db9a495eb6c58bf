#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spikenet/spikenet.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;

struct Family {
  std::string default_scenario;
  std::set<std::string> allowed;
};

const std::map<std::string, Family>& families() {
  static const std::map<std::string, Family> f = {
      {"simulate", {"simulate", {"simulate", "no-reset", "generator"}}},
      {"meanfield", {"observables", {"observables", "bound-check", "oracle-crosscheck"}}},
      {"chaos", {"chaos-rate", {"chaos-rate"}}},
      {"persistence", {"persistence", {"persistence"}}},
      {"sweep", {"phase-sweep", {"phase-sweep"}}},
  };
  return f;
}

struct RunFlags {
  std::string config;
  std::string out;
  std::string format;
  unsigned long long seed = 0;
  unsigned workers = 0;
  bool seed_set = false;
};

int config_error(const std::string& msg) {
  std::cerr << "config error: " << msg << "\n";
  return kExitConfig;
}

bool is_config_status(spikenet_status s) {
  return s == SPIKENET_CONFIG_ERROR || s == SPIKENET_UNKNOWN_SCENARIO;
}

int run_command(const std::string& command, const RunFlags& flags) {
  const Family& fam = families().at(command);
  nlohmann::json doc;
  if (flags.config.empty()) return config_error("--config is required");
  {
    std::ifstream in(flags.config);
    if (!in) return config_error("cannot read " + flags.config);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      return config_error(std::string("invalid JSON in ") + flags.config + ": " + e.what());
    }
  }
  if (!doc.is_object()) return config_error("config must be a JSON object");
  if (!doc.contains("scenario")) doc["scenario"] = fam.default_scenario;
  if (!doc["scenario"].is_string()) return config_error("config field 'scenario': must be a string");
  const std::string scenario = doc["scenario"].get<std::string>();
  if (!fam.allowed.count(scenario))
    return config_error("scenario '" + scenario + "' does not belong to the '" + command + "' command");

  spikenet_config* cfg = nullptr;
  spikenet_status st = spikenet_config_parse(doc.dump().c_str(), &cfg);
  if (st != SPIKENET_OK) return config_error(spikenet_last_error());
  if (flags.seed_set) spikenet_config_set_seed(cfg, flags.seed);
  if (!flags.out.empty()) spikenet_config_set_output_dir(cfg, flags.out.c_str());
  if (flags.workers > 0 && spikenet_config_set_workers(cfg, flags.workers) != SPIKENET_OK) {
    spikenet_config_free(cfg);
    return config_error(spikenet_last_error());
  }
  if (!flags.format.empty() && spikenet_config_set_format(cfg, flags.format.c_str()) != SPIKENET_OK) {
    spikenet_config_free(cfg);
    return config_error(spikenet_last_error());
  }

  spikenet_manifest* m = nullptr;
  st = spikenet_run_scenario(cfg, &m);
  spikenet_config_free(cfg);
  if (st != SPIKENET_OK) {
    std::cerr << "error (" << spikenet_status_name(st) << "): " << spikenet_last_error() << "\n";
    return is_config_status(st) ? kExitConfig : kExitAssertion;
  }
  std::cout << scenario << " -> " << spikenet_manifest_output_dir(m) << "\n";
  const size_t n = spikenet_manifest_assertion_count(m);
  for (size_t i = 0; i < n; ++i) {
    const char* name = nullptr;
    const char* detail = nullptr;
    int pass = 0;
    spikenet_manifest_assertion(m, i, &name, &pass, &detail);
    std::cout << (pass ? "PASS " : "FAIL ") << name << " (" << detail << ")\n";
  }
  const int code = spikenet_manifest_passed(m) ? kExitOk : kExitAssertion;
  spikenet_manifest_free(m);
  return code;
}

void print_criterion(int id, const char* name, int pass, const char* detail, double seconds, void*) {
  std::printf("%s #%d %s (%.1fs): %s\n", pass ? "PASS" : "FAIL", id, name, seconds, detail);
  std::fflush(stdout);
}

std::vector<int> parse_only(const std::string& text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int id = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument(item);
    ids.push_back(id);
  }
  return ids;
}

int validate_command(const std::string& only, const std::string& out, unsigned workers, bool fault) {
  std::vector<int> ids;
  try {
    ids = parse_only(only);
  } catch (const std::exception&) {
    return config_error("--only expects a comma-separated list of criterion ids");
  }
  spikenet_validate_options opt;
  spikenet_validate_options_init(&opt);
  opt.only = ids.empty() ? nullptr : ids.data();
  opt.only_count = ids.size();
  opt.workers = workers == 0 ? 1 : workers;
  opt.inject_theta_fault = fault ? 1 : 0;
  opt.on_result = print_criterion;
  spikenet_report* rep = nullptr;
  const spikenet_status st = spikenet_validate(&opt, &rep);
  if (st != SPIKENET_OK) {
    std::cerr << "error (" << spikenet_status_name(st) << "): " << spikenet_last_error() << "\n";
    return st == SPIKENET_INVALID_ARGUMENT ? kExitConfig : kExitAssertion;
  }
  const int passed = spikenet_report_passed(rep);
  if (!out.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    const auto path = std::filesystem::path(out) / "report.json";
    const auto tmp = std::filesystem::path(out) / "report.json.tmp";
    {
      std::ofstream f(tmp);
      f << spikenet_report_json(rep);
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) std::cerr << "cannot write " << path << ": " << ec.message() << "\n";
    else std::cout << "report: " << path.string() << "\n";
  }
  const size_t n = spikenet_report_count(rep);
  size_t ok = 0;
  for (size_t i = 0; i < n; ++i) {
    int pass = 0;
    spikenet_report_criterion(rep, i, nullptr, &pass, nullptr, nullptr);
    ok += pass ? 1 : 0;
  }
  std::cout << ok << "/" << n << " criteria passed\n";
  spikenet_report_free(rep);
  return passed ? kExitOk : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking-network simulation and mean-field experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", spikenet_version());

  std::map<std::string, RunFlags> flags;
  const std::map<std::string, std::string> help = {
      {"simulate", "finite-network runs (simulate, no-reset, generator)"},
      {"meanfield", "mean-field solves (observables, bound-check, oracle-crosscheck)"},
      {"chaos", "propagation-of-chaos error table (chaos-rate)"},
      {"persistence", "death-time scaling in N (persistence)"},
      {"sweep", "regime sweep over a gamma grid (phase-sweep)"},
  };
  for (const auto& [name, text] : help) {
    RunFlags& f = flags[name];
    CLI::App* sub = app.add_subcommand(name, text);
    sub->add_option("--config", f.config, "experiment config (JSON)")->required();
    sub->add_option("--seed", f.seed, "root seed, overrides the config");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", f.format, "event/snapshot format")->check(CLI::IsMember({"csv", "jsonl"}));
  }
  std::string only, vout;
  unsigned vworkers = 1;
  bool fault = false;
  CLI::App* val = app.add_subcommand("validate", "run the acceptance criteria at pinned seeds");
  val->add_option("--only", only, "comma-separated criterion ids");
  val->add_option("--out", vout, "directory for report.json");
  val->add_option("--workers", vworkers, "worker threads")->check(CLI::PositiveNumber);
  val->add_flag("--inject-theta-fault", fault, "validate against a sign-flipped theta (mutation test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (auto& [name, f] : flags) {
    CLI::App* sub = app.get_subcommand(name);
    if (!sub->parsed()) continue;
    f.seed_set = sub->count("--seed") > 0;
    return run_command(name, f);
  }
  return validate_command(only, vout, vworkers, fault);
}
