#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "spikenet/error.hpp"
#include "spikenet/experiments.hpp"

using namespace spikenet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& leaf) {
  const fs::path p = fs::temp_directory_path() / ("spikenet-test-" + std::to_string(::getpid())) / leaf;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  FAIL("expected ConfigError for " << text);
  return {};
}

bool mentions(const std::string& msg, const std::string& field) {
  return msg.find("'" + field + "'") != std::string::npos;
}

}  // namespace

TEST_CASE("config errors name the offending field") {
  CHECK(mentions(config_error(R"({"benchmark":"SUB"})"), "scenario"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","benchmark":"SUB","bogus":1})"), "bogus"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","benchmark":"HOT"})"), "benchmark"));
  CHECK(mentions(config_error(R"({"scenario":"simulate"})"), "params"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","params":{"mu":-1}})"), "params"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","params":{"kappa":1.5}})"), "params.kappa"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","benchmark":"SUB","N":2})"), "N"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","benchmark":"SUB","N":"ten"})"), "N"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","benchmark":"SUB","dt":0})"), "dt"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","benchmark":"SUB","format":"xml"})"), "format"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","benchmark":"SUB","seed":-3})"), "seed"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","benchmark":"SUB","horizon":5,"eval_times":[6]})"),
                 "eval_times"));
  CHECK(mentions(config_error(R"({"scenario":"simulate","benchmark":"SUB","init":{"law":"beta"}})"), "init.law"));
  CHECK(mentions(config_error(R"({"scenario":"phase-sweep","benchmark":"SUB"})"), "gamma_grid"));
  CHECK(mentions(config_error(R"({"scenario":"chaos-rate","benchmark":"SUB","N_list":[10]})"), "N_list"));
  CHECK(config_error("[1,2]").find("object") != std::string::npos);
  CHECK(config_error("{not json").find("JSON") != std::string::npos);
}

TEST_CASE("unknown scenario has its own error code") {
  try {
    parse_config(R"({"scenario":"teleport","benchmark":"SUB"})");
    FAIL("expected UnknownScenario");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownScenario);
  }
}

TEST_CASE("config parse and echo") {
  const ExperimentConfig c = parse_config(
      R"({"scenario":"simulate","benchmark":"CRIT","N":12,"init":{"law":"uniform","lo":0.5,"hi":2},"seed":9})");
  CHECK(c.params.gamma() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(c.params.kappa() == 2);
  CHECK(c.n == 12);
  CHECK(c.seed == 9);
  CHECK(c.init.kind() == InitLaw::Kind::Uniform);
  const json echo = json::parse(config_to_json(c));
  CHECK(echo["benchmark"] == "CRIT");
  CHECK(echo["N"] == 12);
  CHECK(echo["init"]["hi"] == 2.0);
  const ExperimentConfig back = parse_config(echo.dump());
  CHECK(back.params.gamma() == c.params.gamma());
  CHECK(back.n == c.n);
  const ExperimentConfig over = parse_config(R"({"scenario":"simulate","benchmark":"SUB","params":{"gamma":0.5}})");
  CHECK(over.params.gamma() == 0.5);
  CHECK(over.params.kappa() == 2);
}

TEST_CASE("simulate writes events, snapshots and a manifest") {
  const fs::path out = scratch("simulate");
  ExperimentConfig c = parse_config(
      R"({"scenario":"simulate","benchmark":"SUB","N":5,"replicas":3,"horizon":2,"eval_times":[0,1]})");
  c.output_dir = out.string();
  const RunManifest m = run_scenario(c);
  CHECK(m.output_dir == out);
  for (const char* f : {"events.csv", "snapshots.csv", "runs.csv", "manifest.json"}) CHECK(fs::exists(out / f));
  const json doc = json::parse(slurp(out / "manifest.json"));
  CHECK(doc["scenario"] == "simulate");
  CHECK(doc["passed"] == true);
  CHECK(doc["config"]["N"] == 5);
  const std::string snaps = slurp(out / "snapshots.csv");
  CHECK(snaps.rfind("replica,t,neuron,x\n", 0) == 0);
  CHECK(std::count(snaps.begin(), snaps.end(), '\n') == 1 + 3 * 2 * 5);
  CHECK(slurp(out / "events.csv").rfind("replica,k,t,firer,excited\n", 0) == 0);
  for (const auto& e : fs::directory_iterator(out.parent_path()))
    CHECK(e.path().filename().string().find(".tmp-") == std::string::npos);

  c.format = "jsonl";
  run_scenario(c);
  CHECK(fs::exists(out / "events.jsonl"));
  CHECK(!fs::exists(out / "events.csv"));
  std::ifstream in(out / "snapshots.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const json j = json::parse(line);
    CHECK(j["x"].size() == 5);
    ++lines;
  }
  CHECK(lines == 6);
}

TEST_CASE("reruns with equal seeds reproduce byte for byte") {
  ExperimentConfig c = parse_config(R"({"scenario":"simulate","benchmark":"SUPER","N":6,"replicas":4,"horizon":1})");
  const fs::path a = scratch("rerun-a"), b = scratch("rerun-b");
  c.output_dir = a.string();
  run_scenario(c);
  c.output_dir = b.string();
  c.workers = 3;
  run_scenario(c);
  CHECK(slurp(a / "events.csv") == slurp(b / "events.csv"));
  CHECK(slurp(a / "runs.csv") == slurp(b / "runs.csv"));
  c.seed = 2;
  run_scenario(c);
  CHECK(slurp(a / "events.csv") != slurp(b / "events.csv"));
}

TEST_CASE("phase sweep labels the threshold as critical") {
  ExperimentConfig c = parse_config(
      R"({"scenario":"phase-sweep","params":{"mu":1,"gamma":1,"kappa":2,"rho":1},"gamma_grid":[0.2,0.6931471805599453,1],"horizon":4,"dt":0.05,"paths":2000})");
  c.output_dir = scratch("sweep").string();
  const RunManifest m = run_scenario(c);
  std::ifstream in(m.output_dir / "sweep.csv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header.rfind("gamma,theta,theta_c,regime,", 0) == 0);
  std::vector<std::string> regimes;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (int k = 0; k < 4; ++k) std::getline(ss, cell, ',');
    regimes.push_back(cell);
  }
  REQUIRE(regimes.size() == 3);
  CHECK(regimes[0] == "Subcritical");
  CHECK(regimes[1] == "Critical");
  CHECK(regimes[2] == "Supercritical");
  CHECK(m.all_passed());
}

TEST_CASE("no-reset growth matches the linear drift") {
  ExperimentConfig c = parse_config(
      R"({"scenario":"no-reset","benchmark":"SUPER","N":20,"replicas":400,"horizon":3})");
  c.output_dir = scratch("growth").string();
  const RunManifest m = run_scenario(c);
  CHECK(m.files.size() == 2);
  CHECK(m.all_passed());
}

TEST_CASE("output directory resolution") {
  ExperimentConfig c = parse_config(R"({"scenario":"simulate","benchmark":"SUB","seed":42})");
  c.output_dir = "explicit";
  CHECK(resolve_output_dir(c) == fs::path("explicit"));
  c.output_dir.clear();
  const char* old = std::getenv(kOutputRootEnv);
  const std::string saved = old ? old : "";
  ::setenv(kOutputRootEnv, "/tmp/root", 1);
  CHECK(resolve_output_dir(c) == fs::path("/tmp/root/simulate-42"));
  ::unsetenv(kOutputRootEnv);
  CHECK(resolve_output_dir(c) == fs::path("spikenet-out/simulate-42"));
  if (old) ::setenv(kOutputRootEnv, saved.c_str(), 1);
}

TEST_CASE("a failing run leaves the previous outputs in place") {
  const fs::path out = scratch("keep");
  ExperimentConfig c = parse_config(R"({"scenario":"simulate","benchmark":"SUB","N":5,"replicas":2,"horizon":1})");
  c.output_dir = out.string();
  run_scenario(c);
  const std::string before = slurp(out / "runs.csv");
  c.scenario = "teleport";
  CHECK_THROWS_AS(run_scenario(c), Error);
  CHECK(slurp(out / "runs.csv") == before);
}
