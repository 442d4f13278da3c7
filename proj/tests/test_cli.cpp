#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "codedba/cli.hpp"
#include "codedba/waterfill.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace codedba;
using namespace codedba::cli;
using doctest::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "codedba_cli_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(CLI_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_path(const std::string& name) { return std::string(CONFIG_DIR) + "/" + name; }

std::string message_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

const char* kSmallSweep = R"({
  "codebook": {"kind": "hamming74"},
  "phy": {"p_e": 0.3},
  "phi_s_dBm": 6.0,
  "rate_grid_bps": [2e9, 4e9],
  "seed": 9,
  "trials": 4000
})";

}  // namespace

TEST_CASE("config defaults") {
  const auto cfg = parse_run_config(R"({"codebook": {"kind": "hamming74"}})");
  const auto& s = cfg.scenario;
  CHECK(cfg.schemes.size() == 1);
  CHECK(s.phy.noise_psd == Approx(dbm_to_watts(-173.0)));
  CHECK(s.phy.bandwidth == 500e6);
  CHECK(s.phy.symbol_time == Approx(2e-9));
  CHECK(s.phy.carrier_freq == 30e9);
  CHECK(s.phy.d_max == 10.0);
  CHECK(s.phy.p_e == 0.3);
  CHECK(s.phy.rho == 1e-3);
  CHECK(s.frame.frame_s == 20e-3);
  CHECK(s.frame.slot_s == 10e-6);
  CHECK(s.error_mode == ErrorMode::AnalyticInjection);
  CHECK_FALSE(s.phi_s_override.has_value());
}

TEST_CASE("config rejections carry line numbers") {
  CHECK(message_of("{\n  \"codebook\": {\"kind\": \"hamming74\"},\n  \"bogus\": 1\n}")
            .rfind("line 3: unknown key 'bogus'", 0) == 0);
  CHECK(message_of("{\n \"codebook\": {\"kind\": \"hamming74\"},\n \"phy\": {\n  \"p_e\": 1.2}}")
            .rfind("line 4:", 0) == 0);
  CHECK(message_of("{\n \"codebook\": {\"kind\": \"hamming74\"},\n \"phy\": {\"pe\": 0.1}}")
            .find("unknown key 'phy.pe'") != std::string::npos);
  CHECK(message_of("{\"codebook\": {\"kind\": \"exhaustive\"}}").find("needs 'slots'") !=
        std::string::npos);
  CHECK(message_of("{\"codebook\": {\"kind\": \"hamming74\"}, \"users\": {\"distances_m\": [12]}}")
            .find("d_max") != std::string::npos);
  CHECK(message_of("{\"codebook\": {\"kind\": \"hamming74\"}, \"phi_s_dBm\": 1, "
                   "\"phi_s_J_per_rad2\": 1}")
            .find("at most one") != std::string::npos);
  CHECK(message_of("{\"codebook\": {\"kind\": \"hamming74\"}, \"optimize\": {}}")
            .find("exactly one") != std::string::npos);
  CHECK(message_of("{\"codebook\": {\"kind\": \"hamming74\"}, \"phy\": {\"p_e\": 0}}")
            .find("explicit phi_s") != std::string::npos);
  CHECK(message_of("{\n\"codebook\": {\"kind\": \"hamming74\"},\n\"trials\": 5,,\n}")
            .rfind("line 3: malformed JSON", 0) == 0);
}

TEST_CASE("optimize at kappa 16 reproduces the hamming allocation") {
  const auto out = scratch_dir() / "kappa16.csv";
  fs::remove(out);
  std::ostringstream log;
  const auto cfg = parse_run_config(slurp(config_path("hamming_kappa16.json")));
  REQUIRE(cmd_optimize(cfg, {out.string(), std::nullopt, 1}, log) == kSuccess);

  const auto summary = json::parse(slurp(scratch_dir() / "kappa16.summary.json"));
  CHECK(summary["lambda_star"].get<double>() == Approx(13.0 / 3.0).epsilon(1e-10));
  CHECK(summary["lambda_min"].get<double>() == Approx(1.0));
  CHECK(summary["lambda_max"].get<double>() == Approx(4.5));
  CHECK(summary["sum_omega"].get<double>() == Approx(kPiSquared).epsilon(1e-12));
  CHECK(summary["objective_upper_W"].get<double>() >= summary["objective_exact_W"].get<double>());

  std::istringstream csv(slurp(out));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "codeword,weight,omega_rad2");
  const double by_weight[8] = {2.67299, 0, 0, 0.82247, 0.20562, 0, 0, 0.0};
  int rows = 0;
  while (std::getline(csv, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    const int w = std::stoi(line.substr(a + 1, b - a - 1));
    CHECK(std::stod(line.substr(b + 1)) == Approx(by_weight[w]).epsilon(2e-5));
    ++rows;
  }
  CHECK(rows == 16);
}

TEST_CASE("optimize at low load spreads the exhaustive book uniformly") {
  const auto cfg = parse_run_config(R"({
    "codebook": {"kind": "exhaustive", "slots": 16},
    "optimize": {"kappa": 2.0}
  })");
  const auto out = scratch_dir() / "uniform.csv";
  std::ostringstream log;
  REQUIRE(cmd_optimize(cfg, {out.string(), std::nullopt, 1}, log) == kSuccess);
  std::istringstream csv(slurp(out));
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    CHECK(std::stod(line.substr(line.rfind(',') + 1)) == Approx(kPiSquared / 16).epsilon(1e-9));
    ++rows;
  }
  CHECK(rows == 16);
}

TEST_CASE("sweep with one error-free trial is deterministic") {
  const auto cfg = parse_run_config(R"({
    "codebook": {"kind": "hamming74"},
    "phy": {"p_e": 0.0},
    "phi_s_dBm": 6.0,
    "rate_grid_bps": [1e9],
    "trials": 1
  })");
  std::ostringstream a, b;
  REQUIRE(cmd_sweep(cfg, {"", std::nullopt, 1}, a) == kSuccess);
  REQUIRE(cmd_sweep(cfg, {"", std::nullopt, 3}, b) == kSuccess);
  CHECK(a.str() == b.str());
  std::istringstream lines(a.str());
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) rows += line.rfind("hamming74,", 0) == 0;
  CHECK(rows == 1);
  CHECK(a.str().find(",0,1,1\n") != std::string::npos);  // no mis-alignment, 1 trial, seed 1
}

TEST_CASE("detector validation report") {
  std::ostringstream log;
  auto cfg = parse_run_config(slurp(config_path("detector.json")));
  cfg.detector.slots = 20000;
  REQUIRE(cmd_validate_detector(cfg, {}, log) == kSuccess);
  auto report = json::parse(log.str());
  CHECK(report["pass"].get<bool>());
  CHECK(report["warnings"].empty());
  CHECK(report["analytic_p_md"].get<double>() == Approx(0.3));

  auto half = parse_run_config(R"({"phy": {"p_e": 0.5}, "detector": {"slots": 2000}})");
  std::ostringstream l2;
  REQUIRE(cmd_validate_detector(half, {}, l2) == kSuccess);
  report = json::parse(l2.str());
  CHECK_FALSE(report["warnings"].empty());

  auto off = parse_run_config(R"({"detector": {"slots": 2000, "power_W": 0}})");
  std::ostringstream l3;
  REQUIRE(cmd_validate_detector(off, {}, l3) == kSuccess);
  report = json::parse(l3.str());
  CHECK_FALSE(report["warnings"].empty());
  // With no signal the H1 statistic is noise alone: p_md = 1 - p_e.
  CHECK(report["analytic_p_md"].get<double>() == Approx(0.7));
  CHECK(report["pass"].get<bool>());
}

TEST_CASE("binary: exit codes and no partial output") {
  const auto out = scratch_dir() / "never.csv";
  fs::remove(out);
  const auto bad = write_config("bad.json", "{\n \"codebook\": {\"kind\": \"hamming74\"},\n \"x\": 1\n}");
  CHECK(run_binary("sweep --config " + bad.string() + " --out " + out.string()) == kConfigError);
  CHECK_FALSE(fs::exists(out));

  const auto broken = write_config("broken.json", "{\"codebook\": ");
  CHECK(run_binary("optimize --config " + broken.string() + " --out " + out.string()) ==
        kConfigError);
  CHECK_FALSE(fs::exists(out));

  CHECK(run_binary("sweep --config /nonexistent.json") == kConfigError);
  CHECK(run_binary("frobnicate") == kConfigError);

  const auto infeasible = write_config("infeasible.json", R"({
    "codebook": {"kind": "exhaustive", "slots": 16},
    "frame": {"slot_s": 2e-3},
    "phi_s_dBm": 6.0,
    "rate_grid_bps": [1e9],
    "trials": 10
  })");
  CHECK(run_binary("sweep --config " + infeasible.string() + " --out " + out.string()) ==
        kInfeasible);
  CHECK_FALSE(fs::exists(out));

  const auto empty_grid = write_config("empty.json", R"({"codebook": {"kind": "hamming74"}})");
  CHECK(run_binary("sweep --config " + empty_grid.string()) == kConfigError);

  CHECK(run_binary("optimize --config " + config_path("hamming_kappa16.json")) == kSuccess);
}

TEST_CASE("binary: sweep output is independent of thread count") {
  const auto cfg = write_config("small_sweep.json", kSmallSweep);
  const auto one = scratch_dir() / "one.csv";
  const auto eight = scratch_dir() / "eight.csv";
  REQUIRE(run_binary("sweep --config " + cfg.string() + " --threads 1 --out " + one.string()) ==
          kSuccess);
  REQUIRE(run_binary("sweep --config " + cfg.string() + " --threads 8 --out " + eight.string()) ==
          kSuccess);
  CHECK(slurp(one) == slurp(eight));
  CHECK(slurp(scratch_dir() / "one.details.json") ==
        slurp(scratch_dir() / "eight.details.json"));

  const auto reseeded = scratch_dir() / "reseeded.csv";
  REQUIRE(run_binary("sweep --config " + cfg.string() + " --seed 10 --out " + reseeded.string()) ==
          kSuccess);
  CHECK(slurp(one) != slurp(reseeded));
}

TEST_CASE("shipped configs parse") {
  for (const auto& entry : fs::directory_iterator(CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(parse_run_config(slurp(entry.path())));
  }
}
