#include "codedba/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "codedba/error.hpp"
#include "json.hpp"

namespace codedba::cli {

using nlohmann::json;

namespace {

int line_at_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

int line_of_key(std::string_view text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string_view::npos ? 1 : line_at_offset(text, pos);
}

[[noreturn]] void fail(std::string_view text, const std::string& key, const std::string& what) {
  throw ConfigError("line " + std::to_string(line_of_key(text, key)) + ": " + what);
}

/// Strict view over one JSON object: every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string_view text, std::string path, std::string key)
      : obj_(obj), text_(text), path_(std::move(path)) {
    if (!obj_.is_object()) fail(text_, key, "'" + path_ + "' must be an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json* find(const std::string& key) {
    if (!obj_.contains(key)) return nullptr;
    seen_.insert(key);
    return &obj_.at(key);
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(text_, key, "'" + qualified(key) + "' must be a number");
    return v->get<double>();
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) {
      fail(text_, key, "'" + qualified(key) + "' must be a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(text_, key, "'" + qualified(key) + "' must be a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = find(key);
    if (!v) return {};
    if (!v->is_array()) fail(text_, key, "'" + qualified(key) + "' must be an array");
    std::vector<double> out;
    for (const auto& x : *v) {
      if (!x.is_number()) fail(text_, key, "'" + qualified(key) + "' must hold numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, _] : obj_.items()) {
      if (!seen_.count(k)) fail(text_, k, "unknown key '" + qualified(k) + "'");
    }
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& obj_;
  std::string_view text_;
  std::string path_;
  std::set<std::string> seen_;
};

CodebookSpec parse_codebook(const json& node, std::string_view text, const std::string& path,
                            const std::string& key) {
  ObjectReader r(node, text, path, key);
  const std::string kind = r.string("kind", "");
  CodebookSpec spec;
  if (kind == "hamming74") {
    spec = {CodebookKind::Hamming74, 7};
    if (r.has("slots") && r.unsigned_integer("slots", 7) != 7) {
      fail(text, "slots", "hamming74 has exactly 7 slots");
    }
  } else if (kind == "exhaustive" || kind == "uncoded") {
    spec.kind = kind == "exhaustive" ? CodebookKind::Exhaustive : CodebookKind::Uncoded;
    if (!r.has("slots")) fail(text, "kind", "'" + path + "' of kind " + kind + " needs 'slots'");
    const auto slots = r.unsigned_integer("slots", 0);
    if (slots < 1) fail(text, "slots", "'" + r.qualified("slots") + "' must be at least 1");
    if (slots > static_cast<std::uint64_t>(kMaxSlots)) {
      fail(text, "slots", "'" + r.qualified("slots") + "' exceeds " + std::to_string(kMaxSlots));
    }
    spec.slots = static_cast<int>(slots);
  } else {
    fail(text, "kind",
         "'" + r.qualified("kind") + "' must be one of hamming74, exhaustive, uncoded");
  }
  r.finish();
  return spec;
}

ErrorMode parse_error_mode(const std::string& s, std::string_view text) {
  if (s == "analytic-injection") return ErrorMode::AnalyticInjection;
  if (s == "signal-level") return ErrorMode::SignalLevel;
  fail(text, "error_mode", "'error_mode' must be analytic-injection or signal-level");
}

void check(bool ok, std::string_view text, const std::string& key, const std::string& what) {
  if (!ok) fail(text, key, what);
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::InvalidParameter: return kConfigError;
    case ErrorKind::CapacityRefused:
    case ErrorKind::InfeasibleScenario: return kInfeasible;
    case ErrorKind::NumericalFailure: return kNumericalFailure;
  }
  return kConfigError;
}

std::filesystem::path sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  p.replace_extension(suffix);
  return p;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_invalid("cannot open output file " + path.string());
  f << content;
  if (!f) throw_invalid("failed writing output file " + path.string());
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Scenario with_seed(const RunConfig& config, const CommandOptions& opts) {
  Scenario s = config.scenario;
  if (opts.seed) s.seed = *opts.seed;
  return s;
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(line_at_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                      ": malformed JSON: " + e.what());
  }

  RunConfig cfg;
  Scenario& s = cfg.scenario;
  ObjectReader top(root, text, "", "");

  if (const json* cb = top.find("codebook")) cfg.schemes.push_back(parse_codebook(*cb, text, "codebook", "codebook"));
  if (const json* list = top.find("schemes")) {
    check(list->is_array() && !list->empty(), text, "schemes", "'schemes' must be a non-empty array");
    for (std::size_t i = 0; i < list->size(); ++i) {
      cfg.schemes.push_back(
          parse_codebook((*list)[i], text, "schemes[" + std::to_string(i) + "]", "schemes"));
    }
  }
  if (cfg.schemes.empty()) cfg.schemes.push_back({CodebookKind::Hamming74, 7});
  s.codebook = cfg.schemes.front();

  if (const json* users = top.find("users")) {
    ObjectReader r(*users, text, "users", "users");
    s.distances = r.numbers("distances_m");
    check(!s.distances.empty(), text, "users", "'users.distances_m' must list at least one distance");
    r.finish();
  }

  if (const json* frame = top.find("frame")) {
    ObjectReader r(*frame, text, "frame", "frame");
    s.frame.frame_s = r.number("frame_s", s.frame.frame_s);
    s.frame.slot_s = r.number("slot_s", s.frame.slot_s);
    s.frame.feedback_s = r.number("feedback_s", s.frame.feedback_s);
    r.finish();
  }
  check(s.frame.frame_s > 0.0, text, "frame_s", "'frame.frame_s' must be positive");
  check(s.frame.slot_s > 0.0, text, "slot_s", "'frame.slot_s' must be positive");
  check(s.frame.feedback_s >= 0.0, text, "feedback_s", "'frame.feedback_s' must be non-negative");

  PhyParams& phy = s.phy;
  double n0_dbm = -173.0;
  phy.bandwidth = 500e6;
  phy.carrier_freq = 30e9;
  phy.d_max = 10.0;
  phy.p_e = 0.3;
  phy.rho = 1e-3;
  std::optional<double> symbol_time;
  std::optional<double> pilot_energy;
  if (const json* node = top.find("phy")) {
    ObjectReader r(*node, text, "phy", "phy");
    n0_dbm = r.number("N0_dBm_per_Hz", n0_dbm);
    phy.bandwidth = r.number("bandwidth_Hz", phy.bandwidth);
    symbol_time = r.optional_number("symbol_time_s");
    phy.carrier_freq = r.number("carrier_freq_Hz", phy.carrier_freq);
    phy.d_max = r.number("d_max_m", phy.d_max);
    pilot_energy = r.optional_number("pilot_energy");
    phy.p_e = r.number("p_e", phy.p_e);
    phy.rho = r.number("rho", phy.rho);
    r.finish();
  }
  check(phy.bandwidth > 0.0, text, "bandwidth_Hz", "'phy.bandwidth_Hz' must be positive");
  check(phy.carrier_freq > 0.0, text, "carrier_freq_Hz", "'phy.carrier_freq_Hz' must be positive");
  check(phy.d_max > 0.0, text, "d_max_m", "'phy.d_max_m' must be positive");
  check(phy.p_e >= 0.0 && phy.p_e < 1.0, text, "p_e", "'phy.p_e' must lie in [0, 1)");
  check(phy.rho > 0.0 && phy.rho < 1.0, text, "rho", "'phy.rho' must lie in (0, 1)");
  phy.noise_psd = dbm_to_watts(n0_dbm);
  // Unit-power pilot symbols filling the slot by default.
  phy.symbol_time = symbol_time.value_or(1.0 / phy.bandwidth);
  check(phy.symbol_time > 0.0, text, "symbol_time_s", "'phy.symbol_time_s' must be positive");
  phy.pilot_energy = pilot_energy.value_or(std::max(1.0, std::floor(s.frame.slot_s / phy.symbol_time)));
  check(phy.pilot_energy > 0.0, text, "pilot_energy", "'phy.pilot_energy' must be positive");

  if (auto dbm = top.optional_number("phi_s_dBm")) s.phi_s_override = dbm_to_watts(*dbm);
  if (auto joules = top.optional_number("phi_s_J_per_rad2")) {
    check(!s.phi_s_override, text, "phi_s_J_per_rad2", "give at most one of phi_s_dBm and phi_s_J_per_rad2");
    check(*joules >= 0.0, text, "phi_s_J_per_rad2", "'phi_s_J_per_rad2' must be non-negative");
    s.phi_s_override = *joules;
  }
  if (!s.phi_s_override) {
    check(phy.p_e > 0.0, text, "p_e", "p_e = 0 needs an explicit phi_s_dBm or phi_s_J_per_rad2");
  }

  s.rate_grid = top.numbers("rate_grid_bps");
  for (double r : s.rate_grid) check(r >= 0.0, text, "rate_grid_bps", "'rate_grid_bps' entries must be non-negative");
  s.error_mode = parse_error_mode(top.string("error_mode", "analytic-injection"), text);
  if (s.error_mode == ErrorMode::SignalLevel) {
    check(phy.p_e > 0.0, text, "error_mode", "signal-level mode needs p_e > 0");
  }
  s.seed = top.unsigned_integer("seed", s.seed);
  s.trials = top.unsigned_integer("trials", s.trials);
  check(s.trials >= 1, text, "trials", "'trials' must be at least 1");

  for (double d : s.distances) {
    check(d > 0.0 && d <= phy.d_max, text, "distances_m", "user distances must lie in (0, d_max_m]");
  }

  if (const json* node = top.find("optimize")) {
    ObjectReader r(*node, text, "optimize", "optimize");
    cfg.optimize_rate = r.optional_number("R_min_bps");
    cfg.optimize_kappa = r.optional_number("kappa");
    r.finish();
    check(cfg.optimize_rate.has_value() != cfg.optimize_kappa.has_value(), text, "optimize",
          "'optimize' needs exactly one of R_min_bps and kappa");
    if (cfg.optimize_rate) check(*cfg.optimize_rate >= 0.0, text, "R_min_bps", "'optimize.R_min_bps' must be non-negative");
    if (cfg.optimize_kappa) check(*cfg.optimize_kappa > 0.0, text, "kappa", "'optimize.kappa' must be positive");
  }

  cfg.detector.beam_measure = kPiSquared / 16.0;
  if (const json* node = top.find("detector")) {
    ObjectReader r(*node, text, "detector", "detector");
    cfg.detector.slots = r.unsigned_integer("slots", cfg.detector.slots);
    cfg.detector.beam_measure = r.number("beam_measure_rad2", cfg.detector.beam_measure);
    cfg.detector.distance = r.number("distance_m", 0.0);
    cfg.detector.power_override = r.number("power_W", -1.0);
    r.finish();
    check(cfg.detector.slots >= 1, text, "slots", "'detector.slots' must be at least 1");
    check(cfg.detector.beam_measure > 0.0 && cfg.detector.beam_measure <= kPiSquared, text,
          "beam_measure_rad2", "'detector.beam_measure_rad2' must lie in (0, pi^2]");
    check(cfg.detector.distance >= 0.0 && cfg.detector.distance <= phy.d_max, text, "distance_m",
          "'detector.distance_m' must lie in (0, d_max_m]");
    if (r.has("power_W")) check(cfg.detector.power_override >= 0.0, text, "power_W", "'detector.power_W' must be non-negative");
  }
  cfg.detector.seed = s.seed;

  top.finish();
  return cfg;
}

int cmd_optimize(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
  const Scenario s = with_seed(config, opts);
  const auto cb = Codebook::build(s.codebook);
  const auto correction = success_probability(s.phy.p_e, cb.length(), cb.epsilon());

  PowerParams power;
  if (config.optimize_kappa) {
    // Unit sweep density: kappa fixes the data density.
    const int m = s.users();
    power = PowerParams::make(1.0, *config.optimize_kappa / (2.0 * correction.success * m), m,
                              s.frame.frame_s, correction.success);
  } else {
    const double rate =
        config.optimize_rate ? *config.optimize_rate
                             : (s.rate_grid.empty() ? 0.0 : s.rate_grid.front());
    power = prepare_point(s, cb, rate).power;
  }

  const auto allocation = allocate(power, cb);
  const double kappa = power.kappa();
  const bool regular = std::isfinite(kappa) && kappa > 0.0;
  const auto bounds = regular ? dual_bounds(power, cb) : DualBounds{};

  std::ostringstream csv;
  write_allocation_csv(csv, cb, allocation);

  json summary = {
      {"scheme", s.codebook.name()},
      {"slots", cb.length()},
      {"codewords", cb.size()},
      {"min_distance", cb.min_distance()},
      {"epsilon", cb.epsilon()},
      {"p_e", s.phy.p_e},
      {"p_success", power.p_success},
      {"delta", power.delta},
      {"phi_s", power.phi_s},
      {"phi_d_bar", power.phi_d_bar},
      {"kappa", finite_or_null(kappa)},
      {"lambda_star", regular ? json(solve_dual(power, cb)) : json(nullptr)},
      {"lambda_min", regular ? json(bounds.lower) : json(nullptr)},
      {"lambda_max", regular ? json(bounds.upper) : json(nullptr)},
      {"sum_omega", allocation.total()},
      {"objective_exact_W", avg_power_exact(allocation, cb, power, s.phy.p_e)},
      {"objective_upper_W", avg_power_upper(allocation, cb, power)},
      {"gap_bound_W", upper_bound_gap(power)},
  };
  const std::string summary_text = summary.dump(2) + "\n";

  if (opts.out.empty()) {
    log << csv.str() << summary_text;
  } else {
    write_file(opts.out, csv.str());
    write_file(sibling(opts.out, ".summary.json"), summary_text);
    log << summary_text;
  }
  return kSuccess;
}

int cmd_sweep(const RunConfig& config, const CommandOptions& opts, std::ostream& log) {
  Scenario s = with_seed(config, opts);
  require(!s.rate_grid.empty(), "sweep needs a non-empty 'rate_grid_bps'");

  std::ostringstream csv;
  write_sweep_csv_header(csv);
  json details = json::array();
  for (const auto& scheme : config.schemes) {
    s.codebook = scheme;
    const auto points = run_sweep(s, opts.threads);
    write_sweep_csv_rows(csv, scheme.name(), points, s.seed);
    for (const auto& p : points) {
      details.push_back({{"scheme", scheme.name()},
                         {"R_min_bps", p.r_min},
                         {"avg_power_W", p.avg_power},
                         {"avg_power_stderr_W", p.avg_power_stderr},
                         {"avg_power_exact_W", p.avg_power_exact},
                         {"avg_power_upper_W", p.avg_power_upper},
                         {"gap_bound_W", p.gap_bound},
                         {"spectral_eff_bps_per_Hz", p.spectral_efficiency},
                         {"misalign_rate", p.misalignment_rate},
                         {"misalign_bound", p.misalignment_bound},
                         {"kappa", finite_or_null(p.kappa)},
                         {"lambda_star", finite_or_null(p.lambda_star)},
                         {"trials", p.trials}});
    }
    log << "swept " << scheme.name() << ": " << points.size() << " points x " << s.trials
        << " trials\n";
  }

  if (opts.out.empty()) {
    log << csv.str();
  } else {
    write_file(opts.out, csv.str());
    write_file(sibling(opts.out, ".details.json"), details.dump(2) + "\n");
  }
  return kSuccess;
}

int cmd_validate_detector(const RunConfig& config, const CommandOptions& opts,
                          std::ostream& log) {
  DetectorSetup setup = config.detector;
  if (opts.seed) setup.seed = *opts.seed;
  const auto r = calibrate_detector(config.scenario.phy, setup);
  json report = {
      {"slots", r.slots},
      {"seed", setup.seed},
      {"p_e", r.p_e},
      {"power_W", r.power},
      {"beam_measure_rad2", r.beam_measure},
      {"distance_m", r.distance},
      {"analytic_p_md", r.analytic_p_md},
      {"analytic_p_fa", r.analytic_p_fa},
      {"empirical_p_md", r.empirical_p_md},
      {"empirical_p_fa", r.empirical_p_fa},
      {"p_md_ci", {r.analytic_p_md - 3.0 * r.sigma_md, r.analytic_p_md + 3.0 * r.sigma_md}},
      {"p_fa_ci", {r.analytic_p_fa - 3.0 * r.sigma_fa, r.analytic_p_fa + 3.0 * r.sigma_fa}},
      {"p_md_pass", r.md_pass},
      {"p_fa_pass", r.fa_pass},
      {"ks_statistic", r.ks_statistic},
      {"ks_critical", r.ks_critical},
      {"ks_pass", r.ks_pass},
      {"pass", r.md_pass && r.fa_pass && r.ks_pass},
      {"warnings", r.warnings},
  };
  const std::string text = report.dump(2) + "\n";
  if (opts.out.empty()) {
    log << text;
  } else {
    write_file(opts.out, text);
    log << text;
  }
  return kSuccess;
}

int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& opts, std::ostream& log) {
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError("line 0: cannot read config file " + config_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const RunConfig config = parse_run_config(buffer.str());
    if (opts.threads < 1) throw ConfigError("line 0: --threads must be at least 1");

    if (command == "optimize") return cmd_optimize(config, opts, log);
    if (command == "sweep") return cmd_sweep(config, opts, log);
    if (command == "validate-detector") return cmd_validate_detector(config, opts, log);
    std::cerr << "unknown command '" << command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << config_path << ":" << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace codedba::cli
