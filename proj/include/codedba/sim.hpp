#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "codedba/beamspace.hpp"
#include "codedba/codebook.hpp"
#include "codedba/phy.hpp"
#include "codedba/rng.hpp"
#include "codedba/waterfill.hpp"

namespace codedba {

enum class ErrorMode { AnalyticInjection, SignalLevel };

/// Frame split: L sweep slots, a feedback phase, and the data phase.
struct FrameTiming {
  double frame_s = 20e-3;
  double slot_s = 10e-6;
  double feedback_s = 0.0;

  /// T_fr - L T - T_fb; throws InfeasibleScenario when not positive.
  double data_duration(int slots) const;
};

struct Scenario {
  CodebookSpec codebook;
  std::vector<double> distances{10.0};  ///< one entry per user, m
  FrameTiming frame;
  PhyParams phy;
  std::optional<double> phi_s_override;  ///< J/rad^2
  std::vector<double> rate_grid;         ///< R_min values, bits/s
  ErrorMode error_mode = ErrorMode::AnalyticInjection;
  std::uint64_t seed = 1;
  std::uint64_t trials = 100000;

  int users() const { return static_cast<int>(distances.size()); }
  void validate() const;
};

/// Everything a trial needs at one R_min: the designed beams and link budget.
struct OperatingPoint {
  Codebook codebook;
  double r_min = 0.0;
  double data_s = 0.0;
  std::vector<UserConfig> users;
  std::vector<double> phi_d;  ///< per user, J/rad^2
  PowerParams power;
  double lambda_star = 0.0;  ///< NaN when the allocation is a degenerate limit
  BeamwidthAllocation allocation;
  Partition partition;
  std::vector<std::uint32_t> decode_table;
};

OperatingPoint prepare_point(const Scenario& scenario, const Codebook& cb, double r_min);

/// u = c xor e with i.i.d. Bernoulli(p_e) flips.
Codeword inject_errors(RngStream& rng, const Codeword& c, double p_e);

struct UserOutcome {
  Codeword true_codeword;
  Codeword detected;
  Codeword decoded;
  bool aligned = false;
  double data_energy = 0.0;    ///< J
  double delivered_rate = 0.0; ///< bits/s
};

struct TrialResult {
  std::vector<UserOutcome> users;
  double ba_energy = 0.0;
  double data_energy = 0.0;
  double delivered_rate = 0.0;
};

/// One frame for every user; deterministic in (scenario.seed, trial_index).
TrialResult run_trial(const Scenario& scenario, const OperatingPoint& point,
                      std::uint64_t trial_index);

struct SweepPoint {
  double r_min = 0.0;
  double avg_power = 0.0;         ///< W, Monte Carlo
  double avg_power_stderr = 0.0;  ///< W
  double spectral_efficiency = 0.0;
  double misalignment_rate = 0.0;
  double avg_power_exact = 0.0;   ///< W, closed form
  double avg_power_upper = 0.0;   ///< W, convex bound
  double gap_bound = 0.0;         ///< W
  double misalignment_bound = 0.0;
  double kappa = 0.0;
  double lambda_star = 0.0;
  std::uint64_t trials = 0;
};

SweepPoint run_point(const Scenario& scenario, const OperatingPoint& point, int threads);

std::vector<SweepPoint> run_sweep(const Scenario& scenario, int threads = 1);

/// Mis-alignment bound P(W(e) > eps).
double misalignment_bound(double p_e, int slots, int eps);

/// Spectral efficiency of a curve at the given power, linear in dBm between
/// sweep points; nullopt outside the curve's power range.
std::optional<double> spectral_efficiency_at(const std::vector<SweepPoint>& curve,
                                             double avg_power_dbm);

void write_sweep_csv_header(std::ostream& out);
void write_sweep_csv_rows(std::ostream& out, const std::string& scheme,
                          const std::vector<SweepPoint>& points, std::uint64_t seed);

}  // namespace codedba
