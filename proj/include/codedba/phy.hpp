#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codedba/rng.hpp"

namespace codedba {

inline constexpr double kSpeedOfLight = 2.998e8;

/// Link parameters in SI units.
struct PhyParams {
  double noise_psd = 0.0;      ///< N0, W/Hz
  double bandwidth = 0.0;      ///< W_tot, Hz
  double symbol_time = 0.0;    ///< T_sy, s
  double carrier_freq = 0.0;   ///< Hz
  double d_max = 0.0;          ///< coverage radius, m
  double pilot_energy = 1.0;   ///< ||s_k||^2, unit-power symbols per slot
  double p_e = 0.0;            ///< target detection error probability
  double rho = 0.0;            ///< data outage target

  /// Checks the fields used by every formula; p_e is checked by the
  /// detector-specific functions since analytic injection allows p_e = 0.
  void validate() const;
  double noise_power() const { return noise_psd * bandwidth; }
};

struct UserConfig {
  double distance = 0.0;  ///< m
  double r_min = 0.0;     ///< bits/s
  double tau = 0.0;       ///< TDMA share of the data phase, s
};

/// Free-space (Friis) path loss (4 pi d f_c / c)^2.
double pathloss(double distance, const PhyParams& params);

/// Neyman-Pearson threshold giving false-alarm probability p_e.
double detector_threshold(double p_e);

/// ln(p_e)/ln(1 - p_e) - 1, the power margin that makes p_md = p_e.
double detection_margin(double p_e);

/// Beam-alignment energy density guaranteeing p_md, p_fa <= p_e up to d_max.
double phi_s(const PhyParams& params);

/// Slot power meeting the mis-detection target with equality at distance d.
double alignment_power(double beam_measure, double distance, const PhyParams& params);

struct DetectionErrors {
  double p_md = 0.0;
  double p_fa = 0.0;
};

DetectionErrors detection_error_probs(double beam_measure, double power, double distance,
                                      const PhyParams& params);

/// Minimum data energy density meeting rate r_min with outage rho.
double phi_d(const UserConfig& user, const PhyParams& params, double frame_s);

double outage_probability(double power, double rate, double beam_measure, double distance,
                          const PhyParams& params);

/// Normalized matched-filter statistic |s^H y|^2 / (N0 W ||s||^2) for one
/// slot with Rayleigh fading. s^H n is a sufficient summary of the noise
/// vector, so a single complex draw stands in for the pilot sequence.
double matched_filter_statistic(RngStream& rng, bool aligned, double power,
                                double beam_measure, double distance,
                                const PhyParams& params);

/// Detector output: true iff the statistic reaches the threshold (H1).
bool signal_level_slot(RngStream& rng, bool aligned, double power, double beam_measure,
                       double distance, const PhyParams& params);

/// Monte Carlo calibration of the detector against the analytic error rates.
struct DetectorReport {
  std::uint64_t slots = 0;
  double p_e = 0.0;
  double power = 0.0;
  double beam_measure = 0.0;
  double distance = 0.0;
  double analytic_p_md = 0.0;
  double analytic_p_fa = 0.0;
  double empirical_p_md = 0.0;
  double empirical_p_fa = 0.0;
  double sigma_md = 0.0;  ///< binomial standard error around the analytic value
  double sigma_fa = 0.0;
  bool md_pass = false;
  bool fa_pass = false;
  double ks_statistic = 0.0;  ///< H0 statistic vs the unit exponential
  double ks_critical = 0.0;   ///< alpha = 0.01
  bool ks_pass = false;
  std::vector<std::string> warnings;
};

struct DetectorSetup {
  std::uint64_t slots = 100000;
  double beam_measure = 0.0;
  double distance = 0.0;
  /// Negative selects the power at mis-detection equality.
  double power_override = -1.0;
  std::uint64_t seed = 0;
};

DetectorReport calibrate_detector(const PhyParams& params, const DetectorSetup& setup);

/// One-sample Kolmogorov-Smirnov distance against Exp(1). Sorts its input.
double ks_distance_unit_exponential(std::vector<double>& samples);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

}  // namespace codedba
