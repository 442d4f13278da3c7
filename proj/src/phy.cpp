#include "codedba/phy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "codedba/error.hpp"
#include "codedba/waterfill.hpp"

namespace codedba {

namespace {

void require_detection_p_e(double p_e) {
  require(p_e > 0.0 && p_e < 1.0, "detector design needs 0 < p_e < 1");
}

}  // namespace

void PhyParams::validate() const {
  require(noise_psd > 0.0, "N0 must be positive");
  require(bandwidth > 0.0, "bandwidth must be positive");
  require(symbol_time > 0.0, "symbol duration must be positive");
  require(carrier_freq > 0.0, "carrier frequency must be positive");
  require(d_max > 0.0, "coverage radius must be positive");
  require(pilot_energy > 0.0, "pilot energy must be positive");
  require(p_e >= 0.0 && p_e < 1.0, "p_e must lie in [0, 1)");
  require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
}

double pathloss(double distance, const PhyParams& params) {
  require(distance > 0.0, "distance must be positive");
  const double root = 4.0 * kPi * distance * params.carrier_freq / kSpeedOfLight;
  return root * root;
}

double detector_threshold(double p_e) {
  require_detection_p_e(p_e);
  return -std::log(p_e);
}

double detection_margin(double p_e) {
  require_detection_p_e(p_e);
  return std::log(p_e) / std::log1p(-p_e) - 1.0;
}

double phi_s(const PhyParams& params) {
  params.validate();
  return params.noise_power() * params.symbol_time / kPiSquared *
         detection_margin(params.p_e) * pathloss(params.d_max, params);
}

double alignment_power(double beam_measure, double distance, const PhyParams& params) {
  require(beam_measure >= 0.0, "beam measure must be non-negative");
  return params.noise_power() * pathloss(distance, params) /
         (kPiSquared * params.pilot_energy) * detection_margin(params.p_e) * beam_measure;
}

DetectionErrors detection_error_probs(double beam_measure, double power, double distance,
                                      const PhyParams& params) {
  require(beam_measure > 0.0, "beam measure must be positive");
  require(power >= 0.0, "power must be non-negative");
  const double tau = detector_threshold(params.p_e);
  const double noise = beam_measure * params.noise_power() * pathloss(distance, params);
  const double signal = power * kPiSquared * params.pilot_energy;
  return {-std::expm1(-tau * noise / (noise + signal)), std::exp(-tau)};
}

double phi_d(const UserConfig& user, const PhyParams& params, double frame_s) {
  require(user.tau > 0.0, "TDMA share tau must be positive");
  require(user.r_min >= 0.0, "minimum rate must be non-negative");
  require(frame_s > 0.0, "frame duration must be positive");
  const double spectral = frame_s * user.r_min / (user.tau * params.bandwidth);
  return user.tau * pathloss(user.distance, params) * params.noise_power() *
         std::expm1(spectral * std::log(2.0)) /
         (kPiSquared * -std::log1p(-params.rho));
}

double outage_probability(double power, double rate, double beam_measure, double distance,
                          const PhyParams& params) {
  require(power >= 0.0, "power must be non-negative");
  require(rate >= 0.0, "rate must be non-negative");
  require(beam_measure >= 0.0, "beam measure must be non-negative");
  if (rate == 0.0) return 0.0;
  if (power == 0.0 || beam_measure == 0.0) return 1.0;
  const double snr_needed = std::expm1(rate / params.bandwidth * std::log(2.0));
  const double exponent = snr_needed * pathloss(distance, params) * params.noise_power() *
                          beam_measure / (power * kPiSquared);
  return -std::expm1(-exponent);
}

double matched_filter_statistic(RngStream& rng, bool aligned, double power,
                                double beam_measure, double distance,
                                const PhyParams& params) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  // Noise projected on the pilot, normalized to CN(0, 1).
  double re = normal(rng);
  double im = normal(rng);
  if (aligned && power > 0.0) {
    require(beam_measure > 0.0, "aligned slot needs a positive beam measure");
    // Mean received SNR of the matched-filter output.
    const double snr = power * (kPiSquared / beam_measure) * params.pilot_energy /
                       (pathloss(distance, params) * params.noise_power());
    const double scale = std::sqrt(snr);
    re += scale * normal(rng);
    im += scale * normal(rng);
  }
  return re * re + im * im;
}

bool signal_level_slot(RngStream& rng, bool aligned, double power, double beam_measure,
                       double distance, const PhyParams& params) {
  return matched_filter_statistic(rng, aligned, power, beam_measure, distance, params) >=
         detector_threshold(params.p_e);
}

double ks_distance_unit_exponential(std::vector<double>& samples) {
  require(!samples.empty(), "KS test needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = -std::expm1(-std::max(samples[i], 0.0));
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf,
                  cdf - static_cast<double>(i) / n});
  }
  return d;
}

DetectorReport calibrate_detector(const PhyParams& params, const DetectorSetup& setup) {
  params.validate();
  require_detection_p_e(params.p_e);
  require(setup.slots >= 1, "slot count must be positive");
  require(setup.beam_measure > 0.0 && setup.beam_measure <= kPiSquared,
          "beam measure must lie in (0, pi^2]");

  DetectorReport r;
  r.slots = setup.slots;
  r.p_e = params.p_e;
  r.beam_measure = setup.beam_measure;
  r.distance = setup.distance > 0.0 ? setup.distance : params.d_max;
  r.power = setup.power_override >= 0.0
                ? setup.power_override
                : alignment_power(setup.beam_measure, params.d_max, params);

  const auto analytic = detection_error_probs(r.beam_measure, r.power, r.distance, params);
  r.analytic_p_md = analytic.p_md;
  r.analytic_p_fa = analytic.p_fa;

  if (detection_margin(params.p_e) <= 0.0) {
    r.warnings.push_back(
        "p_e >= 0.5: zero sweep energy density, detection is no better than chance");
  }
  if (r.power == 0.0) {
    r.warnings.push_back(
        "zero slot power: H1 collapses to H0, miss rate equals 1 - p_fa");
  }

  const double tau = detector_threshold(params.p_e);
  const auto n = static_cast<double>(setup.slots);
  std::uint64_t misses = 0;
  std::uint64_t false_alarms = 0;
  std::vector<double> h0_stats;
  h0_stats.reserve(setup.slots);
  RngStream h1_rng = RngStream::for_index(setup.seed, 1);
  RngStream h0_rng = RngStream::for_index(setup.seed, 0);
  for (std::uint64_t i = 0; i < setup.slots; ++i) {
    if (matched_filter_statistic(h1_rng, true, r.power, r.beam_measure, r.distance,
                                 params) < tau) {
      ++misses;
    }
    const double s0 =
        matched_filter_statistic(h0_rng, false, r.power, r.beam_measure, r.distance, params);
    if (s0 >= tau) ++false_alarms;
    h0_stats.push_back(s0);
  }
  r.empirical_p_md = static_cast<double>(misses) / n;
  r.empirical_p_fa = static_cast<double>(false_alarms) / n;
  r.sigma_md = std::sqrt(r.analytic_p_md * (1.0 - r.analytic_p_md) / n);
  r.sigma_fa = std::sqrt(r.analytic_p_fa * (1.0 - r.analytic_p_fa) / n);
  r.md_pass = std::abs(r.empirical_p_md - r.analytic_p_md) <= 3.0 * r.sigma_md;
  r.fa_pass = std::abs(r.empirical_p_fa - r.analytic_p_fa) <= 3.0 * r.sigma_fa;

  r.ks_statistic = ks_distance_unit_exponential(h0_stats);
  r.ks_critical = 1.62762 / std::sqrt(n);
  r.ks_pass = r.ks_statistic <= r.ks_critical;
  return r;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

}  // namespace codedba
