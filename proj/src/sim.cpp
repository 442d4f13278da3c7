#include "codedba/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "codedba/error.hpp"

namespace codedba {

namespace {

// Per-trial summary kept for the ordered reduction.
struct TrialTally {
  double power = 0.0;
  double delivered_rate = 0.0;
  std::uint32_t misaligned = 0;
};

double sweep_energy_density(const Scenario& s) {
  return s.phi_s_override ? *s.phi_s_override : phi_s(s.phy);
}

}  // namespace

double FrameTiming::data_duration(int slots) const {
  const double data = frame_s - slots * slot_s - feedback_s;
  if (!(data > 0.0)) {
    throw Error(ErrorKind::InfeasibleScenario,
                "frame timing leaves no data phase: T_fr - L*T - T_fb = " +
                    std::to_string(data) + " s");
  }
  return data;
}

void Scenario::validate() const {
  phy.validate();
  require(!distances.empty(), "at least one user is required");
  for (double d : distances) {
    require(d > 0.0 && d <= phy.d_max, "user distance must lie in (0, d_max]");
  }
  require(frame.frame_s > 0.0 && frame.slot_s > 0.0 && frame.feedback_s >= 0.0,
          "frame durations must be positive");
  require(trials >= 1, "trials must be at least 1");
  for (double r : rate_grid) require(r >= 0.0, "rates must be non-negative");
  if (phi_s_override) {
    require(std::isfinite(*phi_s_override) && *phi_s_override >= 0.0,
            "phi_s override must be non-negative");
  } else {
    require(phy.p_e > 0.0, "computed phi_s needs p_e > 0; use an override for p_e = 0");
  }
  if (error_mode == ErrorMode::SignalLevel) {
    require(phy.p_e > 0.0, "signal-level mode needs p_e > 0");
  }
}

OperatingPoint prepare_point(const Scenario& scenario, const Codebook& cb, double r_min) {
  scenario.validate();
  const double data_s = scenario.frame.data_duration(cb.length());
  const int m = scenario.users();
  const double tau = data_s / m;

  std::vector<UserConfig> users;
  std::vector<double> densities;
  double phi_d_sum = 0.0;
  for (double d : scenario.distances) {
    users.push_back({d, r_min, tau});
    densities.push_back(phi_d(users.back(), scenario.phy, scenario.frame.frame_s));
    phi_d_sum += densities.back();
  }

  const auto correction = success_probability(scenario.phy.p_e, cb.length(), cb.epsilon());
  if (!(correction.success > 0.0)) {
    throw Error(ErrorKind::InfeasibleScenario,
                "P(W(e) <= eps) underflows to zero for this codebook and p_e");
  }
  const auto power = PowerParams::make(sweep_energy_density(scenario), phi_d_sum / m, m,
                                       scenario.frame.frame_s, correction.success);
  const double kappa = power.kappa();
  const double lambda = std::isfinite(kappa) && kappa > 0.0
                            ? solve_dual(power, cb)
                            : std::numeric_limits<double>::quiet_NaN();
  auto allocation = allocate(power, cb);
  Partition partition(allocation, cb);
  return OperatingPoint{cb,
                        r_min,
                        data_s,
                        std::move(users),
                        std::move(densities),
                        power,
                        lambda,
                        std::move(allocation),
                        std::move(partition),
                        cb.decode_table()};
}

Codeword inject_errors(RngStream& rng, const Codeword& c, double p_e) {
  require(p_e >= 0.0 && p_e <= 1.0, "p_e must lie in [0, 1]");
  std::uint32_t e = 0;
  for (int b = 0; b < c.length(); ++b) {
    if (rng.uniform() < p_e) e |= 1u << b;
  }
  return Codeword(c.value() ^ e, c.length());
}

TrialResult run_trial(const Scenario& scenario, const OperatingPoint& point,
                      std::uint64_t trial_index) {
  const auto& cb = point.codebook;
  const auto& phy = scenario.phy;
  const int slots = cb.length();
  RngStream rng = RngStream::for_index(scenario.seed, trial_index);
  std::exponential_distribution<double> unit_exponential(1.0);

  TrialResult out;
  for (int k = 1; k <= slots; ++k) out.ba_energy += point.partition.beam_measure(k);
  out.ba_energy *= point.power.phi_s;

  out.users.reserve(point.users.size());
  for (std::size_t i = 0; i < point.users.size(); ++i) {
    const auto& user = point.users[i];
    const std::size_t cell = point.partition.cell_index(sample_angle(rng));
    const Codeword& c = cb[cell];

    Codeword u;
    if (scenario.error_mode == ErrorMode::AnalyticInjection) {
      u = inject_errors(rng, c, phy.p_e);
    } else {
      std::uint32_t bits = 0;
      for (int k = 1; k <= slots; ++k) {
        const double beam = point.partition.beam_measure(k);
        const double p_k = alignment_power(beam, phy.d_max, phy);
        if (signal_level_slot(rng, c.slot(k), p_k, beam, user.distance, phy)) {
          bits |= 1u << (slots - k);
        }
      }
      u = Codeword(bits, slots);
    }

    const std::size_t decoded = point.decode_table[u.value()];
    const double beam = point.allocation.omega[decoded];
    UserOutcome o{c, u, cb[decoded], decoded == cell && beam > 0.0, 0.0, 0.0};
    o.data_energy = point.phi_d[i] * beam;

    // Fixed-rate transmission over a Rayleigh block: delivered unless the
    // fading realization falls below the rate's SNR requirement.
    const double fade = unit_exponential(rng);
    if (o.aligned && user.r_min > 0.0) {
      const double power = o.data_energy / user.tau;
      const double rate = scenario.frame.frame_s * user.r_min / user.tau;
      const double snr = kPiSquared * (fade / pathloss(user.distance, phy)) * power /
                         (phy.noise_power() * beam);
      if (phy.bandwidth * std::log2(1.0 + snr) > rate) o.delivered_rate = user.r_min;
    }
    out.data_energy += o.data_energy;
    out.delivered_rate += o.delivered_rate;
    out.users.push_back(std::move(o));
  }
  return out;
}

namespace {

/// Neumaier-compensated running sum; keeps long trial reductions at ~1 ulp.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

SweepPoint run_point(const Scenario& scenario, const OperatingPoint& point, int threads) {
  require(threads >= 1, "thread count must be positive");
  const std::uint64_t n = scenario.trials;
  std::vector<TrialTally> tallies(n);

  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t t = begin; t < end; ++t) {
      const auto r = run_trial(scenario, point, t);
      TrialTally tally;
      tally.power = (r.ba_energy + r.data_energy) / scenario.frame.frame_s;
      tally.delivered_rate = r.delivered_rate;
      for (const auto& u : r.users) tally.misaligned += u.aligned ? 0u : 1u;
      tallies[t] = tally;
    }
  };

  const auto workers = static_cast<std::uint64_t>(
      std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), n));
  if (workers <= 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (n + workers - 1) / workers;
    for (std::uint64_t w = 0; w < workers; ++w) {
      const std::uint64_t begin = w * chunk;
      const std::uint64_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }

  // Fixed trial-order reduction: identical sums for any worker count.
  CompensatedSum power_sum;
  CompensatedSum rate_sum;
  std::uint64_t misaligned = 0;
  for (const auto& t : tallies) {
    power_sum.add(t.power);
    rate_sum.add(t.delivered_rate);
    misaligned += t.misaligned;
  }
  const double nd = static_cast<double>(n);
  const double mean_power = power_sum.value() / nd;
  CompensatedSum sq;
  for (const auto& t : tallies) sq.add((t.power - mean_power) * (t.power - mean_power));

  const auto& cb = point.codebook;
  SweepPoint p;
  p.r_min = point.r_min;
  p.trials = n;
  p.avg_power = mean_power;
  p.avg_power_stderr = n > 1 ? std::sqrt(sq.value() / (nd - 1.0) / nd) : 0.0;
  p.spectral_efficiency = rate_sum.value() / nd / scenario.phy.bandwidth;
  p.misalignment_rate =
      static_cast<double>(misaligned) / (nd * static_cast<double>(point.users.size()));
  p.avg_power_exact = avg_power_exact(point.allocation, cb, point.power, scenario.phy.p_e);
  p.avg_power_upper = avg_power_upper(point.allocation, cb, point.power);
  p.gap_bound = upper_bound_gap(point.power);
  p.misalignment_bound = misalignment_bound(scenario.phy.p_e, cb.length(), cb.epsilon());
  p.kappa = point.power.kappa();
  p.lambda_star = point.lambda_star;
  return p;
}

std::vector<SweepPoint> run_sweep(const Scenario& scenario, int threads) {
  scenario.validate();
  require(!scenario.rate_grid.empty(), "rate grid must not be empty");
  const auto cb = Codebook::build(scenario.codebook);
  scenario.frame.data_duration(cb.length());
  std::vector<SweepPoint> out;
  out.reserve(scenario.rate_grid.size());
  for (double r : scenario.rate_grid) {
    out.push_back(run_point(scenario, prepare_point(scenario, cb, r), threads));
  }
  return out;
}

double misalignment_bound(double p_e, int slots, int eps) {
  return success_probability(p_e, slots, eps).tail;
}

std::optional<double> spectral_efficiency_at(const std::vector<SweepPoint>& curve,
                                             double avg_power_dbm) {
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double x0 = watts_to_dbm(curve[i].avg_power);
    const double x1 = watts_to_dbm(curve[i + 1].avg_power);
    const double lo = std::min(x0, x1);
    const double hi = std::max(x0, x1);
    if (avg_power_dbm < lo || avg_power_dbm > hi) continue;
    if (x1 == x0) return std::max(curve[i].spectral_efficiency, curve[i + 1].spectral_efficiency);
    const double t = (avg_power_dbm - x0) / (x1 - x0);
    return curve[i].spectral_efficiency +
           t * (curve[i + 1].spectral_efficiency - curve[i].spectral_efficiency);
  }
  if (curve.size() == 1 && watts_to_dbm(curve[0].avg_power) == avg_power_dbm) {
    return curve[0].spectral_efficiency;
  }
  return std::nullopt;
}

void write_sweep_csv_header(std::ostream& out) {
  out << "scheme,R_min_bps,avg_power_W,avg_power_dBm,spectral_eff_bps_per_Hz,"
         "misalign_rate,trials,seed\n";
}

void write_sweep_csv_rows(std::ostream& out, const std::string& scheme,
                          const std::vector<SweepPoint>& points, std::uint64_t seed) {
  const auto old_precision = out.precision(12);
  for (const auto& p : points) {
    out << scheme << ',' << p.r_min << ',' << p.avg_power << ',' << watts_to_dbm(p.avg_power)
        << ',' << p.spectral_efficiency << ',' << p.misalignment_rate << ',' << p.trials
        << ',' << seed << '\n';
  }
  out.precision(old_precision);
}

}  // namespace codedba
