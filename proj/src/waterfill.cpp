#include "codedba/waterfill.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "codedba/error.hpp"

namespace codedba {

namespace {

constexpr int kMaxBisectionIterations = 200;
constexpr double kDualTolerance = 1e-12;
// Accepted residual when bisection exhausts the iteration budget.
constexpr double kDualAcceptance = 1e-9;

double binomial_pmf(int n, int k, double p) {
  const double log_choose =
      std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(log_choose) * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

void check_allocation(const BeamwidthAllocation& omega, const Codebook& cb) {
  require(omega.omega.size() == cb.size(), "allocation size does not match codebook");
}

double alignment_energy(const BeamwidthAllocation& omega, const Codebook& cb,
                        double phi_s) {
  double s = 0.0;
  for (std::size_t i = 0; i < cb.size(); ++i) s += cb[i].weight() * omega.omega[i];
  return phi_s * s;
}

}  // namespace

CorrectionProbability success_probability(double p_e, int slots, int eps) {
  require(p_e >= 0.0 && p_e <= 1.0, "p_e must lie in [0, 1]");
  require(slots >= 1, "slot count must be positive");
  require(eps >= 0 && eps <= slots, "eps must lie in [0, L]");
  CorrectionProbability out{0.0, 0.0};
  for (int l = 0; l <= slots; ++l) {
    const double term = binomial_pmf(slots, l, p_e);
    (l <= eps ? out.success : out.tail) += term;
  }
  // Each side is summed separately so a tiny tail keeps full precision.
  out.success = std::min(out.success, 1.0);
  return out;
}

PowerParams PowerParams::make(double phi_s, double phi_d_bar, int users, double frame_s,
                              double p_success) {
  PowerParams p;
  p.phi_s = phi_s;
  p.phi_d_bar = phi_d_bar;
  p.users = users;
  p.frame_s = frame_s;
  p.p_success = p_success;
  p.delta = 1.0 - p_success;
  p.validate();
  return p;
}

double PowerParams::kappa() const {
  if (phi_s == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * p_success * users * phi_d_bar / phi_s;
}

void PowerParams::validate() const {
  require(std::isfinite(phi_s) && phi_s >= 0.0, "phi_s must be finite and non-negative");
  require(std::isfinite(phi_d_bar) && phi_d_bar >= 0.0,
          "phi_d_bar must be finite and non-negative");
  require(phi_s > 0.0 || phi_d_bar > 0.0, "phi_s and phi_d_bar cannot both be zero");
  require(users >= 1, "user count must be positive");
  require(frame_s > 0.0, "frame duration must be positive");
  require(p_success > 0.0 && p_success <= 1.0, "p_success must lie in (0, 1]");
  require(delta >= 0.0 && std::abs(delta - (1.0 - p_success)) <= 1e-15,
          "delta must equal 1 - p_success");
}

double BeamwidthAllocation::total() const {
  double s = 0.0;
  for (double w : omega) s += w;
  return s;
}

double BeamwidthAllocation::of(const Codebook& cb, const Codeword& c) const {
  const auto i = cb.index_of(c);
  require(i < cb.size(), "codeword not in codebook");
  return omega[i];
}

double h_of_lambda(double lambda, const PowerParams& params, const Codebook& cb) {
  require(lambda >= 0.0, "lambda must be non-negative");
  const auto& n = cb.weight_distribution();
  double s = 0.0;
  for (std::size_t w = 0; w < n.size(); ++w) {
    s += static_cast<double>(n[w]) * std::max(lambda - static_cast<double>(w), 0.0);
  }
  return s / params.kappa();
}

DualBounds dual_bounds(const PowerParams& params, const Codebook& cb) {
  const double lower = params.kappa() / static_cast<double>(cb.size());
  return {lower, lower + cb.mean_weight()};
}

double solve_dual(const PowerParams& params, const Codebook& cb) {
  params.validate();
  const double kappa = params.kappa();
  require(std::isfinite(kappa) && kappa > 0.0,
          "dual problem needs strictly positive phi_s and phi_d_bar");

  const auto bounds = dual_bounds(params, cb);
  double lo = bounds.lower;
  double hi = bounds.upper;
  double mid = 0.5 * (lo + hi);
  double residual = std::abs(h_of_lambda(mid, params, cb) - 1.0);
  for (int it = 0; it < kMaxBisectionIterations && residual > kDualTolerance; ++it) {
    mid = 0.5 * (lo + hi);
    const double hv = h_of_lambda(mid, params, cb);
    residual = std::abs(hv - 1.0);
    if (hv < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // h is linear between integer weights: solve that piece exactly.
  const auto& n = cb.weight_distribution();
  double count = 0.0;
  double weighted = 0.0;
  for (std::size_t w = 0; w < n.size(); ++w) {
    if (static_cast<double>(w) < mid) {
      count += static_cast<double>(n[w]);
      weighted += static_cast<double>(n[w]) * static_cast<double>(w);
    }
  }
  if (count > 0.0) {
    const double exact = (kappa + weighted) / count;
    const double exact_residual = std::abs(h_of_lambda(exact, params, cb) - 1.0);
    if (exact >= bounds.lower && exact <= bounds.upper && exact_residual <= residual) {
      mid = exact;
      residual = exact_residual;
    }
  }

  if (!(residual <= kDualAcceptance)) {
    std::ostringstream msg;
    msg << "dual bisection did not converge: |h(lambda) - 1| = " << residual
        << " at lambda = " << mid << " in [" << bounds.lower << ", " << bounds.upper << "]";
    throw Error(ErrorKind::NumericalFailure, msg.str());
  }
  return mid;
}

BeamwidthAllocation allocate(const PowerParams& params, const Codebook& cb) {
  params.validate();
  BeamwidthAllocation out;
  out.omega.assign(cb.size(), 0.0);

  if (params.phi_s == 0.0) {
    // Sweeping is free: the data term alone is minimized by equal cells.
    std::fill(out.omega.begin(), out.omega.end(), kPiSquared / static_cast<double>(cb.size()));
    return out;
  }
  if (params.phi_d_bar == 0.0) {
    // Data is free: all measure goes to the lightest codewords.
    const auto& n = cb.weight_distribution();
    std::size_t w_min = 0;
    while (n[w_min] == 0) ++w_min;
    const double share = kPiSquared / static_cast<double>(n[w_min]);
    for (std::size_t i = 0; i < cb.size(); ++i) {
      if (static_cast<std::size_t>(cb[i].weight()) == w_min) out.omega[i] = share;
    }
    return out;
  }

  const double lambda = solve_dual(params, cb);
  const double scale = kPiSquared / params.kappa();
  for (std::size_t i = 0; i < cb.size(); ++i) {
    out.omega[i] = scale * std::max(lambda - cb[i].weight(), 0.0);
  }
  return out;
}

double avg_power_exact(const BeamwidthAllocation& omega, const Codebook& cb,
                       const PowerParams& params, double p_e) {
  check_allocation(omega, cb);
  require(p_e >= 0.0 && p_e <= 1.0, "p_e must lie in [0, 1]");
  const int L = cb.length();
  const std::uint64_t space = std::uint64_t{1} << L;
  if (space * cb.size() > (std::uint64_t{1} << 34)) {
    throw Error(ErrorKind::CapacityRefused,
                "exact error enumeration over " + std::to_string(cb.size()) +
                    " codewords x 2^" + std::to_string(L) + " patterns refused");
  }

  std::vector<double> pattern_prob(static_cast<std::size_t>(L) + 1);
  for (int w = 0; w <= L; ++w) pattern_prob[static_cast<std::size_t>(w)] =
      std::pow(p_e, w) * std::pow(1.0 - p_e, L - w);

  const auto table = cb.decode_table();
  double data = 0.0;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    const double wc = omega.omega[i];
    if (wc == 0.0) continue;
    const std::uint32_t c = cb[i].value();
    double inner = 0.0;
    for (std::uint32_t e = 0; e < space; ++e) {
      inner += pattern_prob[static_cast<std::size_t>(std::popcount(e))] *
               omega.omega[table[c ^ e]];
    }
    data += wc * inner;
  }
  const double ba = alignment_energy(omega, cb, params.phi_s);
  return (ba + params.users * params.phi_d_bar / kPiSquared * data) / params.frame_s;
}

double avg_power_upper(const BeamwidthAllocation& omega, const Codebook& cb,
                       const PowerParams& params) {
  check_allocation(omega, cb);
  double data = 0.0;
  for (double w : omega.omega) {
    data += params.p_success * (w * w - kPiSquared * w) + kPiSquared * w;
  }
  const double ba = alignment_energy(omega, cb, params.phi_s);
  return (ba + params.users * params.phi_d_bar / kPiSquared * data) / params.frame_s;
}

double upper_bound_gap(const PowerParams& params) {
  return params.users * params.phi_d_bar * kPiSquared * params.delta / params.frame_s;
}

std::vector<double> project_to_simplex(std::vector<double> v, double radius) {
  require(!v.empty() && radius > 0.0, "projection needs a non-empty vector and radius > 0");
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
  return v;
}

QpOracleResult qp_oracle(const PowerParams& params, const Codebook& cb) {
  params.validate();
  if (cb.size() > (std::size_t{1} << 16)) {
    throw Error(ErrorKind::CapacityRefused, "qp_oracle is limited to 2^16 codewords");
  }
  require(params.phi_d_bar > 0.0, "qp_oracle needs a strictly convex objective (phi_d_bar > 0)");

  const double data_scale = params.users * params.phi_d_bar / kPiSquared / params.frame_s;
  const double lipschitz = 2.0 * data_scale * params.p_success;
  const double step = 1.0 / lipschitz;
  constexpr int kMaxIterations = 100000;
  constexpr double kTolerance = 1e-14 * kPiSquared;

  QpOracleResult out;
  std::vector<double> omega(cb.size(), kPiSquared / static_cast<double>(cb.size()));
  std::vector<double> trial(cb.size());
  double change = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= kMaxIterations; ++it) {
    for (std::size_t i = 0; i < cb.size(); ++i) {
      const double grad = params.phi_s * cb[i].weight() / params.frame_s +
                          data_scale * (2.0 * params.p_success * omega[i] -
                                        params.p_success * kPiSquared + kPiSquared);
      trial[i] = omega[i] - step * grad;
    }
    trial = project_to_simplex(std::move(trial), kPiSquared);
    change = 0.0;
    for (std::size_t i = 0; i < cb.size(); ++i) {
      change = std::max(change, std::abs(trial[i] - omega[i]));
    }
    omega.swap(trial);
    trial.resize(cb.size());
    out.iterations = it;
    if (change <= kTolerance) {
      out.allocation.omega = std::move(omega);
      return out;
    }
  }
  std::ostringstream msg;
  msg << "projected gradient did not converge after " << kMaxIterations
      << " iterations; last step change " << change << " rad^2, kappa " << params.kappa();
  throw Error(ErrorKind::NumericalFailure, msg.str());
}

void write_allocation_csv(std::ostream& out, const Codebook& cb,
                          const BeamwidthAllocation& omega) {
  check_allocation(omega, cb);
  out << "codeword,weight,omega_rad2\n";
  const auto old_precision = out.precision(12);
  for (std::size_t i = 0; i < cb.size(); ++i) {
    out << cb[i].to_string() << ',' << cb[i].weight() << ',' << omega.omega[i] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace codedba
