#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "codedba/codebook.hpp"

namespace codedba {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kPiSquared = kPi * kPi;

/// Probability that an i.i.d. Bernoulli(p_e) error pattern of length L has
/// at most eps ones, and its complement (the mis-alignment bound).
struct CorrectionProbability {
  double success = 1.0;
  double tail = 0.0;
};

CorrectionProbability success_probability(double p_e, int slots, int eps);

/// Inputs of the beamwidth design problem.
///
/// phi_s and phi_d_bar may individually be zero (p_e = 1/2, or zero-rate
/// users); allocate() then returns the corresponding limit of the
/// water-filling solution.
struct PowerParams {
  double phi_s = 0.0;      ///< beam-alignment energy density, J/rad^2
  double phi_d_bar = 0.0;  ///< mean data energy density, J/rad^2
  int users = 1;
  double frame_s = 0.0;
  double p_success = 1.0;  ///< P(W(e) <= eps)
  double delta = 0.0;      ///< 1 - p_success

  static PowerParams make(double phi_s, double phi_d_bar, int users, double frame_s,
                          double p_success);

  /// 2 p_success M phi_d_bar / phi_s; the solution depends on params only
  /// through this aggregate.
  double kappa() const;

  void validate() const;
};

/// Beamwidth per codeword, indexed like Codebook::codewords().
struct BeamwidthAllocation {
  std::vector<double> omega;

  double total() const;
  double of(const Codebook& cb, const Codeword& c) const;
};

double h_of_lambda(double lambda, const PowerParams& params, const Codebook& cb);

struct DualBounds {
  double lower = 0.0;
  double upper = 0.0;
};

DualBounds dual_bounds(const PowerParams& params, const Codebook& cb);

/// lambda* solving h(lambda) = 1, by bisection over dual_bounds() followed by
/// an exact solve on the linear piece bisection lands in.
double solve_dual(const PowerParams& params, const Codebook& cb);

BeamwidthAllocation allocate(const PowerParams& params, const Codebook& cb);

/// Average power with exact expectation over error patterns.
double avg_power_exact(const BeamwidthAllocation& omega, const Codebook& cb,
                       const PowerParams& params, double p_e);

/// Convex upper bound minimized by allocate().
double avg_power_upper(const BeamwidthAllocation& omega, const Codebook& cb,
                       const PowerParams& params);

/// M phi_d_bar pi^2 delta / T_fr, the worst-case gap between the two objectives.
double upper_bound_gap(const PowerParams& params);

struct QpOracleResult {
  BeamwidthAllocation allocation;
  int iterations = 0;
};

/// Projected-gradient minimization of avg_power_upper over the scaled simplex.
/// Independent of the dual route; used to cross-check allocate().
QpOracleResult qp_oracle(const PowerParams& params, const Codebook& cb);

/// Euclidean projection of v onto {x >= 0, sum x = radius}.
std::vector<double> project_to_simplex(std::vector<double> v, double radius);

/// CSV with columns codeword,weight,omega_rad2.
void write_allocation_csv(std::ostream& out, const Codebook& cb,
                          const BeamwidthAllocation& omega);

}  // namespace codedba
