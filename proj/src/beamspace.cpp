#include "codedba/beamspace.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "codedba/error.hpp"

namespace codedba {

namespace {
constexpr double kSumTolerance = 1e-9;
}

FlatAngle::FlatAngle(double value) : value_(value) {
  require(value >= 0.0 && value < kPiSquared, "flat angle must lie in [0, pi^2)");
}

Partition::Partition(const BeamwidthAllocation& omega, const Codebook& cb)
    : slots_(cb.length()) {
  require(omega.omega.size() == cb.size(), "allocation size does not match codebook");
  for (double w : omega.omega) {
    require(std::isfinite(w) && w >= 0.0, "beamwidths must be non-negative");
  }
  require(std::abs(omega.total() - kPiSquared) <= kSumTolerance,
          "beamwidths must sum to pi^2");

  cells_.reserve(cb.size());
  ends_.reserve(cb.size());
  double cursor = 0.0;
  for (std::size_t i = 0; i < cb.size(); ++i) {
    const double end = cursor + omega.omega[i];
    cells_.push_back({cb[i], cursor, end, omega.omega[i]});
    cursor = end;
  }
  // Absorb rounding so the cells cover [0, pi^2) exactly; trailing empty
  // cells sit at pi^2.
  for (auto it = cells_.rbegin(); it != cells_.rend(); ++it) {
    if (it->measure > 0.0) {
      it->end = kPiSquared;
      break;
    }
    it->start = it->end = kPiSquared;
  }
  for (const auto& c : cells_) ends_.push_back(c.end);

  beam_measures_.assign(static_cast<std::size_t>(slots_), 0.0);
  for (const auto& c : cells_) {
    for (int k = 1; k <= slots_; ++k) {
      if (c.codeword.slot(k)) beam_measures_[static_cast<std::size_t>(k - 1)] += c.measure;
    }
  }
}

double Partition::beam_measure(int k) const {
  require(k >= 1 && k <= slots_, "slot index out of range");
  return beam_measures_[static_cast<std::size_t>(k - 1)];
}

std::size_t Partition::cell_index(FlatAngle theta) const {
  const auto it = std::upper_bound(ends_.begin(), ends_.end(), theta.value());
  // The last positive cell ends at pi^2 > theta, so the search always lands.
  return static_cast<std::size_t>(it - ends_.begin());
}

const Codeword& Partition::cell_codeword(FlatAngle theta) const {
  return cells_[cell_index(theta)].codeword;
}

FlatAngle sample_angle(RngStream& rng) {
  const double v = rng.uniform() * kPiSquared;
  return FlatAngle(std::min(v, std::nextafter(kPiSquared, 0.0)));
}

void write_partition_csv(std::ostream& out, const Partition& p) {
  out << "codeword,start,end,measure\n";
  const auto old_precision = out.precision(12);
  for (const auto& c : p.cells()) {
    out << c.codeword.to_string() << ',' << c.start << ',' << c.end << ',' << c.measure
        << '\n';
  }
  out.precision(old_precision);
}

}  // namespace codedba
