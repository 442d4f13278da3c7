#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "codedba/codebook.hpp"
#include "codedba/rng.hpp"
#include "codedba/waterfill.hpp"

namespace codedba {

/// Point of the AoD/AoA square flattened to [0, pi^2). Only measures matter
/// under the sectored gain model, so a 1-D embedding loses nothing.
class FlatAngle {
 public:
  explicit FlatAngle(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

struct Cell {
  Codeword codeword;
  double start = 0.0;
  double end = 0.0;
  double measure = 0.0;
};

/// Consecutive half-open cells [start, end) in canonical codebook order.
class Partition {
 public:
  Partition(const BeamwidthAllocation& omega, const Codebook& cb);

  const std::vector<Cell>& cells() const noexcept { return cells_; }
  int slots() const noexcept { return slots_; }
  double total_measure() const noexcept { return kPiSquared; }

  /// |B_k| for slot 1 <= k <= L.
  double beam_measure(int k) const;

  /// Index of the cell holding theta.
  std::size_t cell_index(FlatAngle theta) const;
  const Codeword& cell_codeword(FlatAngle theta) const;

 private:
  std::vector<Cell> cells_;
  std::vector<double> ends_;
  std::vector<double> beam_measures_;
  int slots_ = 0;
};

inline Partition build_partition(const BeamwidthAllocation& omega, const Codebook& cb) {
  return Partition(omega, cb);
}

FlatAngle sample_angle(RngStream& rng);

/// CSV with columns codeword,start,end,measure.
void write_partition_csv(std::ostream& out, const Partition& p);

}  // namespace codedba
