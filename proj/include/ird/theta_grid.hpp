#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ird/grid_world.hpp"

namespace ird {

/// Lattice of cell centers covering the hypercube, `resolution` per
/// dimension. Index order is row-major with dimension 0 most significant.
class ThetaGrid {
 public:
  ThetaGrid(std::size_t k, int resolution, Hypercube box = {});

  std::size_t k() const { return k_; }
  int resolution() const { return resolution_; }
  const Hypercube& box() const { return box_; }
  /// resolution^k, saturating at UINT64_MAX.
  std::uint64_t size() const { return size_; }

  double coordinate(int i) const {
    return box_.lo + (i + 0.5) * box_.width() / resolution_;
  }
  RewardParams point(std::uint64_t index) const;
  std::vector<int> coords(std::uint64_t index) const;
  std::uint64_t index_of(const std::vector<int>& coords) const;
  /// Index of the grid cell containing theta (upper faces belong to the last cell).
  std::uint64_t snap(const RewardParams& theta) const;

  /// Throws Budget when size() exceeds `limit`.
  void require_size_at_most(std::uint64_t limit, const char* what) const;
  std::vector<RewardParams> points() const;

 private:
  std::size_t k_;
  int resolution_;
  Hypercube box_;
  std::uint64_t size_;
};

inline constexpr std::uint64_t kGridBudget = 1'000'000;

}  // namespace ird
