#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ird {

struct Cell {
  int row = 0;
  int col = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

int chebyshev_distance(Cell a, Cell b);

/// A point in the k-dimensional reward hypercube; weights of a linear reward.
struct RewardParams {
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  double operator[](std::size_t i) const { return weights[i]; }
  double& operator[](std::size_t i) { return weights[i]; }
  friend bool operator==(const RewardParams&, const RewardParams&) = default;
};

RewardParams scaled(const RewardParams& theta, double c);

/// Per-feature accumulation along a trajectory.
struct FeatureCounts {
  std::vector<double> phi;

  std::size_t size() const { return phi.size(); }
  double operator[](std::size_t i) const { return phi[i]; }
  friend bool operator==(const FeatureCounts&, const FeatureCounts&) = default;
};

/// Axis-aligned hypercube [lo, hi]^k shared by all dimensions.
struct Hypercube {
  double lo = -1.0;
  double hi = 1.0;

  bool contains(const RewardParams& theta) const;
  RewardParams center(std::size_t k) const;
  double width() const { return hi - lo; }
  /// Log density of the uniform distribution on the k-dimensional box.
  double log_uniform_density(std::size_t k) const;
  void validate() const;
};

struct Trajectory {
  std::vector<Cell> cells;

  std::size_t moves() const { return cells.empty() ? 0 : cells.size() - 1; }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Deterministic 8-connected grid with per-cell feature vectors. The goal is
/// absorbing: a trajectory ends the first time it enters the goal.
class GridEnvironment {
 public:
  /// `features` is row-major, `k` values per cell. Throws Validation on any
  /// violated invariant, naming the first offending cell.
  GridEnvironment(std::string id, int width, int height, std::size_t k,
                  std::vector<double> features, Cell start, Cell goal, int horizon);

  const std::string& id() const { return id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t k() const { return k_; }
  Cell start() const { return start_; }
  Cell goal() const { return goal_; }
  int horizon() const { return horizon_; }
  std::size_t cell_count() const { return static_cast<std::size_t>(width_) * height_; }

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
  }
  std::size_t index_of(Cell c) const {
    return static_cast<std::size_t>(c.row) * width_ + c.col;
  }
  Cell cell_at(std::size_t index) const {
    return Cell{static_cast<int>(index / width_), static_cast<int>(index % width_)};
  }
  std::span<const double> features(Cell c) const {
    return {features_.data() + index_of(c) * k_, k_};
  }
  std::span<const double> features_at(std::size_t index) const {
    return {features_.data() + index * k_, k_};
  }
  const std::vector<double>& raw_features() const { return features_; }

  /// Dimensions with a nonzero value in at least one cell.
  std::vector<std::size_t> active_dimensions() const;

  /// Neighbor cell indices of `index`, same order as `neighbors`.
  std::span<const std::uint32_t> neighbor_indices(std::size_t index) const {
    return {neighbor_list_.data() + neighbor_begin_[index],
            neighbor_begin_[index + 1] - neighbor_begin_[index]};
  }

 private:
  std::string id_;
  int width_;
  int height_;
  std::size_t k_;
  std::vector<double> features_;
  Cell start_;
  Cell goal_;
  int horizon_;
  std::vector<std::size_t> neighbor_begin_;
  std::vector<std::uint32_t> neighbor_list_;
};

/// In-bounds cells at Chebyshev distance 1, in row-major offset order.
std::vector<Cell> neighbors(const GridEnvironment& env, Cell cell);

/// Throws InputDomain describing the first violated trajectory invariant.
void validate_trajectory(const GridEnvironment& env, const Trajectory& traj);
bool is_valid_trajectory(const GridEnvironment& env, const Trajectory& traj);

FeatureCounts trajectory_features(const GridEnvironment& env, const Trajectory& traj);

/// theta . phi, summed in dimension order.
double reward_of(const FeatureCounts& phi, const RewardParams& theta);
double reward_of(std::span<const double> phi, std::span<const double> theta);

/// Exact finite-horizon dynamic program over (cell, moves remaining).
/// Returns a trajectory maximizing theta . Phi among all trajectories of at
/// most `horizon` moves; ties go to the first maximizing neighbor in
/// `neighbors` order. Throws Planning when the goal is unreachable.
Trajectory plan_optimal(const GridEnvironment& env, const RewardParams& theta);

/// Planner output together with its feature counts.
struct PlanResult {
  Trajectory trajectory;
  FeatureCounts features;
};

PlanResult plan_with_features(const GridEnvironment& env, const RewardParams& theta);

}  // namespace ird
