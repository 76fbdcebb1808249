#pragma once

// Planner sweeps and index maps used by every grid-based computation. The
// `parallel` versions distribute iterations with OpenMP and write each result
// into its own slot, so their output is bit-identical to the `serial`
// reference regardless of thread count or schedule.

#include <cstdint>
#include <exception>
#include <span>
#include <vector>

#include "ird/grid_world.hpp"
#include "ird/theta_grid.hpp"

namespace ird {

/// OpenMP thread count for subsequent parallel regions; n < 1 restores the
/// number of available cores.
void set_jobs(int n);
int available_jobs();

namespace serial {

std::vector<PlanResult> plan_batch(const GridEnvironment& env, std::span<const RewardParams> thetas);

template <class T, class F>
std::vector<T> map_indexed(std::int64_t n, F&& f) {
  std::vector<T> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = f(i);
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<PlanResult> plan_batch(const GridEnvironment& env, std::span<const RewardParams> thetas);

/// The lowest-index exception thrown by `f` is rethrown after the loop.
template <class T, class F>
std::vector<T> map_indexed(std::int64_t n, F&& f) {
  std::vector<T> out(static_cast<std::size_t>(n));
  std::exception_ptr error;
  std::int64_t error_at = n;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = f(i);
    } catch (...) {
#pragma omp critical(ird_map_indexed_error)
      if (i < error_at) {
        error_at = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace parallel

/// Planner outputs for every point of a ThetaGrid in one environment.
///
/// Dimensions absent from the environment (zero in every cell) contribute
/// exactly zero to every trajectory value, so the plan only depends on the
/// active coordinates. The table plans the active sub-lattice once and maps
/// full-grid indices onto it.
class PlanTable {
 public:
  PlanTable(const GridEnvironment& env, const ThetaGrid& grid, bool use_parallel = true);

  std::uint64_t grid_size() const { return grid_size_; }
  /// Number of planner calls made to build the table.
  std::size_t planner_calls() const { return plans_.size(); }
  std::size_t sub_index(std::uint64_t grid_index) const;
  const PlanResult& at(std::uint64_t grid_index) const { return plans_[sub_index(grid_index)]; }
  const std::vector<std::size_t>& active_dimensions() const { return active_; }

 private:
  ThetaGrid grid_;
  std::vector<std::size_t> active_;
  std::uint64_t grid_size_;
  std::vector<PlanResult> plans_;
};

}  // namespace ird
