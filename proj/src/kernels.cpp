#include "ird/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <limits>
#include <sstream>

#include "ird/error.hpp"

namespace ird {

int available_jobs() { return omp_get_num_procs(); }

void set_jobs(int n) { omp_set_num_threads(n < 1 ? available_jobs() : n); }

ThetaGrid::ThetaGrid(std::size_t k, int resolution, Hypercube box)
    : k_(k), resolution_(resolution), box_(box), size_(1) {
  if (k_ < 1) fail(ErrorKind::Config, "theta grid needs k >= 1");
  if (resolution_ < 1) fail(ErrorKind::Config, "theta grid resolution must be positive");
  box_.validate();
  for (std::size_t d = 0; d < k_; ++d) {
    if (size_ > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(resolution_)) {
      size_ = std::numeric_limits<std::uint64_t>::max();
      break;
    }
    size_ *= static_cast<std::uint64_t>(resolution_);
  }
}

RewardParams ThetaGrid::point(std::uint64_t index) const {
  RewardParams p{std::vector<double>(k_)};
  const auto r = static_cast<std::uint64_t>(resolution_);
  for (std::size_t d = k_; d-- > 0;) {
    p.weights[d] = coordinate(static_cast<int>(index % r));
    index /= r;
  }
  return p;
}

std::vector<int> ThetaGrid::coords(std::uint64_t index) const {
  std::vector<int> c(k_);
  const auto r = static_cast<std::uint64_t>(resolution_);
  for (std::size_t d = k_; d-- > 0;) {
    c[d] = static_cast<int>(index % r);
    index /= r;
  }
  return c;
}

std::uint64_t ThetaGrid::index_of(const std::vector<int>& coords) const {
  std::uint64_t index = 0;
  for (int c : coords) index = index * static_cast<std::uint64_t>(resolution_) + static_cast<std::uint64_t>(c);
  return index;
}

std::uint64_t ThetaGrid::snap(const RewardParams& theta) const {
  if (theta.size() != k_) fail(ErrorKind::InputDomain, "snap: dimension mismatch");
  std::vector<int> c(k_);
  for (std::size_t d = 0; d < k_; ++d) {
    const double u = (theta[d] - box_.lo) / box_.width();
    int i = static_cast<int>(u * resolution_);
    c[d] = std::clamp(i, 0, resolution_ - 1);
  }
  return index_of(c);
}

void ThetaGrid::require_size_at_most(std::uint64_t limit, const char* what) const {
  if (size_ > limit) {
    std::ostringstream os;
    os << what << ": grid of resolution " << resolution_ << " in " << k_ << " dimensions has "
       << size_ << " points, over the budget of " << limit;
    fail(ErrorKind::Budget, os.str());
  }
}

std::vector<RewardParams> ThetaGrid::points() const {
  require_size_at_most(kGridBudget, "ThetaGrid::points");
  std::vector<RewardParams> out;
  out.reserve(size_);
  for (std::uint64_t i = 0; i < size_; ++i) out.push_back(point(i));
  return out;
}

namespace serial {

std::vector<PlanResult> plan_batch(const GridEnvironment& env, std::span<const RewardParams> thetas) {
  std::vector<PlanResult> out(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) out[i] = plan_with_features(env, thetas[i]);
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<PlanResult> plan_batch(const GridEnvironment& env, std::span<const RewardParams> thetas) {
  std::vector<PlanResult> out(thetas.size());
  const auto n = static_cast<std::int64_t>(thetas.size());
  // Exceptions may not cross the OpenMP region boundary.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = plan_with_features(env, thetas[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(ird_plan_batch_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace parallel

PlanTable::PlanTable(const GridEnvironment& env, const ThetaGrid& grid, bool use_parallel)
    : grid_(grid), active_(env.active_dimensions()), grid_size_(grid.size()) {
  if (grid.k() != env.k()) fail(ErrorKind::InputDomain, "PlanTable: grid and environment dimensions differ");
  grid.require_size_at_most(kGridBudget, "PlanTable");
  const ThetaGrid sub(std::max<std::size_t>(active_.size(), 1), grid.resolution(), grid.box());
  const std::uint64_t sub_size = active_.empty() ? 1 : sub.size();
  std::vector<RewardParams> thetas;
  thetas.reserve(sub_size);
  for (std::uint64_t s = 0; s < sub_size; ++s) {
    RewardParams theta = grid.box().center(env.k());
    if (!active_.empty()) {
      const auto c = sub.coords(s);
      for (std::size_t a = 0; a < active_.size(); ++a) theta.weights[active_[a]] = grid.coordinate(c[a]);
    }
    thetas.push_back(std::move(theta));
  }
  plans_ = use_parallel ? parallel::plan_batch(env, thetas) : serial::plan_batch(env, thetas);
}

std::size_t PlanTable::sub_index(std::uint64_t grid_index) const {
  const auto c = grid_.coords(grid_index);
  std::size_t s = 0;
  for (std::size_t d : active_) s = s * static_cast<std::size_t>(grid_.resolution()) + static_cast<std::size_t>(c[d]);
  return s;
}

}  // namespace ird
