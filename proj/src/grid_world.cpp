#include "ird/grid_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "ird/error.hpp"

namespace ird {
namespace {

constexpr double kUnreachable = -std::numeric_limits<double>::infinity();

std::string cell_str(Cell c) {
  std::ostringstream os;
  os << "(" << c.row << "," << c.col << ")";
  return os.str();
}

}  // namespace

int chebyshev_distance(Cell a, Cell b) {
  return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col));
}

RewardParams scaled(const RewardParams& theta, double c) {
  RewardParams out = theta;
  for (double& w : out.weights) w *= c;
  return out;
}

bool Hypercube::contains(const RewardParams& theta) const {
  return std::all_of(theta.weights.begin(), theta.weights.end(),
                     [&](double w) { return w >= lo && w <= hi; });
}

RewardParams Hypercube::center(std::size_t k) const {
  return RewardParams{std::vector<double>(k, 0.5 * (lo + hi))};
}

double Hypercube::log_uniform_density(std::size_t k) const {
  return -static_cast<double>(k) * std::log(hi - lo);
}

void Hypercube::validate() const {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    std::ostringstream os;
    os << "hypercube bounds must satisfy lo < hi, got [" << lo << ", " << hi << "]";
    fail(ErrorKind::Config, os.str());
  }
}

GridEnvironment::GridEnvironment(std::string id, int width, int height, std::size_t k,
                                 std::vector<double> features, Cell start, Cell goal,
                                 int horizon)
    : id_(std::move(id)),
      width_(width),
      height_(height),
      k_(k),
      features_(std::move(features)),
      start_(start),
      goal_(goal),
      horizon_(horizon) {
  const std::string where = "environment '" + id_ + "': ";
  if (width_ < 1 || height_ < 1) fail(ErrorKind::Validation, where + "width and height must be positive");
  if (k_ < 1) fail(ErrorKind::Validation, where + "feature count k must be positive");
  if (features_.size() != cell_count() * k_) {
    std::ostringstream os;
    os << where << "expected " << cell_count() * k_ << " feature values (" << cell_count()
       << " cells x k=" << k_ << "), got " << features_.size();
    fail(ErrorKind::Validation, os.str());
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!std::isfinite(features_[i]) || features_[i] < 0.0) {
      std::ostringstream os;
      os << where << "cell " << cell_str(cell_at(i / k_)) << " feature " << i % k_
         << " must be finite and nonnegative";
      fail(ErrorKind::Validation, os.str());
    }
  }
  if (!in_bounds(start_)) fail(ErrorKind::Validation, where + "start " + cell_str(start_) + " out of bounds");
  if (!in_bounds(goal_)) fail(ErrorKind::Validation, where + "goal " + cell_str(goal_) + " out of bounds");
  if (start_ == goal_) fail(ErrorKind::Validation, where + "start and goal coincide at " + cell_str(start_));
  if (horizon_ < chebyshev_distance(start_, goal_)) {
    std::ostringstream os;
    os << where << "horizon " << horizon_ << " is shorter than the start-goal distance "
       << chebyshev_distance(start_, goal_);
    fail(ErrorKind::Validation, os.str());
  }

  neighbor_begin_.reserve(cell_count() + 1);
  neighbor_begin_.push_back(0);
  for (std::size_t i = 0; i < cell_count(); ++i) {
    const Cell c = cell_at(i);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Cell n{c.row + dr, c.col + dc};
        if (in_bounds(n)) neighbor_list_.push_back(static_cast<std::uint32_t>(index_of(n)));
      }
    }
    neighbor_begin_.push_back(neighbor_list_.size());
  }
}

std::vector<std::size_t> GridEnvironment::active_dimensions() const {
  std::vector<std::size_t> dims;
  for (std::size_t j = 0; j < k_; ++j) {
    for (std::size_t i = 0; i < cell_count(); ++i) {
      if (features_[i * k_ + j] != 0.0) {
        dims.push_back(j);
        break;
      }
    }
  }
  return dims;
}

std::vector<Cell> neighbors(const GridEnvironment& env, Cell cell) {
  if (!env.in_bounds(cell)) {
    fail(ErrorKind::InputDomain, "neighbors: cell " + cell_str(cell) + " is out of bounds");
  }
  std::vector<Cell> out;
  for (std::uint32_t n : env.neighbor_indices(env.index_of(cell))) out.push_back(env.cell_at(n));
  return out;
}

void validate_trajectory(const GridEnvironment& env, const Trajectory& traj) {
  const auto bad = [&](const std::string& what) {
    fail(ErrorKind::InputDomain, "invalid trajectory in '" + env.id() + "': " + what);
  };
  if (traj.cells.empty()) bad("no cells");
  if (traj.cells.front() != env.start()) bad("does not begin at the start cell");
  if (traj.cells.back() != env.goal()) bad("does not end at the goal cell");
  if (static_cast<long>(traj.moves()) > env.horizon()) bad("exceeds the horizon");
  for (std::size_t i = 0; i < traj.cells.size(); ++i) {
    const Cell c = traj.cells[i];
    if (!env.in_bounds(c)) bad("cell " + cell_str(c) + " out of bounds");
    if (i + 1 < traj.cells.size()) {
      if (c == env.goal()) bad("passes through the absorbing goal before its end");
      if (chebyshev_distance(c, traj.cells[i + 1]) != 1) {
        bad("cells " + cell_str(c) + " and " + cell_str(traj.cells[i + 1]) + " are not neighbors");
      }
    }
  }
}

bool is_valid_trajectory(const GridEnvironment& env, const Trajectory& traj) {
  try {
    validate_trajectory(env, traj);
    return true;
  } catch (const Error&) {
    return false;
  }
}

FeatureCounts trajectory_features(const GridEnvironment& env, const Trajectory& traj) {
  validate_trajectory(env, traj);
  FeatureCounts out{std::vector<double>(env.k(), 0.0)};
  for (Cell c : traj.cells) {
    const auto f = env.features(c);
    for (std::size_t j = 0; j < env.k(); ++j) out.phi[j] += f[j];
  }
  return out;
}

double reward_of(std::span<const double> phi, std::span<const double> theta) {
  if (phi.size() != theta.size()) {
    std::ostringstream os;
    os << "reward_of: dimension mismatch (phi has " << phi.size() << ", theta has "
       << theta.size() << ")";
    fail(ErrorKind::InputDomain, os.str());
  }
  double r = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) r += theta[j] * phi[j];
  return r;
}

double reward_of(const FeatureCounts& phi, const RewardParams& theta) {
  return reward_of(std::span<const double>(phi.phi), std::span<const double>(theta.weights));
}

Trajectory plan_optimal(const GridEnvironment& env, const RewardParams& theta) {
  const std::size_t k = env.k();
  if (theta.size() != k) {
    std::ostringstream os;
    os << "plan_optimal: theta has " << theta.size() << " components, environment '"
       << env.id() << "' has k=" << k;
    fail(ErrorKind::InputDomain, os.str());
  }
  const std::size_t n = env.cell_count();
  const std::size_t goal = env.index_of(env.goal());
  const std::size_t horizon = static_cast<std::size_t>(env.horizon());
  const double* w = theta.weights.data();

  // Mathematically equal values of different feature counts can differ in the
  // last bits, so neighbors within a tolerance proportional to the largest
  // possible |reward| count as tied and the first one in neighbor order wins.
  // The tolerance scales with theta, which keeps ties scale-invariant.
  double max_cell = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::abs(theta.weights[j] * env.raw_features()[c * k + j]);
    max_cell = std::max(max_cell, s);
  }
  const double tie_tol = 1e-12 * max_cell * static_cast<double>(horizon + 1);

  // Values carry full feature counts so equal-Phi suffixes compare bit-exactly.
  std::vector<double> prev_val(n, kUnreachable), cur_val(n);
  std::vector<double> prev_phi(n * k, 0.0), cur_phi(n * k, 0.0);
  std::vector<std::int32_t> choice(horizon * n, -1);

  const auto goal_f = env.features_at(goal);
  std::copy(goal_f.begin(), goal_f.end(), prev_phi.begin() + goal * k);
  prev_val[goal] = reward_of(goal_f, theta.weights);

  for (std::size_t t = 1; t <= horizon; ++t) {
    std::int32_t* layer_choice = choice.data() + (t - 1) * n;
    for (std::size_t c = 0; c < n; ++c) {
      if (c == goal) {
        cur_val[c] = prev_val[c];
        std::copy_n(prev_phi.begin() + c * k, k, cur_phi.begin() + c * k);
        continue;
      }
      double best = kUnreachable;
      for (std::uint32_t nb : env.neighbor_indices(c)) best = std::max(best, prev_val[nb]);
      std::int32_t best_n = -1;
      if (best != kUnreachable) {
        for (std::uint32_t nb : env.neighbor_indices(c)) {
          if (prev_val[nb] != kUnreachable && prev_val[nb] >= best - tie_tol) {
            best_n = static_cast<std::int32_t>(nb);
            break;
          }
        }
      }
      layer_choice[c] = best_n;
      if (best_n < 0) {
        cur_val[c] = kUnreachable;
        continue;
      }
      const double* f = env.raw_features().data() + c * k;
      const double* suffix = prev_phi.data() + static_cast<std::size_t>(best_n) * k;
      double* out = cur_phi.data() + c * k;
      double v = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        out[j] = f[j] + suffix[j];
        v += w[j] * out[j];
      }
      cur_val[c] = v;
    }
    std::swap(prev_val, cur_val);
    std::swap(prev_phi, cur_phi);
  }

  std::size_t cur = env.index_of(env.start());
  if (prev_val[cur] == kUnreachable) {
    fail(ErrorKind::Planning, "plan_optimal: goal unreachable within horizon in '" + env.id() + "'");
  }
  Trajectory traj;
  traj.cells.push_back(env.cell_at(cur));
  for (std::size_t t = horizon; cur != goal; --t) {
    cur = static_cast<std::size_t>(choice[(t - 1) * n + cur]);
    traj.cells.push_back(env.cell_at(cur));
  }
  return traj;
}

PlanResult plan_with_features(const GridEnvironment& env, const RewardParams& theta) {
  PlanResult r;
  r.trajectory = plan_optimal(env, theta);
  r.features = trajectory_features(env, r.trajectory);
  return r;
}

}  // namespace ird
