#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ird/grid_world.hpp"
#include "ird/inference.hpp"
#include "ird/kernels.hpp"
#include "ird/theta_grid.hpp"

namespace ird {

/// Normalized posterior over the points of a ThetaGrid.
struct DiscretePosterior {
  ThetaGrid grid;
  std::vector<double> log_weights;  // log of normalized weights

  std::vector<double> weights() const;
  /// Marginal of dimension `d` over its `resolution` grid coordinates.
  std::vector<double> marginal(std::size_t d) const;
  RewardParams mean() const;
  std::uint64_t argmax() const;
};

/// Bookkeeping for simulated design runs.
struct DesignEvent {
  std::string condition;  // "independent" or "joint"
  std::size_t environments = 0;
  std::size_t planner_calls = 0;
  double seconds = 0.0;
};
using DesignLog = std::vector<DesignEvent>;

/// Draws a proxy from the grid with probability proportional to
/// exp(beta * R(xi*_proxy; theta_star)) in `env`.
ProxyObservation simulate_designer(const GridEnvironment& env, const RewardParams& theta_star,
                                   double beta, const ThetaGrid& grid, std::uint64_t seed,
                                   DesignLog* log = nullptr);
ProxyObservation simulate_designer(const GridEnvironment& env, const PlanTable& table,
                                   const ThetaGrid& grid, const RewardParams& theta_star,
                                   double beta, std::uint64_t seed);

/// Joint designer: one proxy for all environments, drawn with probability
/// proportional to exp(beta * sum_i R(xi*_proxy,i; theta_star)).
JointProxyObservation simulate_joint_designer(std::span<const GridEnvironment> envs,
                                              const RewardParams& theta_star, double beta,
                                              const ThetaGrid& grid, std::uint64_t seed,
                                              DesignLog* log = nullptr);
JointProxyObservation simulate_joint_designer(std::span<const GridEnvironment> envs,
                                              std::span<const PlanTable> tables,
                                              const ThetaGrid& grid, const RewardParams& theta_star,
                                              double beta, std::uint64_t seed);

/// The joint observation expressed as one observation per environment.
std::vector<ProxyObservation> as_observations(const JointProxyObservation& joint);

/// Brute-force posterior on `theta_grid`, with each environment's normalizer
/// computed exactly as the mean over `proxy_grid` of exp(beta R(xi*_proxy; theta)).
/// Throws Budget when either grid exceeds kGridBudget points.
DiscretePosterior exhaustive_posterior(std::span<const ProxyObservation> observations,
                                       std::span<const GridEnvironment> envs,
                                       const ThetaGrid& theta_grid, const ThetaGrid& proxy_grid,
                                       double beta);

struct DesignCounters {
  std::size_t designer_invocations = 0;
  std::size_t environments = 0;
  std::size_t planner_calls = 0;
  double wall_seconds = 0.0;
};

struct DesignTimeReport {
  std::map<std::string, DesignCounters> per_condition;
  std::vector<std::size_t> feasible_set_sizes;

  Json to_json() const;
};

DesignTimeReport design_time_proxy(const DesignLog& log, std::span<const std::size_t> feasible_set_sizes);

}  // namespace ird
