#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ird/grid_world.hpp"
#include "ird/io.hpp"
#include "ird/kernels.hpp"
#include "ird/theta_grid.hpp"

namespace ird {

struct EnvGenSpec {
  int width = 8;
  int height = 8;
  std::size_t k_total = 5;
  std::size_t features_per_env = 3;
  std::size_t count = 5;
  std::uint64_t seed = 0;
  bool reject_trivial = true;
  int horizon = 0;  // 0 means width * height
  std::string id_prefix = "env";
  /// Random reward draws used by the triviality check.
  std::size_t trivial_probes = 16;

  void validate() const;
};

Json env_gen_spec_to_json(const EnvGenSpec& spec);
EnvGenSpec env_gen_spec_from_json(const Json& j, EnvGenSpec base = {});

/// Environments with exactly `features_per_env` one-hot terrains each, drawn
/// without replacement from `k_total`. With `reject_trivial`, an environment
/// is resampled when fewer than two terrains appear or when its planned
/// trajectory is the same for every probe reward. Throws Planning after 1000
/// consecutive rejections for one environment.
std::vector<GridEnvironment> generate_environments(const EnvGenSpec& spec);

/// Whether `env` is trivially solved in the sense used by the generator.
bool is_trivial_environment(const GridEnvironment& env, std::span<const RewardParams> probes);

/// R(xi*_theta_star; theta_star) - R(xi*_theta_hat; theta_star).
double regret(const GridEnvironment& env, const RewardParams& theta_hat, const RewardParams& theta_star);

std::vector<double> regrets(std::span<const GridEnvironment> envs, const RewardParams& theta_hat,
                            const RewardParams& theta_star);
double average_regret(std::span<const GridEnvironment> envs, const RewardParams& theta_hat,
                      const RewardParams& theta_star);

enum class TrajectoryMetric { ExactMatch, EditDistance };

/// ExactMatch: 0 for identical cell sequences, 1 otherwise.
/// EditDistance: Levenshtein distance over cells.
double trajectory_distance(TrajectoryMetric metric, const Trajectory& a, const Trajectory& b);

/// Sorted grid indices whose planned trajectory lies within `epsilon` of
/// `target` under `metric`.
std::vector<std::uint64_t> feasible_set(const GridEnvironment& env, const Trajectory& target,
                                        const ThetaGrid& grid, double epsilon = 0.0,
                                        TrajectoryMetric metric = TrajectoryMetric::ExactMatch);
std::vector<std::uint64_t> feasible_set(const PlanTable& table, const Trajectory& target,
                                        double epsilon = 0.0,
                                        TrajectoryMetric metric = TrajectoryMetric::ExactMatch);

std::vector<std::uint64_t> feasible_intersection(std::span<const GridEnvironment> envs,
                                                 std::span<const Trajectory> targets,
                                                 const ThetaGrid& grid, double epsilon = 0.0,
                                                 TrajectoryMetric metric = TrajectoryMetric::ExactMatch);

struct MembershipReport {
  std::size_t members = 0;     // theta*'s cell is in the feasible set of xi*_theta*
  std::size_t mismatches = 0;  // the cell plans a different trajectory than theta*
};

/// Checks, per environment, whether theta* snapped to `grid` reproduces the
/// trajectory planned with theta* itself.
MembershipReport true_reward_membership(std::span<const GridEnvironment> envs, const RewardParams& theta_star,
                                        const ThetaGrid& grid);

}  // namespace ird
