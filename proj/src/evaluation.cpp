#include "ird/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <sstream>

#include "ird/error.hpp"
#include "ird/random.hpp"

namespace ird {
namespace {

constexpr int kMaxConsecutiveRejections = 1000;

}  // namespace

void EnvGenSpec::validate() const {
  const auto bad = [](const std::string& m) { fail(ErrorKind::Validation, "environment spec: " + m); };
  if (width < 1 || height < 1) bad("width and height must be positive");
  if (width * height < 2) bad("grid needs at least two cells");
  if (k_total < 1) bad("k_total must be positive");
  if (features_per_env < 1 || features_per_env > k_total) bad("features_per_env must lie in [1, k_total]");
  if (count < 1) bad("count must be at least 1");
  if (horizon < 0) bad("horizon must be nonnegative (0 selects width * height)");
}

Json env_gen_spec_to_json(const EnvGenSpec& s) {
  return Json{{"width", s.width},
              {"height", s.height},
              {"k_total", s.k_total},
              {"features_per_env", s.features_per_env},
              {"count", s.count},
              {"seed", s.seed},
              {"reject_trivial", s.reject_trivial},
              {"horizon", s.horizon},
              {"id_prefix", s.id_prefix},
              {"trivial_probes", s.trivial_probes}};
}

EnvGenSpec env_gen_spec_from_json(const Json& j, EnvGenSpec s) {
  if (!j.is_object()) fail(ErrorKind::Validation, "environment spec must be a JSON object");
  try {
    if (j.contains("width")) s.width = j.at("width").get<int>();
    if (j.contains("height")) s.height = j.at("height").get<int>();
    if (j.contains("k_total")) s.k_total = j.at("k_total").get<std::size_t>();
    if (j.contains("features_per_env")) s.features_per_env = j.at("features_per_env").get<std::size_t>();
    if (j.contains("count")) {
      const auto c = j.at("count").get<long long>();
      if (c < 0) fail(ErrorKind::Validation, "environment spec: count must be at least 1");
      s.count = static_cast<std::size_t>(c);
    }
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("reject_trivial")) s.reject_trivial = j.at("reject_trivial").get<bool>();
    if (j.contains("horizon")) s.horizon = j.at("horizon").get<int>();
    if (j.contains("id_prefix")) s.id_prefix = j.at("id_prefix").get<std::string>();
    if (j.contains("trivial_probes")) s.trivial_probes = j.at("trivial_probes").get<std::size_t>();
  } catch (const Json::exception& e) {
    fail(ErrorKind::Validation, std::string("environment spec: ") + e.what());
  }
  return s;
}

bool is_trivial_environment(const GridEnvironment& env, std::span<const RewardParams> probes) {
  if (env.active_dimensions().size() < 2) return true;
  if (probes.empty()) return false;
  const Trajectory first = plan_optimal(env, probes.front());
  for (std::size_t i = 1; i < probes.size(); ++i) {
    if (plan_optimal(env, probes[i]) != first) return false;
  }
  return true;
}

std::vector<GridEnvironment> generate_environments(const EnvGenSpec& spec) {
  spec.validate();
  const int w = spec.width, h = spec.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const int horizon = spec.horizon > 0 ? spec.horizon : w * h;
  const int min_distance = std::max(1, (std::max(w, h) + 1) / 2);
  std::vector<GridEnvironment> envs;
  envs.reserve(spec.count);

  for (std::size_t e = 0; e < spec.count; ++e) {
    Rng rng = make_rng(derive_seed(spec.seed, "environment", {e}));
    std::ostringstream id;
    id << spec.id_prefix << "-" << std::setfill('0') << std::setw(3) << e;
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxConsecutiveRejections && !accepted; ++attempt) {
      // Partial Fisher-Yates: the first F entries are the chosen terrains.
      std::vector<std::size_t> terrains(spec.k_total);
      std::iota(terrains.begin(), terrains.end(), std::size_t{0});
      for (std::size_t i = 0; i < spec.features_per_env; ++i) {
        const std::size_t j = i + uniform_index(rng, spec.k_total - i);
        std::swap(terrains[i], terrains[j]);
      }
      std::vector<double> features(n * spec.k_total, 0.0);
      std::vector<bool> used(spec.features_per_env, false);
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t t = uniform_index(rng, spec.features_per_env);
        used[t] = true;
        features[c * spec.k_total + terrains[t]] = 1.0;
      }
      const Cell start{static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(h))),
                       static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(w)))};
      std::vector<Cell> goals;
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          if (chebyshev_distance(start, Cell{r, c}) >= min_distance) goals.push_back(Cell{r, c});
        }
      }
      std::vector<RewardParams> probes(spec.trivial_probes, RewardParams{std::vector<double>(spec.k_total)});
      for (auto& p : probes) {
        for (double& x : p.weights) x = uniform(rng, -1.0, 1.0);
      }
      if (goals.empty()) continue;
      const Cell goal = goals[uniform_index(rng, goals.size())];
      if (std::find(used.begin(), used.end(), false) != used.end()) continue;

      GridEnvironment env(id.str(), w, h, spec.k_total, std::move(features), start, goal, horizon);
      if (spec.reject_trivial && is_trivial_environment(env, probes)) continue;
      envs.push_back(std::move(env));
      accepted = true;
    }
    if (!accepted) {
      fail(ErrorKind::Planning, "generate_environments: " + std::to_string(kMaxConsecutiveRejections) +
                                    " consecutive rejections for " + id.str() + " with spec " +
                                    env_gen_spec_to_json(spec).dump());
    }
  }
  return envs;
}

double regret(const GridEnvironment& env, const RewardParams& theta_hat, const RewardParams& theta_star) {
  if (theta_hat.size() != theta_star.size() || theta_star.size() != env.k()) {
    fail(ErrorKind::InputDomain, "regret: dimension mismatch");
  }
  const double best = reward_of(trajectory_features(env, plan_optimal(env, theta_star)), theta_star);
  const double got = reward_of(trajectory_features(env, plan_optimal(env, theta_hat)), theta_star);
  return best - got;
}

std::vector<double> regrets(std::span<const GridEnvironment> envs, const RewardParams& theta_hat,
                            const RewardParams& theta_star) {
  return parallel::map_indexed<double>(static_cast<std::int64_t>(envs.size()), [&](std::int64_t i) {
    return regret(envs[static_cast<std::size_t>(i)], theta_hat, theta_star);
  });
}

double average_regret(std::span<const GridEnvironment> envs, const RewardParams& theta_hat,
                      const RewardParams& theta_star) {
  if (envs.empty()) fail(ErrorKind::InputDomain, "average_regret: no environments");
  const auto all = regrets(envs, theta_hat, theta_star);
  double sum = 0.0;
  for (double r : all) sum += r;  // fixed order keeps the mean reproducible
  return sum / static_cast<double>(all.size());
}

double trajectory_distance(TrajectoryMetric metric, const Trajectory& a, const Trajectory& b) {
  if (metric == TrajectoryMetric::ExactMatch) return a == b ? 0.0 : 1.0;
  const auto& x = a.cells;
  const auto& y = b.cells;
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[y.size()]);
}

std::vector<std::uint64_t> feasible_set(const PlanTable& table, const Trajectory& target,
                                        double epsilon, TrajectoryMetric metric) {
  if (!(epsilon >= 0.0)) fail(ErrorKind::InputDomain, "feasible_set: epsilon must be nonnegative");
  std::vector<std::uint64_t> out;
  for (std::uint64_t g = 0; g < table.grid_size(); ++g) {
    if (trajectory_distance(metric, target, table.at(g).trajectory) <= epsilon) out.push_back(g);
  }
  return out;
}

std::vector<std::uint64_t> feasible_set(const GridEnvironment& env, const Trajectory& target,
                                        const ThetaGrid& grid, double epsilon, TrajectoryMetric metric) {
  validate_trajectory(env, target);
  return feasible_set(PlanTable(env, grid), target, epsilon, metric);
}

std::vector<std::uint64_t> feasible_intersection(std::span<const GridEnvironment> envs,
                                                 std::span<const Trajectory> targets,
                                                 const ThetaGrid& grid, double epsilon,
                                                 TrajectoryMetric metric) {
  if (envs.size() != targets.size()) {
    fail(ErrorKind::InputDomain, "feasible_intersection: need one target per environment");
  }
  if (envs.empty()) fail(ErrorKind::InputDomain, "feasible_intersection: no environments");
  std::vector<std::uint64_t> acc = feasible_set(envs[0], targets[0], grid, epsilon, metric);
  for (std::size_t i = 1; i < envs.size() && !acc.empty(); ++i) {
    const auto next = feasible_set(envs[i], targets[i], grid, epsilon, metric);
    std::vector<std::uint64_t> both;
    std::set_intersection(acc.begin(), acc.end(), next.begin(), next.end(), std::back_inserter(both));
    acc = std::move(both);
  }
  return acc;
}

MembershipReport true_reward_membership(std::span<const GridEnvironment> envs, const RewardParams& theta_star,
                                        const ThetaGrid& grid) {
  MembershipReport report;
  const RewardParams snapped = grid.point(grid.snap(theta_star));
  for (const auto& env : envs) {
    if (plan_optimal(env, snapped) == plan_optimal(env, theta_star)) {
      ++report.members;
    } else {
      ++report.mismatches;
    }
  }
  return report;
}

}  // namespace ird
