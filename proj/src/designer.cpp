#include "ird/designer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "ird/error.hpp"
#include "ird/random.hpp"

namespace ird {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Index drawn from the categorical distribution with the given log weights.
std::uint64_t sample_log_categorical(std::span<const double> log_w, Rng& rng) {
  const double m = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> cumulative(log_w.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    total += std::exp(log_w[i] - m);
    cumulative[i] = total;
  }
  const double u = uniform01(rng) * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                             static_cast<std::ptrdiff_t>(log_w.size()) - 1));
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

const GridEnvironment& env_by_id(std::span<const GridEnvironment> envs, const std::string& id) {
  for (const auto& e : envs) {
    if (e.id() == id) return e;
  }
  fail(ErrorKind::Config, "no environment with id '" + id + "'");
}

/// Distinct feature counts of a planner table, weighted by grid frequency.
struct ExactNormalizer {
  std::size_t k = 0;
  std::vector<double> features;   // classes x k
  std::vector<double> log_weight;  // log(count / grid size)

  double log_z(const RewardParams& theta, double beta, std::vector<double>& scratch) const {
    const std::size_t n = log_weight.size();
    scratch.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
      scratch[c] = log_weight[c] + beta * reward_of(std::span<const double>(features.data() + c * k, k),
                                                    std::span<const double>(theta.weights));
    }
    return log_sum_exp(scratch);
  }
};

ExactNormalizer exact_normalizer(const PlanTable& table, std::size_t k) {
  ExactNormalizer z;
  z.k = k;
  std::map<std::vector<double>, std::size_t> index;
  std::vector<std::uint64_t> counts;
  for (std::uint64_t g = 0; g < table.grid_size(); ++g) {
    const auto& phi = table.at(g).features.phi;
    auto [it, inserted] = index.try_emplace(phi, counts.size());
    if (inserted) {
      counts.push_back(0);
      z.features.insert(z.features.end(), phi.begin(), phi.end());
    }
    ++counts[it->second];
  }
  for (auto c : counts) {
    z.log_weight.push_back(std::log(static_cast<double>(c) / static_cast<double>(table.grid_size())));
  }
  return z;
}

}  // namespace

std::vector<double> DiscretePosterior::weights() const {
  std::vector<double> w(log_weights.size());
  std::transform(log_weights.begin(), log_weights.end(), w.begin(), [](double x) { return std::exp(x); });
  return w;
}

std::vector<double> DiscretePosterior::marginal(std::size_t d) const {
  std::vector<double> m(static_cast<std::size_t>(grid.resolution()), 0.0);
  for (std::uint64_t i = 0; i < log_weights.size(); ++i) {
    m[static_cast<std::size_t>(grid.coords(i)[d])] += std::exp(log_weights[i]);
  }
  return m;
}

RewardParams DiscretePosterior::mean() const {
  RewardParams mean{std::vector<double>(grid.k(), 0.0)};
  for (std::uint64_t i = 0; i < log_weights.size(); ++i) {
    const double w = std::exp(log_weights[i]);
    const RewardParams p = grid.point(i);
    for (std::size_t j = 0; j < grid.k(); ++j) mean.weights[j] += w * p[j];
  }
  return mean;
}

std::uint64_t DiscretePosterior::argmax() const {
  return static_cast<std::uint64_t>(std::max_element(log_weights.begin(), log_weights.end()) -
                                    log_weights.begin());
}

ProxyObservation simulate_designer(const GridEnvironment& env, const PlanTable& table,
                                   const ThetaGrid& grid, const RewardParams& theta_star,
                                   double beta, std::uint64_t seed) {
  if (theta_star.size() != env.k()) fail(ErrorKind::Validation, "simulate_designer: theta* has the wrong dimension");
  std::vector<double> log_w(table.grid_size());
  for (std::uint64_t g = 0; g < table.grid_size(); ++g) {
    log_w[g] = beta * reward_of(table.at(g).features, theta_star);
  }
  Rng rng = make_rng(seed);
  const std::uint64_t pick = sample_log_categorical(log_w, rng);
  return ProxyObservation{env.id(), grid.point(pick), table.at(pick).features};
}

ProxyObservation simulate_designer(const GridEnvironment& env, const RewardParams& theta_star,
                                   double beta, const ThetaGrid& grid, std::uint64_t seed,
                                   DesignLog* log) {
  const auto t0 = Clock::now();
  const PlanTable table(env, grid);
  ProxyObservation obs = simulate_designer(env, table, grid, theta_star, beta, seed);
  if (log) log->push_back({"independent", 1, table.planner_calls(), seconds_since(t0)});
  return obs;
}

JointProxyObservation simulate_joint_designer(std::span<const GridEnvironment> envs,
                                              std::span<const PlanTable> tables,
                                              const ThetaGrid& grid, const RewardParams& theta_star,
                                              double beta, std::uint64_t seed) {
  if (envs.empty()) fail(ErrorKind::InputDomain, "simulate_joint_designer: no environments");
  if (tables.size() != envs.size()) fail(ErrorKind::InputDomain, "simulate_joint_designer: one table per environment");
  std::vector<double> log_w(grid.size());
  for (std::uint64_t g = 0; g < grid.size(); ++g) {
    double total = 0.0;
    for (const PlanTable& t : tables) total += reward_of(t.at(g).features, theta_star);
    log_w[g] = beta * total;
  }
  Rng rng = make_rng(seed);
  const std::uint64_t pick = sample_log_categorical(log_w, rng);
  JointProxyObservation joint;
  joint.proxy = grid.point(pick);
  for (std::size_t i = 0; i < envs.size(); ++i) {
    joint.env_ids.push_back(envs[i].id());
    joint.proxy_features.push_back(tables[i].at(pick).features);
  }
  return joint;
}

JointProxyObservation simulate_joint_designer(std::span<const GridEnvironment> envs,
                                              const RewardParams& theta_star, double beta,
                                              const ThetaGrid& grid, std::uint64_t seed,
                                              DesignLog* log) {
  const auto t0 = Clock::now();
  std::vector<PlanTable> tables;
  std::size_t calls = 0;
  for (const auto& env : envs) {
    tables.emplace_back(env, grid);
    calls += tables.back().planner_calls();
  }
  JointProxyObservation joint = simulate_joint_designer(envs, tables, grid, theta_star, beta, seed);
  if (log) log->push_back({"joint", envs.size(), calls, seconds_since(t0)});
  return joint;
}

std::vector<ProxyObservation> as_observations(const JointProxyObservation& joint) {
  std::vector<ProxyObservation> out;
  for (std::size_t i = 0; i < joint.env_ids.size(); ++i) {
    out.push_back({joint.env_ids[i], joint.proxy, joint.proxy_features[i]});
  }
  return out;
}

DiscretePosterior exhaustive_posterior(std::span<const ProxyObservation> observations,
                                       std::span<const GridEnvironment> envs,
                                       const ThetaGrid& theta_grid, const ThetaGrid& proxy_grid,
                                       double beta) {
  theta_grid.require_size_at_most(kGridBudget, "exhaustive_posterior theta grid");
  proxy_grid.require_size_at_most(kGridBudget, "exhaustive_posterior proxy grid");
  if (theta_grid.k() != proxy_grid.k()) fail(ErrorKind::Config, "exhaustive_posterior: grid dimensions differ");

  // One exact normalizer per distinct environment, in first-use order.
  std::vector<std::string> env_ids;
  std::vector<ExactNormalizer> normalizers;
  std::vector<std::size_t> obs_env(observations.size());
  for (std::size_t o = 0; o < observations.size(); ++o) {
    const auto& id = observations[o].env_id;
    auto it = std::find(env_ids.begin(), env_ids.end(), id);
    if (it == env_ids.end()) {
      const GridEnvironment& env = env_by_id(envs, id);
      env_ids.push_back(id);
      normalizers.push_back(exact_normalizer(PlanTable(env, proxy_grid), env.k()));
      obs_env[o] = normalizers.size() - 1;
    } else {
      obs_env[o] = static_cast<std::size_t>(it - env_ids.begin());
    }
  }

  const auto n = static_cast<std::int64_t>(theta_grid.size());
  std::vector<double> log_w = parallel::map_indexed<double>(n, [&](std::int64_t i) {
    thread_local std::vector<double> scratch;
    const RewardParams theta = theta_grid.point(static_cast<std::uint64_t>(i));
    double lw = 0.0;
    if (beta == 0.0) return lw;
    for (std::size_t o = 0; o < observations.size(); ++o) {
      lw += beta * reward_of(observations[o].proxy_features, theta) -
            normalizers[obs_env[o]].log_z(theta, beta, scratch);
    }
    return lw;
  });
  const double norm = log_sum_exp(log_w);
  for (double& x : log_w) x -= norm;
  return DiscretePosterior{theta_grid, std::move(log_w)};
}

Json DesignTimeReport::to_json() const {
  Json conditions = Json::object();
  for (const auto& [name, c] : per_condition) {
    conditions[name] = Json{{"designer_invocations", c.designer_invocations},
                            {"environments", c.environments},
                            {"planner_calls", c.planner_calls},
                            {"wall_seconds", c.wall_seconds}};
  }
  return Json{{"conditions", conditions}, {"feasible_set_sizes", feasible_set_sizes}};
}

DesignTimeReport design_time_proxy(const DesignLog& log, std::span<const std::size_t> feasible_set_sizes) {
  DesignTimeReport report;
  report.feasible_set_sizes.assign(feasible_set_sizes.begin(), feasible_set_sizes.end());
  for (const DesignEvent& e : log) {
    DesignCounters& c = report.per_condition[e.condition];
    ++c.designer_invocations;
    c.environments += e.environments;
    c.planner_calls += e.planner_calls;
    c.wall_seconds += e.seconds;
  }
  return report;
}

}  // namespace ird
