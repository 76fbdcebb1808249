// Acceptance run: one PASS/FAIL line per criterion, each with its own time
// limit. Usage: acceptance [criterion ...] to run a subset.

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ird/designer.hpp"
#include "ird/evaluation.hpp"
#include "ird/experiment.hpp"
#include "ird/inference.hpp"
#include "ird/io.hpp"
#include "ird/oracle_check.hpp"
#include "oracles.hpp"
#include "process.hpp"
#include "suites.hpp"

using namespace ird;
namespace fs = std::filesystem;

namespace {

const std::string kExe = IRD_CLI_PATH;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

// Exact on one-hot terrains, where feature counts are integers. With
// real-valued features, paths visiting the same cells in another order can
// differ in the last bit, so those are held to 1e-12 relative.
Outcome planner_oracle() {
  std::mt19937_64 rng(7001);
  std::size_t checks = 0, mismatches = 0, real_checks = 0, real_mismatches = 0;
  double worst_real = 0.0;
  for (int i = 0; i < 300; ++i) {
    const bool real = i >= 240;
    const std::size_t k = 1 + static_cast<std::size_t>(i % 3);
    const auto env = oracle::random_env(rng, 4, k, 8, real);
    const auto paths = oracle::enumerate_paths(env);
    for (int s = 0; s < 3; ++s) {
      const RewardParams theta = oracle::random_theta(rng, k);
      const Trajectory t = plan_optimal(env, theta);
      const double got = reward_of(trajectory_features(env, t), theta);
      const double want = oracle::best_value(paths, theta);
      const bool valid = is_valid_trajectory(env, t);
      if (real) {
        const double rel = std::abs(got - want) / std::max(1.0, std::abs(want));
        worst_real = std::max(worst_real, rel);
        ++real_checks;
        real_mismatches += !valid || rel > 1e-12;
      } else {
        ++checks;
        mismatches += !valid || got != want;
      }
    }
  }
  return {mismatches == 0 && real_mismatches == 0,
          "one-hot: 240 environments, " + std::to_string(checks) + " rewards, " + std::to_string(mismatches) +
              " inexact; real-valued: 60 environments, " + std::to_string(real_checks) + " rewards, max relative gap " +
              fmt(worst_real, 3)};
}

Outcome normalizer_accuracy() {
  const std::vector<GridEnvironment> envs{oracle::terrain_env({"01", "10"}, 2, {0, 0}, {1, 1}, 3, "diag"),
                                          oracle::terrain_env({"00", "11"}, 2, {0, 0}, {0, 1}, 3, "rows")};
  const ThetaGrid sweep(2, 9);
  double worst = 0.0;
  std::string where;
  for (const auto& env : envs) {
    const oracle::ProxyQuadrature quad(oracle::enumerate_paths(env), 200);
    for (double beta : {1.0, 10.0}) {
      for (std::uint64_t seed : {1, 2, 3}) {
        const auto cache = build_normalizer_cache(env, 10000, beta, seed);
        for (std::uint64_t g = 0; g < sweep.size(); ++g) {
          const auto t = sweep.point(g);
          const double err = std::abs(log_Z_hat(t, cache) - quad.log_Z(t, beta));
          if (err > worst) {
            worst = err;
            where = env.id() + " beta=" + fmt(beta) + " seed=" + std::to_string(seed);
          }
        }
      }
    }
  }
  return {worst <= 0.05, "max |log Z_hat - quadrature| = " + fmt(worst) + " (" + where + "), tolerance 0.05"};
}

Outcome mcmc_correctness() {
  OracleCheckConfig config;  // 3x3, k=3, beta=10, 9^3 grids, seeds 1..3
  const auto report = run_oracle_check(config);
  std::string detail = "max marginal TV per seed:";
  for (const auto& s : report.seeds) detail += " " + std::to_string(s.seed) + "=" + fmt(s.max_tv(), 3);
  return {report.passed(), detail + ", tolerance 0.05"};
}

Outcome n1_equivalence() {
  const ThetaGrid grid(3, 9);
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    EnvGenSpec spec;
    spec.width = spec.height = 5;
    spec.k_total = 3;
    spec.features_per_env = 3;
    spec.count = 1;
    spec.seed = derive_seed(seed, "n1-env");
    const auto envs = generate_environments(spec);
    Rng rng = make_rng(derive_seed(seed, "n1-theta"));
    RewardParams theta_star{{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)}};
    const auto obs = simulate_designer(envs[0], theta_star, 10.0, grid, derive_seed(seed, "n1-designer"));
    const auto joint = make_joint_observation(envs, obs.proxy);
    InferenceConfig config;
    config.seed = seed;
    const auto caches = build_caches(envs, config);
    const std::vector<ProxyObservation> single{obs};
    for (std::uint64_t g = 0; g < grid.size(); ++g) {
      const auto t = grid.point(g);
      worst = std::max(worst, std::abs(log_posterior_independent(t, single, caches) -
                                       log_posterior_joint_augmented(t, joint, caches)));
    }
  }
  return {worst <= 1e-12, "max |difference| over 3 x 9^3 points = " + fmt(worst, 3) + ", tolerance 1e-12"};
}

ExperimentConfig default_setup() {
  ExperimentConfig c;  // N=5, F=3 of 5, beta=10, 100 test environments, seeds 1..20
  return c;
}

Outcome fig2_ordering() {
  const ExperimentConfig config = default_setup();
  const auto report = run_experiment(config);
  if (report.partial) return {false, "some runs failed"};
  const auto nom = report.per_seed(0, Condition::NominalJoint);
  const auto aug = report.per_seed(0, Condition::AugmentedJoint);
  const auto ind = report.per_seed(0, Condition::Independent);
  std::size_t ind_wins = 0, aug_wins = 0;
  for (std::size_t i = 0; i < nom.size(); ++i) {
    ind_wins += ind[i] < nom[i];
    aug_wins += aug[i] <= nom[i];
  }
  const double m_nom = report.summary_for(0, Condition::NominalJoint).mean;
  const double m_aug = report.summary_for(0, Condition::AugmentedJoint).mean;
  const double m_ind = report.summary_for(0, Condition::Independent).mean;
  const std::size_t n = nom.size();
  const bool pass = n >= 20 && m_ind < m_nom && m_aug <= m_nom && ind_wins * 5 >= n * 4 && aug_wins * 5 >= n * 4;
  return {pass, "mean regret nominal=" + fmt(m_nom) + " augmented=" + fmt(m_aug) + " independent=" + fmt(m_ind) +
                    "; independent<nominal on " + std::to_string(ind_wins) + "/" + std::to_string(n) +
                    " seeds, augmented<=nominal on " + std::to_string(aug_wins) + "/" + std::to_string(n) +
                    " (need 80%)"};
}

Outcome f_gap() {
  ExperimentConfig config = default_setup();
  config.conditions = {Condition::NominalJoint, Condition::Independent};
  config.sweep = SweepAxis::FeaturesPerEnv;
  config.sweep_values = {3, 4, 5};
  const auto report = run_experiment(config);
  if (report.partial) return {false, "some runs failed"};
  std::vector<double> gap;
  std::string detail = "nominal - independent gap:";
  for (std::size_t p = 0; p < 3; ++p) {
    gap.push_back(report.summary_for(p, Condition::NominalJoint).mean - report.summary_for(p, Condition::Independent).mean);
    detail += " F=" + fmt(config.sweep_values[p]) + ":" + fmt(gap.back());
  }
  return {gap[0] > gap[2] && gap[1] > gap[2], detail + " (need F=3 and F=4 above F=5)"};
}

Outcome feasible_sets() {
  std::size_t checked = 0, mismatches = 0;
  const ThetaGrid g2(2, 9), g3(3, 9);
  for (const auto& inst : suite::feasible_instances()) {
    const ThetaGrid& grid = inst.env.k() == 2 ? g2 : g3;
    const auto target = plan_optimal(inst.env, inst.theta_star);
    ++checked;
    mismatches += feasible_set(inst.env, target, grid) != oracle::inverted_feasible_set(inst.env, target, grid);
  }
  std::size_t increases = 0;
  std::string sizes;
  for (const auto& set : suite::standard_sets()) {
    std::vector<Trajectory> targets;
    for (const auto& e : set.envs) targets.push_back(plan_optimal(e, set.theta_star));
    std::size_t previous = g3.size();
    for (std::size_t n = 1; n <= set.envs.size(); ++n) {
      const auto inter = feasible_intersection(std::span(set.envs).first(n), std::span(targets).first(n), g3);
      increases += inter.size() > previous;
      previous = inter.size();
    }
    sizes += " " + std::to_string(previous);
  }
  return {mismatches == 0 && increases == 0,
          std::to_string(mismatches) + "/" + std::to_string(checked) + " oracle mismatches on 3x3 instances; " +
              std::to_string(increases) + " intersection increases on the standard suite (final sizes" + sizes + ")"};
}

Outcome beta_concentration() {
  ExperimentConfig config = default_setup();
  config.conditions = {Condition::Independent};
  config.sweep = SweepAxis::Beta;
  config.sweep_values = {0.1, 1.0, 10.0};
  const auto report = run_experiment(config);
  if (report.partial) return {false, "some runs failed"};
  std::vector<double> m;
  std::string detail = "mean regret:";
  for (std::size_t p = 0; p < 3; ++p) {
    m.push_back(report.summary_for(p, Condition::Independent).mean);
    detail += " beta=" + fmt(config.sweep_values[p]) + ":" + fmt(m.back());
  }
  std::size_t inversions = 0;
  bool small = true;
  for (std::size_t p = 0; p + 1 < m.size(); ++p) {
    if (m[p + 1] > m[p]) {
      ++inversions;
      small = small && (m[p + 1] - m[p]) <= 0.05 * m[p];
    }
  }
  return {inversions == 0 || (inversions == 1 && small),
          detail + " (" + std::to_string(inversions) + " inversions; one of at most 5% allowed)"};
}

// --- determinism -----------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool is_clock_key(const std::string& key) {
  return key == "t" || key == "timing" || key == "design_seconds" || key == "wall_seconds" ||
         (key.size() > 2 && key.compare(key.size() - 2, 2, "_t") == 0);
}

Json strip_clock(const Json& j) {
  if (j.is_object()) {
    Json out = Json::object();
    for (const auto& [key, value] : j.items()) {
      if (!is_clock_key(key)) out[key] = strip_clock(value);
    }
    return out;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& v : j) out.push_back(strip_clock(v));
    return out;
  }
  return j;
}

// Runs one design-service session over HTTP and returns every response with
// wall-clock fields removed.
std::string service_transcript(const fs::path& data_dir) {
  proc::Child server(kExe, {"serve", "--port", "0", "--data-dir", data_dir.string(), "--inference-config",
                            (data_dir / "inference.json").string()});
  const std::string line = server.read_line();
  if (line.rfind("listening on", 0) != 0) throw std::runtime_error("serve did not start: " + line);
  httplib::Client cli("127.0.0.1", std::stoi(line.substr(line.rfind(':') + 1)));
  std::string out;
  auto record = [&](const httplib::Result& res) {
    if (!res) throw std::runtime_error("request failed");
    out += std::to_string(res->status) + " " + strip_clock(Json::parse(res->body)).dump() + "\n";
    return Json::parse(res->body);
  };
  const Json created = record(cli.Post("/sessions", R"({"mode":"independent","env_set_id":"train","theta_star_id":"ts"})",
                                       "application/json"));
  const std::string id = created["session_id"];
  for (const auto& env : created["environments"]) {
    const std::string body = Json{{"env_id", env["env_id"]}, {"weights", {-0.5, 0.25, -0.75, 0.0, -0.25}}}.dump();
    record(cli.Post("/sessions/" + id + "/preview", body, "application/json"));
    record(cli.Post("/sessions/" + id + "/finalize", body, "application/json"));
  }
  record(cli.Post("/sessions/" + id + "/infer", "{}", "application/json"));
  for (int i = 0; i < 3000; ++i) {
    const auto res = cli.Get("/sessions/" + id + "/result");
    if (res && Json::parse(res->body)["status"] == "done") {
      record(res);
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  record(cli.Get("/sessions/" + id));
  server.stop();
  for (const auto& e : fs::directory_iterator(data_dir / "sessions")) {
    std::ifstream in(e.path());
    std::string l;
    while (std::getline(in, l)) out += strip_clock(Json::parse(l)).dump() + "\n";
  }
  return out;
}

// Every subcommand once into `dir`; returns the primary outputs by name.
std::map<std::string, std::string> cli_outputs(const fs::path& dir, const std::string& jobs) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::map<std::string, std::string> out;
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), {"--jobs", jobs});
    const auto r = proc::run(kExe, args);
    if (r.exit_code != 0) {
      std::string cmd;
      for (const auto& a : args) cmd += " " + a;
      throw std::runtime_error("ird" + cmd + " exited with " + std::to_string(r.exit_code));
    }
    return r.out;
  };
  auto p = [&](const std::string& leaf) { return (dir / leaf).string(); };
  const std::vector<std::string> small{"--width", "5", "--height", "5"};
  auto gen = [&](std::vector<std::string> args) {
    args.insert(args.end(), small.begin(), small.end());
    run(args);
  };
  gen({"gen-envs", "--out", p("data/env_sets/train"), "--seed", "7", "--features-per-env", "3", "--test-set", "test"});
  gen({"gen-envs", "--out", p("data/env_sets/test"), "--seed", "8", "--count", "20", "--features-per-env", "5",
       "--keep-trivial"});
  for (const auto& set : {"train", "test"}) {
    for (const auto& e : fs::directory_iterator(dir / "data/env_sets" / set)) {
      out[std::string("gen-envs/") + set + "/" + e.path().filename().string()] = slurp(e.path());
    }
  }
  write_theta_file(p("data/theta_stars/ts.json"), RewardParams{{-0.5, 0.3, -0.9, 0.1, -0.2}});
  write_json_file(p("data/inference.json"), Json{{"chain_length", 6000}, {"burn_in", 1000}, {"thinning", 5}, {"seed", 3}});
  for (const std::string mode : {"independent", "joint"}) {
    run({"simulate", "--mode", mode, "--envs", p("data/env_sets/train"), "--theta-star", p("data/theta_stars/ts.json"),
         "--seed", "3", "--out", p(mode + ".json")});
    out["simulate/" + mode] = slurp(p(mode + ".json"));
    run({"infer", "--proxies", p(mode + ".json"), "--envs", p("data/env_sets/train"), "--seed", "4", "--out",
         p(mode + ".jsonl")});
    out["infer/" + mode] = slurp(p(mode + ".jsonl"));
    out["eval/" + mode] = run({"eval", "--envs", p("data/env_sets/test"), "--posterior", p(mode + ".jsonl"),
                               "--theta-star", p("data/theta_stars/ts.json")});
  }
  out["oracle-check"] = run({"oracle-check"});
  write_json_file(p("experiment.json"),
                  Json{{"seeds", 3}, {"train", {{"width", 5}, {"height", 5}}}, {"test", {{"width", 5}, {"height", 5}, {"count", 20}}}});
  run({"experiment", "--config", p("experiment.json"), "--out", p("report.json"), "--csv", p("report.csv")});
  out["experiment/json"] = strip_clock(read_json_file(p("report.json"))).dump();
  out["experiment/csv"] = slurp(p("report.csv"));
  out["serve"] = service_transcript(dir / "data");
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ird-acceptance-determinism";
  const auto a = cli_outputs(root / "a", "1");
  const auto b = cli_outputs(root / "b", "1");
  const auto c = cli_outputs(root / "c", "2");
  fs::remove_all(root);
  std::set<std::string> subcommands;
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : a) {
    subcommands.insert(name.substr(0, name.find('/')));
    if (!b.count(name) || b.at(name) != bytes) differing.push_back(name + " (rerun)");
    if (!c.count(name) || c.at(name) != bytes) differing.push_back(name + " (--jobs 2)");
  }
  std::string detail = std::to_string(a.size()) + " outputs from " + std::to_string(subcommands.size()) +
                       " subcommands compared across reruns and --jobs 1/2";
  if (!differing.empty()) {
    detail += "; differing:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {differing.empty() && subcommands.size() == 7, detail};
}

struct Criterion {
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"planner-oracle", 60, planner_oracle},
      {"normalizer-accuracy", 60, normalizer_accuracy},
      {"mcmc-correctness", 300, mcmc_correctness},
      {"n1-equivalence", 60, n1_equivalence},
      {"fig2-ordering", 1800, fig2_ordering},
      {"f-gap", 2700, f_gap},
      {"feasible-sets", 600, feasible_sets},
      {"beta-concentration", 1800, beta_concentration},
      {"determinism", 600, determinism},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  bool all_pass = true;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.name)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    all_pass = all_pass && pass;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << fmt(secs, 3) << " s, limit "
              << c.limit_seconds << " s" << (in_time ? "" : ", over time") << "]" << std::endl;
  }
  return all_pass ? 0 : 1;
}
