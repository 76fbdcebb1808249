// ird: command-line entry point. Each subcommand reads files, calls the
// library, and writes files.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "ird/error.hpp"
#include "ird/evaluation.hpp"
#include "ird/experiment.hpp"
#include "ird/io.hpp"
#include "ird/kernels.hpp"
#include "ird/oracle_check.hpp"
#include "ird/pipeline.hpp"
#include "ird/service.hpp"

namespace fs = std::filesystem;
using namespace ird;

namespace {

enum ExitCode { kOk = 0, kCheckFailed = 1, kValidation = 2, kRuntime = 3, kBudget = 4 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InputDomain:
    case ErrorKind::Validation:
    case ErrorKind::Config:
    case ErrorKind::NotFound:
    case ErrorKind::Conflict: return kValidation;
    case ErrorKind::Budget: return kBudget;
    case ErrorKind::Planning:
    case ErrorKind::Io: return kRuntime;
  }
  return kRuntime;
}

// Inference overrides shared by infer, oracle-check, experiment and serve.
struct InferenceFlags {
  InferenceConfig defaults;
  double beta = defaults.beta;
  std::size_t mc_samples = defaults.mc_samples;
  std::size_t chain_length = defaults.chain_length;
  std::size_t burn_in = defaults.burn_in;
  std::size_t thinning = defaults.thinning;
  double proposal_sigma = defaults.proposal_sigma;
  std::uint64_t seed = 0;
  std::vector<CLI::Option*> opts;

  void add(CLI::App* app, bool with_seed) {
    opts.push_back(app->add_option("--beta", beta, "Designer rationality in the likelihood")->capture_default_str());
    opts.push_back(
        app->add_option("--mc-samples", mc_samples, "Monte Carlo proxies per normalizer")->capture_default_str());
    opts.push_back(app->add_option("--chain-length", chain_length, "Metropolis steps")->capture_default_str());
    opts.push_back(app->add_option("--burn-in", burn_in, "Discarded initial steps")->capture_default_str());
    opts.push_back(app->add_option("--thin", thinning, "Keep every n-th step after burn-in")->capture_default_str());
    opts.push_back(
        app->add_option("--proposal-sigma", proposal_sigma, "Gaussian proposal std dev")->capture_default_str());
    if (with_seed) opts.push_back(app->add_option("--seed", seed, "Root seed")->required());
  }

  // Applies flags given on the command line over `base`.
  InferenceConfig apply(InferenceConfig base) const {
    auto given = [&](const char* name) {
      for (const auto* o : opts) {
        if (o->get_name() == name) return o->count() > 0;
      }
      return false;
    };
    if (given("--beta")) base.beta = beta;
    if (given("--mc-samples")) base.mc_samples = mc_samples;
    if (given("--chain-length")) base.chain_length = chain_length;
    if (given("--burn-in")) base.burn_in = burn_in;
    if (given("--thin")) base.thinning = thinning;
    if (given("--proposal-sigma")) base.proposal_sigma = proposal_sigma;
    if (given("--seed")) base.seed = seed;
    base.validate();
    return base;
  }
};

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward design from proxy rewards: simulation, inference and evaluation.", "ird"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");
  int jobs = 0;
  app.add_option("--jobs", jobs, "Worker threads; 0 uses every available core")->capture_default_str();

  // gen-envs
  auto* gen = app.add_subcommand("gen-envs", "Generate an environment set");
  std::string gen_spec, gen_out, gen_set_id, gen_test_set, gen_prefix;
  EnvGenSpec gen_defaults;
  std::uint64_t gen_seed = 0;
  int gen_width = gen_defaults.width, gen_height = gen_defaults.height, gen_horizon = gen_defaults.horizon;
  std::size_t gen_k = gen_defaults.k_total, gen_f = gen_defaults.features_per_env, gen_count = gen_defaults.count;
  bool gen_keep_trivial = false;
  gen->add_option("--spec", gen_spec, "Generation spec JSON; flags override its fields")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--set-id", gen_set_id, "Set id written to the manifest (default: output directory name)");
  gen->add_option("--seed", gen_seed, "Root seed")->required();
  auto* o_width = gen->add_option("--width", gen_width, "Grid width")->capture_default_str();
  auto* o_height = gen->add_option("--height", gen_height, "Grid height")->capture_default_str();
  auto* o_k = gen->add_option("--k-total", gen_k, "Feature dimension k")->capture_default_str();
  auto* o_f = gen->add_option("--features-per-env", gen_f, "Active features per environment")->capture_default_str();
  auto* o_count = gen->add_option("--count", gen_count, "Number of environments")->capture_default_str();
  auto* o_horizon = gen->add_option("--horizon", gen_horizon, "Horizon; 0 means width*height")->capture_default_str();
  auto* o_prefix = gen->add_option("--id-prefix", gen_prefix, "Environment id prefix")->default_str("env");
  auto* o_keep = gen->add_flag("--keep-trivial", gen_keep_trivial, "Do not resample trivial environments");
  gen->add_option("--test-set", gen_test_set, "Held-out set id recorded in the manifest for the design service");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw proxies from the simulated designer");
  std::string sim_mode = "independent", sim_envs, sim_theta, sim_out;
  double sim_beta = InferenceConfig{}.beta;
  int sim_resolution = 9;
  std::uint64_t sim_seed = 0;
  sim->add_option("--mode", sim_mode, "independent or joint")
      ->check(CLI::IsMember({"independent", "joint"}))
      ->capture_default_str();
  sim->add_option("--envs", sim_envs, "Environment set directory")->required()->check(CLI::ExistingDirectory);
  sim->add_option("--theta-star", sim_theta, "True reward file")->required()->check(CLI::ExistingFile);
  sim->add_option("--beta", sim_beta, "Designer rationality")->capture_default_str();
  sim->add_option("--resolution", sim_resolution, "Proxy grid points per dimension")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Root seed")->required();
  sim->add_option("--out", sim_out, "Proxies file")->required();

  // infer
  auto* inf = app.add_subcommand("infer", "Sample the posterior over the true reward");
  std::string inf_proxies, inf_envs, inf_config, inf_out;
  InferenceFlags inf_flags;
  inf->add_option("--proxies", inf_proxies, "Proxies file")->required()->check(CLI::ExistingFile);
  inf->add_option("--envs", inf_envs, "Training environment set directory")->required()->check(CLI::ExistingDirectory);
  inf->add_option("--config", inf_config, "Inference config JSON; flags override it")->check(CLI::ExistingFile);
  inf_flags.add(inf, true);
  inf->add_option("--out", inf_out, "Posterior JSON-lines file")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Per-environment regret of a reward estimate");
  std::string ev_envs, ev_theta, ev_posterior, ev_star, ev_out;
  ev->add_option("--envs", ev_envs, "Test environment set directory")->required()->check(CLI::ExistingDirectory);
  auto* o_theta = ev->add_option("--theta", ev_theta, "Reward estimate file")->check(CLI::ExistingFile);
  auto* o_post = ev->add_option("--posterior", ev_posterior, "Posterior file; plans at its mean")->check(CLI::ExistingFile);
  o_theta->excludes(o_post);
  ev->add_option("--theta-star", ev_star, "True reward file")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "CSV output, '-' for stdout")->default_str("-");

  // oracle-check
  auto* oc = app.add_subcommand("oracle-check", "Compare MCMC marginals with the exhaustive posterior");
  std::string oc_config, oc_out;
  InferenceFlags oc_flags;
  oc->add_option("--config", oc_config, "Oracle-check config JSON")->check(CLI::ExistingFile);
  oc_flags.add(oc, false);
  oc->add_option("--out", oc_out, "JSON report, '-' for stdout")->default_str("-");

  // experiment
  auto* ex = app.add_subcommand("experiment", "Run the simulated-designer comparison");
  std::string ex_config, ex_out, ex_csv;
  std::size_t ex_seeds = 0;
  ex->add_option("--config", ex_config, "Experiment config JSON")->check(CLI::ExistingFile);
  ex->add_option("--seeds", ex_seeds, "Use seeds 1..n instead of the config's")->capture_default_str();
  ex->add_option("--out", ex_out, "JSON report")->required();
  ex->add_option("--csv", ex_csv, "Per-seed regret CSV");

  // serve
  auto* sv = app.add_subcommand("serve", "Run the design service over HTTP");
  std::string sv_host = "127.0.0.1", sv_data, sv_infconf;
  int sv_port = 8080;
  sv->add_option("--host", sv_host, "Listen address")->envname("IRD_HOST")->capture_default_str();
  sv->add_option("--port", sv_port, "Listen port; 0 picks a free one")->envname("IRD_PORT")->capture_default_str();
  sv->add_option("--data-dir", sv_data, "Data directory with env_sets/ and theta_stars/")
      ->envname("IRD_DATA_DIR")
      ->required()
      ->check(CLI::ExistingDirectory);
  sv->add_option("--inference-config", sv_infconf, "Default inference config JSON")
      ->envname("IRD_INFERENCE_CONFIG")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  set_jobs(jobs);

  try {
    if (*gen) {
      EnvGenSpec spec = gen_spec.empty() ? EnvGenSpec{} : env_gen_spec_from_json(read_json_file(gen_spec));
      spec.seed = gen_seed;
      if (o_width->count()) spec.width = gen_width;
      if (o_height->count()) spec.height = gen_height;
      if (o_k->count()) spec.k_total = gen_k;
      if (o_f->count()) spec.features_per_env = gen_f;
      if (o_count->count()) spec.count = gen_count;
      if (o_horizon->count()) spec.horizon = gen_horizon;
      if (o_prefix->count()) spec.id_prefix = gen_prefix;
      if (o_keep->count()) spec.reject_trivial = false;
      spec.validate();
      const auto envs = generate_environments(spec);
      Json extra{{"spec", env_gen_spec_to_json(spec)}};
      if (!gen_test_set.empty()) extra["test_set"] = gen_test_set;
      const std::string set_id = gen_set_id.empty() ? fs::path(gen_out).lexically_normal().filename().string() : gen_set_id;
      write_environment_set(gen_out, set_id.empty() ? "envs" : set_id, envs, extra);
      std::cerr << "wrote " << envs.size() << " environments to " << gen_out << "\n";
    } else if (*sim) {
      const auto set = read_environment_set(sim_envs);
      const auto theta_star = read_theta_file(sim_theta);
      const auto proxies =
          simulate_proxies(sim_mode, set.environments, theta_star, sim_beta, sim_resolution, sim_seed);
      write_json_file(sim_out, proxy_set_to_json(proxies));
    } else if (*inf) {
      const auto proxies = proxy_set_from_json(read_json_file(inf_proxies));
      const auto set = read_environment_set(inf_envs);
      InferenceConfig base = inf_config.empty() ? InferenceConfig{} : inference_config_from_json(read_json_file(inf_config));
      const auto samples = infer_from_proxies(proxies, set.environments, inf_flags.apply(base));
      write_text_file(inf_out, posterior_to_jsonl(samples));
      for (const auto& w : samples.warnings) std::cerr << "warning: " << w << "\n";
    } else if (*ev) {
      if (ev_theta.empty() == ev_posterior.empty()) {
        fail(ErrorKind::Validation, "eval needs exactly one of --theta or --posterior");
      }
      const auto set = read_environment_set(ev_envs);
      const auto theta_star = read_theta_file(ev_star);
      const RewardParams theta_hat = ev_theta.empty() ? posterior_mean(posterior_from_jsonl(read_text_file(ev_posterior)))
                                                      : read_theta_file(ev_theta);
      const auto r = regrets(set.environments, theta_hat, theta_star);
      std::ostringstream csv;
      csv.precision(17);
      csv << "env_id,regret\n";
      for (std::size_t i = 0; i < r.size(); ++i) csv << set.environments[i].id() << "," << r[i] << "\n";
      write_or_print(ev_out, csv.str());
    } else if (*oc) {
      OracleCheckConfig config = oc_config.empty() ? OracleCheckConfig{} : oracle_check_config_from_json(read_json_file(oc_config));
      config.inference = oc_flags.apply(config.inference);
      const auto report = run_oracle_check(config);
      write_or_print(oc_out, report.to_json().dump(2) + "\n");
      for (const auto& s : report.seeds) {
        std::cerr << "seed " << s.seed << " max TV " << s.max_tv() << (s.max_tv() <= config.tv_tolerance ? " PASS" : " FAIL")
                  << "\n";
      }
      if (!report.passed()) return kCheckFailed;
    } else if (*ex) {
      ExperimentConfig config = ex_config.empty() ? ExperimentConfig{} : experiment_config_from_json(read_json_file(ex_config));
      if (ex_seeds > 0) {
        config.seeds.clear();
        for (std::uint64_t s = 1; s <= ex_seeds; ++s) config.seeds.push_back(s);
      }
      config.validate();
      const auto report = run_experiment(config);
      write_json_file(ex_out, report.to_json());
      if (!ex_csv.empty()) write_text_file(ex_csv, report.to_csv());
      if (report.partial) {
        std::cerr << "experiment finished with failed runs; see 'runs' in " << ex_out << "\n";
        return kRuntime;
      }
    } else if (*sv) {
      const InferenceConfig defaults =
          sv_infconf.empty() ? InferenceConfig{} : inference_config_from_json(read_json_file(sv_infconf));
      defaults.validate();
      DesignService service(sv_data, defaults);
      HttpServer server(service, sv_host, sv_port);
      std::cout << "listening on " << sv_host << ":" << server.port() << std::endl;
      server.run();
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error [runtime]: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
