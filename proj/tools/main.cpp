#include <CLI11.hpp>
#include <fstream>

#include "bdr/bdr_solver.hpp"
#include <iostream>
#include <json.hpp>

#include "cli_common.hpp"

namespace {

// Pre-scan for --config so file values become the defaults that explicit
// flags then override (precedence: flags > file > defaults).
nlohmann::json load_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw std::runtime_error(std::string("cannot open config ") + argv[i + 1]);
      nlohmann::json j;
      in >> j;
      return j;
    }
  }
  return nlohmann::json::object();
}

template <typename T>
void from_config(const nlohmann::json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace bdr::cli;

  nlohmann::json file_cfg;
  try {
    file_cfg = load_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  }

  CLI::App app{"Wasserstein-robust blended-risk training and verification"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  VerifyConfig vcfg;
  ExperimentConfig ecfg;
  StatsConfig scfg;
  from_config(file_cfg, "suite", vcfg.suite);
  from_config(file_cfg, "instances", vcfg.instances);
  from_config(file_cfg, "tol", vcfg.tol);
  from_config(file_cfg, "seed", vcfg.seed);
  from_config(file_cfg, "out", vcfg.out);
  from_config(file_cfg, "positive_digit", ecfg.positive_digit);
  from_config(file_cfg, "negative_digit", ecfg.negative_digit);
  from_config(file_cfg, "per_class", ecfg.per_class);
  from_config(file_cfg, "test_per_class", ecfg.test_per_class);
  from_config(file_cfg, "betas", ecfg.betas);
  from_config(file_cfg, "epsilons", ecfg.epsilons);
  from_config(file_cfg, "kappas", ecfg.kappas);
  from_config(file_cfg, "trials", ecfg.trials);
  from_config(file_cfg, "seed", ecfg.seed);
  from_config(file_cfg, "formulation", ecfg.formulation);
  from_config(file_cfg, "inner_mode", ecfg.inner);
  from_config(file_cfg, "jobs", ecfg.jobs);
  from_config(file_cfg, "out", ecfg.out);
  from_config(file_cfg, "data_dir", ecfg.data_dir);
  from_config(file_cfg, "full_size", ecfg.full_size);
  from_config(file_cfg, "train_fraction", ecfg.train_fraction);
  from_config(file_cfg, "experiment", scfg.experiment);
  from_config(file_cfg, "problem", scfg.problem);
  from_config(file_cfg, "n", scfg.n);
  from_config(file_cfg, "reps", scfg.reps);
  from_config(file_cfg, "beta", scfg.beta);
  from_config(file_cfg, "epsilon", scfg.epsilon);
  from_config(file_cfg, "alpha", scfg.alpha);
  from_config(file_cfg, "tol_se_multiple", scfg.tol_se_multiple);
  from_config(file_cfg, "schedule", scfg.schedule);
  from_config(file_cfg, "seed", scfg.seed);
  from_config(file_cfg, "out", scfg.out);

  CLI::App* verify = app.add_subcommand("verify", "run a seeded property suite");
  verify->fallthrough();
  verify->add_option("suite", vcfg.suite, "duality | support | ordering | phi | lemma1");
  verify->add_option("--instances", vcfg.instances, "instance count (0: suite default)");
  verify->add_option("--tol", vcfg.tol, "comparison tolerance (<0: suite default)");
  verify->add_option("--seed", vcfg.seed, "base seed");
  verify->add_option("--out", vcfg.out, "output directory");

  CLI::App* experiment = app.add_subcommand("experiment", "digit-pair classification sweep");
  experiment->fallthrough();
  experiment->add_option("--pos", ecfg.positive_digit, "positive digit");
  experiment->add_option("--neg", ecfg.negative_digit, "negative digit");
  experiment->add_option("--per-class", ecfg.per_class, "training rows per class");
  experiment->add_option("--test-per-class", ecfg.test_per_class, "test rows per class");
  experiment->add_flag("--full-size", ecfg.full_size, "use the full 4/5 split, no subsample");
  experiment->add_option("--beta", ecfg.betas, "blend weights");
  experiment->add_option("--epsilon", ecfg.epsilons, "ball radii (default a x 10^-b sweep)");
  experiment->add_option("--kappa", ecfg.kappas, "label-flip costs");
  experiment->add_option("--trials", ecfg.trials, "independent trials");
  experiment->add_option("--seed", ecfg.seed, "master seed");
  experiment->add_option("--formulation", ecfg.formulation, "eq20 | exact");
  experiment->add_option("--inner", ecfg.inner,
                         "primal_lp | dual_search | equal_weight (recorded)");
  experiment->add_option("--jobs", ecfg.jobs, "worker threads");
  experiment->add_option("--out", ecfg.out, "output directory");
  experiment->add_option("--data-dir", ecfg.data_dir, "IDX directory (default $BDR_DATA_DIR)");

  CLI::App* stats = app.add_subcommand("stats", "synthetic statistics experiments");
  stats->fallthrough();
  stats->add_option("experiment", scfg.experiment, "bias | beta_star | consistency | clt");
  stats->add_option("--problem", scfg.problem, "uniform01 | three_atom");
  stats->add_option("--n", scfg.n, "sample size");
  stats->add_option("--reps", scfg.reps, "replications");
  stats->add_option("--beta", scfg.beta, "blend weight (bias experiment)");
  stats->add_option("--epsilon", scfg.epsilon, "ball radius (<0: pilot rule)");
  stats->add_option("--alpha", scfg.alpha, "prior-trust weight in beta_n = alpha/(alpha+n)");
  stats->add_option("--tol-se", scfg.tol_se_multiple, "standard-error multiple for bisection");
  stats->add_option("--schedule", scfg.schedule, "n schedule (consistency)");
  stats->add_option("--seed", scfg.seed, "master seed");
  stats->add_option("--out", scfg.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kUsageError;
  }

  // solver keys in the config file are validated here so a bad inner_mode is
  // reported as a usage error before any work starts
  try {
    bdr::solver_config_from_json(file_cfg.dump());
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (verify->parsed()) return run_verify(vcfg);
    if (experiment->parsed()) return run_experiment(ecfg);
    if (stats->parsed()) return run_stats(scfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAssertionFailure;
  }
  return kUsageError;
}
