#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "bdr/rng.hpp"
#include "bdr/stats.hpp"
#include "cli_common.hpp"

namespace bdr::cli {

namespace {

SyntheticProblem problem_by_name(const std::string& name) {
  if (name == "uniform01") {
    return SyntheticProblem::mean_estimation({0.0, 1.0}, {0.5, 0.5});
  }
  if (name == "three_atom") {
    return SyntheticProblem::mean_estimation({0.0, 0.5, 1.0},
                                             {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  }
  throw std::invalid_argument("unknown problem '" + name + "' (uniform01|three_atom)");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void write_rows(std::ofstream& csv, const std::string& experiment, int n, double beta,
                double epsilon, const std::vector<double>& values, double true_optimum,
                std::uint64_t seed) {
  for (std::size_t rep = 0; rep < values.size(); ++rep) {
    csv << experiment << ',' << n << ',' << fmt(beta) << ',' << fmt(epsilon) << ',' << rep
        << ',' << fmt(values[rep]) << ',' << fmt(values[rep] - true_optimum) << ',' << seed
        << "\n";
  }
}

}  // namespace

int run_stats(const StatsConfig& cfg) {
  SyntheticProblem prob;
  try {
    prob = problem_by_name(cfg.problem);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  }

  std::filesystem::create_directories(cfg.out);
  const std::string csv_path = cfg.out + "/stats_" + cfg.experiment + ".csv";
  const std::string json_path = cfg.out + "/stats_" + cfg.experiment + "_summary.json";
  std::ofstream csv(csv_path);
  csv << "experiment,n,beta,epsilon,rep,value,bias,seed\n";
  nlohmann::json summary;
  summary["experiment"] = cfg.experiment;
  summary["problem"] = cfg.problem;
  summary["true_optimum"] = prob.true_optimum;
  summary["seed"] = cfg.seed;

  try {
    if (cfg.experiment == "bias") {
      const double eps = cfg.epsilon >= 0.0
                             ? cfg.epsilon
                             : pilot_epsilon(prob, cfg.n, 200, SplitMix64::derive(cfg.seed, 0xBD));
      const BiasResult r = bias_experiment(prob, cfg.n, cfg.beta, eps, cfg.reps, cfg.seed);
      write_rows(csv, "bias", cfg.n, cfg.beta, eps, r.rep_values, prob.true_optimum, cfg.seed);
      summary["n"] = cfg.n;
      summary["beta"] = cfg.beta;
      summary["epsilon"] = eps;
      summary["mean_bias"] = r.mean_bias;
      summary["std_err"] = r.std_err;
      summary["bias_ci95"] = {r.mean_bias - 1.96 * r.std_err, r.mean_bias + 1.96 * r.std_err};
      summary["failures"] = r.failures;
    } else if (cfg.experiment == "beta_star") {
      const double eps = cfg.epsilon >= 0.0
                             ? cfg.epsilon
                             : pilot_epsilon(prob, cfg.n, 200, SplitMix64::derive(cfg.seed, 0xBD));
      const BetaSearchResult r =
          find_unbiased_beta(prob, cfg.n, eps, cfg.reps, cfg.tol_se_multiple, cfg.seed);
      const BiasResult at_star = bias_experiment(prob, cfg.n, r.beta_star, eps, cfg.reps, cfg.seed);
      write_rows(csv, "beta_star", cfg.n, r.beta_star, eps, at_star.rep_values,
                 prob.true_optimum, cfg.seed);
      summary["n"] = cfg.n;
      summary["epsilon"] = eps;
      summary["beta_star"] = r.beta_star;
      summary["beta_bracket"] = {r.bracket_lo, r.bracket_hi};
      summary["bias_at_star"] = r.bias_at_star;
      summary["std_err_at_star"] = r.std_err_at_star;
      summary["bias_ci"] = {r.bias_at_star - cfg.tol_se_multiple * r.std_err_at_star,
                            r.bias_at_star + cfg.tol_se_multiple * r.std_err_at_star};
    } else if (cfg.experiment == "consistency") {
      const double eps = cfg.epsilon >= 0.0 ? cfg.epsilon : 0.3;
      const auto rows =
          consistency_experiment(prob, cfg.schedule, cfg.alpha, eps, cfg.reps, cfg.seed);
      nlohmann::json table = nlohmann::json::array();
      for (const auto& row : rows) {
        table.push_back({{"n", row.n},
                         {"beta_n", row.beta_n},
                         {"mean_abs_err", row.mean_abs_err},
                         {"std_err", row.std_err}});
        write_rows(csv, "consistency", row.n, row.beta_n, eps, row.rep_values,
                   prob.true_optimum, cfg.seed);
      }
      summary["alpha"] = cfg.alpha;
      summary["epsilon"] = eps;
      summary["rows"] = table;
    } else if (cfg.experiment == "clt") {
      const CltResult r = clt_experiment(prob, cfg.n, cfg.reps, cfg.seed, cfg.alpha, cfg.epsilon);
      write_rows(csv, "clt", cfg.n, cfg.alpha / (cfg.alpha + cfg.n), cfg.epsilon,
                 r.standardized, 0.0, cfg.seed);
      summary["n"] = cfg.n;
      summary["alpha"] = cfg.alpha;
      summary["ks_statistic"] = r.ks_statistic;
      summary["p_value"] = r.p_value;
      summary["clt_variance"] = prob.clt_variance;
    } else {
      std::cerr << "unknown stats experiment '" << cfg.experiment
                << "' (bias|beta_star|consistency|clt)\n";
      return kUsageError;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "stats experiment failed: " << e.what() << "\n";
    return kAssertionFailure;
  }

  std::ofstream(json_path) << summary.dump(2) << "\n";
  std::cout << "wrote " << csv_path << " and " << json_path << "\n";
  return kOk;
}

}  // namespace bdr::cli
