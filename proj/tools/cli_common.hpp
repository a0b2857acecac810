#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bdr::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kAssertionFailure = 1,
  kUsageError = 2,
  kDataError = 3,
};

struct VerifyConfig {
  std::string suite;
  int instances = 0;  // 0: suite default
  double tol = -1.0;  // < 0: suite default
  std::uint64_t seed = 0;
  std::string out = "out";
};

struct ExperimentConfig {
  int positive_digit = 1;
  int negative_digit = 7;
  int per_class = 500;
  int test_per_class = 200;
  bool full_size = false;
  double train_fraction = 0.8;
  std::vector<double> betas{0.3, 0.5, 0.7};
  std::vector<double> epsilons;  // defaults to the a x 10^-b sweep
  std::vector<double> kappas{0.1, 0.25, 0.5, 0.75};
  int trials = 100;
  std::uint64_t seed = 20240817;
  std::string formulation = "eq20";  // eq20 | exact
  std::string inner = "dual_search";  // recorded in the summary
  int jobs = 1;
  std::string out = "out";
  std::string data_dir;  // from BDR_DATA_DIR when empty

  void validate() const;  // throws std::invalid_argument on bad ranges
};

struct StatsConfig {
  std::string experiment = "bias";  // bias | beta_star | consistency | clt
  std::string problem = "uniform01";  // uniform01 | three_atom
  int n = 5;
  int reps = 2000;
  double beta = 0.0;
  double epsilon = -1.0;  // < 0: pilot rule
  double alpha = 1.0;
  double tol_se_multiple = 3.0;
  std::vector<int> schedule{10, 100, 1000};
  std::uint64_t seed = 7;
  std::string out = "out";
};

std::vector<double> default_epsilon_sweep();

int run_verify(const VerifyConfig& cfg);
int run_experiment(const ExperimentConfig& cfg);
int run_stats(const StatsConfig& cfg);

}  // namespace bdr::cli
