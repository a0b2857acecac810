#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "bdr/data_io.hpp"
#include "bdr/rng.hpp"
#include "bdr/svm.hpp"
#include "cli_common.hpp"

namespace bdr::cli {

std::vector<double> default_epsilon_sweep() {
  std::vector<double> eps;
  for (int b : {4, 3, 2}) {
    for (int a = 1; a <= 9; ++a) {
      eps.push_back(static_cast<double>(a) * std::pow(10.0, -b));
    }
  }
  return eps;
}

void ExperimentConfig::validate() const {
  if (betas.empty() || kappas.empty()) {
    throw std::invalid_argument("experiment: beta and kappa lists must be nonempty");
  }
  if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  if (per_class < 1 || test_per_class < 1) {
    throw std::invalid_argument("experiment: per-class counts must be >= 1");
  }
  if (positive_digit < 0 || positive_digit > 9 || negative_digit < 0 || negative_digit > 9 ||
      positive_digit == negative_digit) {
    throw std::invalid_argument("experiment: digits must be distinct and in 0..9");
  }
  for (double b : betas) {
    if (b < 0.0 || b > 1.0) throw std::invalid_argument("experiment: beta outside [0,1]");
  }
  for (double e : epsilons) {
    if (e < 0.0) throw std::invalid_argument("experiment: epsilon must be >= 0");
  }
  for (double k : kappas) {
    if (k < 0.0) throw std::invalid_argument("experiment: kappa must be >= 0");
  }
  if (formulation != "eq20" && formulation != "exact") {
    throw std::invalid_argument("experiment: formulation must be eq20 or exact");
  }
  if (jobs < 1) throw std::invalid_argument("experiment: jobs must be >= 1");
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw std::invalid_argument("experiment: train fraction must lie in (0,1)");
  }
}

namespace {

struct Row {
  double kappa;
  int trial;
  int method_rank;  // 0 SAA, 1 DRO, 2 BDR
  double beta;
  double epsilon;
  std::uint64_t seed;
  double train_acc;
  double test_acc;
  double objective;
  double wallclock;

  bool operator<(const Row& o) const {
    return std::tie(kappa, trial, epsilon, method_rank, beta) <
           std::tie(o.kappa, o.trial, o.epsilon, o.method_rank, o.beta);
  }
};

struct TrainedPoint {
  double train_acc = 0.0;
  double test_acc = 0.0;
  double objective = 0.0;
  double wallclock = 0.0;
};

// Columns that are zero on every training row contribute nothing to the
// margins, and the norm budget keeps their weights at zero, so dropping them
// leaves the optimum and all predictions unchanged.
std::vector<int> informative_columns(const Eigen::MatrixXd& train) {
  std::vector<int> keep;
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    if (train.col(j).cwiseAbs().maxCoeff() > 0.0) keep.push_back(static_cast<int>(j));
  }
  return keep;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.epsilons.empty()) cfg.epsilons = default_epsilon_sweep();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  }

  std::string data_dir = cfg.data_dir;
  if (data_dir.empty()) {
    const char* env = std::getenv("BDR_DATA_DIR");
    data_dir = env ? env : "";
  }
  const std::string train_img = data_dir + "/train-images-idx3-ubyte";
  const std::string train_lab = data_dir + "/train-labels-idx1-ubyte";
  const std::string test_img = data_dir + "/t10k-images-idx3-ubyte";
  const std::string test_lab = data_dir + "/t10k-labels-idx1-ubyte";

  Dataset pool;
  try {
    const Dataset train = load_idx(train_img, train_lab);
    const Dataset test = load_idx(test_img, test_lab);
    pool.features.resize(train.rows() + test.rows(), train.features.cols());
    pool.features << train.features, test.features;
    pool.labels.resize(train.labels.size() + test.labels.size());
    pool.labels << train.labels, test.labels;
    pool.source = train.source + ";" + test.source;
    pool.digest = train.digest ^ test.digest;
  } catch (const DataIoError& e) {
    std::cerr << "data error: " << e.what() << "\n"
              << "expected the MNIST IDX files\n"
              << "  " << train_img << "\n  " << train_lab << "\n  " << test_img << "\n  "
              << test_lab << "\n"
              << "set BDR_DATA_DIR (or --data-dir) to the directory holding them\n";
    return kDataError;
  }

  const std::string pair_name = std::to_string(cfg.positive_digit) + "v" +
                                std::to_string(cfg.negative_digit);
  const SvmFormulation formulation = cfg.formulation == "eq20" ? SvmFormulation::PaperEq20
                                                               : SvmFormulation::ExactEpigraph;

  std::vector<Row> rows;
  std::mutex rows_mutex;
  std::atomic<int> next_trial{0};
  std::atomic<bool> failed{false};
  std::string failure_message;

  const auto run_trial = [&](int trial) {
    const std::uint64_t split_seed = SplitMix64::derive(cfg.seed, 2 * static_cast<std::uint64_t>(trial));
    const std::uint64_t sub_seed = SplitMix64::derive(cfg.seed, 2 * static_cast<std::uint64_t>(trial) + 1);
    BinaryTask task = make_binary_task(pool, cfg.positive_digit, cfg.negative_digit,
                                       cfg.train_fraction, split_seed);
    if (!cfg.full_size) {
      task = subsample(task, cfg.per_class, sub_seed, cfg.test_per_class);
    }
    auto [train_x_full, train_y] = materialize(pool, task.train_indices, task.train_labels);
    auto [test_x_full, test_y] = materialize(pool, task.test_indices, task.test_labels);
    const std::vector<int> keep = informative_columns(train_x_full);
    const Eigen::MatrixXd train_x = select_columns(train_x_full, keep);
    const Eigen::MatrixXd test_x = select_columns(test_x_full, keep);

    std::vector<Row> local;
    for (double kappa : cfg.kappas) {
      SvmInstance inst;
      inst.features = train_x;
      inst.labels = train_y;
      inst.kappa = kappa;

      const auto evaluate = [&](const SvmModel& model, double seconds) {
        TrainedPoint p;
        p.train_acc = accuracy(predict(model, train_x), train_y);
        p.test_acc = accuracy(predict(model, test_x), test_y);
        p.objective = model.objective;
        p.wallclock = seconds;
        return p;
      };

      if (formulation == SvmFormulation::PaperEq20) {
        // the eq-20 objective depends on (beta, epsilon) only through
        // beta * epsilon, so one warm-started chain over the distinct
        // coefficients covers SAA, DRO, and every BDR point
        std::set<double> coefs{0.0};
        for (double eps : cfg.epsilons) {
          coefs.insert(eps);  // DRO
          for (double beta : cfg.betas) coefs.insert(beta * eps);
        }
        SvmTrainer trainer(inst, formulation);
        std::map<double, TrainedPoint> by_coef;
        for (double coef : coefs) {
          const auto t0 = std::chrono::steady_clock::now();
          const SvmModel model =
              coef == 0.0 ? trainer.train_at(0.0, 0.0) : trainer.train_at(1.0, coef);
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          by_coef.emplace(coef, evaluate(model, secs));
        }
        for (double eps : cfg.epsilons) {
          const TrainedPoint& saa = by_coef.at(0.0);
          local.push_back({kappa, trial, 0, 0.0, eps, sub_seed, saa.train_acc, saa.test_acc,
                           saa.objective, saa.wallclock});
          const TrainedPoint& dro = by_coef.at(eps);
          local.push_back({kappa, trial, 1, 1.0, eps, sub_seed, dro.train_acc, dro.test_acc,
                           dro.objective, dro.wallclock});
          for (double beta : cfg.betas) {
            const TrainedPoint& bdr = by_coef.at(beta * eps);
            local.push_back({kappa, trial, 2, beta, eps, sub_seed, bdr.train_acc,
                             bdr.test_acc, bdr.objective, bdr.wallclock});
          }
        }
      } else {
        // exact epigraph: (beta, epsilon) enter separately; warm-start along
        // a sorted chain of pairs
        std::set<std::pair<double, double>> points;  // (beta, epsilon)
        points.insert({0.0, 0.0});
        for (double eps : cfg.epsilons) {
          points.insert({1.0, eps});
          for (double beta : cfg.betas) points.insert({beta, eps});
        }
        SvmTrainer trainer(inst, formulation);
        std::map<std::pair<double, double>, TrainedPoint> by_point;
        for (const auto& [beta, eps] : points) {
          const auto t0 = std::chrono::steady_clock::now();
          const SvmModel model = trainer.train_at(beta, eps);
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          by_point.emplace(std::make_pair(beta, eps), evaluate(model, secs));
        }
        for (double eps : cfg.epsilons) {
          const TrainedPoint& saa = by_point.at({0.0, 0.0});
          local.push_back({kappa, trial, 0, 0.0, eps, sub_seed, saa.train_acc, saa.test_acc,
                           saa.objective, saa.wallclock});
          const TrainedPoint& dro = by_point.at({1.0, eps});
          local.push_back({kappa, trial, 1, 1.0, eps, sub_seed, dro.train_acc, dro.test_acc,
                           dro.objective, dro.wallclock});
          for (double beta : cfg.betas) {
            const TrainedPoint& bdr = by_point.at({beta, eps});
            local.push_back({kappa, trial, 2, beta, eps, sub_seed, bdr.train_acc,
                             bdr.test_acc, bdr.objective, bdr.wallclock});
          }
        }
      }
    }
    const std::lock_guard<std::mutex> lock(rows_mutex);
    rows.insert(rows.end(), local.begin(), local.end());
  };

  const auto worker = [&]() {
    while (true) {
      const int trial = next_trial.fetch_add(1);
      if (trial >= cfg.trials || failed.load()) return;
      try {
        run_trial(trial);
      } catch (const std::exception& e) {
        const std::lock_guard<std::mutex> lock(rows_mutex);
        failed.store(true);
        failure_message = e.what();
        return;
      }
    }
  };

  if (cfg.jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < cfg.jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failed.load()) {
    std::cerr << "experiment failed: " << failure_message << "\n";
    return kAssertionFailure;
  }

  std::sort(rows.begin(), rows.end());
  std::filesystem::create_directories(cfg.out);
  const std::string csv_path = cfg.out + "/experiment_" + pair_name + ".csv";
  {
    std::ofstream csv(csv_path);
    csv << "pair,beta,epsilon,kappa,trial,seed,train_acc,test_acc,objective,wallclock\n";
    for (const Row& r : rows) {
      csv << pair_name << ',' << format_double(r.beta) << ',' << format_double(r.epsilon)
          << ',' << format_double(r.kappa) << ',' << r.trial << ',' << r.seed << ','
          << format_double(r.train_acc) << ',' << format_double(r.test_acc) << ','
          << format_double(r.objective) << ',' << format_double(r.wallclock) << "\n";
    }
  }

  // summary: mean/std of test accuracy per (method, epsilon, kappa), plus the
  // accuracy-maximizing epsilon per method and kappa
  struct Agg {
    double sum = 0.0, sum_sq = 0.0;
    int count = 0;
    void add(double v) {
      sum += v;
      sum_sq += v * v;
      ++count;
    }
    double mean() const { return sum / count; }
    double stddev() const {
      return count > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / count) / (count - 1)))
                       : 0.0;
    }
  };
  const auto method_name = [](const Row& r) {
    if (r.method_rank == 0) return std::string("saa");
    if (r.method_rank == 1) return std::string("dro");
    return "bdr_" + format_double(r.beta);
  };
  std::map<std::tuple<std::string, double, double>, Agg> by_cell;
  for (const Row& r : rows) {
    by_cell[{method_name(r), r.epsilon, r.kappa}].add(r.test_acc);
  }
  nlohmann::json cells = nlohmann::json::array();
  std::map<std::pair<std::string, double>, std::pair<double, double>> best;  // (method,kappa)->(acc,eps)
  for (const auto& [key, agg] : by_cell) {
    const auto& [method, eps, kappa] = key;
    cells.push_back({{"method", method},
                     {"epsilon", eps},
                     {"kappa", kappa},
                     {"mean_test_acc", agg.mean()},
                     {"std_test_acc", agg.stddev()},
                     {"trials", agg.count}});
    auto& slot = best[{method, kappa}];
    if (agg.mean() > slot.first) slot = {agg.mean(), eps};
  }
  nlohmann::json best_eps = nlohmann::json::array();
  for (const auto& [key, val] : best) {
    best_eps.push_back({{"method", key.first},
                        {"kappa", key.second},
                        {"epsilon", val.second},
                        {"mean_test_acc", val.first}});
  }
  nlohmann::json summary;
  summary["pair"] = pair_name;
  summary["trials"] = cfg.trials;
  summary["per_class"] = cfg.full_size ? -1 : cfg.per_class;
  summary["test_per_class"] = cfg.full_size ? -1 : cfg.test_per_class;
  summary["formulation"] = cfg.formulation;
  summary["inner_mode"] = cfg.inner;
  summary["seed"] = cfg.seed;
  summary["cells"] = cells;
  summary["accuracy_maximizing_epsilon"] = best_eps;
  const std::string json_path = cfg.out + "/experiment_" + pair_name + "_summary.json";
  std::ofstream(json_path) << summary.dump(2) << "\n";

  std::cout << "wrote " << rows.size() << " rows to " << csv_path << " and summary to "
            << json_path << "\n";
  return kOk;
}

}  // namespace bdr::cli
