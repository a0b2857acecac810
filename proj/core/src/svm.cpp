#include "bdr/svm.hpp"

#include <cmath>
#include <json.hpp>
#include <stdexcept>

namespace bdr {

namespace {
constexpr double kMaxDenseEntries = 5e8;  // dense LP size guardrail

Eigen::VectorXd eq20_objective(const SvmInstance& inst) {
  const Eigen::Index n = inst.sample_count(), l = inst.feature_count();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 2 * l + 1);
  c(l) = inst.beta * inst.epsilon;  // lambda0
  for (Eigen::Index i = 0; i < n; ++i) c(l + 1 + i) = 1.0 / static_cast<double>(n);
  return c;
}

Eigen::VectorXd epigraph_objective(const SvmInstance& inst) {
  const Eigen::Index n = inst.sample_count(), l = inst.feature_count();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * n + 2 * l + 1);
  c(l) = inst.beta * inst.epsilon;
  for (Eigen::Index i = 0; i < n; ++i) {
    c(l + 1 + i) = inst.beta / static_cast<double>(n);          // w_i
    c(l + 1 + n + i) = (1.0 - inst.beta) / static_cast<double>(n);  // e_i
  }
  return c;
}

}  // namespace

void SvmInstance::validate() const {
  if (sample_count() < 1 || feature_count() < 1) {
    throw std::invalid_argument("SvmInstance: needs n >= 1 samples and l >= 1 features");
  }
  if (labels.size() != sample_count()) {
    throw std::invalid_argument("SvmInstance: labels length must match feature rows");
  }
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) != 1 && labels(i) != -1) {
      throw std::invalid_argument("SvmInstance: labels must be +-1");
    }
  }
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("SvmInstance: beta outside [0,1]");
  if (epsilon < 0.0) throw std::invalid_argument("SvmInstance: epsilon must be >= 0");
  if (kappa < 0.0) throw std::invalid_argument("SvmInstance: kappa must be >= 0");
}

double hinge_loss(const Eigen::VectorXd& x, const SamplePoint& xi) {
  if (!xi.label) throw std::invalid_argument("hinge_loss: sample point has no label");
  const double margin = 1.0 - static_cast<double>(*xi.label) * x.dot(xi.coordinates);
  return std::max(margin, 0.0);
}

double svm_metric(const SamplePoint& a, const SamplePoint& b, double kappa) {
  if (a.coordinates.size() != b.coordinates.size()) {
    throw std::invalid_argument("svm_metric: feature dimension mismatch");
  }
  double d = (a.coordinates - b.coordinates).lpNorm<Eigen::Infinity>();
  if (a.label != b.label) d += kappa;
  return d;
}

double hinge_inner_max(const Eigen::VectorXd& x, double lambda0, double kappa,
                       const SamplePoint& atom) {
  if (!atom.label) throw std::invalid_argument("hinge_inner_max: atom has no label");
  if (lambda0 < x.cwiseAbs().sum() - 1e-12) return kInf;
  const double margin = static_cast<double>(*atom.label) * x.dot(atom.coordinates);
  return std::max({1.0 - margin, 1.0 + margin - kappa * lambda0, 0.0});
}

LinearProgram build_eq20_lp(const SvmInstance& inst) {
  inst.validate();
  const Eigen::Index n = inst.sample_count(), l = inst.feature_count();
  const Eigen::Index vars = n + 2 * l + 1;  // x, lambda0, lambda_1..n, s
  const Eigen::Index rows = 2 * n + 1 + 2 * l;
  if (static_cast<double>(vars) * static_cast<double>(rows) > kMaxDenseEntries) {
    throw std::invalid_argument("build_eq20_lp: instance exceeds the dense-LP guardrail");
  }
  LinearProgram lp = LinearProgram::with_sizes(vars, rows);
  lp.objective = eq20_objective(inst);
  for (Eigen::Index j = 0; j < l; ++j) lp.lower(j) = -kInf;  // x free

  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = static_cast<double>(inst.labels(i));
    // 1 - Y_i <x, I_i> <= lambda_i
    lp.constraints.block(i, 0, 1, l) = -y * inst.features.row(i);
    lp.constraints(i, l + 1 + i) = -1.0;
    lp.rhs(i) = -1.0;
    // 1 + Y_i <x, I_i> - kappa lambda0 <= lambda_i
    lp.constraints.block(n + i, 0, 1, l) = y * inst.features.row(i);
    lp.constraints(n + i, l) = -inst.kappa;
    lp.constraints(n + i, l + 1 + i) = -1.0;
    lp.rhs(n + i) = -1.0;
  }
  // sum_j s_j <= lambda0
  for (Eigen::Index j = 0; j < l; ++j) lp.constraints(2 * n, n + l + 1 + j) = 1.0;
  lp.constraints(2 * n, l) = -1.0;
  // x_j <= s_j and -x_j <= s_j
  for (Eigen::Index j = 0; j < l; ++j) {
    lp.constraints(2 * n + 1 + 2 * j, j) = 1.0;
    lp.constraints(2 * n + 1 + 2 * j, n + l + 1 + j) = -1.0;
    lp.constraints(2 * n + 2 + 2 * j, j) = -1.0;
    lp.constraints(2 * n + 2 + 2 * j, n + l + 1 + j) = -1.0;
  }
  return lp;
}

LinearProgram build_exact_epigraph_lp(const SvmInstance& inst) {
  inst.validate();
  const Eigen::Index n = inst.sample_count(), l = inst.feature_count();
  const Eigen::Index vars = 2 * n + 2 * l + 1;  // x, lambda0, w, e, s
  const Eigen::Index rows = 3 * n + 1 + 2 * l;
  if (static_cast<double>(vars) * static_cast<double>(rows) > kMaxDenseEntries) {
    throw std::invalid_argument("build_exact_epigraph_lp: instance exceeds the dense-LP guardrail");
  }
  LinearProgram lp = LinearProgram::with_sizes(vars, rows);
  lp.objective = epigraph_objective(inst);
  for (Eigen::Index j = 0; j < l; ++j) lp.lower(j) = -kInf;

  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = static_cast<double>(inst.labels(i));
    // w_i >= 1 - Y_i <x, I_i>
    lp.constraints.block(i, 0, 1, l) = -y * inst.features.row(i);
    lp.constraints(i, l + 1 + i) = -1.0;
    lp.rhs(i) = -1.0;
    // w_i >= 1 + Y_i <x, I_i> - kappa lambda0
    lp.constraints.block(n + i, 0, 1, l) = y * inst.features.row(i);
    lp.constraints(n + i, l) = -inst.kappa;
    lp.constraints(n + i, l + 1 + i) = -1.0;
    lp.rhs(n + i) = -1.0;
    // e_i >= 1 - Y_i <x, I_i>
    lp.constraints.block(2 * n + i, 0, 1, l) = -y * inst.features.row(i);
    lp.constraints(2 * n + i, l + 1 + n + i) = -1.0;
    lp.rhs(2 * n + i) = -1.0;
  }
  for (Eigen::Index j = 0; j < l; ++j) lp.constraints(3 * n, 2 * n + l + 1 + j) = 1.0;
  lp.constraints(3 * n, l) = -1.0;
  for (Eigen::Index j = 0; j < l; ++j) {
    lp.constraints(3 * n + 1 + 2 * j, j) = 1.0;
    lp.constraints(3 * n + 1 + 2 * j, 2 * n + l + 1 + j) = -1.0;
    lp.constraints(3 * n + 2 + 2 * j, j) = -1.0;
    lp.constraints(3 * n + 2 + 2 * j, 2 * n + l + 1 + j) = -1.0;
  }
  return lp;
}

namespace {

SvmModel extract_model(const SvmInstance& inst, SvmFormulation formulation,
                       const LpSolution& sol) {
  if (sol.status != LpStatus::Optimal) {
    throw LpError(std::string("svm training failed: LP status ") +
                  (sol.status == LpStatus::Infeasible ? "Infeasible" : "Unbounded") +
                  " after " + std::to_string(sol.iterations) + " iterations");
  }
  const Eigen::Index n = inst.sample_count(), l = inst.feature_count();
  SvmModel model;
  model.weights = sol.primal.head(l);
  model.lambda0 = sol.primal(l);
  model.lambdas = sol.primal.segment(l + 1, n);
  model.objective = sol.value;
  model.formulation = formulation;
  model.beta = inst.beta;
  model.epsilon = inst.epsilon;
  model.kappa = inst.kappa;
  return model;
}

}  // namespace

SvmModel train(const SvmInstance& inst, SvmFormulation formulation) {
  SvmTrainer trainer(inst, formulation);
  return trainer.train_at(inst.beta, inst.epsilon);
}

SvmTrainer::SvmTrainer(SvmInstance inst, SvmFormulation formulation)
    : inst_(std::move(inst)), formulation_(formulation) {
  inst_.validate();
  const LinearProgram lp = formulation_ == SvmFormulation::PaperEq20
                               ? build_eq20_lp(inst_)
                               : build_exact_epigraph_lp(inst_);
  solver_ = std::make_unique<SimplexSolver>(lp);
}

SvmTrainer::~SvmTrainer() = default;
SvmTrainer::SvmTrainer(SvmTrainer&&) noexcept = default;
SvmTrainer& SvmTrainer::operator=(SvmTrainer&&) noexcept = default;

SvmModel SvmTrainer::train_at(double beta, double epsilon) {
  inst_.beta = beta;
  inst_.epsilon = epsilon;
  const Eigen::VectorXd c = formulation_ == SvmFormulation::PaperEq20
                                ? eq20_objective(inst_)
                                : epigraph_objective(inst_);
  const LpSolution sol = solver_->resolve_with_objective(c);
  return extract_model(inst_, formulation_, sol);
}

Eigen::VectorXi predict(const SvmModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.weights.size()) {
    throw std::invalid_argument("predict: feature dimension mismatch");
  }
  const Eigen::VectorXd scores = features * model.weights;
  Eigen::VectorXi out(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) out(i) = scores(i) < 0.0 ? -1 : 1;
  return out;
}

double accuracy(const Eigen::VectorXi& predictions, const Eigen::VectorXi& truth) {
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("accuracy: length mismatch");
  }
  if (predictions.size() == 0) throw std::invalid_argument("accuracy: empty vectors");
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < predictions.size(); ++i) {
    if (predictions(i) == truth(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::string SvmModel::to_json() const {
  nlohmann::json j;
  j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
  j["lambda0"] = lambda0;
  j["objective"] = objective;
  j["formulation"] = formulation == SvmFormulation::PaperEq20 ? "eq20" : "exact";
  j["beta"] = beta;
  j["epsilon"] = epsilon;
  j["kappa"] = kappa;
  return j.dump(2);
}

SvmModel SvmModel::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SvmModel m;
  const auto w = j.at("weights").get<std::vector<double>>();
  m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.lambda0 = j.at("lambda0").get<double>();
  m.objective = j.at("objective").get<double>();
  m.formulation = j.at("formulation").get<std::string>() == "eq20" ? SvmFormulation::PaperEq20
                                                                   : SvmFormulation::ExactEpigraph;
  m.beta = j.at("beta").get<double>();
  m.epsilon = j.at("epsilon").get<double>();
  m.kappa = j.at("kappa").get<double>();
  return m;
}

}  // namespace bdr
