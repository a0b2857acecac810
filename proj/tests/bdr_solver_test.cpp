#include <doctest.h>

#include <cmath>

#include "bdr/bdr_solver.hpp"
#include "bdr/rng.hpp"

using namespace bdr;

namespace {

LossOracle squared_loss() {
  LossOracle loss;
  loss.evaluate = [](const Eigen::VectorXd& x, const SamplePoint& xi) {
    const double d = x(0) - xi.coordinates(0);
    return d * d;
  };
  loss.subgradient_x = [](const Eigen::VectorXd& x, const SamplePoint& xi) {
    Eigen::VectorXd g(1);
    g(0) = 2.0 * (x(0) - xi.coordinates(0));
    return g;
  };
  loss.convex_in_x = true;
  return loss;
}

LossOracle abs_loss() {
  LossOracle loss;
  loss.evaluate = [](const Eigen::VectorXd& x, const SamplePoint& xi) {
    return std::abs(x(0) - xi.coordinates(0));
  };
  loss.subgradient_x = [](const Eigen::VectorXd& x, const SamplePoint& xi) {
    Eigen::VectorXd g(1);
    g(0) = x(0) >= xi.coordinates(0) ? 1.0 : -1.0;
    return g;
  };
  loss.convex_in_x = true;
  return loss;
}

std::vector<SamplePoint> pair01() {
  return {SamplePoint::scalar(0.0), SamplePoint::scalar(1.0)};
}

std::vector<SamplePoint> line_grid(double lo, double hi, double step) {
  std::vector<SamplePoint> g;
  for (double v = lo; v <= hi + 1e-12; v += step) g.push_back(SamplePoint::scalar(v));
  return g;
}

Eigen::VectorXd x1(double v) {
  Eigen::VectorXd x(1);
  x(0) = v;
  return x;
}

}  // namespace

TEST_CASE("objective blend endpoints") {
  BdrProblem prob = BdrProblem::data_driven(squared_loss(), pair01(), 0.0, 0.3, 1.0,
                                            GroundMetric::euclidean(), 1);
  prob.candidate_grid = line_grid(-1.0, 2.0, 0.05);
  BdrSolverConfig cfg;
  cfg.inner_mode = InnerMode::DualSearch;

  const BdrObjectiveValue at0 = bdr_objective(prob, x1(0.5), cfg);
  CHECK(at0.value == doctest::Approx(at0.saa_part).epsilon(1e-12));

  prob.beta = 1.0;
  const BdrObjectiveValue at1 = bdr_objective(prob, x1(0.5), cfg);
  CHECK(at1.value == doctest::Approx(at1.dro_part).epsilon(1e-12));
  CHECK(at1.dro_part >= at1.saa_part - 1e-9);
}

TEST_CASE("zero radius collapses the blend") {
  for (double beta : {0.0, 0.3, 1.0}) {
    BdrProblem prob = BdrProblem::data_driven(squared_loss(), pair01(), beta, 0.0, 1.0,
                                              GroundMetric::euclidean(), 1);
    const BdrObjectiveValue v = bdr_objective(prob, x1(0.5));
    CHECK(v.value == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(v.dro_part == doctest::Approx(v.saa_part).epsilon(1e-12));
  }
}

TEST_CASE("regularized form identity") {
  BdrProblem prob = BdrProblem::data_driven(squared_loss(), pair01(), 0.0, 0.2, 1.0,
                                            GroundMetric::euclidean(), 1);
  prob.candidate_grid = line_grid(-0.5, 1.5, 0.05);
  BdrSolverConfig cfg;
  cfg.inner_mode = InnerMode::PrimalLp;

  CHECK(regularized_form(prob, x1(0.4), cfg).first == 0.0);
  prob.beta = 0.5;
  CHECK(regularized_form(prob, x1(0.4), cfg).first == doctest::Approx(1.0).epsilon(1e-15));
  prob.beta = 1.0;
  CHECK_THROWS_AS(regularized_form(prob, x1(0.4), cfg), std::invalid_argument);

  SplitMix64 gen(17);
  for (int rep = 0; rep < 100; ++rep) {
    prob.beta = 0.05 + 0.9 * gen.next_double();
    prob.ball.radius = 0.5 * gen.next_double();
    const double x = 2.0 * gen.next_double() - 0.5;
    const auto [lambda_n, f] = regularized_form(prob, x1(x), cfg);
    const BdrObjectiveValue v = bdr_objective(prob, x1(x), cfg);
    CHECK(v.saa_part + lambda_n * f ==
          doctest::Approx(v.value / (1.0 - prob.beta)).epsilon(1e-8));
  }
}

TEST_CASE("coordinate descent recovers the SAA least-squares solution") {
  BdrProblem prob = BdrProblem::data_driven(squared_loss(), pair01(), 0.4, 0.0, 1.0,
                                            GroundMetric::euclidean(), 1);
  BdrSolverConfig cfg;
  cfg.box_lower = x1(-2.0);
  cfg.box_upper = x1(2.0);
  const BdrSolution sol = solve_bdr_coordinate_descent(prob, x1(-1.5), cfg);
  CHECK(sol.x_opt(0) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(sol.value == doctest::Approx(0.25).epsilon(1e-4));
  CHECK(sol.converged);
  CHECK(sol.value == doctest::Approx(prob.beta * sol.dro_part +
                                     (1.0 - prob.beta) * sol.saa_part)
                         .epsilon(1e-10));
}

TEST_CASE("coordinate descent matches the x-scan oracle") {
  const auto grid = line_grid(-1.0, 2.0, 0.01);
  BdrSolverConfig cfg;
  cfg.inner_mode = InnerMode::PrimalLp;
  cfg.box_lower = x1(-1.0);
  cfg.box_upper = x1(2.0);
  cfg.max_outer = 60;
  cfg.x_steps_per_outer = 80;

  const auto scan_minimum = [&](double beta) {
    BdrProblem p = BdrProblem::data_driven(abs_loss(), pair01(), beta, 0.2, 1.0,
                                           GroundMetric::euclidean(), 1);
    p.candidate_grid = grid;
    BdrSolverConfig scan_cfg = cfg;
    scan_cfg.inner_mode = InnerMode::DualSearch;  // fast inner for the dense scan
    double best = kInf;
    for (double x = -1.0; x <= 2.0 + 1e-12; x += 1e-3) {
      best = std::min(best, bdr_objective(p, x1(x), scan_cfg).value);
    }
    return best;
  };

  BdrProblem dro = BdrProblem::data_driven(abs_loss(), pair01(), 1.0, 0.2, 1.0,
                                           GroundMetric::euclidean(), 1);
  dro.candidate_grid = grid;
  const BdrSolution sol1 = solve_bdr_coordinate_descent(dro, x1(0.3), cfg);
  const double scan1 = scan_minimum(1.0);
  CHECK(sol1.value == doctest::Approx(scan1).epsilon(2e-3));

  BdrProblem half = dro;
  half.beta = 0.5;
  const BdrSolution sol_half = solve_bdr_coordinate_descent(half, x1(0.3), cfg);
  const double scan0 = scan_minimum(0.0);
  CHECK(sol_half.value >= scan0 - 2e-3);
  CHECK(sol_half.value <= scan1 + 2e-3);
}

TEST_CASE("coordinate descent refuses non-convex losses") {
  LossOracle bad = squared_loss();
  bad.convex_in_x = false;
  BdrProblem prob = BdrProblem::data_driven(bad, pair01(), 0.5, 0.1, 1.0,
                                            GroundMetric::euclidean(), 1);
  prob.candidate_grid = line_grid(-1.0, 2.0, 0.1);
  CHECK_THROWS_AS(solve_bdr_coordinate_descent(prob, x1(0.0), {}), std::invalid_argument);
}

TEST_CASE("dual objective of the blend") {
  SUBCASE("beta zero is lambda0-independent") {
    BdrProblem prob = BdrProblem::data_driven(squared_loss(), pair01(), 0.0, 0.3, 1.0,
                                              GroundMetric::euclidean(), 1);
    prob.candidate_grid = line_grid(-1.0, 2.0, 0.05);
    const double a = bdr_dual_objective(prob, x1(0.4), 0.0);
    const double b = bdr_dual_objective(prob, x1(0.4), 3.0);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(a == doctest::Approx(bdr_objective(prob, x1(0.4)).saa_part).epsilon(1e-12));
  }
  SUBCASE("linear loss on the dirac center") {
    LossOracle lin;
    lin.evaluate = [](const Eigen::VectorXd&, const SamplePoint& xi) {
      return xi.coordinates(0);
    };
    lin.convex_in_x = true;
    BdrProblem prob = BdrProblem::data_driven(lin, {SamplePoint::scalar(0.0)}, 1.0, 0.3, 1.0,
                                              GroundMetric::euclidean(), 1);
    prob.candidate_grid = line_grid(0.0, 1.0, 0.01);
    double best = kInf;
    for (double l0 = 0.0; l0 <= 10.0; l0 += 1e-3) {
      best = std::min(best, bdr_dual_objective(prob, x1(0.0), l0));
    }
    CHECK(best == doctest::Approx(0.3).epsilon(1e-6));
  }
  SUBCASE("dual minimum equals the primal objective on random instances") {
    SplitMix64 gen(31);
    BdrSolverConfig cfg;
    cfg.inner_mode = InnerMode::PrimalLp;
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<SamplePoint> samples;
      const int n = 2 + static_cast<int>(gen.next_below(3));
      for (int k = 0; k < n; ++k) samples.push_back(SamplePoint::scalar(gen.next_double()));
      BdrProblem prob = BdrProblem::data_driven(squared_loss(), samples,
                                                0.2 + 0.6 * gen.next_double(),
                                                0.05 + 0.3 * gen.next_double(), 1.0,
                                                GroundMetric::euclidean(), 1);
      prob.candidate_grid = line_grid(0.0, 1.0, 0.05);
      prob.candidate_grid.insert(prob.candidate_grid.end(), samples.begin(), samples.end());
      const double x = gen.next_double();

      const double primal = bdr_objective(prob, x1(x), cfg).value;
      double dual = kInf;  // golden-section over lambda0
      double a = 0.0, b = 20.0;
      const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
      double u1 = b - invphi * (b - a), u2 = a + invphi * (b - a);
      double f1 = bdr_dual_objective(prob, x1(x), u1);
      double f2 = bdr_dual_objective(prob, x1(x), u2);
      while (b - a > 1e-10) {
        if (f1 <= f2) {
          b = u2;
          u2 = u1;
          f2 = f1;
          u1 = b - invphi * (b - a);
          f1 = bdr_dual_objective(prob, x1(x), u1);
        } else {
          a = u1;
          u1 = u2;
          f1 = f2;
          u2 = a + invphi * (b - a);
          f2 = bdr_dual_objective(prob, x1(x), u2);
        }
      }
      dual = bdr_dual_objective(prob, x1(x), 0.5 * (a + b));
      CHECK_MESSAGE(std::abs(primal - dual) <= 1e-6, "rep ", rep);
    }
  }
}

TEST_CASE("ordering and beta monotonicity on random instances") {
  SplitMix64 gen(555);
  BdrSolverConfig cfg;
  cfg.inner_mode = InnerMode::PrimalLp;
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<SamplePoint> samples;
    const int n = 2 + static_cast<int>(gen.next_below(3));
    for (int k = 0; k < n; ++k) samples.push_back(SamplePoint::scalar(gen.next_double()));
    BdrProblem prob = BdrProblem::data_driven(squared_loss(), samples, 0.5,
                                              0.05 + 0.2 * gen.next_double(), 1.0,
                                              GroundMetric::euclidean(), 1);
    prob.candidate_grid = line_grid(0.0, 1.0, 0.05);
    for (auto& s : samples) prob.candidate_grid.push_back(s);
    const double x = gen.next_double();

    double prev = -kInf;
    for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      prob.beta = beta;
      const BdrObjectiveValue v = bdr_objective(prob, x1(x), cfg);
      CHECK(v.saa_part <= v.value + 1e-12);
      CHECK(v.value <= v.dro_part + 1e-12);
      CHECK(v.value >= prev - 1e-12);  // affine and nondecreasing in beta
      prev = v.value;
    }
  }
}

TEST_CASE("solver config parses from JSON") {
  const BdrSolverConfig cfg = solver_config_from_json(
      R"({"rel_tol": 1e-5, "max_outer": 33, "lambda0_bracket": 7.5, "inner_mode": "equal_weight"})");
  CHECK(cfg.rel_tol == 1e-5);
  CHECK(cfg.max_outer == 33);
  CHECK(cfg.lambda0_bracket == 7.5);
  CHECK(cfg.inner_mode == InnerMode::EqualWeight);
  CHECK(solver_config_from_json("{}").max_outer == 200);  // defaults survive
  CHECK_THROWS_AS(solver_config_from_json(R"({"inner_mode": "zigzag"})"),
                  std::invalid_argument);
}
