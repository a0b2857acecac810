#include "bdr/verify.hpp"

#include <cmath>
#include <sstream>

#include "bdr/data_io.hpp"
#include "bdr/phi_divergence.hpp"
#include "bdr/rng.hpp"
#include "bdr/stats.hpp"
#include "bdr/wasserstein.hpp"

namespace bdr {

namespace {

struct WorstCaseInstance {
  DiscreteDistribution center;
  std::vector<SamplePoint> grid;
  LossFn loss;
  double epsilon;
};

// Criterion family: center n <= 5, grid <= 25 containing the center atoms,
// random smooth loss with values in [0, 10], eps in [0, 2].
WorstCaseInstance make_instance(std::uint64_t seed, bool uniform_weights) {
  SplitMix64 gen(SplitMix64::derive(0xD0A1, seed));
  WorstCaseInstance inst;
  const int n = 1 + static_cast<int>(gen.next_below(5));
  Eigen::VectorXd w(n);
  for (int k = 0; k < n; ++k) {
    inst.center.atoms.push_back(SamplePoint::scalar(gen.next_double()));
    w(k) = uniform_weights ? 1.0 : gen.next_double() + 0.05;
  }
  inst.center.weights = w / w.sum();
  inst.center.weights(n - 1) = 1.0 - inst.center.weights.head(n - 1).sum();

  inst.grid = inst.center.atoms;
  const int extra = static_cast<int>(gen.next_below(21));
  for (int k = 0; k < extra; ++k) {
    inst.grid.push_back(SamplePoint::scalar(gen.next_double()));
  }
  const double a1 = 10.0 * gen.next_double();
  const double a2 = 6.28 * gen.next_double();
  inst.loss = [a1, a2](const SamplePoint& p) {
    return 5.0 + 5.0 * std::sin(a1 * p.coordinates(0) + a2);
  };
  inst.epsilon = 2.0 * gen.next_double();
  return inst;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

SuiteReport run_duality_suite(int instances, double tol, std::uint64_t seed0) {
  SuiteReport report{"duality", instances, tol, {}};
  for (int k = 0; k < instances; ++k) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(k);
    const WorstCaseInstance inst = make_instance(seed, false);
    WassersteinBall ball{inst.center, inst.epsilon, 1.0, GroundMetric::euclidean()};
    const WorstCaseResult primal = worst_case_primal(ball, inst.loss, inst.grid);
    const auto [dual, l0] = worst_case_dual_on_grid(ball, inst.loss, inst.grid);
    const double gap = std::abs(primal.value - dual);
    if (gap > tol) {
      report.failures.push_back({seed, "duality gap " + fmt(gap) + " (primal " +
                                           fmt(primal.value) + ", dual " + fmt(dual) + ")"});
    }
  }
  return report;
}

SuiteReport run_support_suite(int instances, double tol, std::uint64_t seed0) {
  SuiteReport report{"support", instances, tol, {}};
  for (int k = 0; k < instances; ++k) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(k);
    const WorstCaseInstance inst = make_instance(seed, false);
    WassersteinBall ball{inst.center, inst.epsilon, 1.0, GroundMetric::euclidean()};
    const WorstCaseResult primal = worst_case_primal(ball, inst.loss, inst.grid);
    if (!verify_support_structure(primal, inst.center, tol)) {
      report.failures.push_back({seed, "worst case violates the n+1 / single-split structure"});
    }
  }
  return report;
}

SuiteReport run_equal_weight_suite(int instances, double tol, std::uint64_t seed0) {
  SuiteReport report{"equal_weight", instances, tol, {}};
  for (int k = 0; k < instances; ++k) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(k);
    const WorstCaseInstance inst = make_instance(seed, true);
    WassersteinBall ball{inst.center, inst.epsilon, 1.0, GroundMetric::euclidean()};
    const WorstCaseResult primal = worst_case_primal(ball, inst.loss, inst.grid);
    const auto [value, relocations] = worst_case_equal_weight(ball, inst.loss, inst.grid);
    const double gap = std::abs(primal.value - value);
    if (gap > tol) {
      report.failures.push_back({seed, "equal-weight value differs from the primal by " + fmt(gap)});
    }
  }
  return report;
}

SuiteReport run_ordering_suite(int replications, const std::vector<double>& betas,
                               std::uint64_t seed0) {
  SuiteReport report{"ordering", replications, 0.0, {}};
  const SyntheticProblem prob = SyntheticProblem::mean_estimation({0.0, 1.0}, {0.5, 0.5});
  const int n = 8;
  const double eps = 0.3;
  for (int r = 0; r < replications; ++r) {
    const std::uint64_t seed = SplitMix64::derive(seed0 ^ 0x0DD1, static_cast<std::uint64_t>(r));
    std::vector<double> xs;
    {
      SyntheticSampler sampler(prob.p0, seed);
      for (int i = 0; i < n; ++i) xs.push_back(sampler.next().coordinates(0));
    }
    for (double beta : betas) {
      const FamilyMinima fam = family_minima(xs, beta, eps, prob.domain_lo, prob.domain_hi);
      if (!(fam.saa <= fam.bdr && fam.bdr <= fam.dro)) {
        report.failures.push_back(
            {seed, "ordering broken at beta " + fmt(beta) + ": " + fmt(fam.saa) + " / " +
                       fmt(fam.bdr) + " / " + fmt(fam.dro)});
      }
    }
  }
  return report;
}

SuiteReport run_phi_suite(int instances, double tol, std::uint64_t seed0) {
  SuiteReport report{"phi", instances, tol, {}};
  for (int k = 0; k < instances; ++k) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(k);
    SplitMix64 gen(SplitMix64::derive(0xF1, seed));
    Eigen::Vector3d w(gen.next_double() + 0.1, gen.next_double() + 0.1,
                      gen.next_double() + 0.1);
    w /= w.sum();
    w(2) = 1.0 - w(0) - w(1);
    const Eigen::Vector3d h(3.0 * gen.next_double(), 3.0 * gen.next_double(),
                            3.0 * gen.next_double());
    const double eps = 0.02 + 0.4 * gen.next_double();
    PhiBall ball;
    ball.center_weights = w;
    ball.radius = eps;
    const auto [value, mu] = phi_worst_case(ball, h);

    // two-stage grid search over the 2-simplex: coarse 1e-3 sweep, then a
    // 1e-5 refinement near the coarse maximizer so discretization error
    // stays far below the comparison tolerance
    double brute = -kInf;
    double best_a = 0.0, best_b = 0.0;
    for (double a = 0.0; a <= 1.0 + 1e-12; a += 1e-3) {
      for (double b = 0.0; a + b <= 1.0 + 1e-12; b += 1e-3) {
        const Eigen::Vector3d mu_g(a, b, std::max(0.0, 1.0 - a - b));
        if (kl_divergence(mu_g, w) > eps) continue;
        if (mu_g.dot(h) > brute) {
          brute = mu_g.dot(h);
          best_a = a;
          best_b = b;
        }
      }
    }
    const auto refine_near = [&](double ca, double cb) {
      for (double a = std::max(0.0, ca - 3e-3); a <= ca + 3e-3; a += 1e-5) {
        for (double b = std::max(0.0, cb - 3e-3); a + b <= 1.0 + 1e-12 && b <= cb + 3e-3;
             b += 1e-5) {
          const Eigen::Vector3d mu_g(a, b, std::max(0.0, 1.0 - a - b));
          if (kl_divergence(mu_g, w) > eps) continue;
          brute = std::max(brute, mu_g.dot(h));
        }
      }
    };
    refine_near(best_a, best_b);
    refine_near(mu(0), mu(1));  // aim the magnifier at the candidate too
    if (kl_divergence(mu, w) > eps + 1e-9) {
      report.failures.push_back({seed, "tilted weights infeasible: KL " +
                                           fmt(kl_divergence(mu, w)) + " > " + fmt(eps)});
    } else if (std::abs(value - brute) > tol) {
      report.failures.push_back({seed, "tilted value " + fmt(value) +
                                           " vs grid search " + fmt(brute)});
    }
  }
  return report;
}

SuiteReport run_lemma1_suite(int instances, double tol, std::uint64_t seed0) {
  SuiteReport report{"lemma1", instances, tol, {}};
  for (int k = 0; k < instances; ++k) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(k);
    SplitMix64 gen(SplitMix64::derive(0x1E4A, seed));
    FiniteMixture mix;
    const int n_comp = 1 + static_cast<int>(gen.next_below(4));
    Eigen::VectorXd mw(n_comp);
    for (int c = 0; c < n_comp; ++c) mw(c) = gen.next_double() + 0.01;
    mix.mixing_weights = mw / mw.sum();
    mix.mixing_weights(n_comp - 1) = 1.0 - mix.mixing_weights.head(n_comp - 1).sum();
    for (int c = 0; c < n_comp; ++c) {
      DiscreteDistribution comp;
      const int n_atoms = 1 + static_cast<int>(gen.next_below(6));
      Eigen::VectorXd w(n_atoms);
      for (int j = 0; j < n_atoms; ++j) {
        comp.atoms.push_back(
            SamplePoint::scalar(static_cast<double>(gen.next_below(5)) / 5.0));
        w(j) = gen.next_double() + 0.01;
      }
      comp.weights = w / w.sum();
      comp.weights(n_atoms - 1) = 1.0 - comp.weights.head(n_atoms - 1).sum();
      mix.components.push_back(comp);
    }
    const double a1 = 5.0 * gen.next_double();
    const auto h = [a1](const SamplePoint& p) {
      return std::cos(a1 * p.coordinates(0)) + p.coordinates(0);
    };
    const DiscreteDistribution mean = mean_distribution(mix);
    double direct = 0.0;
    for (int c = 0; c < n_comp; ++c) {
      direct += mix.mixing_weights(c) * expectation(mix.components[c], h);
    }
    const double gap = std::abs(expectation(mean, h) - direct);
    if (gap > tol) {
      report.failures.push_back({seed, "mixture identity off by " + fmt(gap)});
    }
  }
  return report;
}

}  // namespace bdr
