#include "bdr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bdr/data_io.hpp"
#include "bdr/rng.hpp"

namespace bdr {

SyntheticProblem SyntheticProblem::mean_estimation(const std::vector<double>& atoms,
                                                   const std::vector<double>& weights,
                                                   double domain_margin) {
  if (atoms.empty() || atoms.size() != weights.size()) {
    throw std::invalid_argument("mean_estimation: atoms/weights mismatch");
  }
  SyntheticProblem prob;
  prob.p0.atoms.reserve(atoms.size());
  for (double a : atoms) prob.p0.atoms.push_back(SamplePoint::scalar(a));
  prob.p0.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                      static_cast<Eigen::Index>(weights.size()));
  prob.p0.validate();

  double mean = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) mean += weights[i] * atoms[i];
  double var = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double d2 = (atoms[i] - mean) * (atoms[i] - mean);
    var += weights[i] * d2;
    m4 += weights[i] * d2 * d2;
  }
  prob.true_optimum = var;          // v(x0) with x0 = E[xi]
  prob.clt_variance = m4 - var * var;  // Var (x0 - xi)^2
  const double lo = *std::min_element(atoms.begin(), atoms.end());
  const double hi = *std::max_element(atoms.begin(), atoms.end());
  prob.domain_lo = lo - domain_margin;
  prob.domain_hi = hi + domain_margin;
  return prob;
}

double hoeffding_bound(double v_n, long n, const BoundSpec& spec) {
  if (n < 1) throw std::invalid_argument("hoeffding_bound: n must be >= 1");
  if (spec.eta <= 0.0 || spec.eta >= 1.0) {
    throw std::invalid_argument("hoeffding_bound: eta must lie in (0,1)");
  }
  if (spec.sigma <= 0.0) throw std::invalid_argument("hoeffding_bound: sigma must be > 0");
  return v_n + std::sqrt(-2.0 * spec.sigma * spec.sigma * std::log(spec.eta) /
                         static_cast<double>(n));
}

double bdr_generalization_bound(double v_rn, double g_bound, double beta) {
  if (beta < 0.0 || beta > 1.0) {
    throw std::invalid_argument("bdr_generalization_bound: beta outside [0,1]");
  }
  return beta * v_rn + (1.0 - beta) * g_bound;
}

namespace {

struct SampleStats {
  double mean = 0.0;
  double mean_sq = 0.0;
};

SampleStats stats_of(const std::vector<double>& xs) {
  SampleStats s;
  for (double v : xs) {
    s.mean += v;
    s.mean_sq += v * v;
  }
  s.mean /= static_cast<double>(xs.size());
  s.mean_sq /= static_cast<double>(xs.size());
  return s;
}

double empirical_mean_sq(const SampleStats& s, double x) {
  return x * x - 2.0 * x * s.mean + s.mean_sq;
}

// One relocation segment of the concave gain frontier.
struct Segment {
  double rate;      // gain per unit of transport budget
  double capacity;  // budget this segment can absorb (mass * extra distance)
};

}  // namespace

double worst_case_mean_sq_interval(const std::vector<double>& xs, double x, double epsilon,
                                   double lo, double hi) {
  if (xs.empty()) throw std::invalid_argument("worst_case_mean_sq_interval: empty sample");
  const SampleStats s = stats_of(xs);
  const double base = empirical_mean_sq(s, x);
  if (epsilon <= 0.0) return base;

  // For the convex loss (x - xi)^2 the inner maximization relocates mass only
  // to the interval endpoints.  Per atom the (cost, gain) options are the
  // near and far endpoint; their concave frontier decomposes into at most two
  // greedy segments with decreasing rates.
  const double mass = 1.0 / static_cast<double>(xs.size());
  std::vector<Segment> segments;
  segments.reserve(2 * xs.size());
  const double h_lo = (x - lo) * (x - lo);
  const double h_hi = (x - hi) * (x - hi);
  for (double xi : xs) {
    const double h0 = (x - xi) * (x - xi);
    double d1 = xi - lo, g1 = h_lo - h0;    // move to lo
    double d2 = hi - xi, g2 = h_hi - h0;    // move to hi
    if (d1 > d2 || (d1 == d2 && g1 < g2)) {  // order by distance (near first)
      std::swap(d1, d2);
      std::swap(g1, g2);
    }
    if (d2 <= 0.0) continue;  // degenerate interval
    if (d1 <= 0.0 || d2 - d1 <= 1e-300) {
      // only the far move (or both moves at the same distance, g1 >= g2)
      const double g = d1 <= 0.0 ? g2 : std::max(g1, g2);
      const double dd = d1 <= 0.0 ? d2 : d1;
      if (g > 0.0) segments.push_back({g / dd, mass * dd});
      continue;
    }
    const double r_near = g1 / d1;
    const double r_step = (g2 - g1) / (d2 - d1);
    if (r_near >= r_step) {
      // concave frontier: near first, then the upgrade to far
      if (g1 > 0.0) segments.push_back({r_near, mass * d1});
      if (g2 > g1) segments.push_back({r_step, mass * (d2 - d1)});
    } else {
      // near point below the chord: single segment straight to far
      if (g2 > 0.0) segments.push_back({g2 / d2, mass * d2});
    }
  }
  std::sort(segments.begin(), segments.end(),
            [](const Segment& a, const Segment& b) { return a.rate > b.rate; });
  double budget = epsilon;
  double gain = 0.0;
  for (const Segment& seg : segments) {
    if (seg.rate <= 0.0 || budget <= 0.0) break;
    const double used = std::min(budget, seg.capacity);
    gain += used * seg.rate;
    budget -= used;
  }
  return base + gain;
}

namespace {

// Golden-section minimum of a convex function on [lo, hi].
BlendMinimum golden_min_1d(const std::function<double(double)>& f, double lo, double hi) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  const double xtol = 1e-10 * (1.0 + std::abs(hi - lo));
  while (b - a > xtol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  const double x = 0.5 * (a + b);
  return {f(x), x};
}

}  // namespace

BlendMinimum minimize_blend_1d(const std::vector<double>& xs, double beta, double epsilon,
                               double lo, double hi) {
  const SampleStats s = stats_of(xs);
  const auto objective = [&](double x) {
    const double saa = empirical_mean_sq(s, x);
    if (beta == 0.0) return saa;
    const double dro = worst_case_mean_sq_interval(xs, x, epsilon, lo, hi);
    return beta * dro + (1.0 - beta) * saa;
  };
  return golden_min_1d(objective, lo, hi);
}

FamilyMinima family_minima(const std::vector<double>& xs, double beta, double epsilon,
                           double lo, double hi) {
  const SampleStats s = stats_of(xs);
  const BlendMinimum m_saa = minimize_blend_1d(xs, 0.0, epsilon, lo, hi);
  const BlendMinimum m_bdr = minimize_blend_1d(xs, beta, epsilon, lo, hi);
  const BlendMinimum m_dro = minimize_blend_1d(xs, 1.0, epsilon, lo, hi);

  // Cross-evaluate each objective on all three argmins.  Writing the blend
  // as saa + beta * (dro - saa) makes the pointwise chain
  // saa <= blend <= dro exact in floating point, so the elementwise minima
  // inherit the ordering with no tolerance.
  const double cand[3] = {m_saa.x_opt, m_bdr.x_opt, m_dro.x_opt};
  FamilyMinima out;
  out.saa = std::numeric_limits<double>::infinity();
  out.bdr = std::numeric_limits<double>::infinity();
  out.dro = std::numeric_limits<double>::infinity();
  for (double x : cand) {
    const double saa = empirical_mean_sq(s, x);
    const double gap = worst_case_mean_sq_interval(xs, x, epsilon, lo, hi) - saa;
    const double bdr = saa + beta * gap;
    const double dro = saa + gap;
    out.saa = std::min(out.saa, saa);
    out.bdr = std::min(out.bdr, bdr);
    out.dro = std::min(out.dro, dro);
  }
  return out;
}

double w1_distance_1d(const std::vector<double>& sample, const DiscreteDistribution& p0) {
  std::vector<std::pair<double, double>> steps;  // (position, probability)
  const double mass = 1.0 / static_cast<double>(sample.size());
  for (double v : sample) steps.push_back({v, mass});
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    steps.push_back({p0.atoms[static_cast<std::size_t>(i)].coordinates(0), -p0.weights(i)});
  }
  std::sort(steps.begin(), steps.end());
  double dist = 0.0, cdf_gap = 0.0, prev = steps.front().first;
  for (const auto& [pos, dp] : steps) {
    dist += std::abs(cdf_gap) * (pos - prev);
    cdf_gap += dp;
    prev = pos;
  }
  return dist;
}

double pilot_epsilon(const SyntheticProblem& prob, int n, int pilot_reps, std::uint64_t seed) {
  std::vector<double> w1s(static_cast<std::size_t>(pilot_reps));
  for (int r = 0; r < pilot_reps; ++r) {
    SyntheticSampler sampler(prob.p0, SplitMix64::derive(seed, 0xBD0000 + static_cast<std::uint64_t>(r)));
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = sampler.next().coordinates(0);
    w1s[static_cast<std::size_t>(r)] = w1_distance_1d(xs, prob.p0);
  }
  std::sort(w1s.begin(), w1s.end());
  const auto idx = static_cast<std::size_t>(0.95 * (static_cast<double>(w1s.size()) - 1.0));
  return 2.0 * w1s[idx];
}

namespace {

std::vector<double> draw_sample(const SyntheticProblem& prob, int n, std::uint64_t rep_seed) {
  SyntheticSampler sampler(prob.p0, rep_seed);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = sampler.next().coordinates(0);
  return xs;
}

std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (static_cast<double>(v.size()) - 1.0));
  return {mean, sd / std::sqrt(static_cast<double>(v.size()))};
}

}  // namespace

BiasResult bias_experiment(const SyntheticProblem& prob, int n, double beta, double epsilon,
                           int reps, std::uint64_t seed) {
  if (reps < 30) throw std::invalid_argument("bias_experiment: reps must be >= 30");
  BiasResult out;
  out.reps = reps;
  out.rep_values.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    try {
      const auto xs = draw_sample(prob, n, SplitMix64::derive(seed, static_cast<std::uint64_t>(r)));
      const BlendMinimum m = minimize_blend_1d(xs, beta, epsilon, prob.domain_lo, prob.domain_hi);
      out.rep_values.push_back(m.value);
    } catch (const std::exception&) {
      ++out.failures;
    }
  }
  if (out.failures * 100 > reps) {
    throw std::runtime_error("bias_experiment: more than 1% of replications failed (" +
                             std::to_string(out.failures) + "/" + std::to_string(reps) + ")");
  }
  const auto [mean, se] = mean_and_se(out.rep_values);
  out.mean_bias = mean - prob.true_optimum;
  out.std_err = se;
  return out;
}

BetaSearchResult find_unbiased_beta(const SyntheticProblem& prob, int n, double epsilon,
                                    int reps, double tol_se_multiple, std::uint64_t seed) {
  // Common random numbers: the same per-replication seeds for every beta.
  const auto bias_at = [&](double beta) {
    const BiasResult r = bias_experiment(prob, n, beta, epsilon, reps, seed);
    return std::pair<double, double>{r.mean_bias, r.std_err};
  };
  const auto [bias0, se0] = bias_at(0.0);
  const auto [bias1, se1] = bias_at(1.0);
  if (!(bias0 < -tol_se_multiple * se0)) {
    throw std::runtime_error(
        "find_unbiased_beta: no sign change (SAA bias not negative beyond " +
        std::to_string(tol_se_multiple) + " standard errors)");
  }
  if (!(bias1 > tol_se_multiple * se1)) {
    throw std::runtime_error(
        "find_unbiased_beta: no sign change (DRO bias not positive beyond " +
        std::to_string(tol_se_multiple) +
        " standard errors; epsilon too small for positivity)");
  }

  double lo = 0.0, hi = 1.0;
  BetaSearchResult out;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto [bias, se] = bias_at(mid);
    out.beta_star = mid;
    out.bias_at_star = bias;
    out.std_err_at_star = se;
    if (std::abs(bias) <= tol_se_multiple * se) break;
    if (bias < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-6) break;
  }
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  return out;
}

std::vector<ConsistencyRow> consistency_experiment(const SyntheticProblem& prob,
                                                   const std::vector<int>& n_schedule,
                                                   double alpha, double epsilon, int reps,
                                                   std::uint64_t seed) {
  std::vector<ConsistencyRow> rows;
  for (int n : n_schedule) {
    const double beta_n = alpha <= 0.0 ? 0.0 : alpha / (alpha + static_cast<double>(n));
    std::vector<double> errs, values;
    errs.reserve(static_cast<std::size_t>(reps));
    values.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
      const auto xs = draw_sample(
          prob, n, SplitMix64::derive(seed, (static_cast<std::uint64_t>(n) << 20) + static_cast<std::uint64_t>(r)));
      const BlendMinimum m =
          minimize_blend_1d(xs, beta_n, epsilon, prob.domain_lo, prob.domain_hi);
      errs.push_back(std::abs(m.value - prob.true_optimum));
      values.push_back(m.value);
    }
    const auto [mean, se] = mean_and_se(errs);
    rows.push_back({n, beta_n, mean, se, std::move(values)});
  }
  return rows;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_p_value(double d_statistic, int sample_count) {
  const double sn = std::sqrt(static_cast<double>(sample_count));
  const double t = d_statistic * (sn + 0.12 + 0.11 / sn);
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) * t * t);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

CltResult clt_experiment(const SyntheticProblem& prob, int n, int reps, std::uint64_t seed,
                         double alpha, double epsilon) {
  if (prob.clt_variance <= 1e-14) {
    throw std::invalid_argument("clt_experiment: V_v = 0 (degenerate limiting distribution)");
  }
  const double beta_n = alpha <= 0.0 ? 0.0 : alpha / (alpha + static_cast<double>(n));
  const double eps =
      epsilon >= 0.0 ? epsilon
                     : pilot_epsilon(prob, n, 200, SplitMix64::derive(seed, 0x9107));
  CltResult out;
  out.standardized.reserve(static_cast<std::size_t>(reps));
  const double scale = std::sqrt(static_cast<double>(n) / prob.clt_variance);
  for (int r = 0; r < reps; ++r) {
    const auto xs = draw_sample(prob, n, SplitMix64::derive(seed, 0xC17000 + static_cast<std::uint64_t>(r)));
    const BlendMinimum m = minimize_blend_1d(xs, beta_n, eps, prob.domain_lo, prob.domain_hi);
    out.standardized.push_back(scale * (m.value - prob.true_optimum));
  }
  std::sort(out.standardized.begin(), out.standardized.end());
  double d = 0.0;
  const auto m = static_cast<double>(out.standardized.size());
  for (std::size_t i = 0; i < out.standardized.size(); ++i) {
    const double cdf = normal_cdf(out.standardized[i]);
    const double hi = (static_cast<double>(i) + 1.0) / m - cdf;
    const double lo = cdf - static_cast<double>(i) / m;
    d = std::max({d, hi, lo});
  }
  out.ks_statistic = d;
  out.p_value = ks_p_value(d, reps);
  return out;
}

}  // namespace bdr
