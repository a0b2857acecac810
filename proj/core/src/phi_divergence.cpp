#include "bdr/phi_divergence.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bdr {

void PhiBall::validate() const {
  if (center_weights.size() == 0) {
    throw std::invalid_argument("PhiBall: empty center");
  }
  for (Eigen::Index i = 0; i < center_weights.size(); ++i) {
    if (!(center_weights(i) > 0.0)) {
      throw std::invalid_argument("PhiBall: center weight " + std::to_string(i) +
                                  " must be strictly positive");
    }
  }
  if (std::abs(center_weights.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("PhiBall: center weights must sum to 1");
  }
  if (radius < 0.0) throw std::invalid_argument("PhiBall: radius must be >= 0");
}

double kl_divergence(const Eigen::VectorXd& mu, const Eigen::VectorXd& mubar) {
  if (mu.size() != mubar.size()) {
    throw std::invalid_argument("kl_divergence: size mismatch");
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu(i) > 0.0) kl += mu(i) * std::log(mu(i) / mubar(i));
  }
  return std::max(0.0, kl);
}

namespace {

// Tilted weights mu_i ~ mubar_i exp(h_i / lambda), normalized in log space.
Eigen::VectorXd tilted(const Eigen::VectorXd& mubar, const Eigen::VectorXd& h, double lambda) {
  Eigen::VectorXd logw(mubar.size());
  for (Eigen::Index i = 0; i < mubar.size(); ++i) {
    logw(i) = std::log(mubar(i)) + h(i) / lambda;
  }
  const double shift = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - shift).exp();
  return w / w.sum();
}

// Limit of the tilted family as lambda -> 0+: center weights restricted to
// the argmax set of h and renormalized.
Eigen::VectorXd argmax_limit(const Eigen::VectorXd& mubar, const Eigen::VectorXd& h) {
  const double hmax = h.maxCoeff();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(mubar.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (h(i) >= hmax - 1e-14 * (1.0 + std::abs(hmax))) {
      w(i) = mubar(i);
      total += mubar(i);
    }
  }
  return w / total;
}

}  // namespace

std::pair<double, Eigen::VectorXd> phi_worst_case(const PhiBall& ball,
                                                  const Eigen::VectorXd& losses) {
  ball.validate();
  const Eigen::VectorXd& mubar = ball.center_weights;
  if (losses.size() != mubar.size()) {
    throw std::invalid_argument("phi_worst_case: losses length must match center");
  }
  for (Eigen::Index i = 0; i < losses.size(); ++i) {
    if (!std::isfinite(losses(i))) {
      throw std::invalid_argument("phi_worst_case: non-finite loss at index " +
                                  std::to_string(i));
    }
  }
  if (ball.radius == 0.0) {
    return {mubar.dot(losses), mubar};
  }
  const double spread = losses.maxCoeff() - losses.minCoeff();
  if (spread <= 1e-15) {
    return {mubar.dot(losses), mubar};
  }

  // KL of the tilted weights is nonincreasing in lambda: bisect until the
  // constraint is tight.  Below lambda_lo the family has effectively reached
  // the argmax concentration limit.
  const double eps = ball.radius;
  const Eigen::VectorXd limit = argmax_limit(mubar, losses);
  if (kl_divergence(limit, mubar) <= eps + 1e-12) {
    return {limit.dot(losses), limit};  // constraint slack at the concentration limit
  }
  double lo = 1e-12, hi = 1e6;
  // guard: widen hi until KL(hi) <= eps (KL decreasing in lambda)
  while (kl_divergence(tilted(mubar, losses, hi), mubar) > eps && hi < 1e12) hi *= 10.0;
  Eigen::VectorXd mu;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    mu = tilted(mubar, losses, mid);
    const double kl = kl_divergence(mu, mubar);
    if (std::abs(kl - eps) <= 1e-10 || hi - lo <= 1e-12) break;
    if (kl > eps) {
      lo = mid;  // too concentrated, raise lambda
    } else {
      hi = mid;
    }
  }
  mu = tilted(mubar, losses, hi);  // the feasible side of the bracket
  return {mu.dot(losses), mu};
}

}  // namespace bdr
