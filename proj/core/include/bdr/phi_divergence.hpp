#pragma once

#include <Eigen/Dense>
#include <utility>

namespace bdr {

enum class PhiGenerator { KL };  // phi(t) = t log t

// phi-divergence ball on a fixed support: weight vectors mu with
// F_phi(mu || center_weights) <= radius.  Center weights must be strictly
// positive so absolute continuity is meaningful.
struct PhiBall {
  Eigen::VectorXd center_weights;
  double radius = 0.0;
  PhiGenerator phi = PhiGenerator::KL;

  void validate() const;
};

// sum_i mu_i log(mu_i / mubar_i), with 0 log 0 = 0.
double kl_divergence(const Eigen::VectorXd& mu, const Eigen::VectorXd& mubar);

// max_mu sum_i mu_i h_i  s.t.  KL(mu || center) <= radius, mu on the simplex.
// Solved through the exponentially tilted family mu_i ~ mubar_i exp(h_i /
// lambda) with lambda bisected until the KL constraint is tight (or slack at
// the concentration limit).  Returns the value and the maximizing weights.
std::pair<double, Eigen::VectorXd> phi_worst_case(const PhiBall& ball,
                                                  const Eigen::VectorXd& losses);

}  // namespace bdr
