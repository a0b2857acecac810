#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace bdr {

// A point of the sample space: coordinates in R^m plus an optional +-1 label
// for supervised data pairs.
struct SamplePoint {
  Eigen::VectorXd coordinates;
  std::optional<int> label;

  SamplePoint() = default;
  explicit SamplePoint(Eigen::VectorXd coords, std::optional<int> lab = std::nullopt)
      : coordinates(std::move(coords)), label(lab) {}

  static SamplePoint scalar(double v, std::optional<int> lab = std::nullopt) {
    Eigen::VectorXd c(1);
    c(0) = v;
    return SamplePoint(std::move(c), lab);
  }

  // Exact coordinate-and-label equality; near-duplicates stay distinct.
  bool same_atom(const SamplePoint& other) const {
    if (label != other.label) return false;
    if (coordinates.size() != other.coordinates.size()) return false;
    for (Eigen::Index k = 0; k < coordinates.size(); ++k) {
      if (coordinates(k) != other.coordinates(k)) return false;
    }
    return true;
  }
};

// Finitely supported distribution: atoms with a probability weight vector.
struct DiscreteDistribution {
  std::vector<SamplePoint> atoms;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return weights.size(); }
  Eigen::Index dimension() const {
    return atoms.empty() ? 0 : atoms.front().coordinates.size();
  }

  // Nonnegative weights summing to 1 within 1e-12; sizes consistent.
  void validate() const;
};

struct FiniteMixture {
  std::vector<DiscreteDistribution> components;
  Eigen::VectorXd mixing_weights;

  void validate() const;
};

// Uniform weights 1/n on the given points, in order; duplicates are kept as
// distinct atoms.  Throws std::invalid_argument on an empty list.
DiscreteDistribution empirical_from_samples(const std::vector<SamplePoint>& samples);

// The mean of the mixture as a single distribution on the atom union: the
// weight of each atom is sum_k mixing_weight_k * component_k's weight on it.
// Atoms are merged only under exact coordinate-and-label equality.
DiscreteDistribution mean_distribution(const FiniteMixture& mix);

using LossFn = std::function<double(const SamplePoint&)>;

// sum_j mu_j h(xi_j); throws std::domain_error naming the atom index when h
// evaluates to a non-finite value.
double expectation(const DiscreteDistribution& dist, const LossFn& h);

}  // namespace bdr
