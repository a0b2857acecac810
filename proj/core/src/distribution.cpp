#include "bdr/distribution.hpp"

#include <cmath>
#include <map>
#include <string>

namespace bdr {

namespace {

void check_simplex(const Eigen::VectorXd& w, const char* what) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w(i) >= 0.0)) {
      throw std::invalid_argument(std::string(what) + ": negative weight at index " +
                                  std::to_string(i));
    }
  }
  if (std::abs(w.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument(std::string(what) + ": weights sum to " +
                                std::to_string(w.sum()) + ", expected 1");
  }
}

}  // namespace

void DiscreteDistribution::validate() const {
  if (atoms.empty() || static_cast<Eigen::Index>(atoms.size()) != weights.size()) {
    throw std::invalid_argument("DiscreteDistribution: atoms and weights must have equal length >= 1");
  }
  const Eigen::Index dim = atoms.front().coordinates.size();
  for (const auto& a : atoms) {
    if (a.coordinates.size() != dim) {
      throw std::invalid_argument("DiscreteDistribution: atoms with mixed dimensions");
    }
  }
  check_simplex(weights, "DiscreteDistribution");
}

void FiniteMixture::validate() const {
  if (components.empty() ||
      static_cast<Eigen::Index>(components.size()) != mixing_weights.size()) {
    throw std::invalid_argument("FiniteMixture: components and mixing_weights length mismatch");
  }
  check_simplex(mixing_weights, "FiniteMixture");
  for (const auto& c : components) c.validate();
}

DiscreteDistribution empirical_from_samples(const std::vector<SamplePoint>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("empirical_from_samples: empty sample list");
  }
  DiscreteDistribution d;
  d.atoms = samples;
  d.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(samples.size()),
                                        1.0 / static_cast<double>(samples.size()));
  return d;
}

namespace {

struct AtomKey {
  std::vector<double> coords;
  int label;  // 0 when absent

  bool operator<(const AtomKey& o) const {
    if (label != o.label) return label < o.label;
    return coords < o.coords;  // lexicographic, exact doubles
  }
};

AtomKey key_of(const SamplePoint& p) {
  AtomKey k;
  k.coords.assign(p.coordinates.data(), p.coordinates.data() + p.coordinates.size());
  k.label = p.label.value_or(0);
  return k;
}

}  // namespace

DiscreteDistribution mean_distribution(const FiniteMixture& mix) {
  mix.validate();
  std::vector<SamplePoint> atoms;
  std::vector<double> weights;
  std::map<AtomKey, std::size_t> index;
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    const double wk = mix.mixing_weights(static_cast<Eigen::Index>(k));
    const auto& comp = mix.components[k];
    for (std::size_t j = 0; j < comp.atoms.size(); ++j) {
      const auto key = key_of(comp.atoms[j]);
      auto [it, inserted] = index.try_emplace(key, atoms.size());
      if (inserted) {
        atoms.push_back(comp.atoms[j]);
        weights.push_back(0.0);
      }
      weights[it->second] += wk * comp.weights(static_cast<Eigen::Index>(j));
    }
  }
  DiscreteDistribution out;
  out.atoms = std::move(atoms);
  out.weights = Eigen::Map<Eigen::VectorXd>(weights.data(),
                                            static_cast<Eigen::Index>(weights.size()));
  return out;
}

double expectation(const DiscreteDistribution& dist, const LossFn& h) {
  dist.validate();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < dist.size(); ++j) {
    const double v = h(dist.atoms[static_cast<std::size_t>(j)]);
    if (!std::isfinite(v)) {
      throw std::domain_error("expectation: non-finite loss at atom index " + std::to_string(j));
    }
    sum += dist.weights(j) * v;
  }
  return sum;
}

}  // namespace bdr
