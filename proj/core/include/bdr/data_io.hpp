#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdr/distribution.hpp"
#include "bdr/rng.hpp"

namespace bdr {

struct DataIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagicError : DataIoError {
  using DataIoError::DataIoError;
};
struct TruncatedFileError : DataIoError {
  using DataIoError::DataIoError;
};
struct CountMismatchError : DataIoError {
  using DataIoError::DataIoError;
};

// Image dataset with pixels scaled into [0,1].
struct Dataset {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> features;  // N x dims
  Eigen::VectorXi labels;  // digits 0..9
  std::string source;      // originating paths
  std::uint64_t digest = 0;  // FNV-1a 64 over the raw input bytes

  Eigen::Index rows() const { return features.rows(); }
};

// A binary digit-pair task: row indices into a Dataset plus +-1 labels.
struct BinaryTask {
  int positive_digit = 0;
  int negative_digit = 0;
  std::vector<int> train_indices, test_indices;
  std::vector<int> train_labels, test_labels;  // +-1, aligned with the indices
};

// IDX ingestion (big-endian magic 0x803 for images, 0x801 for labels).
// Throws BadMagicError / TruncatedFileError / CountMismatchError.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Pools every row carrying one of the two digits, shuffles deterministically
// (Fisher-Yates driven by the SplitMix64 counter generator), and assigns
// round(train_fraction * total) rows to the training side.
BinaryTask make_binary_task(const Dataset& ds, int positive_digit, int negative_digit,
                            double train_fraction, std::uint64_t seed);

// Draws per_class training rows per label without replacement (deterministic
// by seed).  test_per_class < 0 keeps the test side unchanged.
BinaryTask subsample(const BinaryTask& task, int per_class, std::uint64_t seed,
                     int test_per_class = -1);

// Materializes (features, labels) for a list of task rows.
std::pair<Eigen::MatrixXd, Eigen::VectorXi> materialize(const Dataset& ds,
                                                        const std::vector<int>& indices,
                                                        const std::vector<int>& labels);

// Little-endian binary cache: header {magic "BDRD", version, N, dims}, then
// float32 features and uint8 labels.  Round-trips bit-identically.
void save_cache(const Dataset& ds, const std::string& path);
Dataset load_cache(const std::string& path);

// I.i.d. draws from a discrete distribution via inverse CDF over the
// counter-based generator.
class SyntheticSampler {
 public:
  SyntheticSampler(DiscreteDistribution p0, std::uint64_t seed);
  SamplePoint next();
  std::vector<SamplePoint> draw(int count);

 private:
  DiscreteDistribution p0_;
  std::vector<double> cdf_;
  SplitMix64 gen_;
};

std::uint64_t fnv1a64(const void* data, std::size_t size);

}  // namespace bdr
