#include "bdr/data_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace bdr {

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

namespace {

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataIoError("cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<unsigned char> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  return bytes;
}

std::uint32_t be32(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);
  if (img.size() < 16) throw TruncatedFileError(images_path + ": header truncated");
  if (lab.size() < 8) throw TruncatedFileError(labels_path + ": header truncated");
  if (be32(img.data()) != 0x00000803u) {
    throw BadMagicError(images_path + ": expected image magic 0x00000803");
  }
  if (be32(lab.data()) != 0x00000801u) {
    throw BadMagicError(labels_path + ": expected label magic 0x00000801");
  }
  const std::uint32_t n_img = be32(img.data() + 4);
  const std::uint32_t rows = be32(img.data() + 8);
  const std::uint32_t cols = be32(img.data() + 12);
  const std::uint32_t n_lab = be32(lab.data() + 4);
  if (n_img != n_lab) {
    throw CountMismatchError(images_path + " has " + std::to_string(n_img) + " images but " +
                             labels_path + " has " + std::to_string(n_lab) + " labels");
  }
  const std::size_t dims = static_cast<std::size_t>(rows) * cols;
  if (img.size() < 16 + static_cast<std::size_t>(n_img) * dims) {
    throw TruncatedFileError(images_path + ": pixel data truncated");
  }
  if (lab.size() < 8 + n_lab) {
    throw TruncatedFileError(labels_path + ": label data truncated");
  }

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n_img), static_cast<Eigen::Index>(dims));
  const unsigned char* px = img.data() + 16;
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
      ds.features(i, j) = static_cast<float>(px[static_cast<std::size_t>(i) * dims +
                                                static_cast<std::size_t>(j)]) /
                          255.0f;
    }
  }
  ds.labels.resize(static_cast<Eigen::Index>(n_lab));
  for (Eigen::Index i = 0; i < ds.labels.size(); ++i) {
    ds.labels(i) = static_cast<int>(lab[8 + static_cast<std::size_t>(i)]);
  }
  ds.source = images_path + ";" + labels_path;
  ds.digest = fnv1a64(img.data(), img.size()) ^ (fnv1a64(lab.data(), lab.size()) << 1);
  return ds;
}

namespace {

void shuffle_indices(std::vector<int>& idx, SplitMix64& gen) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(gen.next_below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

BinaryTask make_binary_task(const Dataset& ds, int positive_digit, int negative_digit,
                            double train_fraction, std::uint64_t seed) {
  if (train_fraction < 0.0 || train_fraction > 1.0) {
    throw std::invalid_argument("make_binary_task: train_fraction outside [0,1]");
  }
  std::vector<int> pool;
  for (Eigen::Index i = 0; i < ds.labels.size(); ++i) {
    if (ds.labels(i) == positive_digit || ds.labels(i) == negative_digit) {
      pool.push_back(static_cast<int>(i));
    }
  }
  bool has_pos = false, has_neg = false;
  for (int i : pool) {
    if (ds.labels(i) == positive_digit) has_pos = true;
    if (ds.labels(i) == negative_digit) has_neg = true;
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("make_binary_task: digit " +
                                std::to_string(has_pos ? negative_digit : positive_digit) +
                                " absent from the dataset");
  }
  SplitMix64 gen(SplitMix64::derive(seed, 0x5B1A));
  shuffle_indices(pool, gen);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(pool.size())));

  BinaryTask task;
  task.positive_digit = positive_digit;
  task.negative_digit = negative_digit;
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const int row = pool[k];
    const int lab = ds.labels(row) == positive_digit ? 1 : -1;
    if (k < n_train) {
      task.train_indices.push_back(row);
      task.train_labels.push_back(lab);
    } else {
      task.test_indices.push_back(row);
      task.test_labels.push_back(lab);
    }
  }
  return task;
}

namespace {

void pick_per_class(const std::vector<int>& idx, const std::vector<int>& labels, int per_class,
                    SplitMix64& gen, std::vector<int>& out_idx, std::vector<int>& out_labels) {
  for (int target : {1, -1}) {
    std::vector<int> members;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (labels[k] == target) members.push_back(static_cast<int>(k));
    }
    if (static_cast<int>(members.size()) < per_class) {
      throw std::invalid_argument("subsample: per_class " + std::to_string(per_class) +
                                  " exceeds the " + std::to_string(members.size()) +
                                  " available rows for label " + std::to_string(target));
    }
    shuffle_indices(members, gen);
    members.resize(static_cast<std::size_t>(per_class));
    std::sort(members.begin(), members.end());  // stable order in the output
    for (int k : members) {
      out_idx.push_back(idx[static_cast<std::size_t>(k)]);
      out_labels.push_back(target);
    }
  }
}

}  // namespace

BinaryTask subsample(const BinaryTask& task, int per_class, std::uint64_t seed,
                     int test_per_class) {
  if (per_class < 1) throw std::invalid_argument("subsample: per_class must be >= 1");
  BinaryTask out;
  out.positive_digit = task.positive_digit;
  out.negative_digit = task.negative_digit;
  SplitMix64 gen(SplitMix64::derive(seed, 0x5B2B));
  pick_per_class(task.train_indices, task.train_labels, per_class, gen, out.train_indices,
                 out.train_labels);
  if (test_per_class < 0) {
    out.test_indices = task.test_indices;
    out.test_labels = task.test_labels;
  } else {
    pick_per_class(task.test_indices, task.test_labels, test_per_class, gen, out.test_indices,
                   out.test_labels);
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXi> materialize(const Dataset& ds,
                                                        const std::vector<int>& indices,
                                                        const std::vector<int>& labels) {
  if (indices.size() != labels.size()) {
    throw std::invalid_argument("materialize: indices and labels length mismatch");
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(indices.size()), ds.features.cols());
  Eigen::VectorXi y(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    x.row(static_cast<Eigen::Index>(k)) =
        ds.features.row(indices[k]).cast<double>();
    y(static_cast<Eigen::Index>(k)) = labels[k];
  }
  return {std::move(x), std::move(y)};
}

namespace {
constexpr char kCacheMagic[4] = {'B', 'D', 'R', 'D'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void save_cache(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataIoError("cannot write " + path);
  out.write(kCacheMagic, 4);
  write_pod(out, kCacheVersion);
  const std::uint64_t n = static_cast<std::uint64_t>(ds.rows());
  const std::uint32_t dims = static_cast<std::uint32_t>(ds.features.cols());
  write_pod(out, n);
  write_pod(out, dims);
  write_pod(out, ds.digest);
  const std::uint32_t srclen = static_cast<std::uint32_t>(ds.source.size());
  write_pod(out, srclen);
  out.write(ds.source.data(), srclen);
  out.write(reinterpret_cast<const char*>(ds.features.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(n) * dims));
  for (Eigen::Index i = 0; i < ds.labels.size(); ++i) {
    const auto lab = static_cast<unsigned char>(ds.labels(i));
    write_pod(out, lab);
  }
}

Dataset load_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataIoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCacheMagic, 4) != 0) {
    throw BadMagicError(path + ": not a BDRD cache file");
  }
  std::uint32_t version = 0;
  read_pod(in, version);
  if (version != kCacheVersion) throw DataIoError(path + ": unsupported cache version");
  std::uint64_t n = 0;
  std::uint32_t dims = 0;
  std::uint64_t digest = 0;
  std::uint32_t srclen = 0;
  read_pod(in, n);
  read_pod(in, dims);
  read_pod(in, digest);
  read_pod(in, srclen);
  Dataset ds;
  ds.source.resize(srclen);
  in.read(ds.source.data(), srclen);
  ds.digest = digest;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dims));
  in.read(reinterpret_cast<char*>(ds.features.data()),
          static_cast<std::streamsize>(sizeof(float) * n * dims));
  ds.labels.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < ds.labels.size(); ++i) {
    unsigned char lab = 0;
    read_pod(in, lab);
    ds.labels(i) = static_cast<int>(lab);
  }
  if (!in) throw TruncatedFileError(path + ": cache truncated");
  return ds;
}

SyntheticSampler::SyntheticSampler(DiscreteDistribution p0, std::uint64_t seed)
    : p0_(std::move(p0)), gen_(seed) {
  p0_.validate();
  cdf_.resize(static_cast<std::size_t>(p0_.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p0_.size(); ++i) {
    acc += p0_.weights(i);
    cdf_[static_cast<std::size_t>(i)] = acc;
  }
  cdf_.back() = 1.0;
}

SamplePoint SyntheticSampler::next() {
  const double u = gen_.next_double();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
      std::distance(cdf_.begin(), it), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  return p0_.atoms[k];
}

std::vector<SamplePoint> SyntheticSampler::draw(int count) {
  std::vector<SamplePoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(next());
  return out;
}

}  // namespace bdr
