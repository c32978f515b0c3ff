#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "json.hpp"
#include "linalg.hpp"
#include "metrics.hpp"
#include "random.hpp"

namespace advkit {

// ---------------------------------------------------------------------------
// Synthetic Gaussian blobs

/// Seeded class centers with pairwise distance >= 6 * spread, drawn uniformly from
/// the cube [-R, R]^m with R = 6 * spread * C^(1/m), by rejection.
inline std::vector<Vector> blob_centers(std::uint64_t seed, std::size_t num_classes, std::size_t dim, double spread) {
  constexpr int kMaxAttempts = 10000;
  Rng rng(derive_seed(seed, "blob-centers"));
  const double half = 6.0 * spread * std::pow(static_cast<double>(num_classes), 1.0 / static_cast<double>(dim));
  const double min_dist = 6.0 * spread;
  std::vector<Vector> centers;
  for (std::size_t c = 0; c < num_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Vector cand(dim);
      for (double& x : cand) x = rng.uniform(-half, half);
      placed = std::all_of(centers.begin(), centers.end(),
                           [&](const Vector& o) { return norm_l2(sub(cand, o)) >= min_dist; });
      if (placed) centers.push_back(std::move(cand));
    }
    if (!placed)
      throw Error(ErrorKind::generation, "could not place center " + std::to_string(c) + " after " +
                                             std::to_string(kMaxAttempts) + " attempts");
  }
  return centers;
}

/// n samples per class of center_c + N(0, spread^2 I), class-major order.
inline LabeledDataset gen_blobs(std::uint64_t seed, std::size_t num_classes, std::size_t dim, std::size_t per_class,
                                double spread) {
  if (num_classes < 2) throw Error(ErrorKind::validation, "blobs need at least 2 classes");
  if (dim < 2) throw Error(ErrorKind::validation, "blobs need dimension >= 2");
  if (per_class < 1) throw Error(ErrorKind::validation, "blobs need at least 1 sample per class");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw Error(ErrorKind::validation, "blob spread must be > 0");

  const auto centers = blob_centers(seed, num_classes, dim, spread);
  Rng rng(derive_seed(seed, "blob-samples"));
  LabeledDataset data;
  data.name = "blobs";
  data.seed = seed;
  data.num_classes = num_classes;
  data.inputs.reserve(num_classes * per_class);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      Vector x = centers[c];
      for (double& v : x) v += spread * rng.normal();
      data.inputs.push_back(std::move(x));
      data.labels.push_back(c);
    }
  }
  return data;
}

/// Maps each input through a seeded random isometry R^m -> R^M (orthonormal columns,
/// Gram-Schmidt on Gaussian draws), then adds N(0, noise^2 I) in the ambient space.
inline LabeledDataset embed_isometric(const LabeledDataset& data, std::size_t ambient_dim, double noise,
                                      std::uint64_t seed) {
  const std::size_t m = data.dim();
  if (ambient_dim < m)
    throw Error(ErrorKind::validation, "ambient dimension " + std::to_string(ambient_dim) +
                                           " is below the input dimension " + std::to_string(m));
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw Error(ErrorKind::validation, "embedding noise must be >= 0");

  Rng basis_rng(derive_seed(seed, "embed-basis"));
  std::vector<Vector> basis;
  while (basis.size() < m) {
    Vector v(ambient_dim);
    for (double& x : v) x = basis_rng.normal();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) axpy(-dot(v, b), b, v);
    const double n = norm_l2(v);
    if (n > 1e-8) basis.push_back(scaled(v, 1.0 / n));
  }

  Rng noise_rng(derive_seed(seed, "embed-noise"));
  LabeledDataset out = data;
  out.bounds.reset();
  for (auto& x : out.inputs) {
    Vector y(ambient_dim, 0.0);
    for (std::size_t i = 0; i < m; ++i) axpy(x[i], basis[i], y);
    if (noise > 0.0)
      for (double& v : y) v += noise * noise_rng.normal();
    x = std::move(y);
  }
  return out;
}

// ---------------------------------------------------------------------------
// IDX (big-endian) digit files

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::string& what) {
  if (b.size() < off + 4) throw Error(ErrorKind::length, what + ": truncated header");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

inline void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

inline std::string hex32(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

inline void expect_magic(std::uint32_t found, std::uint32_t expected, const std::string& what) {
  if (found != expected)
    throw Error(ErrorKind::format, what + ": expected magic " + hex32(expected) + ", found " + hex32(found));
}

inline void expect_length(std::size_t actual, std::uint64_t expected, const std::string& what) {
  if (actual != expected)
    throw Error(ErrorKind::length, what + ": expected " + std::to_string(expected) + " bytes, found " +
                                       std::to_string(actual));
}

}  // namespace detail

/// Image geometry recovered from an IDX images file.
struct IdxShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// Parse from in-memory IDX buffers. Pixels are flattened row-major and scaled to [0,1].
inline LabeledDataset parse_idx(const std::vector<std::uint8_t>& images, const std::vector<std::uint8_t>& labels,
                                IdxShape* shape = nullptr) {
  detail::expect_magic(detail::be32(images, 0, "images"), kIdxImagesMagic, "images");
  const std::uint64_t count = detail::be32(images, 4, "images");
  const std::uint64_t rows = detail::be32(images, 8, "images");
  const std::uint64_t cols = detail::be32(images, 12, "images");
  detail::expect_magic(detail::be32(labels, 0, "labels"), kIdxLabelsMagic, "labels");
  const std::uint64_t label_count = detail::be32(labels, 4, "labels");
  if (count != label_count)
    throw Error(ErrorKind::pairing, std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
  if (rows == 0 || cols == 0) throw Error(ErrorKind::format, "images: zero-sized image dimensions");
  const std::uint64_t pixels = rows * cols;
  const std::uint64_t payload = images.size() - 16;
  if (payload % pixels != 0 || payload / pixels != count)
    throw Error(ErrorKind::length, "images: header declares " + std::to_string(count) + " images of " +
                                       std::to_string(pixels) + " pixels, payload has " + std::to_string(payload) +
                                       " bytes");
  detail::expect_length(labels.size(), 8 + count, "labels");

  LabeledDataset data;
  data.name = "idx";
  data.bounds = Bounds{0.0, 1.0};
  data.inputs.reserve(count);
  std::size_t max_label = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    Vector x(pixels);
    for (std::uint64_t p = 0; p < pixels; ++p) x[p] = images[16 + i * pixels + p] / 255.0;
    data.inputs.push_back(std::move(x));
    data.labels.push_back(labels[8 + i]);
    max_label = std::max<std::size_t>(max_label, labels[8 + i]);
  }
  data.num_classes = std::max<std::size_t>(2, max_label + 1);
  if (shape) *shape = {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
  return data;
}

inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                               IdxShape* shape = nullptr) {
  return parse_idx(detail::read_bytes(images_path), detail::read_bytes(labels_path), shape);
}

struct IdxBuffers {
  std::vector<std::uint8_t> images;
  std::vector<std::uint8_t> labels;
};

/// Inverse of parse_idx; values are rounded to the nearest /255 level.
inline IdxBuffers encode_idx(const LabeledDataset& data, IdxShape shape) {
  const std::size_t pixels = shape.rows * shape.cols;
  IdxBuffers out;
  detail::put_be32(out.images, kIdxImagesMagic);
  detail::put_be32(out.images, static_cast<std::uint32_t>(data.size()));
  detail::put_be32(out.images, static_cast<std::uint32_t>(shape.rows));
  detail::put_be32(out.images, static_cast<std::uint32_t>(shape.cols));
  detail::put_be32(out.labels, kIdxLabelsMagic);
  detail::put_be32(out.labels, static_cast<std::uint32_t>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.inputs[i].size() != pixels) throw Error(ErrorKind::input_shape, "sample does not match IDX shape");
    for (double v : data.inputs[i])
      out.images.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    if (data.labels[i] > 255) throw Error(ErrorKind::label, "IDX labels must fit in one byte");
    out.labels.push_back(static_cast<std::uint8_t>(data.labels[i]));
  }
  return out;
}

inline void write_idx(const LabeledDataset& data, IdxShape shape, const std::string& images_path,
                      const std::string& labels_path) {
  auto buffers = encode_idx(data, shape);
  detail::write_bytes(images_path, buffers.images);
  detail::write_bytes(labels_path, buffers.labels);
}

// ---------------------------------------------------------------------------
// Splitting

/// Seeded stratified split. The overall test size is round(N * test_fraction); each
/// class contributes floor(n_c * f) plus at most one extra sample (largest remainder,
/// ties to the lower class index), so per-class proportions are kept within +-1.
inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, double test_fraction,
                                                       std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorKind::validation, "test_fraction must lie in (0, 1)");
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  for (const auto& [c, idx] : by_class)
    if (idx.size() < 2)
      throw Error(ErrorKind::split, "class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                                        " sample(s); need at least 2");
  const auto n = static_cast<double>(data.size());
  const auto total_test = static_cast<std::size_t>(std::llround(n * test_fraction));
  if (total_test == 0 || total_test >= data.size())
    throw Error(ErrorKind::split, "split would leave one side empty");

  std::map<std::size_t, std::size_t> quota;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (const auto& [c, idx] : by_class) {
    const double exact = static_cast<double>(idx.size()) * test_fraction;
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total_test && i < remainders.size(); ++i, ++assigned)
    ++quota[remainders[i].second];

  Rng rng(derive_seed(seed, "split"));
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& [c, idx] : by_class) {
    rng.shuffle(idx);
    const std::size_t q = std::min(quota[c], idx.size() - 1);
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(q));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(q), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {data.select(train_idx), data.select(test_idx)};
}

/// First n samples of a seeded shuffle, kept in original order; used for training-size sweeps.
inline LabeledDataset subsample(const LabeledDataset& data, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "subsample"));
  rng.shuffle(idx);
  idx.resize(std::min(n, idx.size()));
  std::sort(idx.begin(), idx.end());
  return data.select(idx);
}

// ---------------------------------------------------------------------------
// Dataset files

inline constexpr std::string_view kDatasetFormat = "advkit-dataset-v1";

inline nlohmann::json to_json(const LabeledDataset& d) {
  nlohmann::json j{{"format", kDatasetFormat}, {"name", d.name},     {"seed", d.seed},
                   {"num_classes", d.num_classes}, {"labels", d.labels}, {"inputs", d.inputs}};
  j["bounds"] = d.bounds ? nlohmann::json::array({d.bounds->lo, d.bounds->hi}) : nlohmann::json(nullptr);
  return j;
}

inline LabeledDataset dataset_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != kDatasetFormat)
      throw Error(ErrorKind::format, "expected dataset format '" + std::string(kDatasetFormat) + "'");
    LabeledDataset d;
    d.name = j.value("name", std::string{});
    d.seed = j.value("seed", std::uint64_t{0});
    d.num_classes = j.at("num_classes").get<std::size_t>();
    d.labels = j.at("labels").get<std::vector<std::size_t>>();
    d.inputs = j.at("inputs").get<std::vector<Vector>>();
    if (const auto& b = j.at("bounds"); !b.is_null()) d.bounds = Bounds{b.at(0).get<double>(), b.at(1).get<double>()};
    d.validate();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("malformed dataset JSON: ") + e.what());
  }
}

inline void save_dataset(const LabeledDataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << to_json(d).dump() << '\n';
}

inline LabeledDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path + ": " + e.what());
  }
  return dataset_from_json(j);
}

/// Debug export: one row per sample, label first, then the features.
inline void write_dataset_csv(std::ostream& out, const LabeledDataset& d) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << d.labels[i];
    for (double v : d.inputs[i]) out << ',' << format_real(v);
    out << '\n';
  }
}

}  // namespace advkit
