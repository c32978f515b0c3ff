#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"

namespace advkit {

/// Scalar pixel limits shared by every coordinate of an input.
struct Bounds {
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const Bounds&) const = default;
};

/// A single input together with its (optional) pixel box.
struct InputPoint {
  Vector values;
  std::optional<Bounds> bounds;

  std::size_t size() const { return values.size(); }
};

inline void clamp_to(std::span<double> v, const Bounds& b) {
  for (double& x : v) x = std::clamp(x, b.lo, b.hi);
}

/// Empirical sample of a data distribution. Labels are 0-based class indices.
struct LabeledDataset {
  std::vector<Vector> inputs;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::optional<Bounds> bounds;
  std::string name;
  std::uint64_t seed = 0;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
  std::size_t dim() const { return inputs.empty() ? 0 : inputs.front().size(); }

  InputPoint point(std::size_t i) const { return {inputs[i], bounds}; }

  /// Subset in the order given by `indices`.
  LabeledDataset select(std::span<const std::size_t> indices) const {
    LabeledDataset out;
    out.num_classes = num_classes;
    out.bounds = bounds;
    out.name = name;
    out.seed = seed;
    out.inputs.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
      out.inputs.push_back(inputs.at(i));
      out.labels.push_back(labels.at(i));
    }
    return out;
  }

  /// Throws unless every dataset invariant holds. Empty datasets are allowed here;
  /// operations that need samples check for that themselves.
  void validate() const {
    if (inputs.size() != labels.size())
      throw Error(ErrorKind::pairing, "dataset has " + std::to_string(inputs.size()) + " inputs but " +
                                          std::to_string(labels.size()) + " labels");
    if (bounds && !(bounds->lo < bounds->hi))
      throw Error(ErrorKind::data, "dataset bounds require lo < hi");
    const std::size_t m = dim();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i].size() != m || m == 0)
        throw Error(ErrorKind::input_shape, "sample " + std::to_string(i) + " has inconsistent dimension");
      if (!all_finite(inputs[i]))
        throw Error(ErrorKind::data, "sample " + std::to_string(i) + " has non-finite values");
      if (bounds) {
        for (double x : inputs[i])
          if (x < bounds->lo || x > bounds->hi)
            throw Error(ErrorKind::data, "sample " + std::to_string(i) + " lies outside declared bounds");
      }
      if (labels[i] >= num_classes)
        throw Error(ErrorKind::label, "sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                                          " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
};

}  // namespace advkit
