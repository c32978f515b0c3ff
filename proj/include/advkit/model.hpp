#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "json.hpp"
#include "linalg.hpp"
#include "random.hpp"

namespace advkit {

struct AffineLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }

  bool operator==(const AffineLayer&) const = default;
};

struct ReluLayer {
  bool operator==(const ReluLayer&) const = default;
};

using Layer = std::variant<AffineLayer, ReluLayer>;

/// Feed-forward stack of affine and ReLU layers mapping R^m to C logits.
/// Immutable once constructed.
class Classifier {
 public:
  Classifier(std::size_t input_dim, std::vector<Layer> layers) : input_dim_(input_dim), layers_(std::move(layers)) {
    if (input_dim_ == 0) throw Error(ErrorKind::validation, "classifier input dimension must be >= 1");
    std::size_t width = input_dim_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (const auto* a = std::get_if<AffineLayer>(&layers_[i])) {
        if (a->in_dim() != width)
          throw Error(ErrorKind::validation, "layer " + std::to_string(i) + " expects width " +
                                                 std::to_string(a->in_dim()) + ", got " + std::to_string(width));
        if (a->bias.size() != a->out_dim() || a->weight.data.size() != a->out_dim() * a->in_dim())
          throw Error(ErrorKind::validation, "layer " + std::to_string(i) + " has inconsistent affine shapes");
        if (!all_finite(a->weight.data) || !all_finite(a->bias))
          throw Error(ErrorKind::validation, "layer " + std::to_string(i) + " has non-finite parameters");
        width = a->out_dim();
      }
    }
    if (layers_.empty()) throw Error(ErrorKind::validation, "classifier has no layers");
    num_classes_ = width;
    if (num_classes_ < 2) throw Error(ErrorKind::validation, "classifier needs at least 2 classes");
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_classes() const { return num_classes_; }
  const std::vector<Layer>& layers() const { return layers_; }

  bool operator==(const Classifier&) const = default;

 private:
  std::size_t input_dim_;
  std::size_t num_classes_ = 0;
  std::vector<Layer> layers_;
};

namespace detail {

inline void check_input(const Classifier& model, std::span<const double> x) {
  if (x.size() != model.input_dim())
    throw Error(ErrorKind::input_shape, "input has length " + std::to_string(x.size()) + ", model expects " +
                                            std::to_string(model.input_dim()));
}

inline void check_class(const Classifier& model, std::size_t j) {
  if (j >= model.num_classes())
    throw Error(ErrorKind::class_index,
                "class " + std::to_string(j) + " outside [0, " + std::to_string(model.num_classes()) + ")");
}

inline Vector apply_layer(const AffineLayer& a, std::span<const double> in) {
  Vector out(a.bias);
  for (std::size_t r = 0; r < a.out_dim(); ++r) out[r] += dot(a.weight.row(r), in);
  return out;
}

inline Vector apply_layer(const ReluLayer&, std::span<const double> in) {
  Vector out(in.begin(), in.end());
  for (double& v : out) v = std::max(v, 0.0);
  return out;
}

/// Activations entering each layer plus the final output.
struct Tape {
  std::vector<Vector> inputs;
  Vector output;
};

inline Tape record(const Classifier& model, std::span<const double> x) {
  Tape tape;
  tape.inputs.reserve(model.layers().size());
  Vector cur(x.begin(), x.end());
  for (const Layer& layer : model.layers()) {
    Vector next = std::visit([&](const auto& l) { return apply_layer(l, cur); }, layer);
    tape.inputs.push_back(std::move(cur));
    cur = std::move(next);
  }
  tape.output = std::move(cur);
  return tape;
}

/// Vector-Jacobian product: pulls an output cotangent back to the input.
/// ReLU subgradient at 0 is 0.
inline Vector pullback(const Classifier& model, const Tape& tape, Vector seed) {
  const auto& layers = model.layers();
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Vector& in = tape.inputs[i];
    if (const auto* a = std::get_if<AffineLayer>(&layers[i])) {
      Vector g(a->in_dim(), 0.0);
      for (std::size_t r = 0; r < a->out_dim(); ++r)
        if (seed[r] != 0.0) axpy(seed[r], a->weight.row(r), g);
      seed = std::move(g);
    } else {
      for (std::size_t c = 0; c < seed.size(); ++c)
        if (!(in[c] > 0.0)) seed[c] = 0.0;
    }
  }
  return seed;
}

inline Vector softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
  for (double& v : p) v /= z;
  return p;
}

}  // namespace detail

/// F(x).
inline Vector forward_logits(const Classifier& model, std::span<const double> x) {
  detail::check_input(model, x);
  return detail::record(model, x).output;
}

/// Class indices ordered by descending logit; equal logits keep ascending index order.
inline std::vector<std::size_t> sort_logits(std::span<const double> logits) {
  std::vector<std::size_t> p(logits.size());
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::stable_sort(p.begin(), p.end(), [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  return p;
}

inline std::vector<std::size_t> predict_sorted(const Classifier& model, std::span<const double> x) {
  return sort_logits(forward_logits(model, x));
}

/// argmax F(x) under the same tie-break as predict_sorted.
inline std::size_t predict(const Classifier& model, std::span<const double> x) {
  const Vector logits = forward_logits(model, x);
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

/// True iff `label` is among the first k entries of the sorted prediction.
inline bool in_top_k(std::span<const double> logits, std::size_t label, std::size_t k) {
  // Rank of `label` = number of classes that sort ahead of it.
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (logits[i] > logits[label] || (logits[i] == logits[label] && i < label)) ++ahead;
  return ahead < k;
}

/// grad_x F_j(x) by reverse-mode differentiation.
inline Vector logit_input_gradient(const Classifier& model, std::span<const double> x, std::size_t j) {
  detail::check_input(model, x);
  detail::check_class(model, j);
  const auto tape = detail::record(model, x);
  Vector seed(model.num_classes(), 0.0);
  seed[j] = 1.0;
  return detail::pullback(model, tape, std::move(seed));
}

/// Logits together with every logit's input gradient (row j = grad_x F_j), from one forward pass.
struct LogitJacobian {
  Vector logits;
  Matrix jacobian;  // C x m
};

inline LogitJacobian logit_jacobian(const Classifier& model, std::span<const double> x) {
  detail::check_input(model, x);
  const auto tape = detail::record(model, x);
  LogitJacobian out{tape.output, Matrix(model.num_classes(), model.input_dim())};
  for (std::size_t j = 0; j < model.num_classes(); ++j) {
    Vector seed(model.num_classes(), 0.0);
    seed[j] = 1.0;
    const Vector g = detail::pullback(model, tape, std::move(seed));
    std::copy(g.begin(), g.end(), out.jacobian.row(j).begin());
  }
  return out;
}

struct LossGradient {
  double loss = 0.0;
  Vector grad;
};

/// Softmax cross-entropy against class y and its input gradient.
inline LossGradient loss_and_input_gradient(const Classifier& model, std::span<const double> x, std::size_t y) {
  detail::check_input(model, x);
  detail::check_class(model, y);
  const auto tape = detail::record(model, x);
  const Vector& z = tape.output;
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  const double loss = std::max(0.0, mx + std::log(sum) - z[y]);
  Vector seed = detail::softmax(z);
  seed[y] -= 1.0;
  return {loss, detail::pullback(model, tape, std::move(seed))};
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::validation, "learning_rate must be > 0");
    if (batch_size == 0) throw Error(ErrorKind::validation, "batch_size must be >= 1");
  }
};

/// Affine layers of the given widths (first = m, last = C) with ReLU between them,
/// weights uniform in +-1/sqrt(fan_in).
inline Classifier init_classifier(std::span<const std::size_t> widths, std::uint64_t seed) {
  if (widths.size() < 2) throw Error(ErrorKind::validation, "architecture needs at least input and output widths");
  Rng rng(derive_seed(seed, "init"));
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i], out = widths[i + 1];
    if (in == 0 || out == 0) throw Error(ErrorKind::validation, "layer widths must be positive");
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    AffineLayer a{Matrix(out, in), Vector(out)};
    for (double& w : a.weight.data) w = rng.uniform(-scale, scale);
    for (double& b : a.bias) b = rng.uniform(-scale, scale);
    layers.emplace_back(std::move(a));
    if (i + 2 < widths.size()) layers.emplace_back(ReluLayer{});
  }
  return Classifier(widths.front(), std::move(layers));
}

inline double accuracy(const Classifier& model, const LabeledDataset& data) {
  if (data.empty()) throw Error(ErrorKind::data, "accuracy of an empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += predict(model, data.inputs[i]) == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

struct TrainedModel {
  Classifier model;
  double train_accuracy = 0.0;
};

/// Plain minibatch SGD on softmax cross-entropy. Deterministic given cfg.seed.
inline TrainedModel train_classifier(const LabeledDataset& data, std::span<const std::size_t> widths,
                                     const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorKind::data, "cannot train on an empty dataset");
  data.validate();
  if (widths.empty() || widths.front() != data.dim())
    throw Error(ErrorKind::validation, "architecture input width does not match data dimension");
  if (widths.back() != data.num_classes)
    throw Error(ErrorKind::label, "architecture output width " + std::to_string(widths.back()) +
                                      " does not match " + std::to_string(data.num_classes) + " classes");

  Classifier initial = init_classifier(widths, cfg.seed);
  std::vector<Layer> layers = initial.layers();
  Rng order_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const Classifier current(data.dim(), layers);
      std::vector<Layer> grads;
      for (const Layer& l : layers) {
        if (const auto* a = std::get_if<AffineLayer>(&l))
          grads.emplace_back(AffineLayer{Matrix(a->out_dim(), a->in_dim()), Vector(a->out_dim(), 0.0)});
        else
          grads.emplace_back(ReluLayer{});
      }
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        const auto tape = detail::record(current, data.inputs[idx]);
        Vector g = detail::softmax(tape.output);
        g[data.labels[idx]] -= 1.0;
        for (std::size_t i = layers.size(); i-- > 0;) {
          const Vector& in = tape.inputs[i];
          if (const auto* a = std::get_if<AffineLayer>(&layers[i])) {
            auto& ga = std::get<AffineLayer>(grads[i]);
            for (std::size_t r = 0; r < a->out_dim(); ++r) {
              if (g[r] == 0.0) continue;
              axpy(g[r], in, ga.weight.row(r));
              ga.bias[r] += g[r];
            }
            if (i == 0) break;
            Vector next(a->in_dim(), 0.0);
            for (std::size_t r = 0; r < a->out_dim(); ++r)
              if (g[r] != 0.0) axpy(g[r], a->weight.row(r), next);
            g = std::move(next);
          } else {
            for (std::size_t c = 0; c < g.size(); ++c)
              if (!(in[c] > 0.0)) g[c] = 0.0;
          }
        }
      }
      const double step = cfg.learning_rate / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < layers.size(); ++i) {
        if (auto* a = std::get_if<AffineLayer>(&layers[i])) {
          const auto& ga = std::get<AffineLayer>(grads[i]);
          axpy(-step, ga.weight.data, a->weight.data);
          axpy(-step, ga.bias, a->bias);
        }
      }
    }
  }
  Classifier trained(data.dim(), std::move(layers));
  const double acc = accuracy(trained, data);
  return {std::move(trained), acc};
}

// ---------------------------------------------------------------------------
// Serialization: {"format":"advkit-model-v1","input_dim":m,"num_classes":C,"layers":[...]}

inline constexpr std::string_view kModelFormat = "advkit-model-v1";

inline nlohmann::json to_json(const Classifier& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& l : model.layers()) {
    if (const auto* a = std::get_if<AffineLayer>(&l)) {
      nlohmann::json w = nlohmann::json::array();
      for (std::size_t r = 0; r < a->out_dim(); ++r) {
        const auto row = a->weight.row(r);
        w.push_back(Vector(row.begin(), row.end()));
      }
      layers.push_back({{"kind", "affine"}, {"w", std::move(w)}, {"b", a->bias}});
    } else {
      layers.push_back({{"kind", "relu"}});
    }
  }
  return {{"format", kModelFormat},
          {"input_dim", model.input_dim()},
          {"num_classes", model.num_classes()},
          {"layers", std::move(layers)}};
}

inline Classifier classifier_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != kModelFormat)
      throw Error(ErrorKind::format, "expected model format '" + std::string(kModelFormat) + "'");
    const auto m = j.at("input_dim").get<std::size_t>();
    std::vector<Layer> layers;
    for (const auto& lj : j.at("layers")) {
      const auto kind = lj.at("kind").get<std::string>();
      if (kind == "relu") {
        layers.emplace_back(ReluLayer{});
      } else if (kind == "affine") {
        const auto rows = lj.at("w").get<std::vector<Vector>>();
        AffineLayer a;
        a.bias = lj.at("b").get<Vector>();
        a.weight = Matrix(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (rows[r].size() != a.weight.cols) throw Error(ErrorKind::format, "ragged weight matrix");
          std::copy(rows[r].begin(), rows[r].end(), a.weight.row(r).begin());
        }
        layers.emplace_back(std::move(a));
      } else {
        throw Error(ErrorKind::format, "unknown layer kind '" + kind + "'");
      }
    }
    Classifier model(m, std::move(layers));
    if (model.num_classes() != j.at("num_classes").get<std::size_t>())
      throw Error(ErrorKind::format, "num_classes does not match the final layer width");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("malformed model JSON: ") + e.what());
  }
}

inline void save_classifier(const Classifier& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << to_json(model).dump() << '\n';
}

inline Classifier load_classifier(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path + ": " + e.what());
  }
  return classifier_from_json(j);
}

}  // namespace advkit
