#pragma once

// Shared generators and independent oracles for the test suites. Nothing in here
// calls back into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "advkit/advkit.hpp"

namespace advkit::testing {

/// Purely affine classifier with weights and bias drawn from N(0,1).
inline Classifier random_affine(Rng& rng, std::size_t m, std::size_t c) {
  AffineLayer a{Matrix(c, m), Vector(c)};
  for (double& w : a.weight.data) w = rng.normal();
  for (double& b : a.bias) b = rng.normal();
  return Classifier(m, {a});
}

/// m -> h -> ... -> c ReLU network with N(0, 1/fan_in) weights.
inline Classifier random_mlp(Rng& rng, std::vector<std::size_t> widths) {
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    AffineLayer a{Matrix(widths[i + 1], widths[i]), Vector(widths[i + 1])};
    const double s = 1.0 / std::sqrt(static_cast<double>(widths[i]));
    for (double& w : a.weight.data) w = s * rng.normal();
    for (double& b : a.bias) b = 0.3 * rng.normal();
    layers.emplace_back(std::move(a));
    if (i + 2 < widths.size()) layers.emplace_back(ReluLayer{});
  }
  return Classifier(widths.front(), std::move(layers));
}

inline Vector random_vector(Rng& rng, std::size_t m, double scale = 1.0) {
  Vector v(m);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

/// Straight-line evaluation of a classifier via its JSON form: nested loops over
/// raw weight arrays, no shared code with forward_logits.
inline std::vector<double> reference_logits(const Classifier& model, const std::vector<double>& x) {
  const auto j = to_json(model);
  std::vector<double> cur = x;
  for (const auto& layer : j["layers"]) {
    if (layer["kind"] == "relu") {
      for (double& v : cur) v = v > 0.0 ? v : 0.0;
      continue;
    }
    const auto& w = layer["w"];
    const auto& b = layer["b"];
    std::vector<double> next(w.size());
    for (std::size_t r = 0; r < w.size(); ++r) {
      double acc = b[r].get<double>();
      for (std::size_t c = 0; c < cur.size(); ++c) acc += w[r][c].get<double>() * cur[c];
      next[r] = acc;
    }
    cur = std::move(next);
  }
  return cur;
}

/// Central finite differences of a scalar function.
template <typename F>
std::vector<double> finite_difference(F&& f, const std::vector<double>& x, double h = 1e-5) {
  std::vector<double> g(x.size());
  std::vector<double> xp = x, xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

/// Max relative error, components below `floor` in magnitude compared absolutely.
inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    const double err = std::abs(a[i] - b[i]);
    worst = std::max(worst, scale < floor ? err : err / scale);
  }
  return worst;
}

/// Reference descending argsort by selection, ties to the lower index.
inline std::vector<std::size_t> reference_argsort(const std::vector<double>& v) {
  std::vector<std::size_t> remaining(v.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<std::size_t> out;
  while (!remaining.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < remaining.size(); ++i)
      if (v[remaining[i]] > v[remaining[best]]) best = i;
    out.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return out;
}

/// Reference Top-k membership by re-sorting.
inline bool reference_in_top_k(const std::vector<double>& logits, std::size_t label, std::size_t k) {
  const auto p = reference_argsort(logits);
  return std::find(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(k), label) != p.begin() + static_cast<std::ptrdiff_t>(k);
}

/// Affine model F(x) = W x + b read straight from its only layer.
struct AffineView {
  std::vector<std::vector<double>> w;
  std::vector<double> b;

  explicit AffineView(const Classifier& model) {
    const auto j = to_json(model);
    w = j["layers"][0]["w"].get<std::vector<std::vector<double>>>();
    b = j["layers"][0]["b"].get<std::vector<double>>();
  }

  std::vector<double> logits(const std::vector<double>& x) const {
    std::vector<double> out(b);
    for (std::size_t r = 0; r < w.size(); ++r)
      for (std::size_t c = 0; c < x.size(); ++c) out[r] += w[r][c] * x[c];
    return out;
  }
};

/// Brute-force minimum linear boundary distance |f_i| / ||w_i||_2 over i != true.
inline double brute_force_min_distance(const AffineView& f, const std::vector<double>& x, std::size_t true_label) {
  const auto z = f.logits(x);
  double best = INFINITY;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i == true_label) continue;
    double n2 = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) n2 += (f.w[i][c] - f.w[true_label][c]) * (f.w[i][c] - f.w[true_label][c]);
    best = std::min(best, std::abs(z[i] - z[true_label]) / std::sqrt(n2));
  }
  return best;
}

/// Closed-form bisector step on an affine model for a frozen class window:
/// w_i = W_{p_i} - W_true, f_i = F_{p_i} - F_true over the first k non-true sorted classes.
struct BisectorOracle {
  std::vector<double> step;
  double f_b = 0.0;
  std::vector<double> w_b;
  std::vector<std::size_t> classes;
};

inline BisectorOracle bisector_oracle(const AffineView& f, const std::vector<double>& x, std::size_t true_label,
                                      std::size_t k, Norm norm) {
  const auto z = f.logits(x);
  const auto p = reference_argsort(z);
  const std::size_t m = x.size();
  BisectorOracle o;
  o.w_b.assign(m, 0.0);
  for (std::size_t i = 0; i < p.size() && o.classes.size() < k; ++i) {
    if (p[i] == true_label) continue;
    o.classes.push_back(p[i]);
    std::vector<double> w(m);
    double n2 = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      w[c] = f.w[p[i]][c] - f.w[true_label][c];
      n2 += w[c] * w[c];
    }
    const double n = std::sqrt(n2);
    o.f_b += (z[p[i]] - z[true_label]) / n;
    for (std::size_t c = 0; c < m; ++c) o.w_b[c] += w[c] / n;
  }
  double l2 = 0.0, l1 = 0.0;
  for (double v : o.w_b) {
    l2 += v * v;
    l1 += std::abs(v);
  }
  o.step.resize(m);
  for (std::size_t c = 0; c < m; ++c) {
    if (norm == Norm::L2)
      o.step[c] = std::abs(o.f_b) / l2 * o.w_b[c];
    else
      o.step[c] = std::abs(o.f_b) / l1 * ((o.w_b[c] > 0) - (o.w_b[c] < 0));
  }
  return o;
}

/// f_b re-evaluated at a new point with the class window held fixed.
inline double frozen_f_b(const AffineView& f, const std::vector<double>& x, std::size_t true_label,
                         const std::vector<std::size_t>& classes) {
  const auto z = f.logits(x);
  double fb = 0.0;
  for (std::size_t c : classes) {
    double n2 = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) n2 += (f.w[c][d] - f.w[true_label][d]) * (f.w[c][d] - f.w[true_label][d]);
    fb += (z[c] - z[true_label]) / std::sqrt(n2);
  }
  return fb;
}

/// The 2-D hand example: F(x) = (x1, x2, 0).
inline Classifier hand_linear_model() {
  AffineLayer a{Matrix(3, 2), Vector(3, 0.0)};
  a.weight(0, 0) = 1.0;
  a.weight(1, 1) = 1.0;
  return Classifier(2, {a});
}

/// Desk-scale benchmark: 10 blobs in 20-D and a 20-64-10 MLP.
struct BlobFixture {
  LabeledDataset train;
  LabeledDataset test;
  Classifier model;
  double test_accuracy;
};

inline BlobFixture fit_fixture(const LabeledDataset& data, std::uint64_t seed) {
  auto [train, test] = split(data, 0.25, seed);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  cfg.seed = seed;
  const std::vector<std::size_t> widths{data.dim(), 64, data.num_classes};
  auto trained = train_classifier(train, widths, cfg);
  const double acc = accuracy(trained.model, test);
  return {std::move(train), std::move(test), std::move(trained.model), acc};
}

inline BlobFixture make_blob_fixture(std::uint64_t seed, std::size_t per_class = 120) {
  return fit_fixture(gen_blobs(seed, 10, 20, per_class, 1.0), seed);
}

/// 10 blobs on a 10-D subspace of R^200 with small off-subspace noise.
inline BlobFixture make_embedded_fixture(std::uint64_t seed, std::size_t per_class = 120) {
  return fit_fixture(embed_isometric(gen_blobs(seed, 10, 10, per_class, 1.0), 200, 0.1, seed), seed);
}

}  // namespace advkit::testing
