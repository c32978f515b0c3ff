#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "attacks.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "json.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "projection.hpp"
#include "random.hpp"

namespace advkit {

enum class InnerAttack { kfool, deepfool };

inline std::string_view to_string(InnerAttack a) { return a == InnerAttack::kfool ? "kfool" : "deepfool"; }

inline InnerAttack parse_inner(std::string_view s) {
  if (s == "kfool") return InnerAttack::kfool;
  if (s == "deepfool") return InnerAttack::deepfool;
  throw Error(ErrorKind::validation, "unknown inner attack '" + std::string(s) + "' (kfool|deepfool)");
}

struct KuapConfig {
  std::size_t k = 1;
  double eps = 0.0;
  Norm norm = Norm::Linf;
  double delta = 0.2;  // stop once the training UFR_k exceeds 1 - delta
  std::size_t max_epochs = 10;
  std::uint64_t shuffle_seed = 0;
  InnerAttack inner_attack = InnerAttack::kfool;
  AttackConfig inner;

  void validate(std::size_t num_classes) const {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::validation, "delta must lie in (0, 1)");
    if (max_epochs < 1) throw Error(ErrorKind::validation, "max_epochs must be >= 1");
    if (!(eps >= 0.0)) throw Error(ErrorKind::validation, "eps must be >= 0");
    AttackConfig probe = inner;
    probe.k = k;
    probe.validate(num_classes);
  }
};

struct UniversalPerturbation {
  Vector v;
  double eps = 0.0;
  Norm norm = Norm::Linf;
  std::size_t k = 1;
  std::size_t epochs_run = 0;
  double train_ufr = 0.0;
  InnerAttack inner_attack = InnerAttack::kfool;
  std::size_t inner_failures = 0;  // inner attacks that did not succeed and were skipped
  std::size_t updates = 0;
};

/// UFR_k: fraction of samples whose clean argmax is outside the Top-k of F(x_i + v).
inline double evaluate_universal(const Classifier& model, const LabeledDataset& data, std::span<const double> v,
                                 std::size_t k) {
  if (data.empty()) throw Error(ErrorKind::data, "universal fooling rate of an empty dataset");
  if (v.size() != model.input_dim())
    throw Error(ErrorKind::input_shape, "perturbation length does not match the model input");
  std::size_t fooled = 0;
  for (const auto& x : data.inputs) {
    const std::size_t clean = predict(model, x);
    fooled += !in_top_k(forward_logits(model, add(x, v)), clean, k);
  }
  return static_cast<double>(fooled) / static_cast<double>(data.size());
}

/// Called after every accepted update with the projected v.
using UniversalObserver = std::function<void(const Vector&)>;

/// Universal perturbation search: sweep the data (reshuffled each epoch), push every
/// sample whose clean label is still within the target Top-k across its nearest
/// boundaries with the inner attack, fold the increment into v and project back
/// onto the eps-ball. UFR on the training set is checked once per epoch.
///
/// inner_attack = kfool gives kUAP at depth cfg.k; inner_attack = deepfool gives the
/// Top-1 UAP baseline.
inline UniversalPerturbation universal_search(const Classifier& model, const LabeledDataset& data,
                                              const KuapConfig& cfg, const UniversalObserver& observer = {}) {
  if (data.empty()) throw Error(ErrorKind::data, "cannot build a universal perturbation from an empty dataset");
  if (data.dim() != model.input_dim())
    throw Error(ErrorKind::input_shape, "dataset dimension does not match the model input");
  cfg.validate(model.num_classes());

  const std::size_t depth = cfg.inner_attack == InnerAttack::kfool ? cfg.k : 1;
  AttackConfig inner = cfg.inner;
  inner.k = depth;

  UniversalPerturbation out;
  out.v.assign(model.input_dim(), 0.0);
  out.eps = cfg.eps;
  out.norm = cfg.norm;
  out.k = depth;
  out.inner_attack = cfg.inner_attack;

  const auto clean = clean_predictions(model, data);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.shuffle_seed);

  out.train_ufr = evaluate_universal(model, data, out.v, depth);
  while (out.train_ufr <= 1.0 - cfg.delta && out.epochs_run < cfg.max_epochs) {
    rng.shuffle(order);
    for (std::size_t i : order) {
      const Vector xv = add(data.inputs[i], out.v);
      if (!in_top_k(forward_logits(model, xv), clean[i], depth)) continue;
      const InputPoint point{xv, data.bounds};
      const auto res = cfg.inner_attack == InnerAttack::kfool
                           ? run_attack(AttackKind::kfool, model, point, clean[i], inner)
                           : run_attack(AttackKind::deepfool, model, point, clean[i], inner);
      if (!res.success) {
        ++out.inner_failures;
        continue;
      }
      out.v = project(add(out.v, res.r), cfg.eps, cfg.norm);
      ++out.updates;
      if (observer) observer(out.v);
    }
    ++out.epochs_run;
    out.train_ufr = evaluate_universal(model, data, out.v, depth);
  }
  return out;
}

/// kUAP with kFool as the inner attack.
inline UniversalPerturbation kuap(const Classifier& model, const LabeledDataset& data, KuapConfig cfg,
                                  const UniversalObserver& observer = {}) {
  cfg.inner_attack = InnerAttack::kfool;
  return universal_search(model, data, cfg, observer);
}

/// Top-1 UAP baseline: DeepFool inner attack, Top-1 skip condition.
inline UniversalPerturbation uap_baseline(const Classifier& model, const LabeledDataset& data, KuapConfig cfg,
                                          const UniversalObserver& observer = {}) {
  cfg.inner_attack = InnerAttack::deepfool;
  return universal_search(model, data, cfg, observer);
}

/// eps * sign(u) for u uniform on [-1,1]^m: the random-direction reference for Linf budgets.
inline Vector random_sign_vector(std::size_t m, double eps, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(m);
  for (double& x : v) x = rng.uniform() < 0.5 ? -eps : eps;
  return v;
}

// ---------------------------------------------------------------------------
// Serialization: {"format":"advkit-uap-v1","norm":..,"eps":..,"v":[..],"k":..,"train_ufr":..}

inline constexpr std::string_view kUapFormat = "advkit-uap-v1";

inline nlohmann::json to_json(const UniversalPerturbation& u) {
  return {{"format", kUapFormat},      {"norm", to_string(u.norm)},
          {"eps", u.eps},              {"v", u.v},
          {"k", u.k},                  {"train_ufr", u.train_ufr},
          {"epochs_run", u.epochs_run}, {"inner", to_string(u.inner_attack)},
          {"inner_failures", u.inner_failures}};
}

inline UniversalPerturbation universal_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string{}) != kUapFormat)
      throw Error(ErrorKind::format, "expected perturbation format '" + std::string(kUapFormat) + "'");
    UniversalPerturbation u;
    u.norm = parse_norm(j.at("norm").get<std::string>());
    u.eps = j.at("eps").get<double>();
    u.v = j.at("v").get<Vector>();
    u.k = j.at("k").get<std::size_t>();
    u.train_ufr = j.at("train_ufr").get<double>();
    u.epochs_run = j.value("epochs_run", std::size_t{0});
    u.inner_attack = parse_inner(j.value("inner", std::string{"kfool"}));
    u.inner_failures = j.value("inner_failures", std::size_t{0});
    return u;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("malformed perturbation JSON: ") + e.what());
  }
}

inline void save_universal(const UniversalPerturbation& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << to_json(u).dump() << '\n';
}

inline UniversalPerturbation load_universal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path + ": " + e.what());
  }
  return universal_from_json(j);
}

// ---------------------------------------------------------------------------
// Training-size sweep CSV: train_size,k,ufr_test,ufr_train,epochs_run,seed

struct SweepRow {
  std::size_t train_size = 0;
  std::size_t k = 0;
  double ufr_test = 0.0;
  double ufr_train = 0.0;
  std::size_t epochs_run = 0;
  std::uint64_t seed = 0;

  bool operator==(const SweepRow&) const = default;
};

inline constexpr std::string_view kSweepHeader = "train_size,k,ufr_test,ufr_train,epochs_run,seed";

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const auto& r : rows)
    out << r.train_size << ',' << r.k << ',' << format_real(r.ufr_test) << ',' << format_real(r.ufr_train) << ','
        << r.epochs_run << ',' << r.seed << '\n';
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, "line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSweepHeader) throw Error(ErrorKind::parse, "line 1: unexpected header '" + line + "'");
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 6)
      throw Error(ErrorKind::parse, "line " + std::to_string(lineno) + ": expected 6 fields, got " +
                                        std::to_string(c.size()));
    try {
      rows.push_back({std::stoull(c[0]), std::stoull(c[1]), std::stod(c[2]), std::stod(c[3]), std::stoull(c[4]),
                      std::stoull(c[5])});
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::parse, "line " + std::to_string(lineno) + ": malformed numeric field");
    }
  }
  return rows;
}

}  // namespace advkit
