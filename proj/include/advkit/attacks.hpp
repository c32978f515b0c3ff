#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "projection.hpp"

namespace advkit {

/// Boundary normals shorter than this are treated as degenerate.
inline constexpr double kDegenerateNorm = 1e-12;

struct AttackConfig {
  std::size_t k = 1;
  Norm norm = Norm::L2;
  std::size_t max_iter = 100;
  double overshoot = 0.02;
  bool clamp_pixels = false;
  double eps = 0.0;
  std::size_t pgd_steps = 50;
  double pgd_step_size = 0.01;
  /// DeepFool considers only this many highest-scoring non-true classes; 0 = all of them.
  std::size_t deepfool_candidates = 0;

  void validate(std::size_t num_classes) const {
    std::vector<std::string> bad;
    if (k < 1 || k + 1 > num_classes) bad.push_back("k (need 1 <= k <= C-1)");
    if (max_iter < 1) bad.push_back("max_iter (need >= 1)");
    if (!(overshoot >= 0.0)) bad.push_back("overshoot (need >= 0)");
    if (!(eps >= 0.0)) bad.push_back("eps (need >= 0)");
    if (!(pgd_step_size > 0.0)) bad.push_back("pgd_step_size (need > 0)");
    if (!bad.empty()) {
      std::string msg = "invalid attack config:";
      for (const auto& b : bad) msg += " " + b + ";";
      throw Error(ErrorKind::validation, msg);
    }
  }
};

/// One linearized step: the boundary terms it used and the increment it produced.
struct StepDiagnostics {
  std::vector<std::size_t> p;
  std::vector<std::size_t> classes;  // boundary classes actually used
  Vector f_terms;  // F_{p[i]} - F_true per used boundary
  Vector w_norms;  // ||grad F_{p[i]} - grad F_true||_2 per used boundary
  double f_b = 0.0;
  Vector w_b;
  Vector step;
};

struct PerturbationResult {
  Vector r;
  std::size_t iterations = 0;
  bool success = false;
  std::vector<StepDiagnostics> diagnostics;
  std::vector<std::size_t> final_topk;
  double l2_norm = 0.0;
  double linf_norm = 0.0;
  double elapsed_s = 0.0;
};

struct KfoolStep {
  Vector step;
  StepDiagnostics diag;
};

enum class AttackKind { kfool, deepfool, fgsm, topk_pgd };

inline std::string_view to_string(AttackKind a) {
  switch (a) {
    case AttackKind::kfool: return "kfool";
    case AttackKind::deepfool: return "deepfool";
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::topk_pgd: return "topk-pgd";
  }
  return "?";
}

inline AttackKind parse_attack(std::string_view s) {
  for (auto a : {AttackKind::kfool, AttackKind::deepfool, AttackKind::fgsm, AttackKind::topk_pgd})
    if (to_string(a) == s) return a;
  throw Error(ErrorKind::validation, "unknown attack '" + std::string(s) + "' (kfool|deepfool|fgsm|topk-pgd)");
}

inline std::string_view to_string(Norm n) { return n == Norm::L2 ? "l2" : "linf"; }

inline Norm parse_norm(std::string_view s) {
  if (s == "l2" || s == "L2" || s == "2") return Norm::L2;
  if (s == "linf" || s == "Linf" || s == "inf") return Norm::Linf;
  throw Error(ErrorKind::validation, "unknown norm '" + std::string(s) + "' (l2|linf)");
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline void finalize(PerturbationResult& res, const Classifier& model, const InputPoint& x, std::size_t true_label,
                     std::size_t k, Clock::time_point start) {
  const Vector logits = forward_logits(model, add(x.values, res.r));
  auto p = sort_logits(logits);
  p.resize(k);
  res.final_topk = std::move(p);
  res.success = !in_top_k(logits, true_label, k);
  res.l2_norm = norm_l2(res.r);
  res.linf_norm = norm_linf(res.r);
  res.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();
}

/// x + r, clamped when requested; r is rewritten as the realized displacement.
inline Vector displace(const InputPoint& x, Vector& r, bool clamp) {
  Vector xr = add(x.values, r);
  if (clamp && x.bounds) {
    clamp_to(xr, *x.bounds);
    r = sub(xr, x.values);
  }
  return xr;
}

inline Vector linf_step(double magnitude, std::span<const double> direction) {
  Vector s(direction.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = magnitude * sign(direction[i]);
  return s;
}

}  // namespace detail

/// One kFool step at x: aggregate the k nearest linearized boundaries among the
/// first k+1 sorted classes (true class skipped) into the bisector normal w_b and
/// step onto the plane f_b(x) + w_b.r = 0 (L2), or its L1-dual sign step (Linf).
inline KfoolStep kfool_step(const Classifier& model, std::span<const double> x, std::size_t true_label, std::size_t k,
                            Norm norm) {
  detail::check_class(model, true_label);
  if (k < 1 || k + 1 > model.num_classes())
    throw Error(ErrorKind::validation, "k must satisfy 1 <= k <= C-1");
  const auto lj = logit_jacobian(model, x);
  const auto p = sort_logits(lj.logits);
  const auto grad_true = lj.jacobian.row(true_label);

  KfoolStep out;
  out.diag.p = p;
  out.diag.w_b.assign(model.input_dim(), 0.0);
  std::size_t used = 0;
  for (std::size_t i = 0; i < k + 1 && used < k; ++i) {
    const std::size_t c = p[i];
    if (c == true_label) continue;
    ++used;
    const Vector w = sub(lj.jacobian.row(c), grad_true);
    const double wn = norm_l2(w);
    if (wn < kDegenerateNorm) continue;
    const double f = lj.logits[c] - lj.logits[true_label];
    out.diag.classes.push_back(c);
    out.diag.f_terms.push_back(f);
    out.diag.w_norms.push_back(wn);
    out.diag.f_b += f / wn;
    axpy(1.0 / wn, w, out.diag.w_b);
  }
  if (out.diag.f_terms.empty())
    throw Error(ErrorKind::degenerate, "every boundary normal vanished at this point");

  if (norm_l2(out.diag.w_b) < kDegenerateNorm)
    throw Error(ErrorKind::cancelled, "boundary normals cancel; bisector direction is zero");
  if (norm == Norm::L2) {
    out.step = scaled(out.diag.w_b, std::abs(out.diag.f_b) / dot(out.diag.w_b, out.diag.w_b));
  } else {
    out.step = detail::linf_step(std::abs(out.diag.f_b) / norm_l1(out.diag.w_b), out.diag.w_b);
  }
  out.diag.step = out.step;
  return out;
}

/// Iterated kFool: step until true_label leaves the Top-k or max_iter is hit.
inline PerturbationResult kfool(const Classifier& model, const InputPoint& x, std::size_t true_label,
                                const AttackConfig& cfg) {
  const auto start = detail::Clock::now();
  cfg.validate(model.num_classes());
  detail::check_class(model, true_label);
  PerturbationResult res;
  res.r.assign(x.size(), 0.0);
  Vector xr = x.values;
  while (res.iterations < cfg.max_iter && in_top_k(forward_logits(model, xr), true_label, cfg.k)) {
    auto s = kfool_step(model, xr, true_label, cfg.k, cfg.norm);
    axpy(1.0 + cfg.overshoot, s.step, res.r);
    xr = detail::displace(x, res.r, cfg.clamp_pixels);
    res.diagnostics.push_back(std::move(s.diag));
    ++res.iterations;
  }
  detail::finalize(res, model, x, true_label, cfg.k, start);
  return res;
}

/// DeepFool (Top-1): repeatedly step to the nearest linearized boundary.
/// Boundary distance uses ||w||_2 for L2 and ||w||_1 for Linf.
inline PerturbationResult deepfool(const Classifier& model, const InputPoint& x, std::size_t true_label,
                                   const AttackConfig& cfg) {
  const auto start = detail::Clock::now();
  cfg.validate(model.num_classes());
  detail::check_class(model, true_label);
  PerturbationResult res;
  res.r.assign(x.size(), 0.0);
  Vector xr = x.values;
  while (res.iterations < cfg.max_iter && in_top_k(forward_logits(model, xr), true_label, 1)) {
    const auto lj = logit_jacobian(model, xr);
    const auto p = sort_logits(lj.logits);
    const auto grad_true = lj.jacobian.row(true_label);

    std::vector<std::size_t> candidates;
    for (std::size_t c : p)
      if (c != true_label) candidates.push_back(c);
    if (cfg.deepfool_candidates > 0 && candidates.size() > cfg.deepfool_candidates)
      candidates.resize(cfg.deepfool_candidates);
    std::sort(candidates.begin(), candidates.end());

    std::optional<std::size_t> best;
    double best_dist = 0.0, best_f = 0.0;
    Vector best_w;
    for (std::size_t c : candidates) {
      Vector w = sub(lj.jacobian.row(c), grad_true);
      if (norm_l2(w) < kDegenerateNorm) continue;
      const double f = lj.logits[c] - lj.logits[true_label];
      const double d = std::abs(f) / (cfg.norm == Norm::L2 ? norm_l2(w) : norm_l1(w));
      if (!best || d < best_dist) {
        best = c;
        best_dist = d;
        best_f = f;
        best_w = std::move(w);
      }
    }
    if (!best) throw Error(ErrorKind::degenerate, "every boundary normal vanished at this point");

    StepDiagnostics diag;
    diag.p = p;
    diag.classes = {*best};
    diag.f_terms = {best_f};
    diag.w_norms = {norm_l2(best_w)};
    diag.f_b = best_f;
    if (cfg.norm == Norm::L2) {
      diag.step = scaled(best_w, std::abs(best_f) / dot(best_w, best_w));
    } else {
      diag.step = detail::linf_step(std::abs(best_f) / norm_l1(best_w), best_w);
    }
    diag.w_b = std::move(best_w);
    axpy(1.0 + cfg.overshoot, diag.step, res.r);
    xr = detail::displace(x, res.r, cfg.clamp_pixels);
    res.diagnostics.push_back(std::move(diag));
    ++res.iterations;
  }
  detail::finalize(res, model, x, true_label, 1, start);
  return res;
}

/// Single signed-gradient step of size cfg.eps on the cross-entropy of class y.
/// Success is judged against cfg.k.
inline PerturbationResult fgsm(const Classifier& model, const InputPoint& x, std::size_t y, const AttackConfig& cfg) {
  const auto start = detail::Clock::now();
  cfg.validate(model.num_classes());
  PerturbationResult res;
  const auto lg = loss_and_input_gradient(model, x.values, y);
  res.r = detail::linf_step(cfg.eps, lg.grad);
  detail::displace(x, res.r, cfg.clamp_pixels);
  res.iterations = 1;
  detail::finalize(res, model, x, y, cfg.k, start);
  return res;
}

inline PerturbationResult fgsm(const Classifier& model, const InputPoint& x, std::size_t y, double eps) {
  AttackConfig cfg;
  cfg.eps = eps;
  return fgsm(model, x, y, cfg);
}

/// Top-k PGD: signed (Linf) or normalized (L2) ascent on
/// sum_j (F_j - F_true) over the current top-k non-true classes, projected to the eps-ball.
inline PerturbationResult topk_pgd(const Classifier& model, const InputPoint& x, std::size_t true_label,
                                   const AttackConfig& cfg) {
  const auto start = detail::Clock::now();
  cfg.validate(model.num_classes());
  detail::check_class(model, true_label);
  PerturbationResult res;
  res.r.assign(x.size(), 0.0);
  if (cfg.eps > 0.0) {
    Vector xr = x.values;
    for (std::size_t t = 0; t < cfg.pgd_steps; ++t) {
      const auto lj = logit_jacobian(model, xr);
      if (!in_top_k(lj.logits, true_label, cfg.k)) break;
      const auto p = sort_logits(lj.logits);
      Vector g(x.size(), 0.0);
      std::size_t used = 0;
      for (std::size_t i = 0; i < p.size() && used < cfg.k; ++i) {
        if (p[i] == true_label) continue;
        axpy(1.0, lj.jacobian.row(p[i]), g);
        axpy(-1.0, lj.jacobian.row(true_label), g);
        ++used;
      }
      const double gn = norm_l2(g);
      if (gn < kDegenerateNorm) break;
      if (cfg.norm == Norm::Linf)
        axpy(1.0, detail::linf_step(cfg.pgd_step_size, g), res.r);
      else
        axpy(cfg.pgd_step_size / gn, g, res.r);
      res.r = project(res.r, cfg.eps, cfg.norm);
      xr = detail::displace(x, res.r, cfg.clamp_pixels);
      ++res.iterations;
    }
  }
  detail::finalize(res, model, x, true_label, cfg.k, start);
  return res;
}

/// Target depth an attack is judged at: DeepFool is a Top-1 attack, the others use cfg.k.
inline std::size_t target_k(AttackKind kind, const AttackConfig& cfg) {
  return kind == AttackKind::deepfool ? 1 : cfg.k;
}

/// Dispatch by kind. Degenerate-geometry errors become an unsuccessful zero perturbation
/// so that dataset-level runs keep going.
inline PerturbationResult run_attack(AttackKind kind, const Classifier& model, const InputPoint& x,
                                     std::size_t true_label, const AttackConfig& cfg) {
  try {
    switch (kind) {
      case AttackKind::kfool: return kfool(model, x, true_label, cfg);
      case AttackKind::deepfool: return deepfool(model, x, true_label, cfg);
      case AttackKind::fgsm: return fgsm(model, x, true_label, cfg);
      case AttackKind::topk_pgd: return topk_pgd(model, x, true_label, cfg);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate && e.kind() != ErrorKind::cancelled) throw;
  }
  PerturbationResult failed;
  failed.r.assign(x.size(), 0.0);
  detail::finalize(failed, model, x, true_label, target_k(kind, cfg), detail::Clock::now());
  return failed;
}

}  // namespace advkit
