#pragma once

#include <algorithm>
#include <span>

#include "linalg.hpp"

namespace advkit {

/// Nearest point of the eps-ball: componentwise clip for Linf, radial rescale for L2.
inline Vector project(std::span<const double> v, double eps, Norm p) {
  Vector out(v.begin(), v.end());
  if (p == Norm::Linf) {
    for (double& x : out) x = std::clamp(x, -eps, eps);
  } else {
    const double n = norm_l2(v);
    if (n > eps) {
      const double s = n > 0.0 ? eps / n : 0.0;
      for (double& x : out) x *= s;
      while (norm_l2(out) > eps)
        for (double& x : out) x *= 1.0 - 0x1p-52;
    }
  }
  return out;
}

}  // namespace advkit
