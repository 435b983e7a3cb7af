#pragma once

#include <algorithm>
#include <cstdlib>

// Shared between the backward solvers and the out-of-sample replay: both must
// score and arbitrate commands with identical arithmetic, otherwise replaying
// a policy on its own training scenarios would not reproduce the training
// decisions.
namespace mvhedge::detail {

inline double eval3(const double* c, double f, double d) {
  return c[0] + c[1] * f + c[2] * d;
}

inline double trade_cost(double lambda, long moved_levels, double xi, double forward) {
  return lambda * static_cast<double>(std::labs(moved_levels)) * xi * forward;
}

// Arg-min of obj(p) over the admissible window [plo, phi] around the incoming
// level k, visiting moves in the order 0, -1, +1, -2, +2, ... with strict
// improvement; ties therefore resolve to the smallest move, selling first.
template <class Obj>
long scan_argmin(Obj&& obj, long k, long plo, long phi) {
  long best = k;
  double best_val = obj(k);
  const long span = std::max(k - plo, phi - k);
  for (long d = 1; d <= span; ++d) {
    if (k - d >= plo) {
      const double v = obj(k - d);
      if (v < best_val) {
        best_val = v;
        best = k - d;
      }
    }
    if (k + d <= phi) {
      const double v = obj(k + d);
      if (v < best_val) {
        best_val = v;
        best = k + d;
      }
    }
  }
  return best;
}

}  // namespace mvhedge::detail
