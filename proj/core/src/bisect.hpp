#pragma once

#include <cmath>

namespace edgecache::detail {

inline constexpr int kMaxBisectionSteps = 200;
inline constexpr double kRelativeBracketWidth = 1e-12;

/// Root of a monotone `f` on [lo, hi] given a sign change f(lo) * f(hi) <= 0.
/// Stops after 200 halvings or once the bracket shrinks below 1e-12 of its
/// initial width; returns the midpoint of the final bracket.
template <typename F>
double bisect(F&& f, double lo, double hi, double relative_width = kRelativeBracketWidth) {
  double f_lo = f(lo);
  if (f_lo == 0.0) return lo;
  const double stop = relative_width * (hi - lo);
  for (int step = 0; step < kMaxBisectionSteps && hi - lo > stop; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if (std::signbit(f_mid) == std::signbit(f_lo)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace edgecache::detail
