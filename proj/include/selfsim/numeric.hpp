#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "selfsim/errors.hpp"

namespace selfsim {

/// Ceiling with a small downward snap so that values that are integers up to
/// double rounding (e.g. 1 + 1/a for a = 1/3) do not jump to the next integer.
inline double ceil_snapped(double x) { return std::ceil(x - 1e-9); }

/// Compensated (Kahan) sum.
inline double kahan_sum(std::span<const double> xs) {
  double sum = 0.0, c = 0.0;
  for (double x : xs) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

/// Finds the root of a strictly decreasing continuous function on [lo, hi].
/// Requires f(lo) > 0 > f(hi); throws InfeasibleError otherwise.
inline double bisect_decreasing(const std::function<double(double)>& f,
                                double lo, double hi, double tol = 1e-10,
                                int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (!(flo > 0.0) || !(fhi < 0.0)) {
    throw InfeasibleError("bisect_decreasing: no sign change on bracket");
  }
  for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares y = slope*x + intercept with the usual slope
/// standard error (zero when fewer than three points).
inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) {
    throw DomainError("fit_line: need at least two (x, y) pairs");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
  if (n > 2) {
    fit.slope_stderr = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

}  // namespace selfsim
