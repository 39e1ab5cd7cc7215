#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "spdc/error.hpp"

namespace spdc::numerics {

inline constexpr double kPi = 3.14159265358979323846;

/// Composite Simpson weights for `intervals` equal panels of width `h`
/// (intervals must be even; the result has intervals + 1 entries).
inline std::vector<double> simpson_weights(std::size_t intervals, double h) {
  if (intervals < 2 || intervals % 2 != 0) {
    throw Error(ErrorKind::InvalidArgument, "Simpson rule needs an even, nonzero interval count");
  }
  std::vector<double> w(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    if (i == 0 || i == intervals) {
      w[i] = h / 3.0;
    } else {
      w[i] = (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
    }
  }
  return w;
}

/// Evenly spaced nodes from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

struct RootOptions {
  double bisect_width = 1e-3;  // switch to secant once the bracket is this narrow
  double x_tol = 1e-10;
  int max_iter = 200;
};

/// Root of f on [a, b] where f(a) and f(b) have opposite signs: bisection
/// shrinks the bracket, then a bracket-safeguarded secant polishes the root.
inline double find_root(const std::function<double(double)>& f, double a, double b,
                        RootOptions opt = {}) {
  double fa = f(a);
  double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "find_root: interval does not bracket a sign change");
  }
  int iter = 0;
  while (std::abs(b - a) > opt.bisect_width && iter < opt.max_iter) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
      fb = fm;
    }
    ++iter;
  }
  // secant from the bracket ends, falling back to bisection whenever the
  // secant step leaves the bracket
  double x0 = a, f0 = fa, x1 = b, f1 = fb;
  for (; iter < opt.max_iter; ++iter) {
    double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    if (!(x2 > std::min(a, b) && x2 < std::max(a, b)) || !std::isfinite(x2)) {
      x2 = 0.5 * (a + b);
    }
    const double f2 = f(x2);
    if (f2 == 0.0) return x2;
    if ((f2 > 0.0) == (fa > 0.0)) {
      a = x2;
      fa = f2;
    } else {
      b = x2;
      fb = f2;
    }
    const double step = std::abs(x2 - x1);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = f2;
    if (step < opt.x_tol || std::abs(b - a) < opt.x_tol) break;
  }
  return std::abs(fa) < std::abs(fb) ? (std::abs(f1) < std::abs(fa) ? x1 : a)
                                     : (std::abs(f1) < std::abs(fb) ? x1 : b);
}

/// Scans [lo, hi] at `step` from hi downward and returns the first interval
/// showing a sign change of f, or nullopt.
inline std::optional<std::pair<double, double>> scan_bracket_downward(
    const std::function<double(double)>& f, double lo, double hi, double step) {
  double x_hi = hi;
  double f_hi = f(x_hi);
  if (f_hi == 0.0) return std::pair{x_hi, x_hi};
  while (x_hi > lo) {
    const double x_lo = std::max(lo, x_hi - step);
    const double f_lo = f(x_lo);
    if (f_lo == 0.0 || (f_lo > 0.0) != (f_hi > 0.0)) return std::pair{x_lo, x_hi};
    x_hi = x_lo;
    f_hi = f_lo;
  }
  return std::nullopt;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "fit_line: need matching arrays of at least 2 points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 1e-24 * std::max(1.0, mx * mx)) {
    throw Error(ErrorKind::DegenerateFit, "abscissa has zero variance");
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  return fit;
}

/// Solves [[a11 a12] [a21 a22]] x = b by Cramer's rule; nullopt if singular
/// relative to the matrix scale.
inline std::optional<std::pair<double, double>> solve_2x2(double a11, double a12, double a21,
                                                          double a22, double b1, double b2) {
  const double det = a11 * a22 - a12 * a21;
  const double scale = std::max({std::abs(a11 * a22), std::abs(a12 * a21), 1e-300});
  if (std::abs(det) <= 1e-12 * scale) return std::nullopt;
  return std::pair{(b1 * a22 - a12 * b2) / det, (a11 * b2 - b1 * a21) / det};
}

/// Runs body(i) for i in [0, count) on `workers` threads with a static
/// contiguous partition. Each index is written by exactly one call, so the
/// result does not depend on the worker count.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(workers);
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, w, &body, &failures] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace spdc::numerics
