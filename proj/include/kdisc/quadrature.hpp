#pragma once

#include <cstddef>
#include <functional>

namespace kdisc {

struct QuadratureOptions {
  /// Stop once the error estimate is below max(abs_tol, rel_tol * L1 norm).
  double rel_tol = 1e-10;
  /// Needed when the integral is (close to) zero through cancellation: the
  /// relative criterion alone would then chase rounding noise forever.
  double abs_tol = 1e-14;
  std::size_t max_intervals = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
};

/// Globally adaptive Gauss-Kronrod (7/15) over [a, b]; either limit may be
/// infinite. Hitting max_intervals is not an error, the estimate is returned.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts = {});

double integrate(const std::function<double(double)>& f, double a, double b, const QuadratureOptions& opts = {});

/// Nested adaptive quadrature of f(x, y) over [ax, bx] x [ay, by]. The inner
/// integral is split at y = x when that point is interior, so kernels with a
/// kink on the diagonal still converge quickly.
double integrate_2d(const std::function<double(double, double)>& f, double ax, double bx, double ay, double by,
                    const QuadratureOptions& opts = {});

}  // namespace kdisc
