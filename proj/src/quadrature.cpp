#include "kdisc/quadrature.hpp"

#include <cmath>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kdisc/common.hpp"

namespace kdisc {

namespace {

struct Piece {
  double a, b, value, error, l1;
  bool operator<(const Piece& o) const { return error < o.error; }
};

// One GK15 application on a finite interval, with the |K15 - G7| error estimate.
Piece gk15(const std::function<double(double)>& g, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);

  const double f0 = g(c);
  double k = wk[0] * f0, l1 = wk[0] * std::abs(f0);
  double gs = wg[0] * f0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double fl = g(c - h * x[i]), fr = g(c + h * x[i]);
    k += wk[i] * (fl + fr);
    l1 += wk[i] * (std::abs(fl) + std::abs(fr));
    // Gauss nodes are the odd Kronrod indices.
    if (i % 2 == 0) gs += wg[i / 2] * (fl + fr);
  }
  return {a, b, k * h, std::abs((k - gs) * h), l1 * std::abs(h)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts) {
  if (std::isnan(a) || std::isnan(b)) throw InputError("quadrature limits must not be NaN");
  if (a == b) return {};
  if (a > b) {
    QuadratureResult r = integrate_adaptive(f, b, a, opts);
    r.value = -r.value;
    return r;
  }

  // Map infinite ranges onto finite ones; GK nodes never touch the endpoints.
  std::function<double(double)> g;
  double lo = a, hi = b;
  if (std::isinf(a) && std::isinf(b)) {
    g = [&](double t) {
      const double u = 1.0 - t * t;
      return f(t / u) * (1.0 + t * t) / (u * u);
    };
    lo = -1.0, hi = 1.0;
  } else if (std::isinf(b)) {
    g = [&](double t) {
      const double u = 1.0 - t;
      return f(a + t / u) / (u * u);
    };
    lo = 0.0, hi = 1.0;
  } else if (std::isinf(a)) {
    g = [&](double t) {
      const double u = 1.0 - t;
      return f(b - t / u) / (u * u);
    };
    lo = 0.0, hi = 1.0;
  } else {
    g = f;
  }

  std::priority_queue<Piece> heap;
  Piece first = gk15(g, lo, hi);
  double value = first.value, error = first.error, l1 = first.l1;
  heap.push(first);
  std::size_t count = 1;
  while (error > std::max(opts.abs_tol, opts.rel_tol * l1) && count < opts.max_intervals) {
    const Piece worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval below floating-point resolution
    heap.pop();
    const Piece left = gk15(g, worst.a, mid), right = gk15(g, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum from the pieces so the result does not carry the running-update drift.
  value = 0.0, error = 0.0;
  std::vector<Piece> pieces;
  pieces.reserve(heap.size());
  while (!heap.empty()) {
    pieces.push_back(heap.top());
    heap.pop();
  }
  for (const Piece& p : pieces) value += p.value, error += p.error;
  if (!std::isfinite(value)) throw NumericalError("quadrature produced a non-finite value");
  return {value, error, count};
}

double integrate(const std::function<double(double)>& f, double a, double b, const QuadratureOptions& opts) {
  return integrate_adaptive(f, a, b, opts).value;
}

double integrate_2d(const std::function<double(double, double)>& f, double ax, double bx, double ay, double by,
                    const QuadratureOptions& opts) {
  auto outer = [&](double x) {
    auto g = [&](double y) { return f(x, y); };
    if (x > ay && x < by) return integrate(g, ay, x, opts) + integrate(g, x, by, opts);
    return integrate(g, ay, by, opts);
  };
  return integrate(outer, ax, bx, opts);
}

}  // namespace kdisc
