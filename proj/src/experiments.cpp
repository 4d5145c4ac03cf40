#include "kdisc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace kdisc {

Table escape_sequence(const SteinKernel& sk, const EscapeOptions& opts) {
  if (opts.n_max == 0) throw InputError("escape sequence needs n_max >= 1");
  if (!(opts.step > 0.0) || !std::isfinite(opts.step)) throw InputError("escape sequence step must be positive");
  Table t{{"n", "point", "kp_diag", "ksd_delta"}, {}};
  Point x(sk.dim(), 0.0);
  for (std::size_t n = 1; n <= opts.n_max; ++n) {
    x[0] = static_cast<double>(n) * opts.step;
    const double kp = sk.diagonal(x);
    if (!std::isfinite(kp)) throw NumericalError("k_p(x, x) is not finite at point " + std::to_string(x[0]));
    t.rows.push_back({static_cast<double>(n), x[0], kp, std::sqrt(std::max(0.0, kp))});
  }
  return t;
}

ConvergenceSequence parse_convergence_sequence(std::string_view s) {
  if (s == "shrinking_shift") return ConvergenceSequence::shrinking_shift;
  if (s == "escaping_mixture") return ConvergenceSequence::escaping_mixture;
  throw InputError("unknown convergence sequence '" + std::string(s) + "'");
}

std::string_view to_string(ConvergenceSequence s) {
  return s == ConvergenceSequence::shrinking_shift ? "shrinking_shift" : "escaping_mixture";
}

double gaussian_abs_moment(double m, double v, double z) {
  const double sd = std::sqrt(v);
  const double a = z - m;
  const boost::math::normal_distribution<double> std_normal;
  return a * (2.0 * boost::math::cdf(std_normal, a / sd) - 1.0) + 2.0 * sd * boost::math::pdf(std_normal, a / sd);
}

Table convergence_curve(const SteinKernel& sk, const ConvergenceOptions& opts) {
  const Target& p = sk.target();
  if (p.dim() != 1) throw InputError("convergence curves need a one-dimensional target");
  if (p.family() != TargetFamily::gaussian) throw InputError("convergence curves need a Gaussian target");
  if (opts.n_grid.empty()) throw InputError("convergence curve needs a non-empty n grid");
  for (std::size_t n : opts.n_grid)
    if (n == 0) throw InputError("convergence curve: n must be >= 1");

  const double m = p.spec().at("mean")[0].get<double>();
  const double v = p.spec().at("cov_diag")[0].get<double>();
  const double sd = std::sqrt(v);
  const QuadratureOptions qo{opts.tol};

  auto kp = [&](double x, double y) {
    const double xx[1] = {x}, yy[1] = {y};
    return sk(xx, yy);
  };
  auto pdf = [&](double x) {
    const double xx[1] = {x};
    return p.pdf(xx);
  };

  Table t{{"n", "ksd", "wasserstein1"}, {}};
  if (opts.sequence == ConvergenceSequence::shrinking_shift) {
    for (std::size_t n : opts.n_grid) {
      const double shift = 1.0 / static_cast<double>(n);
      const double mu = m + shift;
      auto q = [&](double x) { return std::exp(-0.5 * (x - mu) * (x - mu) / v) / std::sqrt(2.0 * M_PI * v); };
      const DiscrepancyEstimate e = ksd_quadrature_1d(sk, q, {mu - 12.0 * sd, mu + 12.0 * sd}, opts.tol);
      t.rows.push_back({static_cast<double>(n), e.value, shift});
    }
    return t;
  }

  // (1-w)^2 I_PP + 2 w (1-w) J(z) + w^2 k_p(z, z), with I_PP and J by quadrature.
  const double lo = m - 12.0 * sd, hi = m + 12.0 * sd;
  const double i_pp = integrate_2d([&](double x, double y) { return kp(x, y) * pdf(x) * pdf(y); }, lo, hi, lo, hi, qo);
  for (std::size_t n : opts.n_grid) {
    const double w = 1.0 / static_cast<double>(n);
    const double z = static_cast<double>(n);
    auto g = [&](double x) { return kp(x, z) * pdf(x); };
    const double j = (z > lo && z < hi) ? integrate(g, lo, z, qo) + integrate(g, z, hi, qo) : integrate(g, lo, hi, qo);
    const double sq = (1.0 - w) * (1.0 - w) * i_pp + 2.0 * w * (1.0 - w) * j + w * w * kp(z, z);
    if (!std::isfinite(sq)) throw NumericalError("escaping mixture: squared KSD is not finite at n = " + std::to_string(n));
    t.rows.push_back({static_cast<double>(n), std::sqrt(std::max(0.0, sq)), w * gaussian_abs_moment(m, v, z)});
  }
  return t;
}

Table boundedness_scan(const SteinKernel& sk, const ScanOptions& opts) {
  if (opts.radii.empty()) throw InputError("boundedness scan needs at least one radius");
  Table t{{"radius", "kp_diag_min", "kp_diag_max"}, {}};
  for (std::size_t ri = 0; ri < opts.radii.size(); ++ri) {
    const double r = opts.radii[ri];
    if (!(r >= 0.0) || !std::isfinite(r)) throw InputError("scan radii must be finite and nonnegative");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Point& x : sphere_points(sk.dim(), r, opts.directions, opts.seed + ri)) {
      const double kp = sk.diagonal(x);
      if (!std::isfinite(kp)) throw NumericalError("k_p(x, x) is not finite at radius " + std::to_string(r));
      lo = std::min(lo, kp);
      hi = std::max(hi, kp);
    }
    t.rows.push_back({r, lo, hi});
  }
  return t;
}

Table dissipativity_table(const Target& target, const DissipativityParams& params, const ScanOptions& opts) {
  params.validate();
  if (opts.radii.empty()) throw InputError("dissipativity table needs at least one radius");
  Table t{{"radius", "min_margin", "min_drift", "max_score_norm"}, {}};
  Point s(target.dim());
  for (std::size_t ri = 0; ri < opts.radii.size(); ++ri) {
    const double r = opts.radii[ri];
    if (!(r >= 0.0) || !std::isfinite(r)) throw InputError("radii must be finite and nonnegative");
    double margin = std::numeric_limits<double>::infinity(), drift = margin, snorm = 0.0;
    for (const Point& x : sphere_points(target.dim(), r, opts.directions, opts.seed + ri)) {
      target.score_into(x, s);
      double l1 = 0.0;
      for (double v : s) l1 += std::abs(v);
      const double inner = -dot(s, x);
      margin = std::min(margin, inner - params.r0 * l1 - params.r1 * std::pow(r, 2.0 * params.u) + params.r2);
      drift = std::min(drift, inner);
      snorm = std::max(snorm, std::sqrt(squared_norm(s)));
    }
    t.rows.push_back({r, margin, drift, snorm});
  }
  return t;
}

}  // namespace kdisc
