#include "kdisc/stein.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "kdisc/reduce.hpp"

namespace kdisc {

SteinKernel::SteinKernel(MatrixBaseKernel base, Target target) : base_(std::move(base)), target_(std::move(target)) {
  if (base_.dim() != target_.dim())
    throw InputError("stein kernel: base kernel dimension " + std::to_string(base_.dim()) +
                     " does not match target dimension " + std::to_string(target_.dim()));
  if (!base_.model().complete()) throw InputError("stein kernel: base kernel is missing a derivative oracle");
}

double SteinKernel::operator()(Vec x, Vec y) const {
  const std::size_t d = dim();
  Scratch sx(d), sy(d);
  target_.score_into(x, sx.span());
  target_.score_into(y, sy.span());
  return evaluate(x, sx.span(), y, sy.span());
}

nlohmann::json SteinKernel::spec() const { return {{"base", base_.spec()}, {"target", target_.spec()}}; }

SteinKernel stein_kernel(const ScalarKernel& base, const Target& target) {
  if (!base.model().complete()) throw InputError("stein kernel: custom base kernel is missing a derivative oracle");
  return {MatrixBaseKernel::promote(base), target};
}

SteinKernel stein_kernel(const MatrixBaseKernel& base, const Target& target) { return {base, target}; }

double apply_stein_operator(const Target& target, const VectorField& v, Vec x) {
  const std::size_t d = target.dim();
  require_dim(x, d, "stein operator x");
  Point s(d), vx(d);
  target.score_into(x, s);
  v.value(x, vx);
  const double div = v.divergence(x);
  if (!all_finite(vx) || !std::isfinite(div)) throw NumericalError("vector field is not finite at the queried point");
  return dot(s, vx) + div;
}

void TiltParams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw InputError("tilt offset c must be positive");
  if (!std::isfinite(gamma)) throw InputError("tilt exponent gamma must be finite");
}

namespace {

// Entries x^i y^i + k(x, y).
class LinearPlusKernel final : public MatrixKernelModel {
 public:
  explicit LinearPlusKernel(ScalarKernel k) : k_(std::move(k)) {}
  void diagonal(Vec x, Vec y, DiagonalTerms& out) const override {
    const double v = k_.model().derivatives(x, y, out.dx, out.dy, out.mixed).value;
    for (std::size_t i = 0; i < x.size(); ++i) {
      out.value[i] = x[i] * y[i] + v;
      out.dx[i] += y[i];
      out.dy[i] += x[i];
      out.mixed[i] += 1.0;
    }
  }
  bool complete() const override { return k_.model().complete() && k_.model().has_mixed_diagonal(); }

 private:
  ScalarKernel k_;
};

}  // namespace

MatrixBaseKernel bounded_stein_base(const ScalarKernel& k, const TiltParams& tilt) {
  tilt.validate();
  const MatrixBaseKernel inner(std::make_shared<LinearPlusKernel>(k), k.dim(),
                               {{"linear_plus", k.spec()}});
  return inner.tilted(tilt.field())
      .with_spec({{"bounded_stein_base", {{"base", k.spec()}, {"tilt", {{"c", tilt.c}, {"gamma", tilt.gamma}}}}}});
}

ScoreTiltedBase score_tilted_base(const MatrixBaseKernel& base, const ScalarField& theta, const Target& target,
                                  const ScoreTiltOptions& opts) {
  if (!theta.value || !theta.gradient) throw InputError("score tilt needs value and gradient oracles");
  if (base.dim() != target.dim()) throw InputError("score tilt: base and target dimensions differ");
  ScoreTiltedBase out{base.tilted(reciprocal(theta)), {}};

  std::vector<Point> grid{Point(target.dim(), 0.0)};
  for (std::size_t ri = 0; ri < opts.radii.size(); ++ri)
    for (Point& p : sphere_points(target.dim(), opts.radii[ri], opts.points_per_radius, opts.seed + ri))
      grid.push_back(std::move(p));

  std::size_t violations = 0;
  double worst = 0.0;
  Point worst_point;
  Point s(target.dim());
  for (const Point& x : grid) {
    const double t = theta.value(x);
    if (!(t > 0.0)) throw InputError("score tilt: theta must be strictly positive on the verification grid");
    target.score_into(x, s);
    const double gap = std::sqrt(squared_norm(s)) - t;
    if (gap > 0.0) {
      ++violations;
      if (gap > worst) {
        worst = gap;
        worst_point = x;
      }
    }
  }
  if (violations > 0) {
    std::ostringstream msg;
    msg << "theta < |s_p| at " << violations << " of " << grid.size() << " grid points (worst gap " << worst
        << " at |x| = " << std::sqrt(squared_norm(worst_point)) << ")";
    out.warnings.push_back(msg.str());
  }
  return out;
}

CenteredKernel::CenteredKernel(ScalarKernel k, std::function<double(Vec)> embedding, double double_integral)
    : k_(std::move(k)), embedding_(std::move(embedding)), double_integral_(double_integral) {}

double CenteredKernel::operator()(Vec x, Vec y) const {
  return k_(x, y) - embedding_(x) - embedding_(y) + double_integral_;
}

CenteredKernel centered_kernel(const ScalarKernel& k, const SampleSet& reference) {
  if (reference.dim() != k.dim()) throw InputError("centered kernel: reference dimension differs from kernel");
  auto embedding = [k, reference](Vec x) {
    return parallel::sum(reference.size(), [&](std::size_t j) { return reference.weight(j) * k(x, reference.point(j)); });
  };
  const double mm = parallel::pair_sum(reference.size(), reference.size(), [&](std::size_t i, std::size_t j) {
    return reference.weight(i) * reference.weight(j) * k(reference.point(i), reference.point(j));
  });
  return {k, std::move(embedding), mm};
}

CenteredKernel centered_kernel(const ScalarKernel& k, const Target& target, const QuadratureOptions& opts) {
  if (target.dim() != 1 || k.dim() != 1) throw InputError("quadrature centering needs a one-dimensional target");
  if (!target.has_pdf()) throw InputError("quadrature centering needs a target with a closed-form density");
  auto embedding = [k, target, opts](Vec x) {
    const double x0 = x[0];
    auto f = [&](double t) {
      const double tt[1] = {t};
      return k(x, tt) * target.pdf(tt);
    };
    return integrate(f, -INFINITY, x0, opts) + integrate(f, x0, INFINITY, opts);
  };
  auto outer = [&](double t) {
    const double tt[1] = {t};
    return embedding(tt) * target.pdf(tt);
  };
  const double mm = integrate(outer, -INFINITY, INFINITY, opts);
  return {k, std::move(embedding), mm};
}

double coercive_stein_function(const Target& target, double a, double alpha, Vec x, const CoerciveExponents* certified,
                               std::vector<std::string>* warnings) {
  if (!(a > 0.0)) throw InputError("coercive function offset a must be positive");
  if (certified && warnings) {
    const double lo = 1.0 - certified->u;
    const double hi = 0.5 * (1.0 - certified->gamma);
    if (!(alpha > lo && alpha < hi)) {
      std::ostringstream msg;
      msg << "alpha = " << alpha << " lies outside (" << lo << ", " << hi << ") for u = " << certified->u
          << ", gamma = " << certified->gamma;
      warnings->push_back(msg.str());
    }
  }
  const std::size_t d = target.dim();
  const Point s = target.score(x);
  const double r2 = squared_norm(x);
  const double base = a * a + r2;
  const double p1 = std::pow(base, alpha - 1.0);
  return -dot(s, x) * p1 - static_cast<double>(d) * p1 + 2.0 * (1.0 - alpha) * r2 * p1 / base;
}

}  // namespace kdisc
