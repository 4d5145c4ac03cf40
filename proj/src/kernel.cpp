#include "kdisc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace kdisc {

std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::imq: return "imq";
    case KernelFamily::matern32: return "matern32";
    case KernelFamily::inverse_log: return "inverse_log";
    case KernelFamily::sech: return "sech";
    case KernelFamily::linear: return "linear";
    case KernelFamily::custom: return "custom";
  }
  return "custom";
}

KernelFamily parse_kernel_family(std::string_view name) {
  for (auto f : {KernelFamily::gaussian, KernelFamily::imq, KernelFamily::matern32, KernelFamily::inverse_log,
                 KernelFamily::sech, KernelFamily::linear, KernelFamily::custom})
    if (to_string(f) == name) return f;
  throw InputError("unknown kernel family '" + std::string(name) + "'");
}

void KernelModel::cross_hessian(Vec, Vec, MutVec) const {
  throw InputError("kernel does not provide a cross-Hessian oracle");
}

double KernelModel::stein_contraction(Vec x, Vec y, Vec sx, Vec sy) const {
  Scratch gx(x.size()), gy(x.size());
  const auto [v, mixed] = derivatives(x, y, gx.span(), gy.span(), {});
  return mixed + dot(sx, gy.span()) + dot(sy, gx.span()) + dot(sx, sy) * v;
}

namespace {

// phi(t) and its first two derivatives in t = |x - y|^2.
struct RadialTerms {
  double phi;
  double dphi;
  double ddphi;
};

template <class Profile>
class RadialKernel final : public KernelModel {
 public:
  explicit RadialKernel(Profile p) : p_(std::move(p)) {}

  double value(Vec x, Vec y) const override { return p_.phi(squared_distance(x, y)); }

  ValueAndMixed derivatives(Vec x, Vec y, MutVec gx, MutVec gy, MutVec mixed_diag) const override {
    const std::size_t d = x.size();
    const double t = squared_distance(x, y);
    const RadialTerms r = p_.terms(t);
    for (std::size_t i = 0; i < d; ++i) {
      const double u = x[i] - y[i];
      gx[i] = 2.0 * r.dphi * u;
      gy[i] = -gx[i];
      if (!mixed_diag.empty()) mixed_diag[i] = -2.0 * r.dphi - 4.0 * r.ddphi * u * u;
    }
    return {r.phi, -2.0 * static_cast<double>(d) * r.dphi - 4.0 * r.ddphi * t};
  }

  void cross_hessian(Vec x, Vec y, MutVec out) const override {
    const std::size_t d = x.size();
    const RadialTerms r = p_.terms(squared_distance(x, y));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out[i * d + j] = (i == j ? -2.0 * r.dphi : 0.0) - 4.0 * r.ddphi * (x[i] - y[i]) * (x[j] - y[j]);
  }
  bool has_cross_hessian() const override { return true; }

  double stein_contraction(Vec x, Vec y, Vec sx, Vec sy) const override {
    const std::size_t d = x.size();
    double t = 0.0, drift = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double u = x[i] - y[i];
      t += u * u;
      drift += (sy[i] - sx[i]) * u;
      ss += sx[i] * sy[i];
    }
    const RadialTerms r = p_.terms(t);
    return -2.0 * static_cast<double>(d) * r.dphi - 4.0 * r.ddphi * t + 2.0 * r.dphi * drift + r.phi * ss;
  }

  bool bounded() const override { return true; }
  bool characteristic() const override { return true; }

 private:
  Profile p_;
};

struct GaussianProfile {
  double inv2l2;  // 1 / (2 l^2)
  double phi(double t) const { return std::exp(-t * inv2l2); }
  RadialTerms terms(double t) const {
    const double e = phi(t);
    return {e, -inv2l2 * e, inv2l2 * inv2l2 * e};
  }
};

struct ImqProfile {
  double c2;
  double gamma;
  double phi(double t) const { return std::pow(c2 + t, -gamma); }
  RadialTerms terms(double t) const {
    const double base = c2 + t;
    const double v = std::pow(base, -gamma);
    return {v, -gamma * v / base, gamma * (gamma + 1.0) * v / (base * base)};
  }
};

struct Matern32Profile {
  double inv_l;  // 1 / l
  double phi(double t) const {
    const double q = std::sqrt(3.0 * t) * inv_l;
    return (1.0 + q) * std::exp(-q);
  }
  RadialTerms terms(double t) const {
    const double r = std::sqrt(t);
    const double q = std::numbers::sqrt3 * r * inv_l;
    const double e = std::exp(-q);
    const double dphi = -1.5 * inv_l * inv_l * e;
    // phi'' ~ 1/r is only ever multiplied by (x_i - y_i)^2, which vanishes faster.
    const double ddphi = r > 0.0 ? 0.75 * std::numbers::sqrt3 * inv_l * inv_l * inv_l * e / r : 0.0;
    return {(1.0 + q) * e, dphi, ddphi};
  }
};

struct InverseLogProfile {
  double l2;
  double offset;
  double phi(double t) const { return 1.0 / (offset + std::log1p(t / l2)); }
  RadialTerms terms(double t) const {
    const double L = offset + std::log1p(t / l2);
    const double dL = 1.0 / (l2 + t);
    const double ddL = -dL * dL;
    const double inv = 1.0 / L;
    return {inv, -dL * inv * inv, -ddL * inv * inv + 2.0 * dL * dL * inv * inv * inv};
  }
};

class SechKernel final : public KernelModel {
 public:
  explicit SechKernel(double bandwidth) : s_(std::sqrt(std::numbers::pi / 2.0) / bandwidth) {}

  double value(Vec x, Vec y) const override {
    double v = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) v /= std::cosh(s_ * (x[i] - y[i]));
    return v;
  }

  ValueAndMixed derivatives(Vec x, Vec y, MutVec gx, MutVec gy, MutVec mixed_diag) const override {
    const double k = value(x, y);
    double mixed = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = s_ * (x[i] - y[i]);
      const double th = std::tanh(z);
      const double sech = 1.0 / std::cosh(z);
      gx[i] = -s_ * th * k;
      gy[i] = s_ * th * k;
      const double m = s_ * s_ * (sech * sech - th * th) * k;
      if (!mixed_diag.empty()) mixed_diag[i] = m;
      mixed += m;
    }
    return {k, mixed};
  }

  void cross_hessian(Vec x, Vec y, MutVec out) const override {
    const std::size_t d = x.size();
    const double k = value(x, y);
    for (std::size_t i = 0; i < d; ++i) {
      const double zi = s_ * (x[i] - y[i]);
      const double ti = std::tanh(zi);
      for (std::size_t j = 0; j < d; ++j) {
        if (i == j) {
          const double sech = 1.0 / std::cosh(zi);
          out[i * d + j] = s_ * s_ * (sech * sech - ti * ti) * k;
        } else {
          out[i * d + j] = -s_ * s_ * ti * std::tanh(s_ * (x[j] - y[j])) * k;
        }
      }
    }
  }
  bool has_cross_hessian() const override { return true; }
  bool bounded() const override { return true; }
  bool characteristic() const override { return true; }

 private:
  double s_;
};

class LinearKernel final : public KernelModel {
 public:
  double value(Vec x, Vec y) const override { return dot(x, y); }
  ValueAndMixed derivatives(Vec x, Vec y, MutVec gx, MutVec gy, MutVec mixed_diag) const override {
    std::copy(y.begin(), y.end(), gx.begin());
    std::copy(x.begin(), x.end(), gy.begin());
    if (!mixed_diag.empty()) std::fill(mixed_diag.begin(), mixed_diag.end(), 1.0);
    return {dot(x, y), static_cast<double>(x.size())};
  }
  void cross_hessian(Vec x, Vec, MutVec out) const override {
    const std::size_t d = x.size();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] = i == j ? 1.0 : 0.0;
  }
  bool has_cross_hessian() const override { return true; }
  bool bounded() const override { return false; }
};

class CustomKernel final : public KernelModel {
 public:
  explicit CustomKernel(CustomKernelOracles o) : o_(std::move(o)) {}

  double value(Vec x, Vec y) const override { return o_.value(x, y); }

  ValueAndMixed derivatives(Vec x, Vec y, MutVec gx, MutVec gy, MutVec mixed_diag) const override {
    if (!complete()) throw InputError("custom kernel is missing a derivative oracle");
    o_.grad_x(x, y, gx);
    o_.grad_y(x, y, gy);
    if (!mixed_diag.empty()) {
      if (!o_.mixed_diagonal) throw InputError("custom kernel has no per-coordinate mixed derivative oracle");
      o_.mixed_diagonal(x, y, mixed_diag);
    }
    return {o_.value(x, y), o_.mixed(x, y)};
  }

  bool has_mixed_diagonal() const override { return static_cast<bool>(o_.mixed_diagonal); }
  bool complete() const override { return o_.value && o_.grad_x && o_.grad_y && o_.mixed; }
  bool bounded() const override { return o_.bounded; }

 private:
  CustomKernelOracles o_;
};

double checked_tilt(const ScalarField& a, Vec x) {
  const double v = a.value(x);
  if (!(v > 0.0)) throw InputError("tilt function must be strictly positive, got " + std::to_string(v));
  return v;
}

class TiltedKernel final : public KernelModel {
 public:
  TiltedKernel(std::shared_ptr<const KernelModel> base, ScalarField a) : base_(std::move(base)), a_(std::move(a)) {}

  double value(Vec x, Vec y) const override { return checked_tilt(a_, x) * base_->value(x, y) * checked_tilt(a_, y); }

  ValueAndMixed derivatives(Vec x, Vec y, MutVec gx, MutVec gy, MutVec mixed_diag) const override {
    const std::size_t d = x.size();
    const double ax = checked_tilt(a_, x), ay = checked_tilt(a_, y);
    Scratch gax(d), gay(d), kx(d), ky(d);
    a_.gradient(x, gax.span());
    a_.gradient(y, gay.span());
    const auto [k, kmixed] = base_->derivatives(x, y, kx.span(), ky.span(), mixed_diag);
    const double* pa = gax.data();
    const double* pb = gay.data();
    const double* px = kx.data();
    const double* py = ky.data();
    double mixed = ax * ay * kmixed;
    for (std::size_t i = 0; i < d; ++i) {
      gx[i] = ay * (pa[i] * k + ax * px[i]);
      gy[i] = ax * (pb[i] * k + ay * py[i]);
      const double extra = pa[i] * pb[i] * k + pa[i] * ay * py[i] + ax * pb[i] * px[i];
      mixed += extra;
      if (!mixed_diag.empty()) mixed_diag[i] = extra + ax * ay * mixed_diag[i];
    }
    return {ax * k * ay, mixed};
  }

  void cross_hessian(Vec x, Vec y, MutVec out) const override {
    const std::size_t d = x.size();
    const double ax = checked_tilt(a_, x), ay = checked_tilt(a_, y);
    std::vector<double> gax(d), gay(d), kx(d), ky(d);
    a_.gradient(x, gax);
    a_.gradient(y, gay);
    const double k = base_->derivatives(x, y, kx, ky, {}).value;
    base_->cross_hessian(x, y, out);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out[i * d + j] = gax[i] * gay[j] * k + gax[i] * ay * ky[j] + ax * gay[j] * kx[i] + ax * ay * out[i * d + j];
  }

  bool has_cross_hessian() const override { return base_->has_cross_hessian(); }
  bool has_mixed_diagonal() const override { return base_->has_mixed_diagonal(); }
  bool complete() const override { return base_->complete() && a_.value && a_.gradient; }
  bool bounded() const override { return base_->bounded() && a_.bounded; }
  bool characteristic() const override { return base_->characteristic(); }

 private:
  std::shared_ptr<const KernelModel> base_;
  ScalarField a_;
};

class ComposedKernel final : public KernelModel {
 public:
  ComposedKernel(std::shared_ptr<const KernelModel> base, Diffeomorphism b, std::size_t d)
      : base_(std::move(base)), b_(std::move(b)), d_(d) {}

  double value(Vec x, Vec y) const override {
    Scratch bx(d_), by(d_);
    b_.map(x, bx.span());
    b_.map(y, by.span());
    return base_->value(bx.span(), by.span());
  }

  ValueAndMixed derivatives(Vec x, Vec y, MutVec gx, MutVec gy, MutVec mixed_diag) const override {
    const std::size_t d = d_;
    Scratch bx(d), by(d), k1(d), k2(d);
    std::vector<double> jx(d * d), jy(d * d);
    b_.map(x, bx.span());
    b_.map(y, by.span());
    jacobian(x, jx);
    jacobian(y, jy);

    const bool diagonal_jacobians = is_diagonal(jx) && is_diagonal(jy);
    std::vector<double> h;
    Scratch md(d);
    ValueAndMixed base_terms{};
    if (diagonal_jacobians && base_->has_mixed_diagonal()) {
      base_terms = base_->derivatives(bx.span(), by.span(), k1.span(), k2.span(), md.span());
    } else {
      base_terms = base_->derivatives(bx.span(), by.span(), k1.span(), k2.span(), {});
      if (!base_->has_cross_hessian())
        throw InputError("composition with a non-diagonal Jacobian needs a cross-Hessian oracle");
      h.resize(d * d);
      base_->cross_hessian(bx.span(), by.span(), h);
    }

    double mixed = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double sx = 0.0, sy = 0.0;
      for (std::size_t a = 0; a < d; ++a) {
        sx += jx[a * d + i] * k1.data()[a];
        sy += jy[a * d + i] * k2.data()[a];
      }
      gx[i] = sx;
      gy[i] = sy;
      double m = 0.0;
      if (h.empty()) {
        m = jx[i * d + i] * jy[i * d + i] * md.data()[i];
      } else {
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t c = 0; c < d; ++c) m += jx[a * d + i] * jy[c * d + i] * h[a * d + c];
      }
      if (!mixed_diag.empty()) mixed_diag[i] = m;
      mixed += m;
    }
    return {base_terms.value, mixed};
  }

  void cross_hessian(Vec x, Vec y, MutVec out) const override {
    const std::size_t d = d_;
    std::vector<double> bx(d), by(d), jx(d * d), jy(d * d), h(d * d);
    b_.map(x, bx);
    b_.map(y, by);
    jacobian(x, jx);
    jacobian(y, jy);
    base_->cross_hessian(bx, by, h);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t c = 0; c < d; ++c) s += jx[a * d + i] * jy[c * d + j] * h[a * d + c];
        out[i * d + j] = s;
      }
  }

  bool has_cross_hessian() const override { return base_->has_cross_hessian(); }
  bool has_mixed_diagonal() const override { return base_->has_cross_hessian() || base_->has_mixed_diagonal(); }
  bool complete() const override { return base_->complete() && b_.map && b_.jacobian; }
  bool bounded() const override { return base_->bounded(); }
  bool characteristic() const override { return base_->characteristic(); }

 private:
  void jacobian(Vec x, MutVec j) const {
    b_.jacobian(x, j);
    if (!all_finite(j)) throw NumericalError("diffeomorphism Jacobian returned a non-finite value");
  }
  bool is_diagonal(const std::vector<double>& j) const {
    for (std::size_t a = 0; a < d_; ++a)
      for (std::size_t i = 0; i < d_; ++i)
        if (a != i && j[a * d_ + i] != 0.0) return false;
    return true;
  }

  std::shared_ptr<const KernelModel> base_;
  Diffeomorphism b_;
  std::size_t d_;
};

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(name) + " must be positive and finite");
}

void require_dim_positive(std::size_t d) {
  if (d == 0) throw InputError("kernel dimension must be positive");
}

nlohmann::json family_spec(KernelFamily f, nlohmann::json params, std::size_t d) {
  return {{"family", to_string(f)}, {"params", std::move(params)}, {"dim", d}};
}

}  // namespace

ScalarKernel::ScalarKernel(std::shared_ptr<const KernelModel> model, std::size_t dim, KernelFamily family,
                           nlohmann::json spec)
    : model_(std::move(model)), dim_(dim), family_(family), spec_(std::move(spec)) {
  require_dim_positive(dim_);
}

double ScalarKernel::operator()(Vec x, Vec y) const {
  require_dim(x, dim_, "kernel x");
  require_dim(y, dim_, "kernel y");
  return model_->value(x, y);
}

ScalarKernel ScalarKernel::gaussian(std::size_t dim, double bandwidth) {
  require_positive(bandwidth, "gaussian bandwidth");
  return {std::make_shared<RadialKernel<GaussianProfile>>(GaussianProfile{0.5 / (bandwidth * bandwidth)}), dim,
          KernelFamily::gaussian, family_spec(KernelFamily::gaussian, {{"bandwidth", bandwidth}}, dim)};
}

ScalarKernel ScalarKernel::imq(std::size_t dim, double c, double gamma) {
  require_positive(c, "imq offset c");
  require_positive(gamma, "imq exponent gamma");
  return {std::make_shared<RadialKernel<ImqProfile>>(ImqProfile{c * c, gamma}), dim, KernelFamily::imq,
          family_spec(KernelFamily::imq, {{"c", c}, {"gamma", gamma}}, dim)};
}

ScalarKernel ScalarKernel::matern32(std::size_t dim, double bandwidth) {
  require_positive(bandwidth, "matern32 bandwidth");
  return {std::make_shared<RadialKernel<Matern32Profile>>(Matern32Profile{1.0 / bandwidth}), dim,
          KernelFamily::matern32, family_spec(KernelFamily::matern32, {{"bandwidth", bandwidth}}, dim)};
}

ScalarKernel ScalarKernel::inverse_log(std::size_t dim, double bandwidth, double offset) {
  require_positive(bandwidth, "inverse_log bandwidth");
  require_positive(offset, "inverse_log offset");
  return {std::make_shared<RadialKernel<InverseLogProfile>>(InverseLogProfile{bandwidth * bandwidth, offset}), dim,
          KernelFamily::inverse_log,
          family_spec(KernelFamily::inverse_log, {{"bandwidth", bandwidth}, {"offset", offset}}, dim)};
}

ScalarKernel ScalarKernel::sech(std::size_t dim, double bandwidth) {
  require_positive(bandwidth, "sech bandwidth");
  return {std::make_shared<SechKernel>(bandwidth), dim, KernelFamily::sech,
          family_spec(KernelFamily::sech, {{"bandwidth", bandwidth}}, dim)};
}

ScalarKernel ScalarKernel::linear(std::size_t dim) {
  return {std::make_shared<LinearKernel>(), dim, KernelFamily::linear,
          family_spec(KernelFamily::linear, nlohmann::json::object(), dim)};
}

ScalarKernel ScalarKernel::custom(std::size_t dim, CustomKernelOracles oracles) {
  if (!oracles.value) throw InputError("custom kernel needs a value oracle");
  return {std::make_shared<CustomKernel>(std::move(oracles)), dim, KernelFamily::custom,
          {{"family", "custom"}, {"dim", dim}}};
}

KernelDerivatives kernel_derivatives(const ScalarKernel& k, Vec x, Vec y) {
  require_dim(x, k.dim(), "kernel_derivatives x");
  require_dim(y, k.dim(), "kernel_derivatives y");
  KernelDerivatives out;
  out.grad_x.resize(k.dim());
  out.grad_y.resize(k.dim());
  const auto [v, m] = k.model().derivatives(x, y, out.grad_x, out.grad_y, {});
  out.value = v;
  out.mixed = m;
  return out;
}

ScalarField imq_tilt(double c, double gamma) {
  require_positive(c, "tilt offset c");
  if (!std::isfinite(gamma)) throw InputError("tilt exponent must be finite");
  const double c2 = c * c;
  ScalarField f;
  f.value = [c2, gamma](Vec x) { return std::pow(c2 + squared_norm(x), -gamma); };
  f.gradient = [c2, gamma](Vec x, MutVec g) {
    const double base = c2 + squared_norm(x);
    const double coef = -2.0 * gamma * std::pow(base, -gamma - 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = coef * x[i];
  };
  f.bounded = gamma >= 0.0;
  f.spec = {{"c", c}, {"gamma", gamma}};
  return f;
}

ScalarField constant_field(double v) {
  ScalarField f;
  f.value = [v](Vec) { return v; };
  f.gradient = [](Vec, MutVec g) { std::fill(g.begin(), g.end(), 0.0); };
  f.bounded = true;
  f.spec = {{"constant", v}};
  return f;
}

ScalarField reciprocal(ScalarField theta) {
  ScalarField f;
  f.value = [theta](Vec x) { return 1.0 / theta.value(x); };
  f.gradient = [theta](Vec x, MutVec g) {
    const double t = theta.value(x);
    theta.gradient(x, g);
    for (double& gi : g) gi = -gi / (t * t);
  };
  // 1/theta is bounded whenever theta is bounded away from zero, which callers verify.
  f.bounded = true;
  return f;
}

ScalarKernel tilt_kernel(const ScalarKernel& k, ScalarField a) {
  if (!a.value || !a.gradient) throw InputError("tilt needs value and gradient oracles");
  nlohmann::json spec = nullptr;
  if (!a.spec.is_null()) spec = {{"tilt", a.spec}, {"base", k.spec()}};
  else spec = {{"family", "custom"}, {"dim", k.dim()}};
  return {std::make_shared<TiltedKernel>(k.model_ptr(), std::move(a)), k.dim(), KernelFamily::custom, std::move(spec)};
}

ScalarKernel compose_kernel(const ScalarKernel& k, Diffeomorphism b) {
  if (!b.map || !b.jacobian) throw InputError("diffeomorphism needs map and Jacobian oracles");
  return {std::make_shared<ComposedKernel>(k.model_ptr(), std::move(b), k.dim()), k.dim(), KernelFamily::custom,
          {{"family", "custom"}, {"dim", k.dim()}}};
}

// ---------------------------------------------------------------------------
// Matrix-valued kernels

void MatrixKernelModel::values(Vec x, Vec y, MutVec out) const {
  DiagonalTerms t(x.size());
  diagonal(x, y, t);
  std::copy(t.value.begin(), t.value.end(), out.begin());
}

double MatrixKernelModel::stein_contraction(Vec x, Vec y, Vec sx, Vec sy) const {
  DiagonalTerms t(x.size());
  diagonal(x, y, t);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    s += t.mixed[i] + sx[i] * t.dy[i] + sy[i] * t.dx[i] + sx[i] * sy[i] * t.value[i];
  return s;
}

namespace {

class PromotedKernel final : public MatrixKernelModel {
 public:
  explicit PromotedKernel(std::shared_ptr<const KernelModel> k) : k_(std::move(k)) {}
  void diagonal(Vec x, Vec y, DiagonalTerms& out) const override {
    const double v = k_->derivatives(x, y, out.dx, out.dy, out.mixed).value;
    std::fill(out.value.begin(), out.value.end(), v);
  }
  void values(Vec x, Vec y, MutVec out) const override { std::fill(out.begin(), out.end(), k_->value(x, y)); }
  double stein_contraction(Vec x, Vec y, Vec sx, Vec sy) const override {
    return k_->stein_contraction(x, y, sx, sy);
  }
  bool complete() const override { return k_->complete(); }

 private:
  std::shared_ptr<const KernelModel> k_;
};

class DiagonalKernel final : public MatrixKernelModel {
 public:
  explicit DiagonalKernel(std::vector<ScalarKernel> entries) : entries_(std::move(entries)) {}
  void diagonal(Vec x, Vec y, DiagonalTerms& out) const override {
    const std::size_t d = x.size();
    Scratch gx(d), gy(d), md(d);
    for (std::size_t i = 0; i < d; ++i) {
      out.value[i] = entries_[i].model().derivatives(x, y, gx.span(), gy.span(), md.span()).value;
      out.dx[i] = gx.data()[i];
      out.dy[i] = gy.data()[i];
      out.mixed[i] = md.data()[i];
    }
  }
  void values(Vec x, Vec y, MutVec out) const override {
    for (std::size_t i = 0; i < entries_.size(); ++i) out[i] = entries_[i].model().value(x, y);
  }
  bool complete() const override {
    return std::all_of(entries_.begin(), entries_.end(), [](const ScalarKernel& k) {
      return k.model().complete() && k.model().has_mixed_diagonal();
    });
  }

 private:
  std::vector<ScalarKernel> entries_;
};

class TiltedMatrixKernel final : public MatrixKernelModel {
 public:
  TiltedMatrixKernel(std::shared_ptr<const MatrixKernelModel> base, ScalarField a)
      : base_(std::move(base)), a_(std::move(a)) {}

  void diagonal(Vec x, Vec y, DiagonalTerms& out) const override {
    const std::size_t d = x.size();
    const double ax = checked_tilt(a_, x), ay = checked_tilt(a_, y);
    Scratch gax(d), gay(d);
    a_.gradient(x, gax.span());
    a_.gradient(y, gay.span());
    base_->diagonal(x, y, out);
    for (std::size_t i = 0; i < d; ++i) {
      const double k = out.value[i], kx = out.dx[i], ky = out.dy[i], kxy = out.mixed[i];
      const double pa = gax.data()[i], pb = gay.data()[i];
      out.value[i] = ax * k * ay;
      out.dx[i] = ay * (pa * k + ax * kx);
      out.dy[i] = ax * (pb * k + ay * ky);
      out.mixed[i] = pa * pb * k + pa * ay * ky + ax * pb * kx + ax * ay * kxy;
    }
  }
  void values(Vec x, Vec y, MutVec out) const override {
    const double s = checked_tilt(a_, x) * checked_tilt(a_, y);
    base_->values(x, y, out);
    for (double& v : out) v *= s;
  }
  bool complete() const override { return base_->complete(); }

 private:
  std::shared_ptr<const MatrixKernelModel> base_;
  ScalarField a_;
};

}  // namespace

MatrixBaseKernel::MatrixBaseKernel(std::shared_ptr<const MatrixKernelModel> model, std::size_t dim,
                                   nlohmann::json spec)
    : model_(std::move(model)), dim_(dim), spec_(std::move(spec)) {
  require_dim_positive(dim_);
}

MatrixBaseKernel MatrixBaseKernel::promote(const ScalarKernel& k) {
  return {std::make_shared<PromotedKernel>(k.model_ptr()), k.dim(), k.spec()};
}

MatrixBaseKernel MatrixBaseKernel::diagonal(std::vector<ScalarKernel> entries) {
  if (entries.empty()) throw InputError("diagonal kernel needs at least one entry");
  const std::size_t d = entries.size();
  nlohmann::json spec = {{"diagonal", nlohmann::json::array()}};
  for (const auto& k : entries) {
    if (k.dim() != d)
      throw InputError("diagonal kernel: every entry must act on dimension " + std::to_string(d));
    spec["diagonal"].push_back(k.spec());
  }
  return {std::make_shared<DiagonalKernel>(std::move(entries)), d, std::move(spec)};
}

MatrixBaseKernel MatrixBaseKernel::tilted(ScalarField a) const {
  if (!a.value || !a.gradient) throw InputError("tilt needs value and gradient oracles");
  nlohmann::json spec = {{"tilt", a.spec}, {"base", spec_}};
  return {std::make_shared<TiltedMatrixKernel>(model_, std::move(a)), dim_, std::move(spec)};
}

DiagonalTerms MatrixBaseKernel::diagonal_terms(Vec x, Vec y) const {
  require_dim(x, dim_, "matrix kernel x");
  require_dim(y, dim_, "matrix kernel y");
  DiagonalTerms t(dim_);
  model_->diagonal(x, y, t);
  return t;
}

Point MatrixBaseKernel::entries(Vec x, Vec y) const {
  require_dim(x, dim_, "matrix kernel x");
  require_dim(y, dim_, "matrix kernel y");
  Point out(dim_);
  model_->values(x, y, out);
  return out;
}

// ---------------------------------------------------------------------------
// Spectral ironing

void SpectralProfile::validate() const {
  if (radii.empty() || radii.size() != values.size())
    throw InputError("spectral profile needs matching, non-empty radii and values");
  if (radii.front() != 0.0) throw InputError("spectral profile grid must start at radius 0");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw InputError("spectral profile radii must be strictly increasing");
  for (double v : values)
    if (!(v >= 0.0)) throw InputError("spectral profile values must be nonnegative");
}

SpectralProfile iron_spectral(const SpectralProfile& profile) {
  profile.validate();
  SpectralProfile out = profile;
  for (std::size_t i = 1; i < out.values.size(); ++i) out.values[i] = std::min(out.values[i], out.values[i - 1]);
  return out;
}

SpectralProfile rescale_profile(const SpectralProfile& profile, double factor) {
  profile.validate();
  require_positive(factor, "rescale factor");
  SpectralProfile out = profile;
  for (double& r : out.radii) r /= factor;
  return out;
}

}  // namespace kdisc
