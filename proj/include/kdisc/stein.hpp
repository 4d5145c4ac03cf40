#pragma once

// Langevin Stein kernels k_p(x, y) = (1/(p(x)p(y))) div_y div_x (p(x) K(x, y) p(y))
// and the tilted constructions that make them bounded or convergence
// controlling.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kdisc/kernel.hpp"
#include "kdisc/quadrature.hpp"
#include "kdisc/sample_set.hpp"
#include "kdisc/target.hpp"

namespace kdisc {

class SteinKernel {
 public:
  SteinKernel(MatrixBaseKernel base, Target target);

  std::size_t dim() const { return target_.dim(); }
  const MatrixBaseKernel& base() const { return base_; }
  const Target& target() const { return target_; }

  double operator()(Vec x, Vec y) const;
  /// k_p(x, y) from precomputed scores sx = s_p(x), sy = s_p(y).
  double evaluate(Vec x, Vec sx, Vec y, Vec sy) const { return base_.model().stein_contraction(x, y, sx, sy); }
  double diagonal(Vec x) const { return (*this)(x, x); }

  nlohmann::json spec() const;

 private:
  MatrixBaseKernel base_;
  Target target_;
};

SteinKernel stein_kernel(const ScalarKernel& base, const Target& target);
SteinKernel stein_kernel(const MatrixBaseKernel& base, const Target& target);

/// Vector field v with its divergence.
struct VectorField {
  std::function<void(Vec, MutVec)> value;
  std::function<double(Vec)> divergence;
};

/// (S_p v)(x) = <s_p(x), v(x)> + div v(x)
double apply_stein_operator(const Target& target, const VectorField& v, Vec x);

/// Parametric tilt a(|x|) = (c^2 + |x|^2)^(-gamma).
struct TiltParams {
  double c = 1.0;
  double gamma = 1.0;
  void validate() const;
  ScalarField field() const { return imq_tilt(c, gamma); }
};

/// diag(a(|x|) (x^i y^i + k(x, y)) a(|y|)), the bounded convergence-controlling base.
MatrixBaseKernel bounded_stein_base(const ScalarKernel& k, const TiltParams& tilt);

struct ScoreTiltOptions {
  std::vector<double> radii{1.0, 2.0, 5.0, 10.0, 20.0, 50.0};
  std::size_t points_per_radius = 512;
  std::uint64_t seed = 0;
};

struct ScoreTiltedBase {
  MatrixBaseKernel base;
  std::vector<std::string> warnings;
};

/// K(x, y) / (theta(x) theta(y)). theta >= |s_p| is checked on a sphere grid;
/// violations are reported as warnings, theta <= 0 throws.
ScoreTiltedBase score_tilted_base(const MatrixBaseKernel& base, const ScalarField& theta, const Target& target,
                                  const ScoreTiltOptions& opts = {});

/// P-centered kernel k(x,y) - m(x) - m(y) + mm, with m(x) = int k(x, .) dP.
class CenteredKernel {
 public:
  CenteredKernel(ScalarKernel k, std::function<double(Vec)> embedding, double double_integral);

  double operator()(Vec x, Vec y) const;
  double embedding(Vec x) const { return embedding_(x); }
  double double_integral() const { return double_integral_; }

 private:
  ScalarKernel k_;
  std::function<double(Vec)> embedding_;
  double double_integral_;
};

/// Centering against an empirical reference measure.
CenteredKernel centered_kernel(const ScalarKernel& k, const SampleSet& reference);
/// Centering against a one-dimensional target with closed-form density, by quadrature over R.
CenteredKernel centered_kernel(const ScalarKernel& k, const Target& target, const QuadratureOptions& opts = {});

/// Certified (u, gamma) pair; alpha should lie in (1 - u, (1 - gamma) / 2).
struct CoerciveExponents {
  double u;
  double gamma;
};

/// h(x) = S_p(g)(x) for g_j(x) = -x_j (a^2 + |x|^2)^(alpha - 1).
double coercive_stein_function(const Target& target, double a, double alpha, Vec x,
                               const CoerciveExponents* certified = nullptr,
                               std::vector<std::string>* warnings = nullptr);

}  // namespace kdisc
