#pragma once

// Scalar and diagonal matrix-valued base kernels with analytic derivative
// oracles, positive-definiteness preserving combinators, and the radial
// spectral ironing utility.

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kdisc/common.hpp"

namespace kdisc {

enum class KernelFamily { gaussian, imq, matern32, inverse_log, sech, linear, custom };

std::string_view to_string(KernelFamily f);
KernelFamily parse_kernel_family(std::string_view name);

/// Stack buffer for small dimensions, heap beyond.
class Scratch {
 public:
  explicit Scratch(std::size_t n) : n_(n) {
    if (n > inline_.size()) heap_.resize(n);
  }
  MutVec span() { return n_ > inline_.size() ? MutVec(heap_) : MutVec(inline_.data(), n_); }
  double* data() { return span().data(); }

 private:
  std::size_t n_;
  std::array<double, 16> inline_{};
  std::vector<double> heap_;
};

struct ValueAndMixed {
  double value;
  double mixed;  ///< sum_i d^2 k / dx^i dy^i
};

/// Oracle interface behind every scalar kernel. Implementations are immutable.
class KernelModel {
 public:
  virtual ~KernelModel() = default;

  virtual double value(Vec x, Vec y) const = 0;

  /// Writes grad_x and grad_y. When `mixed_diag` is non-empty it also receives
  /// d^2 k / dx^i dy^i per coordinate.
  virtual ValueAndMixed derivatives(Vec x, Vec y, MutVec grad_x, MutVec grad_y, MutVec mixed_diag) const = 0;

  /// Full cross Hessian d^2 k / dx^i dy^j, row-major d x d. Only needed by
  /// compositions with non-diagonal Jacobians.
  virtual void cross_hessian(Vec x, Vec y, MutVec out) const;
  virtual bool has_cross_hessian() const { return false; }
  virtual bool has_mixed_diagonal() const { return true; }
  /// False only for custom kernels missing one of the four required oracles.
  virtual bool complete() const { return true; }

  /// sum_i [d_xi d_yi k + sx_i d_yi k + sy_i d_xi k + sx_i sy_i k]
  virtual double stein_contraction(Vec x, Vec y, Vec sx, Vec sy) const;

  virtual bool bounded() const = 0;
  /// Caller-asserted metadata: characteristic to D-L1 with H_k in C^1_0.
  virtual bool characteristic() const { return false; }
};

struct KernelDerivatives {
  double value = 0.0;
  Point grad_x;
  Point grad_y;
  double mixed = 0.0;
};

/// The four user closures backing a custom kernel. `mixed_diagonal` is
/// optional and only required by diagonal matrix bases built from the kernel.
struct CustomKernelOracles {
  std::function<double(Vec, Vec)> value;
  std::function<void(Vec, Vec, MutVec)> grad_x;
  std::function<void(Vec, Vec, MutVec)> grad_y;
  std::function<double(Vec, Vec)> mixed;
  std::function<void(Vec, Vec, MutVec)> mixed_diagonal;
  bool bounded = false;
};

class ScalarKernel {
 public:
  static ScalarKernel gaussian(std::size_t dim, double bandwidth);
  /// (c^2 + |x-y|^2)^(-gamma)
  static ScalarKernel imq(std::size_t dim, double c, double gamma);
  /// (1 + sqrt(3) r / l) exp(-sqrt(3) r / l). At x = y the mixed derivative is
  /// the continuous limit 3 d / l^2.
  static ScalarKernel matern32(std::size_t dim, double bandwidth);
  /// (offset + log(1 + |x-y|^2 / l^2))^(-1)
  static ScalarKernel inverse_log(std::size_t dim, double bandwidth, double offset = 1.0);
  /// prod_i sech(sqrt(pi/2) (x_i - y_i) / l)
  static ScalarKernel sech(std::size_t dim, double bandwidth);
  static ScalarKernel linear(std::size_t dim);
  static ScalarKernel custom(std::size_t dim, CustomKernelOracles oracles);

  ScalarKernel(std::shared_ptr<const KernelModel> model, std::size_t dim, KernelFamily family,
               nlohmann::json spec);

  std::size_t dim() const { return dim_; }
  KernelFamily family() const { return family_; }
  bool bounded() const { return model_->bounded(); }
  bool characteristic() const { return model_->characteristic(); }
  const KernelModel& model() const { return *model_; }
  const std::shared_ptr<const KernelModel>& model_ptr() const { return model_; }
  const nlohmann::json& spec() const { return spec_; }

  double operator()(Vec x, Vec y) const;

 private:
  std::shared_ptr<const KernelModel> model_;
  std::size_t dim_;
  KernelFamily family_;
  nlohmann::json spec_;
};

/// Value, both gradients and the summed mixed partial, all analytic.
KernelDerivatives kernel_derivatives(const ScalarKernel& k, Vec x, Vec y);

/// Real-valued function with gradient oracle (tilts and score bounds).
struct ScalarField {
  std::function<double(Vec)> value;
  std::function<void(Vec, MutVec)> gradient;
  bool bounded = false;
  nlohmann::json spec;  ///< null when not serializable
};

/// a(x) = (c^2 + |x|^2)^(-gamma)
ScalarField imq_tilt(double c, double gamma);
ScalarField constant_field(double v);
/// 1 / theta(x), with gradient -grad theta / theta^2.
ScalarField reciprocal(ScalarField theta);

/// C^1 bijection with Jacobian oracle; jacobian(x, J) writes J[a * d + i] = d b_a / d x_i.
struct Diffeomorphism {
  std::function<void(Vec, MutVec)> map;
  std::function<void(Vec, MutVec)> jacobian;
};

/// (x, y) -> a(x) k(x, y) a(y). Throws if a(x) <= 0 at a queried point.
ScalarKernel tilt_kernel(const ScalarKernel& k, ScalarField a);

/// (x, y) -> k(b(x), b(y)) with chain-rule derivatives.
ScalarKernel compose_kernel(const ScalarKernel& k, Diffeomorphism b);

/// Per-coordinate terms of a diagonal matrix kernel K = diag(K_11, ..., K_dd).
struct DiagonalTerms {
  Point value;  ///< K_ii(x, y)
  Point dx;     ///< d K_ii / d x^i
  Point dy;     ///< d K_ii / d y^i
  Point mixed;  ///< d^2 K_ii / d x^i d y^i
  explicit DiagonalTerms(std::size_t d = 0) : value(d), dx(d), dy(d), mixed(d) {}
};

class MatrixKernelModel {
 public:
  virtual ~MatrixKernelModel() = default;
  virtual void diagonal(Vec x, Vec y, DiagonalTerms& out) const = 0;
  /// Entries K_ii(x, y) only.
  virtual void values(Vec x, Vec y, MutVec out) const;
  virtual double stein_contraction(Vec x, Vec y, Vec sx, Vec sy) const;
  virtual bool complete() const { return true; }
};

/// Diagonal matrix-valued kernel, optionally tilted as a(x) K(x, y) a(y).
class MatrixBaseKernel {
 public:
  /// k Id
  static MatrixBaseKernel promote(const ScalarKernel& k);
  /// diag(k_1, ..., k_d)
  static MatrixBaseKernel diagonal(std::vector<ScalarKernel> entries);

  MatrixBaseKernel(std::shared_ptr<const MatrixKernelModel> model, std::size_t dim, nlohmann::json spec);

  /// a(x) K(x, y) a(y) for a strictly positive scalar tilt.
  MatrixBaseKernel tilted(ScalarField a) const;

  std::size_t dim() const { return dim_; }
  const MatrixKernelModel& model() const { return *model_; }
  const nlohmann::json& spec() const { return spec_; }
  /// Same kernel, different serialized description.
  MatrixBaseKernel with_spec(nlohmann::json spec) const { return {model_, dim_, std::move(spec)}; }

  DiagonalTerms diagonal_terms(Vec x, Vec y) const;
  Point entries(Vec x, Vec y) const;

 private:
  std::shared_ptr<const MatrixKernelModel> model_;
  std::size_t dim_;
  nlohmann::json spec_;
};

/// Tabulated radial spectral density on a grid starting at 0.
struct SpectralProfile {
  std::vector<double> radii;
  std::vector<double> values;

  /// Throws InputError unless radii[0] == 0, radii strictly increase and values are >= 0.
  void validate() const;
};

/// Running infimum of the spectral density from the origin outwards.
SpectralProfile iron_spectral(const SpectralProfile& profile);

/// Profile r -> kappa(factor * r): the radii are divided by `factor`.
SpectralProfile rescale_profile(const SpectralProfile& profile, double factor = 2.0);

}  // namespace kdisc
