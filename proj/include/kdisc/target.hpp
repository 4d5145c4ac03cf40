#pragma once

// Target distributions: unnormalized log-density, score, optional sampler,
// plus sphere-sampled dissipativity and score-growth certificates.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kdisc/common.hpp"
#include "kdisc/rng.hpp"

namespace kdisc {

enum class TargetFamily { gaussian, gaussian_mixture, student_t, cauchy, custom };

std::string_view to_string(TargetFamily f);

class TargetModel {
 public:
  virtual ~TargetModel() = default;
  /// Log density up to an additive constant.
  virtual double log_density(Vec x) const = 0;
  virtual void score(Vec x, MutVec out) const = 0;
  virtual bool has_sampler() const { return false; }
  virtual void sample(Philox& rng, MutVec out) const;
  /// Closed-form normalized density, when the family has one.
  virtual bool has_pdf() const { return false; }
  virtual double pdf(Vec x) const;
};

struct CustomTargetOracles {
  std::function<double(Vec)> log_density;
  std::function<void(Vec, MutVec)> score;
  std::function<void(Philox&, MutVec)> sampler;  ///< optional
  std::function<double(Vec)> pdf;                ///< optional, normalized
};

class Target {
 public:
  /// Product of independent normals N(mean_i, cov_diag_i).
  static Target gaussian(Point mean, Point cov_diag);
  static Target standard_normal(std::size_t dim);
  /// Mixture of diagonal-covariance Gaussians.
  static Target gaussian_mixture(Point weights, std::vector<Point> means, std::vector<Point> cov_diags);
  /// Multivariate Student-t with nu degrees of freedom and per-coordinate scale.
  static Target student_t(double nu, Point loc, Point scale);
  /// Student-t with nu = 1.
  static Target cauchy(Point loc, Point scale);
  static Target custom(std::size_t dim, CustomTargetOracles oracles);

  Target(std::shared_ptr<const TargetModel> model, std::size_t dim, TargetFamily family, nlohmann::json spec);

  std::size_t dim() const { return dim_; }
  TargetFamily family() const { return family_; }
  const nlohmann::json& spec() const { return spec_; }
  const TargetModel& model() const { return *model_; }

  double log_density(Vec x) const;
  /// Writes the score into `out`; throws NumericalError if it is not finite.
  void score_into(Vec x, MutVec out) const;
  Point score(Vec x) const;

  bool has_sampler() const { return model_->has_sampler(); }
  Point sample(Philox& rng) const;
  bool has_pdf() const { return model_->has_pdf(); }
  double pdf(Vec x) const;

 private:
  std::shared_ptr<const TargetModel> model_;
  std::size_t dim_;
  TargetFamily family_;
  nlohmann::json spec_;
};

/// s_p(x) = grad log p(x)
Point score(const Target& target, Vec x);

/// Generalized dissipativity constants: -<s(x), x> - r0 |s(x)|_1 >= r1 |x|^(2u) - r2.
struct DissipativityParams {
  double u = 1.0;
  double r0 = 1.0;
  double r1 = 0.5;
  double r2 = 1.0;
  void validate() const;
};

struct DissipativityReport {
  bool holds = true;
  double worst_margin = 0.0;
  Point worst_point;
  std::size_t points_checked = 0;
  /// Smallest grid radius from which -<s(x), x> >= 0 at every sampled point
  /// on that and all larger radii; empty if it fails on the largest radius.
  std::optional<double> drift_radius;
};

/// Evaluates the dissipativity margin on `directions_per_radius` sphere points
/// per radius. A grid certificate, not a proof.
DissipativityReport check_dissipativity(const Target& target, const DissipativityParams& params,
                                        std::span<const double> radii, std::size_t directions_per_radius,
                                        std::uint64_t seed = 0);

struct ScoreGrowthReport {
  std::vector<double> radii;
  /// max over sphere points of |s(x)| / exp(sum_i sqrt|x_i|)
  std::vector<double> max_ratio_per_radius;
  std::vector<double> max_score_norm_per_radius;
  /// True when the max score norm strictly decreases over the outer half of the grid.
  bool score_decaying() const;
};

ScoreGrowthReport score_growth_probe(const Target& target, std::span<const double> radii,
                                     std::size_t directions_per_radius = 64, std::uint64_t seed = 0);

/// Deterministic points on the sphere of the given radius: the 2d signed axis
/// points first, then seeded uniform directions (just {r, -r} when d = 1).
std::vector<Point> sphere_points(std::size_t dim, double radius, std::size_t count, std::uint64_t seed);

}  // namespace kdisc
