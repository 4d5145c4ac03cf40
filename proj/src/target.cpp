#include "kdisc/target.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>

namespace kdisc {

std::string_view to_string(TargetFamily f) {
  switch (f) {
    case TargetFamily::gaussian: return "gaussian";
    case TargetFamily::gaussian_mixture: return "gaussian_mixture";
    case TargetFamily::student_t: return "student_t";
    case TargetFamily::cauchy: return "cauchy";
    case TargetFamily::custom: return "custom";
  }
  return "custom";
}

void TargetModel::sample(Philox&, MutVec) const { throw InputError("no sampler available for this target family"); }

double TargetModel::pdf(Vec) const { throw InputError("no normalized density available for this target family"); }

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void require_positive_all(const Point& v, const char* what) {
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x)) throw InputError(std::string(what) + " entries must be positive");
}

// Marsaglia-Tsang; shape < 1 via the U^(1/a) boost.
double sample_gamma(Philox& rng, double shape) {
  if (shape < 1.0) return sample_gamma(rng, shape + 1.0) * std::pow(rng.uniform(), 1.0 / shape);
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z, v;
    do {
      z = rng.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v;
  }
}

class GaussianModel final : public TargetModel {
 public:
  GaussianModel(Point mean, Point var) : mean_(std::move(mean)), var_(std::move(var)) {
    log_norm_ = 0.0;
    for (double v : var_) log_norm_ -= kLogSqrt2Pi + 0.5 * std::log(v);
  }
  double log_density(Vec x) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mean_[i]) * (x[i] - mean_[i]) / var_[i];
    return -0.5 * s;
  }
  void score(Vec x, MutVec out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = -(x[i] - mean_[i]) / var_[i];
  }
  bool has_sampler() const override { return true; }
  void sample(Philox& rng, MutVec out) const override {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mean_[i] + std::sqrt(var_[i]) * rng.normal();
  }
  bool has_pdf() const override { return true; }
  double pdf(Vec x) const override { return std::exp(log_norm_ + log_density(x)); }

 private:
  Point mean_, var_;
  double log_norm_;
};

class MixtureModel final : public TargetModel {
 public:
  MixtureModel(Point weights, std::vector<Point> means, std::vector<Point> vars)
      : means_(std::move(means)), vars_(std::move(vars)) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (std::size_t k = 0; k < weights.size(); ++k) {
      double lw = std::log(weights[k] / total);
      for (double v : vars_[k]) lw -= kLogSqrt2Pi + 0.5 * std::log(v);
      log_weights_.push_back(lw);  // includes each component's normalizer
      cumulative_.push_back((cumulative_.empty() ? 0.0 : cumulative_.back()) + weights[k] / total);
    }
  }

  double log_density(Vec x) const override {
    std::vector<double> lc(means_.size());
    return logsumexp(x, lc);
  }

  void score(Vec x, MutVec out) const override {
    std::vector<double> lc(means_.size());
    const double lse = logsumexp(x, lc);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < means_.size(); ++k) {
      const double r = std::exp(lc[k] - lse);
      for (std::size_t i = 0; i < x.size(); ++i) out[i] -= r * (x[i] - means_[k][i]) / vars_[k][i];
    }
  }

  bool has_sampler() const override { return true; }
  void sample(Philox& rng, MutVec out) const override {
    const double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < cumulative_.size() && u > cumulative_[k]) ++k;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = means_[k][i] + std::sqrt(vars_[k][i]) * rng.normal();
  }
  bool has_pdf() const override { return true; }
  double pdf(Vec x) const override { return std::exp(log_density(x)); }

 private:
  double logsumexp(Vec x, std::vector<double>& lc) const {
    double mx = -INFINITY;
    for (std::size_t k = 0; k < means_.size(); ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - means_[k][i]) * (x[i] - means_[k][i]) / vars_[k][i];
      lc[k] = log_weights_[k] - 0.5 * s;
      mx = std::max(mx, lc[k]);
    }
    double acc = 0.0;
    for (double v : lc) acc += std::exp(v - mx);
    return mx + std::log(acc);
  }

  std::vector<Point> means_, vars_;
  std::vector<double> log_weights_, cumulative_;
};

class StudentTModel final : public TargetModel {
 public:
  StudentTModel(double nu, Point loc, Point scale) : nu_(nu), loc_(std::move(loc)), scale_(std::move(scale)) {
    const double d = static_cast<double>(loc_.size());
    log_norm_ = std::lgamma(0.5 * (nu_ + d)) - std::lgamma(0.5 * nu_) - 0.5 * d * std::log(nu_ * std::numbers::pi);
    for (double s : scale_) log_norm_ -= std::log(s);
  }
  double log_density(Vec x) const override {
    const double d = static_cast<double>(x.size());
    return -0.5 * (nu_ + d) * std::log1p(z2(x) / nu_);
  }
  void score(Vec x, MutVec out) const override {
    const double d = static_cast<double>(x.size());
    const double coef = -(nu_ + d) / (nu_ + z2(x));
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = coef * (x[i] - loc_[i]) / (scale_[i] * scale_[i]);
  }
  bool has_sampler() const override { return true; }
  void sample(Philox& rng, MutVec out) const override {
    const double chi2 = 2.0 * sample_gamma(rng, 0.5 * nu_);
    const double w = std::sqrt(nu_ / chi2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = loc_[i] + scale_[i] * w * rng.normal();
  }
  bool has_pdf() const override { return true; }
  double pdf(Vec x) const override { return std::exp(log_norm_ + log_density(x)); }

 private:
  double z2(Vec x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = (x[i] - loc_[i]) / scale_[i];
      s += z * z;
    }
    return s;
  }
  double nu_;
  Point loc_, scale_;
  double log_norm_;
};

class CustomTargetModel final : public TargetModel {
 public:
  explicit CustomTargetModel(CustomTargetOracles o) : o_(std::move(o)) {}
  double log_density(Vec x) const override { return o_.log_density(x); }
  void score(Vec x, MutVec out) const override { o_.score(x, out); }
  bool has_sampler() const override { return static_cast<bool>(o_.sampler); }
  void sample(Philox& rng, MutVec out) const override {
    if (!o_.sampler) TargetModel::sample(rng, out);
    o_.sampler(rng, out);
  }
  bool has_pdf() const override { return static_cast<bool>(o_.pdf); }
  double pdf(Vec x) const override { return o_.pdf ? o_.pdf(x) : TargetModel::pdf(x); }

 private:
  CustomTargetOracles o_;
};

}  // namespace

Target::Target(std::shared_ptr<const TargetModel> model, std::size_t dim, TargetFamily family, nlohmann::json spec)
    : model_(std::move(model)), dim_(dim), family_(family), spec_(std::move(spec)) {
  if (dim_ == 0) throw InputError("target dimension must be positive");
}

Target Target::gaussian(Point mean, Point cov_diag) {
  if (mean.empty() || mean.size() != cov_diag.size())
    throw InputError("gaussian target: mean and cov_diag must be non-empty with equal length");
  require_positive_all(cov_diag, "gaussian cov_diag");
  const std::size_t d = mean.size();
  nlohmann::json spec = {{"family", "gaussian"}, {"mean", mean}, {"cov_diag", cov_diag}};
  return {std::make_shared<GaussianModel>(std::move(mean), std::move(cov_diag)), d, TargetFamily::gaussian,
          std::move(spec)};
}

Target Target::standard_normal(std::size_t dim) { return gaussian(Point(dim, 0.0), Point(dim, 1.0)); }

Target Target::gaussian_mixture(Point weights, std::vector<Point> means, std::vector<Point> cov_diags) {
  if (weights.empty() || weights.size() != means.size() || means.size() != cov_diags.size())
    throw InputError("gaussian_mixture: weights, means and cov_diags must have one entry per component");
  const std::size_t d = means.front().size();
  if (d == 0) throw InputError("gaussian_mixture: empty component mean");
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (means[k].size() != d || cov_diags[k].size() != d)
      throw InputError("gaussian_mixture: component dimensions disagree");
    require_positive_all(cov_diags[k], "gaussian_mixture cov_diag");
  }
  require_positive_all(weights, "gaussian_mixture weights");
  nlohmann::json spec = {{"family", "gaussian_mixture"}, {"weights", weights}, {"means", means},
                         {"cov_diags", cov_diags}};
  return {std::make_shared<MixtureModel>(std::move(weights), std::move(means), std::move(cov_diags)), d,
          TargetFamily::gaussian_mixture, std::move(spec)};
}

Target Target::student_t(double nu, Point loc, Point scale) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw InputError("student_t: degrees of freedom must be positive");
  if (loc.empty() || loc.size() != scale.size())
    throw InputError("student_t: loc and scale must be non-empty with equal length");
  require_positive_all(scale, "student_t scale");
  const std::size_t d = loc.size();
  nlohmann::json spec = {{"family", "student_t"}, {"nu", nu}, {"loc", loc}, {"scale", scale}};
  return {std::make_shared<StudentTModel>(nu, std::move(loc), std::move(scale)), d, TargetFamily::student_t,
          std::move(spec)};
}

Target Target::cauchy(Point loc, Point scale) {
  Target t = student_t(1.0, std::move(loc), std::move(scale));
  nlohmann::json spec = {{"family", "cauchy"}, {"loc", t.spec_["loc"]}, {"scale", t.spec_["scale"]}};
  return {t.model_, t.dim_, TargetFamily::cauchy, std::move(spec)};
}

Target Target::custom(std::size_t dim, CustomTargetOracles oracles) {
  if (!oracles.log_density || !oracles.score) throw InputError("custom target needs log_density and score oracles");
  return {std::make_shared<CustomTargetModel>(std::move(oracles)), dim, TargetFamily::custom,
          {{"family", "custom"}, {"dim", dim}}};
}

double Target::log_density(Vec x) const {
  require_dim(x, dim_, "target log_density");
  const double v = model_->log_density(x);
  if (!std::isfinite(v)) throw NumericalError("log density is not finite at the queried point");
  return v;
}

void Target::score_into(Vec x, MutVec out) const {
  require_dim(x, dim_, "target score");
  model_->score(x, out);
  if (!all_finite(out)) throw NumericalError("score is not finite at the queried point");
}

Point Target::score(Vec x) const {
  Point out(dim_);
  score_into(x, out);
  return out;
}

Point Target::sample(Philox& rng) const {
  Point out(dim_);
  model_->sample(rng, out);
  return out;
}

double Target::pdf(Vec x) const {
  require_dim(x, dim_, "target pdf");
  return model_->pdf(x);
}

Point score(const Target& target, Vec x) { return target.score(x); }

void DissipativityParams::validate() const {
  if (!(u > 0.5)) throw InputError("dissipativity rate u must exceed 1/2");
  if (!(r0 > 0.0) || !(r1 > 0.0) || !(r2 > 0.0)) throw InputError("dissipativity constants r0, r1, r2 must be positive");
}

std::vector<Point> sphere_points(std::size_t dim, double radius, std::size_t count, std::uint64_t seed) {
  std::vector<Point> pts;
  if (dim == 1) {
    pts.push_back({radius});
    pts.push_back({-radius});
    return pts;
  }
  for (std::size_t i = 0; i < 2 * dim && pts.size() < count; ++i) {
    Point p(dim, 0.0);
    p[i / 2] = (i % 2 == 0) ? radius : -radius;
    pts.push_back(std::move(p));
  }
  Philox rng(seed, 0x5e4e);
  while (pts.size() < count) {
    Point p(dim);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (double& v : p) {
        v = rng.normal();
        n2 += v * v;
      }
    } while (n2 == 0.0);
    const double s = radius / std::sqrt(n2);
    for (double& v : p) v *= s;
    pts.push_back(std::move(p));
  }
  return pts;
}

DissipativityReport check_dissipativity(const Target& target, const DissipativityParams& params,
                                        std::span<const double> radii, std::size_t directions_per_radius,
                                        std::uint64_t seed) {
  params.validate();
  if (radii.empty()) throw InputError("check_dissipativity: empty radius grid");
  if (directions_per_radius < 1) throw InputError("check_dissipativity: need at least one direction per radius");
  for (double r : radii)
    if (!(r > 0.0)) throw InputError("check_dissipativity: radii must be positive");

  DissipativityReport rep;
  rep.worst_margin = INFINITY;
  std::vector<double> sorted(radii.begin(), radii.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<bool> drift_ok(sorted.size(), true);
  Point s(target.dim());
  for (std::size_t ri = 0; ri < sorted.size(); ++ri) {
    const double r = sorted[ri];
    for (const Point& x : sphere_points(target.dim(), r, directions_per_radius, seed + ri)) {
      target.score_into(x, s);
      double l1 = 0.0;
      for (double v : s) l1 += std::abs(v);
      const double drift = -dot(s, x);
      const double margin = drift - params.r0 * l1 - params.r1 * std::pow(r, 2.0 * params.u) + params.r2;
      if (drift < 0.0) drift_ok[ri] = false;
      ++rep.points_checked;
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.worst_point = x;
      }
    }
  }
  rep.holds = rep.worst_margin >= 0.0;
  for (std::size_t ri = sorted.size(); ri-- > 0;) {
    if (!drift_ok[ri]) break;
    rep.drift_radius = sorted[ri];
  }
  return rep;
}

bool ScoreGrowthReport::score_decaying() const {
  const std::size_t n = max_score_norm_per_radius.size();
  if (n < 2) return false;
  const std::size_t start = (n - 1) / 2;
  for (std::size_t i = start + 1; i < n; ++i)
    if (!(max_score_norm_per_radius[i] < max_score_norm_per_radius[i - 1])) return false;
  return true;
}

ScoreGrowthReport score_growth_probe(const Target& target, std::span<const double> radii,
                                     std::size_t directions_per_radius, std::uint64_t seed) {
  ScoreGrowthReport rep;
  Point s(target.dim());
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const double r = radii[ri];
    if (!(r > 0.0) || (ri > 0 && !(r > radii[ri - 1])))
      throw InputError("score_growth_probe: radii must be positive and increasing");
    double best_ratio = 0.0, best_norm = 0.0;
    for (const Point& x : sphere_points(target.dim(), r, std::max<std::size_t>(directions_per_radius, 1), seed + ri)) {
      target.model().score(x, s);
      const double norm = std::sqrt(squared_norm(s));
      double root_sum = 0.0;
      for (double v : x) root_sum += std::sqrt(std::abs(v));
      // Compare in log space so that fast-growing scores report inf instead of nan.
      const double ratio = std::isfinite(norm) ? std::exp(std::log(norm) - root_sum) : INFINITY;
      best_ratio = std::max(best_ratio, ratio);
      best_norm = std::max(best_norm, norm);
    }
    rep.radii.push_back(r);
    rep.max_ratio_per_radius.push_back(best_ratio);
    rep.max_score_norm_per_radius.push_back(best_norm);
  }
  return rep;
}

}  // namespace kdisc
