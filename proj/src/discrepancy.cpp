#include "kdisc/discrepancy.hpp"

#include <cmath>
#include <string>

#include "kdisc/reduce.hpp"

namespace kdisc {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::v_stat: return "v_stat";
    case Estimator::u_stat: return "u_stat";
    case Estimator::quadrature: return "quadrature";
  }
  return "unknown";
}

nlohmann::json DiscrepancyEstimate::to_json() const {
  nlohmann::json j = {{"estimator", to_string(estimator)}, {"value", value}, {"squared", squared_value}};
  if (estimator == Estimator::quadrature) j["tol"] = tolerance;
  else j["n"] = n_points;
  j["stderr"] = standard_error ? nlohmann::json(*standard_error) : nlohmann::json(nullptr);
  return j;
}

namespace {

constexpr double kNegativeSlack = 1e-10;

// Clamps rounding noise below zero; anything more negative means the kernel
// is not positive semidefinite or the inputs are broken.
double checked_nonnegative(double squared, const char* what) {
  if (!std::isfinite(squared)) throw NumericalError(std::string(what) + ": squared discrepancy is not finite");
  if (squared < -kNegativeSlack)
    throw NumericalError(std::string(what) + ": V-statistic is negative (" + std::to_string(squared) +
                         "), the kernel is not positive semidefinite on these points");
  return squared < 0.0 ? 0.0 : squared;
}

double jackknife_se(const std::vector<double>& loo) {
  const double n = static_cast<double>(loo.size());
  const double mean = pairwise_sum(loo) / n;
  std::vector<double> dev(loo.size());
  for (std::size_t i = 0; i < loo.size(); ++i) dev[i] = (loo[i] - mean) * (loo[i] - mean);
  return std::sqrt((n - 1.0) / n * pairwise_sum(dev));
}

struct SteinRows {
  std::vector<double> scores;
  std::vector<double> rows;  // sum_j h_ij, diagonal included
  std::vector<double> diag;  // h_ii
};

SteinRows stein_rows(const SteinKernel& sk, const SampleSet& q, bool weighted) {
  const std::size_t n = q.size(), d = q.dim();
  SteinRows out{sample_scores(sk.target(), q), std::vector<double>(n), std::vector<double>(n)};
  const double* s = out.scores.data();
  auto h = [&](std::size_t i, std::size_t j) {
    return sk.evaluate(q.point(i), Vec(s + i * d, d), q.point(j), Vec(s + j * d, d));
  };
  if (weighted)
    parallel::row_sums(n, n, [&](std::size_t i, std::size_t j) { return q.weight(j) * h(i, j); }, out.rows);
  else
    parallel::row_sums(n, n, h, out.rows);
  parallel::map(n, [&](std::size_t i) { return h(i, i); }, out.diag);
  return out;
}

void require_same_dim(const SteinKernel& sk, const SampleSet& q) {
  if (sk.dim() != q.dim())
    throw InputError("sample dimension " + std::to_string(q.dim()) + " does not match target dimension " +
                     std::to_string(sk.dim()));
}

}  // namespace

std::vector<double> sample_scores(const Target& target, const SampleSet& q) {
  const std::size_t d = q.dim();
  if (d != target.dim()) throw InputError("sample dimension does not match target dimension");
  std::vector<double> s(q.size() * d);
  parallel::for_each(q.size(), [&](std::size_t i) { target.score_into(q.point(i), MutVec(s.data() + i * d, d)); });
  return s;
}

std::vector<double> stein_gram(const SteinKernel& sk, const SampleSet& q) {
  require_same_dim(sk, q);
  const std::size_t n = q.size(), d = q.dim();
  const std::vector<double> s = sample_scores(sk.target(), q);
  std::vector<double> h(n * n);
  parallel::symmetric_fill(
      n,
      [&](std::size_t i, std::size_t j) {
        return sk.evaluate(q.point(i), Vec(s.data() + i * d, d), q.point(j), Vec(s.data() + j * d, d));
      },
      h);
  return h;
}

DiscrepancyEstimate ksd_v_stat(const SteinKernel& sk, const SampleSet& q) {
  require_same_dim(sk, q);
  const std::size_t n = q.size();
  const bool uniform = q.uniform();
  const SteinRows r = stein_rows(sk, q, !uniform);

  DiscrepancyEstimate est;
  est.estimator = Estimator::v_stat;
  est.n_points = n;
  double raw;
  if (uniform) {
    const double nn = static_cast<double>(n);
    const double total = pairwise_sum(r.rows);
    raw = total / (nn * nn);
    if (n >= 3) {
      std::vector<double> loo(n);
      for (std::size_t i = 0; i < n; ++i) loo[i] = (total - 2.0 * r.rows[i] + r.diag[i]) / ((nn - 1.0) * (nn - 1.0));
      est.standard_error = jackknife_se(loo);
    }
  } else {
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) terms[i] = q.weight(i) * r.rows[i];
    raw = pairwise_sum(terms);
  }
  est.squared_value = checked_nonnegative(raw, "ksd_v_stat");
  est.value = std::sqrt(est.squared_value);
  return est;
}

DiscrepancyEstimate ksd_u_stat(const SteinKernel& sk, const SampleSet& q) {
  require_same_dim(sk, q);
  const std::size_t n = q.size();
  if (n < 2) throw InputError("ksd_u_stat needs at least two points");
  if (!q.uniform()) throw InputError("ksd_u_stat needs uniformly weighted samples");
  const SteinRows r = stein_rows(sk, q, false);

  const double nn = static_cast<double>(n);
  std::vector<double> off(n);
  for (std::size_t i = 0; i < n; ++i) off[i] = r.rows[i] - r.diag[i];
  const double total = pairwise_sum(off);

  DiscrepancyEstimate est;
  est.estimator = Estimator::u_stat;
  est.n_points = n;
  est.squared_value = total / (nn * (nn - 1.0));
  if (!std::isfinite(est.squared_value)) throw NumericalError("ksd_u_stat: statistic is not finite");
  est.value = std::sqrt(std::max(0.0, est.squared_value));
  if (n >= 3) {
    std::vector<double> loo(n);
    for (std::size_t i = 0; i < n; ++i) loo[i] = (total - 2.0 * off[i]) / ((nn - 1.0) * (nn - 2.0));
    est.standard_error = jackknife_se(loo);
  }
  return est;
}

DiscrepancyEstimate mmd_v_stat(const ScalarKernel& k, const SampleSet& q, const SampleSet& p) {
  if (q.dim() != p.dim() || q.dim() != k.dim())
    throw InputError("mmd_v_stat: kernel and sample dimensions must agree");
  auto block = [&](const SampleSet& a, const SampleSet& b) {
    return parallel::pair_sum(a.size(), b.size(), [&](std::size_t i, std::size_t j) {
      return a.weight(i) * b.weight(j) * k(a.point(i), b.point(j));
    });
  };
  const double raw = block(q, q) - 2.0 * block(q, p) + block(p, p);
  DiscrepancyEstimate est;
  est.estimator = Estimator::v_stat;
  est.n_points = q.size() + p.size();
  est.squared_value = checked_nonnegative(raw, "mmd_v_stat");
  est.value = std::sqrt(est.squared_value);
  return est;
}

namespace {

void check_domain(Interval domain) {
  if (!(domain.lo < domain.hi) || std::isnan(domain.lo) || std::isnan(domain.hi))
    throw InputError("quadrature domain must satisfy lo < hi");
}

void check_density(const std::function<double(double)>& q, Interval domain, double tol) {
  QuadratureOptions opts{tol};
  const double mass = integrate(
      [&](double x) {
        const double v = q(x);
        if (!(v >= 0.0)) throw InputError("density is negative or not a number at x = " + std::to_string(x));
        return v;
      },
      domain.lo, domain.hi, opts);
  if (std::abs(mass - 1.0) > 1e-6)
    throw InputError("density integrates to " + std::to_string(mass) + " over the domain, expected 1 within 1e-6");
}

DiscrepancyEstimate quadrature_estimate(double raw, double tol) {
  DiscrepancyEstimate est;
  est.estimator = Estimator::quadrature;
  est.tolerance = tol;
  est.squared_value = raw;
  est.value = std::sqrt(std::max(0.0, raw));
  return est;
}

}  // namespace

DiscrepancyEstimate ksd_quadrature_1d(const SteinKernel& sk, const std::function<double(double)>& q_density,
                                      Interval domain, double tol) {
  if (sk.dim() != 1) throw InputError("ksd_quadrature_1d needs a one-dimensional target");
  check_domain(domain);
  check_density(q_density, domain, tol);
  const Target& p = sk.target();
  auto f = [&](double x, double y) {
    const double w = q_density(x) * q_density(y);
    if (w == 0.0) return 0.0;
    const double xx[1] = {x}, yy[1] = {y};
    double sx[1], sy[1];
    p.score_into(xx, sx);
    p.score_into(yy, sy);
    return sk.evaluate(xx, sx, yy, sy) * w;
  };
  return quadrature_estimate(integrate_2d(f, domain.lo, domain.hi, domain.lo, domain.hi, {tol}), tol);
}

DiscrepancyEstimate ksd_score_diff_quadrature(const MatrixBaseKernel& K, const Target& p, const Target& q,
                                              Interval domain, double tol) {
  if (p.dim() != 1 || q.dim() != 1 || K.dim() != 1)
    throw InputError("ksd_score_diff_quadrature needs one-dimensional targets and kernel");
  if (!q.has_pdf()) throw InputError("ksd_score_diff_quadrature needs a normalized density for q");
  check_domain(domain);
  auto qd = [&](double x) {
    const double xx[1] = {x};
    return q.pdf(xx);
  };
  check_density(qd, domain, tol);
  auto delta = [&](double x) {
    const double xx[1] = {x};
    double a[1], b[1];
    p.score_into(xx, a);
    q.score_into(xx, b);
    return a[0] - b[0];
  };
  auto f = [&](double x, double y) {
    const double w = qd(x) * qd(y);
    if (w == 0.0) return 0.0;
    const double xx[1] = {x}, yy[1] = {y};
    double kyx[1];
    K.model().values(yy, xx, kyx);
    return delta(y) * kyx[0] * delta(x) * w;
  };
  return quadrature_estimate(integrate_2d(f, domain.lo, domain.hi, domain.lo, domain.hi, {tol}), tol);
}

nlohmann::json EmbeddabilityReport::to_json() const {
  return {{"n", n},
          {"mean_sqrt_kp", mean_sqrt_kp},
          {"mean_sqrt_kp_stderr", mean_sqrt_kp_se},
          {"mean_score_norm", mean_score_norm},
          {"mean_score_norm_stderr", mean_score_norm_se},
          {"double_integral_kp", double_integral},
          {"double_integral_kp_stderr", double_integral_se},
          {"u_stat", u_stat},
          {"u_stat_stderr", u_stat_se},
          {"zero_mean_plausible", zero_mean_plausible}};
}

SampleSet draw_samples(const Target& target, std::size_t n, std::uint64_t seed) {
  if (!target.has_sampler())
    throw InputError("target family '" + std::string(to_string(target.family())) + "' has no sampler");
  if (n == 0) throw InputError("need at least one sample");
  const std::size_t d = target.dim();
  std::vector<double> pts(n * d);
  parallel::for_each(n, [&](std::size_t i) {
    Philox rng(seed, i);
    const Point x = target.sample(rng);
    std::copy(x.begin(), x.end(), pts.begin() + static_cast<std::ptrdiff_t>(i * d));
  });
  return {d, std::move(pts)};
}

namespace {

std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = pairwise_sum(v) / n;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - mean) * (v[i] - mean);
  return {mean, std::sqrt(pairwise_sum(dev) / (n - 1.0) / n)};
}

}  // namespace

EmbeddabilityReport embeddability_diagnostics(const SteinKernel& sk, std::size_t n, std::uint64_t seed) {
  if (n < 100) throw InputError("embeddability diagnostics need n >= 100");
  const SampleSet xs = draw_samples(sk.target(), n, seed);
  const SteinRows r = stein_rows(sk, xs, false);
  const std::size_t d = xs.dim();

  EmbeddabilityReport rep;
  rep.n = n;
  std::vector<double> roots(n), norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (r.diag[i] < -kNegativeSlack) throw NumericalError("k_p(x, x) is negative at sample " + std::to_string(i));
    roots[i] = std::sqrt(std::max(0.0, r.diag[i]));
    norms[i] = std::sqrt(squared_norm(Vec(r.scores.data() + i * d, d)));
  }
  std::tie(rep.mean_sqrt_kp, rep.mean_sqrt_kp_se) = mean_and_se(roots);
  std::tie(rep.mean_score_norm, rep.mean_score_norm_se) = mean_and_se(norms);

  const double nn = static_cast<double>(n);
  const double total = pairwise_sum(r.rows);
  std::vector<double> loo(n), off(n);
  for (std::size_t i = 0; i < n; ++i) {
    loo[i] = (total - 2.0 * r.rows[i] + r.diag[i]) / ((nn - 1.0) * (nn - 1.0));
    off[i] = r.rows[i] - r.diag[i];
  }
  rep.double_integral = total / (nn * nn);
  rep.double_integral_se = jackknife_se(loo);
  const double off_total = pairwise_sum(off);
  rep.u_stat = off_total / (nn * (nn - 1.0));
  for (std::size_t i = 0; i < n; ++i) loo[i] = (off_total - 2.0 * off[i]) / ((nn - 1.0) * (nn - 2.0));
  rep.u_stat_se = jackknife_se(loo);
  rep.zero_mean_plausible = std::abs(rep.double_integral) <= 3.0 * rep.double_integral_se;
  return rep;
}

namespace serial {

double ksd_v_squared(const SteinKernel& sk, const SampleSet& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) s += q.weight(i) * q.weight(j) * sk(q.point(i), q.point(j));
  return s;
}

double ksd_u_squared(const SteinKernel& sk, const SampleSet& q) {
  const std::size_t n = q.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += sk(q.point(i), q.point(j));
  return s / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double mmd_v_squared(const ScalarKernel& k, const SampleSet& q, const SampleSet& p) {
  auto block = [&](const SampleSet& a, const SampleSet& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) s += a.weight(i) * b.weight(j) * k(a.point(i), b.point(j));
    return s;
  };
  return block(q, q) - 2.0 * block(q, p) + block(p, p);
}

std::vector<double> stein_gram(const SteinKernel& sk, const SampleSet& q) {
  const std::size_t n = q.size();
  std::vector<double> h(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h[i * n + j] = sk(q.point(i), q.point(j));
  return h;
}

}  // namespace serial

}  // namespace kdisc
