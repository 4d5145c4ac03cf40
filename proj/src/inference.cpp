#include "kdisc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kdisc/reduce.hpp"

namespace kdisc {

nlohmann::json TestResult::to_json() const {
  return {{"statistic", statistic}, {"p_value", p_value},     {"alpha", alpha}, {"reject", reject},
          {"threshold", threshold}, {"n_bootstrap", n_bootstrap}, {"seed", seed}};
}

namespace {

// eps^T H eps / (n - 1) with the diagonal of H already zeroed.
double quadratic_form(const std::vector<double>& h, const std::vector<double>& eps, std::size_t n) {
  std::vector<double> row(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) buf[j] = h[i * n + j] * eps[j];
    row[i] = eps[i] * pairwise_sum(buf);
  }
  return pairwise_sum(row) / static_cast<double>(n - 1);
}

std::vector<double> rademacher_signs(std::uint64_t seed, std::size_t stream, std::size_t n) {
  Philox rng(seed, stream);
  std::vector<double> eps(n);
  for (double& e : eps) e = rng.rademacher();
  return eps;
}

}  // namespace

TestResult gof_test(const SteinKernel& sk, const SampleSet& q, double alpha, std::size_t n_bootstrap,
                    std::uint64_t seed) {
  const std::size_t n = q.size();
  if (n < 10) throw InputError("gof_test needs at least 10 samples, got " + std::to_string(n));
  if (n_bootstrap < 100) throw InputError("gof_test needs at least 100 bootstrap replicates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("gof_test: alpha must lie in (0, 1)");
  if (!q.uniform()) throw InputError("gof_test needs uniformly weighted samples");

  std::vector<double> h = stein_gram(sk, q);
  for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 0.0;
  const double observed = quadratic_form(h, std::vector<double>(n, 1.0), n);
  if (!std::isfinite(observed)) throw NumericalError("gof_test: test statistic is not finite");

  std::vector<double> boot(n_bootstrap);
  parallel::for_each(n_bootstrap, [&](std::size_t b) { boot[b] = quadratic_form(h, rademacher_signs(seed, b, n), n); });

  std::size_t exceed = 0;
  for (double t : boot) exceed += t >= observed ? 1 : 0;
  std::sort(boot.begin(), boot.end());
  const auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(n_bootstrap)));

  TestResult r;
  r.statistic = observed;
  r.p_value = static_cast<double>(exceed) / static_cast<double>(n_bootstrap);
  r.alpha = alpha;
  r.reject = r.p_value <= alpha;
  r.n_bootstrap = n_bootstrap;
  r.seed = seed;
  r.threshold = boot[std::min(n_bootstrap - 1, k == 0 ? 0 : k - 1)];
  return r;
}

std::string_view to_string(SvgdKernelChoice c) {
  return c == SvgdKernelChoice::base_kernel_on_particles ? "base_kernel_on_particles" : "bounded_stein_construction";
}

SvgdKernelChoice parse_svgd_kernel_choice(std::string_view s) {
  if (s == "base_kernel_on_particles" || s == "base") return SvgdKernelChoice::base_kernel_on_particles;
  if (s == "bounded_stein_construction" || s == "bounded") return SvgdKernelChoice::bounded_stein_construction;
  throw InputError("unknown SVGD kernel choice '" + std::string(s) + "'");
}

void SVGDConfig::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InputError("svgd step_size must be positive");
  if (kernel_choice == SvgdKernelChoice::bounded_stein_construction) tilt.validate();
}

nlohmann::json SVGDConfig::to_json() const {
  nlohmann::json j = {{"step_size", step_size},
                      {"iterations", iterations},
                      {"kernel_choice", to_string(kernel_choice)},
                      {"seed", seed}};
  if (kernel_choice == SvgdKernelChoice::bounded_stein_construction) j["tilt"] = {{"c", tilt.c}, {"gamma", tilt.gamma}};
  return j;
}

std::vector<double> svgd_direction(const Target& target, const MatrixBaseKernel& K, const SampleSet& particles) {
  const std::size_t n = particles.size(), d = particles.dim();
  const std::vector<double> s = sample_scores(target, particles);
  std::vector<double> phi(n * d);
  const double inv_n = 1.0 / static_cast<double>(n);
  parallel::for_each(n, [&](std::size_t i) {
    DiagonalTerms t(d);
    double* out = phi.data() + i * d;
    for (std::size_t j = 0; j < n; ++j) {
      K.model().diagonal(particles.point(j), particles.point(i), t);
      const double* sj = s.data() + j * d;
      for (std::size_t a = 0; a < d; ++a) out[a] += t.value[a] * sj[a] + t.dx[a];
    }
    for (std::size_t a = 0; a < d; ++a) out[a] *= inv_n;
  });
  return phi;
}

SvgdSummary summarize_particles(const SampleSet& particles) {
  const std::size_t n = particles.size(), d = particles.dim();
  SvgdSummary s;
  s.mean.assign(d, 0.0);
  s.variance.assign(d, 0.0);
  std::vector<double> col(n);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t i = 0; i < n; ++i) col[i] = particles.point(i)[a];
    const double m = pairwise_sum(col) / static_cast<double>(n);
    for (double& v : col) v = (v - m) * (v - m);
    s.mean[a] = m;
    s.variance[a] = pairwise_sum(col) / static_cast<double>(n);
  }
  return s;
}

SampleSet svgd_run(const Target& target, const SVGDConfig& config, const SampleSet& initial,
                   const std::variant<ScalarKernel, MatrixBaseKernel>& kernel, const SvgdObserver& observer) {
  config.validate();
  if (initial.dim() != target.dim()) throw InputError("svgd: initial particles and target dimensions differ");

  const MatrixBaseKernel K = std::visit(
      [&](const auto& k) -> MatrixBaseKernel {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ScalarKernel>) {
          if (config.kernel_choice == SvgdKernelChoice::bounded_stein_construction)
            return bounded_stein_base(k, config.tilt);
          return MatrixBaseKernel::promote(k);
        } else {
          if (config.kernel_choice == SvgdKernelChoice::bounded_stein_construction)
            throw InputError("svgd: the bounded construction is built from a scalar kernel");
          return k;
        }
      },
      kernel);
  if (K.dim() != target.dim()) throw InputError("svgd: kernel and target dimensions differ");

  std::vector<double> x = initial.data();
  const std::size_t d = initial.dim();
  auto report = [&](std::size_t it) {
    if (!observer) return;
    const SampleSet cur(d, x);
    SvgdSummary s = summarize_particles(cur);
    s.iteration = it;
    s.ksd = ksd_v_stat(SteinKernel(K, target), cur).value;
    observer(s);
  };

  report(0);
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    std::vector<double> phi;
    try {
      phi = svgd_direction(target, K, SampleSet(d, x));
    } catch (const NumericalError& e) {
      throw NumericalError("svgd: iteration " + std::to_string(it) + ": " + e.what());
    } catch (const InputError& e) {
      // Non-finite particles from the previous step surface as input errors.
      throw NumericalError("svgd: iteration " + std::to_string(it) + ": " + e.what());
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] += config.step_size * phi[k];
      if (!std::isfinite(x[k]))
        throw NumericalError("svgd: non-finite update at iteration " + std::to_string(it) + " (particle " +
                             std::to_string(k / d) + "); the step size is likely too large");
    }
    report(it);
  }
  return {d, std::move(x)};
}

std::vector<RankedSample> rank_samples(const SteinKernel& sk, const std::vector<SampleSet>& candidates) {
  if (candidates.empty()) throw InputError("rank_samples needs at least one candidate");
  std::vector<RankedSample> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) out.push_back({i, ksd_v_stat(sk, candidates[i])});
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedSample& a, const RankedSample& b) { return a.estimate.value < b.estimate.value; });
  return out;
}

namespace serial {

std::vector<double> svgd_direction(const Target& target, const MatrixBaseKernel& K, const SampleSet& particles) {
  const std::size_t n = particles.size(), d = particles.dim();
  std::vector<double> phi(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const DiagonalTerms t = K.diagonal_terms(particles.point(j), particles.point(i));
      const Point sj = target.score(particles.point(j));
      for (std::size_t a = 0; a < d; ++a) phi[i * d + a] += (t.value[a] * sj[a] + t.dx[a]) / static_cast<double>(n);
    }
  return phi;
}

std::vector<double> bootstrap_statistics(const std::vector<double>& gram, std::size_t n, std::size_t n_bootstrap,
                                         std::uint64_t seed) {
  std::vector<double> out(n_bootstrap);
  for (std::size_t b = 0; b < n_bootstrap; ++b) {
    const std::vector<double> eps = rademacher_signs(seed, b, n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += eps[i] * gram[i * n + j] * eps[j];
    out[b] = s / static_cast<double>(n - 1);
  }
  return out;
}

}  // namespace serial

}  // namespace kdisc
