#include <doctest.h>

#include <cmath>
#include <vector>

#include "kdisc/discrepancy.hpp"
#include "kdisc/reduce.hpp"
#include "oracles.hpp"

using namespace kdisc;

namespace {

SampleSet from_1d(const std::vector<double>& xs, std::vector<double> w = {}) {
  return SampleSet(1, xs, std::move(w));
}

double normal_pdf(double x, double m, double v) { return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2 * M_PI * v); }

// Brute-force jackknife: recompute the statistic on every leave-one-out set.
double brute_jackknife_se(const std::function<double(const SampleSet&)>& stat, const SampleSet& q) {
  const std::size_t n = q.size(), d = q.dim();
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> pts;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) pts.insert(pts.end(), q.point(j).begin(), q.point(j).end());
    loo[i] = stat(SampleSet(d, pts));
  }
  double mean = 0.0;
  for (double v : loo) mean += v / double(n);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  return std::sqrt(double(n - 1) / double(n) * ss);
}

}  // namespace

TEST_SUITE("discrepancy") {
  const auto normal = Target::standard_normal(1);
  const auto gauss_sk = stein_kernel(ScalarKernel::gaussian(1, 1.0), normal);
  const auto imq_sk = stein_kernel(ScalarKernel::imq(1, 1.0, 0.5), normal);

  TEST_CASE("point mass at the mode") {
    const auto e = ksd_v_stat(gauss_sk, from_1d({0.0}));
    CHECK(e.value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.squared_value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_FALSE(e.standard_error.has_value());
    CHECK(ksd_v_stat(gauss_sk, from_1d({0.0, 0.0})).value == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("duplicating a point and halving its weight changes nothing") {
    const auto a = ksd_v_stat(imq_sk, from_1d({-0.5, 0.3, 2.0}, {0.2, 0.5, 0.3}));
    const auto b = ksd_v_stat(imq_sk, from_1d({-0.5, 0.3, 2.0, 2.0}, {0.2, 0.5, 0.15, 0.15}));
    CHECK(std::abs(a.squared_value - b.squared_value) < 1e-12);
    const auto k = ScalarKernel::gaussian(1, 1.0);
    const auto ref = from_1d({0.0, 1.0});
    CHECK(std::abs(mmd_v_stat(k, from_1d({1.0, 3.0}, {0.25, 0.75}), ref).squared_value -
                   mmd_v_stat(k, from_1d({1.0, 3.0, 3.0}, {0.25, 0.375, 0.375}), ref).squared_value) < 1e-12);
  }

  TEST_CASE("U-statistic") {
    const auto two = from_1d({0.4, -1.2});
    CHECK(ksd_u_stat(imq_sk, two).squared_value ==
          doctest::Approx(imq_sk(Point{0.4}, Point{-1.2})).epsilon(1e-15));
    CHECK_THROWS_AS(ksd_u_stat(imq_sk, from_1d({0.4})), InputError);
    CHECK_THROWS_AS(ksd_u_stat(imq_sk, from_1d({0.4, 1.0}, {0.3, 0.7})), InputError);
    const auto q = draw_samples(Target::gaussian({0.5}, {1.0}), 200, 3);
    const auto u = ksd_u_stat(imq_sk, q);
    CHECK(u.squared_value == doctest::Approx(serial::ksd_u_squared(imq_sk, q)).epsilon(1e-12));
  }

  TEST_CASE("parallel estimators agree with the naive loops and across thread counts") {
    const auto q = draw_samples(Target::gaussian({0.3, -0.2}, {1.5, 0.7}), 300, 9);
    const auto sk = stein_kernel(ScalarKernel::imq(2, 1.0, 0.5), Target::standard_normal(2));
    set_num_threads(1);
    const auto one = ksd_v_stat(sk, q);
    set_num_threads(4);
    const auto four = ksd_v_stat(sk, q);
    CHECK(one.squared_value == four.squared_value);
    CHECK(*one.standard_error == *four.standard_error);
    CHECK(one.squared_value == doctest::Approx(serial::ksd_v_squared(sk, q)).epsilon(1e-12));
    CHECK(stein_gram(sk, q) == serial::stein_gram(sk, q));
    const auto p = draw_samples(Target::standard_normal(2), 200, 10);
    const auto k = ScalarKernel::gaussian(2, 1.0);
    CHECK(mmd_v_stat(k, q, p).squared_value == doctest::Approx(serial::mmd_v_squared(k, q, p)).epsilon(1e-12));
  }

  TEST_CASE("jackknife standard errors match leave-one-out recomputation") {
    const auto q = draw_samples(Target::gaussian({0.5}, {2.0}), 25, 4);
    const auto v = ksd_v_stat(imq_sk, q);
    CHECK(*v.standard_error ==
          doctest::Approx(brute_jackknife_se([&](const SampleSet& s) { return serial::ksd_v_squared(imq_sk, s); }, q))
              .epsilon(1e-9));
    const auto u = ksd_u_stat(imq_sk, q);
    CHECK(*u.standard_error ==
          doctest::Approx(brute_jackknife_se([&](const SampleSet& s) { return serial::ksd_u_squared(imq_sk, s); }, q))
              .epsilon(1e-9));
  }

  TEST_CASE("MMD") {
    const auto k = ScalarKernel::gaussian(1, 1.0);
    const auto d01 = mmd_v_stat(k, from_1d({0.0}), from_1d({1.0}));
    CHECK(d01.squared_value == doctest::Approx(2.0 - 2.0 * std::exp(-0.5)).epsilon(1e-14));
    const auto q = draw_samples(normal, 50, 1);
    CHECK(mmd_v_stat(k, q, q).value < 1e-7);
    CHECK_THROWS_AS(mmd_v_stat(k, q, SampleSet(2, {0.0, 0.0})), InputError);
  }

  TEST_CASE("quadrature against closed forms") {
    auto q0 = [](double x) { return normal_pdf(x, 0.0, 1.0); };
    CHECK(ksd_quadrature_1d(imq_sk, q0, {-INFINITY, INFINITY}).value < 1e-6);
    // For a unit Gaussian base and P = N(0,1), KSD^2(N(mu,1)) = mu^2 / sqrt(3).
    auto q1 = [](double x) { return normal_pdf(x, 1.0, 1.0); };
    CHECK(ksd_quadrature_1d(gauss_sk, q1, {-INFINITY, INFINITY}).value ==
          doctest::Approx(1.0 / std::sqrt(std::sqrt(3.0))).epsilon(1e-8));
    double prev = 0.0;
    for (double mu : {0.5, 1.0, 2.0}) {
      auto q = [mu](double x) { return normal_pdf(x, mu, 1.0); };
      const double v = ksd_quadrature_1d(imq_sk, q, {-INFINITY, INFINITY}).value;
      CHECK(v > prev);
      CHECK(ksd_quadrature_1d(gauss_sk, q, {-INFINITY, INFINITY}).value ==
            doctest::Approx(mu / std::sqrt(std::sqrt(3.0))).epsilon(1e-8));
      prev = v;
    }
    CHECK_THROWS_AS(ksd_quadrature_1d(imq_sk, [](double) { return 1.0; }, {0.0, 2.0}), InputError);
    const auto e = ksd_quadrature_1d(imq_sk, q1, {-INFINITY, INFINITY});
    CHECK(e.to_json()["estimator"] == "quadrature");
    CHECK(e.to_json()["stderr"].is_null());
  }

  TEST_CASE("double-integral and score-difference forms agree") {
    const auto K = MatrixBaseKernel::promote(ScalarKernel::imq(1, 1.0, 0.5));
    const auto q = Target::gaussian({0.5}, {1.5});
    const double a = ksd_score_diff_quadrature(K, normal, q, {-INFINITY, INFINITY}).squared_value;
    const double b = ksd_quadrature_1d(imq_sk, [&](double x) { return q.pdf(Point{x}); }, {-INFINITY, INFINITY})
                         .squared_value;
    CHECK(a == doctest::Approx(b).epsilon(1e-7));
  }

  TEST_CASE("heavy-tailed sample distribution") {
    const auto c = Target::cauchy({0.0}, {1.0});
    const auto e = ksd_quadrature_1d(gauss_sk, [&](double x) { return c.pdf(Point{x}); }, {-INFINITY, INFINITY});
    CHECK(std::isfinite(e.value));
    CHECK(e.value > 0.0);
  }

  TEST_CASE("V-statistics are nonnegative") {
    const std::vector<Target> ps{Target::standard_normal(2), Target::cauchy({0.0, 0.0}, {1.0, 1.0}),
                                 Target::gaussian_mixture({0.5, 0.5}, {{-2.0, 0.0}, {2.0, 0.0}}, {{1.0, 1.0}, {1.0, 1.0}})};
    for (const auto& p : ps) {
      for (const auto& k : {ScalarKernel::gaussian(2, 1.0), ScalarKernel::imq(2, 1.0, 0.5), ScalarKernel::linear(2)}) {
        const auto sk = stein_kernel(k, p);
        for (int rep = 0; rep < 10; ++rep) {
          const auto pts = oracle::random_points(1 + rep * 7, 2, 5.0, 300 + rep);
          std::vector<double> flat;
          for (const auto& x : pts) flat.insert(flat.end(), x.begin(), x.end());
          CHECK(ksd_v_stat(sk, SampleSet(2, flat)).squared_value >= 0.0);
        }
      }
      const SteinKernel bounded(bounded_stein_base(ScalarKernel::gaussian(2, 1.0), {1.0, 1.0}), p);
      CHECK(ksd_v_stat(bounded, draw_samples(Target::standard_normal(2), 50, 1)).squared_value >= 0.0);
    }
  }

  TEST_CASE("large negative V-statistics are numerical errors") {
    // A negative-definite "kernel" k = -1 turns the V-statistic into -(mean score)^2.
    CustomKernelOracles o;
    o.value = [](Vec, Vec) { return -1.0; };
    o.grad_x = [](Vec, Vec, MutVec g) { g[0] = 0.0; };
    o.grad_y = [](Vec, Vec, MutVec g) { g[0] = 0.0; };
    o.mixed = [](Vec, Vec) { return 0.0; };
    const auto sk = stein_kernel(ScalarKernel::custom(1, o), normal);
    CHECK_THROWS_AS(ksd_v_stat(sk, from_1d({1.0, 2.0})), NumericalError);
  }

  TEST_CASE("embeddability diagnostics under the target") {
    const auto r = embeddability_diagnostics(imq_sk, 2000, 7);
    CHECK(r.n == 2000);
    CHECK(r.zero_mean_plausible);
    CHECK(std::abs(r.mean_score_norm - std::sqrt(2.0 / M_PI)) < 4 * r.mean_score_norm_se);
    CHECK(std::abs(r.u_stat) < 4 * r.u_stat_se);
    CHECK(r.to_json().contains("double_integral_kp"));
    CHECK_THROWS_AS(embeddability_diagnostics(imq_sk, 10, 0), InputError);
  }

  TEST_CASE("draws are reproducible and stream-indexed") {
    const auto a = draw_samples(normal, 10, 3), b = draw_samples(normal, 20, 3);
    for (std::size_t i = 0; i < 10; ++i) CHECK(a.point(i)[0] == b.point(i)[0]);
    Philox rng(3, 4);
    CHECK(a.point(4)[0] == normal.sample(rng)[0]);
  }

  TEST_CASE("estimate serialization") {
    const auto e = ksd_v_stat(imq_sk, from_1d({0.1, 0.2, 0.3}));
    const auto j = e.to_json();
    CHECK(j["estimator"] == "v_stat");
    CHECK(j["n"] == 3);
    CHECK(j["value"].get<double>() == e.value);
    CHECK(j["stderr"].is_number());
  }
}
