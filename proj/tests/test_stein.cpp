#include <doctest.h>

#include <cmath>
#include <vector>

#include "kdisc/quadrature.hpp"
#include "kdisc/stein.hpp"
#include "oracles.hpp"

using namespace kdisc;

namespace {

std::vector<Target> oracle_targets() {
  return {Target::standard_normal(1), Target::standard_normal(3), Target::cauchy({0.0}, {1.0}),
          Target::gaussian_mixture({0.4, 0.6}, {{-1.0, 0.5}, {1.5, -0.5}}, {{1.0, 0.5}, {0.6, 1.2}})};
}

double max_rel_err(const SteinKernel& sk, const std::function<double(const Point&, const Point&)>& base,
                   std::uint64_t seed) {
  const auto pts = oracle::random_points(40, sk.dim(), 2.5, seed);
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
    const Point &x = pts[i], &y = pts[i + 1];
    const double fd = oracle::fd_stein_kernel(sk.target(), base, x, y);
    // Relative to the Cauchy-Schwarz scale sqrt(k_p(x,x) k_p(y,y)), which
    // bounds |k_p(x,y)| and keeps near-zero values from dominating.
    const double scale = std::sqrt(sk.diagonal(x) * sk.diagonal(y));
    worst = std::max(worst, oracle::rel_err(sk(x, y), fd, 1e-3 * scale));
  }
  return worst;
}

}  // namespace

TEST_SUITE("stein") {
  TEST_CASE("Stein kernel matches the finite-difference definition") {
    for (const auto& p : oracle_targets()) {
      const std::size_t d = p.dim();
      for (const auto& k : {ScalarKernel::gaussian(d, 1.0), ScalarKernel::imq(d, 1.0, 0.5),
                            ScalarKernel::matern32(d, 1.5), ScalarKernel::sech(d, 1.0)}) {
        CAPTURE(p.spec().dump());
        CAPTURE(k.spec().dump());
        const auto sk = stein_kernel(k, p);
        CHECK(max_rel_err(sk, [&](const Point& a, const Point& b) { return k(a, b); }, 31) < 1e-5);
      }
    }
  }

  TEST_CASE("bounded construction matches the finite-difference definition per coordinate") {
    // For a diagonal base the operator acts coordinatewise, so the oracle sums
    // one-coordinate mixed differences of p(x) K_ii(x, y) p(y).
    for (const auto& p : oracle_targets()) {
      const auto K = bounded_stein_base(ScalarKernel::gaussian(p.dim(), 1.0), {1.0, 1.0});
      const SteinKernel sk(K, p);
      const auto pts = oracle::random_points(20, p.dim(), 2.5, 41);
      for (std::size_t n = 0; n + 1 < pts.size(); n += 2) {
        const Point &x = pts[n], &y = pts[n + 1];
        const double lx = p.log_density(x), ly = p.log_density(y);
        double fd = 0.0;
        for (std::size_t i = 0; i < p.dim(); ++i) {
          auto g = [&](const Point& a, const Point& b) {
            return std::exp(p.log_density(a) - lx) * K.entries(a, b)[i] * std::exp(p.log_density(b) - ly);
          };
          fd += oracle::fd_mixed_diag(g, x, y)[i];
        }
        const double scale = std::sqrt(sk.diagonal(x) * sk.diagonal(y));
        CHECK(oracle::rel_err(sk(x, y), fd, 1e-3 * scale) < 1e-5);
      }
    }
  }

  TEST_CASE("point mass at the mode of N(0,1) under a unit Gaussian base") {
    const auto sk = stein_kernel(ScalarKernel::gaussian(1, 1.0), Target::standard_normal(1));
    CHECK(sk.diagonal(Point{0.0}) == doctest::Approx(1.0).epsilon(1e-15));
    // k_p(x, x) = d / l^2 + |s(x)|^2 for a Gaussian base.
    CHECK(sk.diagonal(Point{3.0}) == doctest::Approx(10.0).epsilon(1e-14));
  }

  TEST_CASE("Stein kernel is symmetric") {
    const auto sk = stein_kernel(ScalarKernel::imq(2, 1.0, 0.5), Target::cauchy({0.0, 0.0}, {1.0, 2.0}));
    const auto pts = oracle::random_points(6, 2, 4.0, 1);
    for (const auto& a : pts)
      for (const auto& b : pts) CHECK(sk(a, b) == doctest::Approx(sk(b, a)).epsilon(1e-13));
  }

  TEST_CASE("Stein kernel rejects incomplete custom kernels") {
    CustomKernelOracles o;
    o.value = [](Vec, Vec) { return 1.0; };
    CHECK_THROWS_AS(stein_kernel(ScalarKernel::custom(1, o), Target::standard_normal(1)), InputError);
    CHECK_THROWS_AS(stein_kernel(ScalarKernel::gaussian(2, 1.0), Target::standard_normal(1)), InputError);
  }

  TEST_CASE("Stein operator has zero mean under the target") {
    const auto p = Target::standard_normal(1);
    VectorField v{[](Vec x, MutVec out) { out[0] = std::sin(x[0]) + x[0]; },
                  [](Vec x) { return std::cos(x[0]) + 1.0; }};
    CHECK(apply_stein_operator(p, v, Point{2.0}) == doctest::Approx(-2.0 * (std::sin(2.0) + 2.0) + std::cos(2.0) + 1.0));
    const double mean = integrate(
        [&](double x) {
          const Point pt{x};
          return apply_stein_operator(p, v, pt) * p.pdf(pt);
        },
        -INFINITY, INFINITY);
    CHECK(std::abs(mean) < 1e-12);
  }

  TEST_CASE("bounded Stein base keeps the diagonal bounded") {
    const auto p = Target::standard_normal(1);
    const SteinKernel sk(bounded_stein_base(ScalarKernel::gaussian(1, 1.0), {1.0, 1.0}), p);
    double sup10 = 0.0, sup50 = 0.0;
    for (double x = -50.0; x <= 50.0; x += 0.05) {
      const double v = sk.diagonal(Point{x});
      sup50 = std::max(sup50, v);
      if (std::abs(x) <= 10.0) sup10 = std::max(sup10, v);
    }
    CHECK(sup50 <= 2.0 * sup10);
    CHECK(sk.base().spec().contains("bounded_stein_base"));
    const auto plain = stein_kernel(ScalarKernel::gaussian(1, 1.0), p);
    double plain10 = 0.0, plain50 = 0.0;
    for (double x = -50.0; x <= 50.0; x += 0.05) {
      const double v = plain.diagonal(Point{x});
      plain50 = std::max(plain50, v);
      if (std::abs(x) <= 10.0) plain10 = std::max(plain10, v);
    }
    CHECK(plain50 >= 10.0 * plain10);
    CHECK_THROWS_AS(bounded_stein_base(ScalarKernel::gaussian(1, 1.0), {0.0, 1.0}), InputError);
  }

  TEST_CASE("score-tilted base") {
    const auto p = Target::standard_normal(2);
    const auto K = MatrixBaseKernel::promote(ScalarKernel::imq(2, 1.0, 0.5));
    ScalarField theta;
    theta.value = [](Vec x) { return std::sqrt(1.0 + squared_norm(x)); };
    theta.gradient = [](Vec x, MutVec g) {
      const double t = std::sqrt(1.0 + squared_norm(x));
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] / t;
    };
    const auto ok = score_tilted_base(K, theta, p);
    CHECK(ok.warnings.empty());
    const Point x{3.0, 4.0};
    CHECK(ok.base.entries(x, x)[0] == doctest::Approx(1.0 / 26.0).epsilon(1e-14));

    const auto weak = score_tilted_base(K, constant_field(1.0), p);
    CHECK_FALSE(weak.warnings.empty());
    CHECK_THROWS_AS(score_tilted_base(K, constant_field(0.0), p), InputError);
  }

  TEST_CASE("P-centered kernels") {
    const auto k = ScalarKernel::gaussian(1, 1.0);
    const auto c = centered_kernel(k, Target::standard_normal(1));
    // m(x) = exp(-x^2/4)/sqrt(2), mm = 1/sqrt(3) in closed form.
    CHECK(c.embedding(Point{1.0}) == doctest::Approx(std::exp(-0.25) / std::sqrt(2.0)).epsilon(1e-10));
    CHECK(c.double_integral() == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-10));
    const double centered_mean = integrate(
        [&](double y) {
          return c(Point{0.7}, Point{y}) * std::exp(-0.5 * y * y) / std::sqrt(2 * M_PI);
        },
        -INFINITY, INFINITY);
    CHECK(std::abs(centered_mean) < 1e-10);

    const auto ref = SampleSet::from_points({{-1.0}, {0.5}, {2.0}}, {0.2, 0.3, 0.5});
    const auto e = centered_kernel(k, ref);
    double s = 0.0;
    for (std::size_t j = 0; j < ref.size(); ++j) s += ref.weight(j) * e(Point{0.3}, Point{ref.point(j)[0]});
    CHECK(std::abs(s) < 1e-15);

    const auto big = SampleSet(2, [] {
      std::vector<double> v;
      for (const auto& p : oracle::random_points(40, 2, 2.0, 71)) v.insert(v.end(), p.begin(), p.end());
      return v;
    }());
    const auto ck = centered_kernel(ScalarKernel::imq(2, 1.0, 0.5), big);
    for (std::size_t i = 0; i < big.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < big.size(); ++j) row += ck(big.point(i), big.point(j));
      CHECK(std::abs(row) <= 1e-10);
    }
  }

  TEST_CASE("coercive Stein function equals the operator applied to its field") {
    const double a = 1.0, alpha = 0.2;
    for (std::size_t d : {1u, 3u}) {
      const auto p = Target::standard_normal(d);
      auto g = [&](const Point& x, std::size_t j) {
        return -x[j] * std::pow(a * a + squared_norm(x), alpha - 1.0);
      };
      for (const auto& x : oracle::random_points(10, d, 6.0, 3)) {
        VectorField v{[&](Vec xs, MutVec out) {
                        const Point pt(xs.begin(), xs.end());
                        for (std::size_t j = 0; j < d; ++j) out[j] = g(pt, j);
                      },
                      [&](Vec xs) {
                        const Point pt(xs.begin(), xs.end());
                        double div = 0.0;
                        for (std::size_t j = 0; j < d; ++j)
                          div += oracle::fd_gradient([&](const Point& z) { return g(z, j); }, pt)[j];
                        return div;
                      }};
        CHECK(oracle::rel_err(coercive_stein_function(p, a, alpha, x), apply_stein_operator(p, v, x), 1.0) < 1e-8);
      }
    }
    std::vector<std::string> warnings;
    const CoerciveExponents ex{1.0, 0.0};
    coercive_stein_function(Target::standard_normal(1), 1.0, 0.9, Point{1.0}, &ex, &warnings);
    CHECK_FALSE(warnings.empty());
  }
}
