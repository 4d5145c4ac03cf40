#include <doctest.h>

#include <cmath>

#include "kdisc/common.hpp"
#include "kdisc/quadrature.hpp"

using namespace kdisc;

TEST_SUITE("quadrature") {
  TEST_CASE("closed-form integrals on finite and infinite ranges") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 3.0) == doctest::Approx(9.0).epsilon(1e-14));
    CHECK(integrate([](double x) { return std::exp(-x * x); }, -INFINITY, INFINITY) ==
          doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, INFINITY) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::exp(x); }, -INFINITY, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return 1.0 / (1.0 + x * x); }, -INFINITY, INFINITY) ==
          doctest::Approx(M_PI).epsilon(1e-10));
    CHECK(integrate([](double x) { return x * x; }, 3.0, 0.0) == doctest::Approx(-9.0).epsilon(1e-14));
    CHECK(integrate([](double) { return 1.0; }, 2.0, 2.0) == 0.0);
  }

  TEST_CASE("integrals that cancel to zero terminate quickly") {
    const auto r = integrate_adaptive([](double x) { return std::sin(x) * std::exp(-x * x); }, -INFINITY, INFINITY);
    CHECK(std::abs(r.value) < 1e-14);
    CHECK(r.intervals < 50);
  }

  TEST_CASE("kinks are resolved adaptively") {
    const auto r = integrate_adaptive([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(0.29).epsilon(1e-10));
    CHECK(std::abs(r.value - 0.29) <= r.error);
  }

  TEST_CASE("two-dimensional integrals") {
    CHECK(integrate_2d([](double x, double y) { return std::exp(-x * x - y * y); }, -INFINITY, INFINITY, -INFINITY,
                       INFINITY) == doctest::Approx(M_PI).epsilon(1e-10));
    CHECK(integrate_2d([](double x, double y) { return std::abs(x - y); }, 0, 1, 0, 1) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(integrate_2d([](double x, double y) { return x * y * y; }, 0, 2, -1, 1) ==
          doctest::Approx(4.0 / 3.0).epsilon(1e-13));
  }

  TEST_CASE("non-finite integrands are reported") {
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / (x - x); }, 0.0, 1.0), NumericalError);
  }
}
