#include <doctest.h>

#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "kdisc/spec_io.hpp"

using namespace kdisc;
using nlohmann::json;

TEST_SUITE("spec_io") {
  TEST_CASE("kernel specs round-trip") {
    for (const char* text : {R"({"family":"gaussian","params":{"bandwidth":0.7},"dim":2})",
                             R"({"family":"imq","params":{"c":1.5,"gamma":0.5},"dim":1})",
                             R"({"family":"matern32","params":{"bandwidth":1.0},"dim":3})",
                             R"({"family":"inverse_log","params":{"bandwidth":1.0,"offset":2.0},"dim":1})",
                             R"({"family":"sech","params":{"bandwidth":2.0},"dim":1})",
                             R"({"family":"linear","params":{},"dim":2})"}) {
      const json j = json::parse(text);
      const auto k = parse_scalar_kernel(j);
      CHECK(k.spec() == j);
      CHECK(parse_scalar_kernel(k.spec()).spec() == k.spec());
    }
    const auto t = parse_scalar_kernel(json::parse(R"({"tilt":{"c":1,"gamma":1},"base":{"family":"imq","dim":1}})"));
    CHECK(t(std::vector<double>{1.0}, std::vector<double>{1.0}) == doctest::Approx(0.25));
    CHECK(parse_scalar_kernel(t.spec()).spec() == t.spec());
  }

  TEST_CASE("kernel defaults and errors") {
    const auto k = parse_scalar_kernel(json::parse(R"({"family":"gaussian"})"), 2);
    CHECK(k.dim() == 2);
    CHECK(k.spec()["params"]["bandwidth"] == 1.0);
    CHECK_THROWS_AS(parse_scalar_kernel(json::parse(R"({"family":"gaussian"})")), InputError);
    CHECK_THROWS_AS(parse_scalar_kernel(json::parse(R"({"family":"rbf","dim":1})")), InputError);
    CHECK_THROWS_AS(parse_scalar_kernel(json::parse(R"({"family":"custom","dim":1})")), InputError);
    CHECK_THROWS_AS(parse_scalar_kernel(json::parse(R"({"family":"gaussian","dim":2})"), 1), InputError);
    CHECK_THROWS_AS(parse_scalar_kernel(json::parse(R"({"family":"gaussian","params":{"bandwidth":-1},"dim":1})")),
                    InputError);
  }

  TEST_CASE("matrix base specs") {
    const auto d = parse_matrix_base(
        json::parse(R"({"diagonal":[{"family":"gaussian","dim":2},{"family":"imq","dim":2}]})"));
    CHECK(d.dim() == 2);
    CHECK(is_matrix_kernel_spec(d.spec()));
    CHECK(parse_matrix_base(d.spec()).spec() == d.spec());
    CHECK_FALSE(is_matrix_kernel_spec(json::parse(R"({"family":"gaussian","dim":1})")));
    const auto b = bounded_stein_base(ScalarKernel::gaussian(1, 1.0), {1.0, 1.0});
    CHECK(is_matrix_kernel_spec(b.spec()));
    const auto back = parse_matrix_base(b.spec());
    const std::vector<double> x{2.0}, y{-1.0};
    CHECK(back.entries(x, y)[0] == b.entries(x, y)[0]);
  }

  TEST_CASE("target specs round-trip") {
    for (const char* text :
         {R"({"family":"gaussian","mean":[0,1],"cov_diag":[1,2]})",
          R"({"family":"gaussian_mixture","weights":[0.5,0.5],"means":[[-1],[1]],"cov_diags":[[1],[0.5]]})",
          R"({"family":"student_t","nu":3,"loc":[0],"scale":[1]})", R"({"family":"cauchy","loc":[0],"scale":[2]})"}) {
      const auto t = parse_target(json::parse(text));
      CHECK(parse_target(t.spec()).spec() == t.spec());
    }
    CHECK(parse_target(json::parse(R"({"family":"standard_normal","dim":3})")).dim() == 3);
    CHECK(parse_target(json::parse(R"({"family":"gaussian","mean":[0,0]})")).spec()["cov_diag"] == json({1.0, 1.0}));
    CHECK_THROWS_AS(parse_target(json::parse(R"({"family":"laplace"})")), InputError);
    CHECK_THROWS_AS(parse_target(json::parse(R"({"mean":[0]})")), InputError);
  }

  TEST_CASE("Stein specs") {
    const auto plain = parse_stein(json::parse(
        R"({"base":{"family":"imq","params":{"c":1,"gamma":0.5}},"target":{"family":"standard_normal","dim":1}})"));
    CHECK(plain.bounded);
    CHECK_FALSE(plain.tilt.has_value());
    const auto lin = parse_stein(json::parse(R"({"kernel":{"family":"linear"},"target":{"family":"standard_normal","dim":2}})"));
    CHECK_FALSE(lin.bounded);
    const auto tilted = parse_stein(json::parse(
        R"({"base":{"family":"gaussian"},"target":{"family":"cauchy","loc":[0],"scale":[1]},"tilt":{"c":1,"gamma":1}})"));
    REQUIRE(tilted.tilt.has_value());
    CHECK(tilted.bounded);
    CHECK(tilted.stein.base().spec().contains("bounded_stein_base"));
    CHECK_THROWS_AS(parse_stein(json::parse(R"({"base":{"family":"gaussian"}})")), InputError);
    CHECK(parse_tilt(json::object()).gamma == 1.0);
    CHECK_THROWS_AS(parse_tilt(json::parse(R"({"c":0})")), InputError);
    CHECK(parse_dissipativity(json::parse(R"({"u":0.75})")).u == 0.75);
  }

  TEST_CASE("sample CSV parsing") {
    const auto s = parse_samples_csv("1,2\n3.5,-4e-3\n\n");
    CHECK(s.size() == 2);
    CHECK(s.dim() == 2);
    CHECK(s.point(1)[1] == -4e-3);
    try {
      parse_samples_csv("1,2\n3,nan\n", "x.csv");
      FAIL("expected an error");
    } catch (const InputError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("x.csv") != std::string::npos);
      CHECK(msg.find("row 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_samples_csv("1,2\n3\n"), InputError);
    CHECK_THROWS_AS(parse_samples_csv("1,abc\n"), InputError);
    CHECK_THROWS_AS(parse_samples_csv(""), InputError);
    CHECK_THROWS_AS(read_samples_csv("/nonexistent/file.csv"), InputError);
  }

  TEST_CASE("doubles round-trip through text") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::numeric_limits<double>::denorm_min()}) {
      const std::string s = format_double(v);
      double back = 0.0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      CHECK(back == v);
    }
    CHECK(format_double(2.0) == "2");
    const auto s = SampleSet(2, {0.1, 1.0 / 3.0, -7.0, 1e-20});
    const auto back = parse_samples_csv(samples_to_csv(s));
    CHECK(back.data() == s.data());
  }

  TEST_CASE("tables") {
    const Table t{{"n", "ksd"}, {{1.0, 0.5}, {2.0, 0.25}}};
    CHECK(t.to_csv() == "n,ksd\n1,0.5\n2,0.25\n");
  }
}
