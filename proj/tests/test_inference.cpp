#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kdisc/inference.hpp"
#include "oracles.hpp"

using namespace kdisc;

TEST_SUITE("inference") {
  const auto normal = Target::standard_normal(1);
  const auto imq_sk = stein_kernel(ScalarKernel::imq(1, 1.0, 0.5), normal);

  TEST_CASE("test argument validation") {
    const auto q = draw_samples(normal, 50, 1);
    CHECK_THROWS_AS(gof_test(imq_sk, draw_samples(normal, 5, 1), 0.05, 500, 0), InputError);
    CHECK_THROWS_AS(gof_test(imq_sk, q, 0.05, 50, 0), InputError);
    CHECK_THROWS_AS(gof_test(imq_sk, q, 1.5, 500, 0), InputError);
    CHECK_THROWS_AS(gof_test(imq_sk, SampleSet(1, std::vector<double>(20, 0.1), std::vector<double>(20, 0.05)),
                             0.05, 500, 0),
                    InputError);
  }

  TEST_CASE("test statistic and p-value agree with the serial bootstrap") {
    const auto q = draw_samples(Target::gaussian({0.3}, {1.0}), 80, 2);
    const auto r = gof_test(imq_sk, q, 0.1, 400, 17);
    const auto gram = serial::stein_gram(imq_sk, q);
    double off = 0.0;
    for (std::size_t i = 0; i < 80; ++i)
      for (std::size_t j = 0; j < 80; ++j)
        if (i != j) off += gram[i * 80 + j];
    CHECK(r.statistic == doctest::Approx(off / 79.0).epsilon(1e-12));
    const auto boot = serial::bootstrap_statistics(gram, 80, 400, 17);
    const double exceed = double(std::count_if(boot.begin(), boot.end(), [&](double b) { return b >= r.statistic; }));
    CHECK(r.p_value == doctest::Approx(exceed / 400.0).epsilon(1e-12));
    CHECK(r.reject == (r.p_value <= r.alpha));
    CHECK(r.n_bootstrap == 400);
    const auto again = gof_test(imq_sk, q, 0.1, 400, 17);
    CHECK(again.p_value == r.p_value);
    CHECK(again.threshold == r.threshold);
    CHECK(r.to_json()["p_value"].get<double>() == r.p_value);
  }

  TEST_CASE("null p-values are roughly uniform") {
    const int reps = 200;
    std::vector<double> ps;
    for (int rep = 0; rep < reps; ++rep)
      ps.push_back(gof_test(imq_sk, draw_samples(normal, 200, 1000 + rep), 0.05, 200, rep).p_value);
    std::sort(ps.begin(), ps.end());
    double ks = 0.0;
    for (int i = 0; i < reps; ++i)
      ks = std::max({ks, std::abs(ps[i] - double(i) / reps), std::abs(ps[i] - double(i + 1) / reps)});
    CHECK(ks <= 0.15);
  }

  TEST_CASE("svgd direction agrees with the serial reference") {
    const auto p = Target::gaussian_mixture({0.5, 0.5}, {{-1.0, 0.0}, {1.0, 0.5}}, {{1.0, 1.0}, {0.5, 0.5}});
    const auto parts = draw_samples(Target::standard_normal(2), 40, 3);
    for (const auto& K : {MatrixBaseKernel::promote(ScalarKernel::gaussian(2, 1.0)),
                          bounded_stein_base(ScalarKernel::imq(2, 1.0, 0.5), {1.0, 1.0})}) {
      const auto a = svgd_direction(p, K, parts), b = serial::svgd_direction(p, K, parts);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("svgd is translation equivariant") {
    const auto k = ScalarKernel::gaussian(1, 1.0);
    const auto init = draw_samples(Target::gaussian({1.0}, {0.5}), 30, 5);
    std::vector<double> shifted = init.data();
    for (double& v : shifted) v += 4.0;
    SVGDConfig cfg;
    cfg.iterations = 50;
    const auto a = svgd_run(normal, cfg, init, k);
    const auto b = svgd_run(Target::gaussian({4.0}, {1.0}), cfg, SampleSet(1, shifted), k);
    for (std::size_t i = 0; i < 30; ++i) CHECK(std::abs(a.point(i)[0] + 4.0 - b.point(i)[0]) < 1e-8);
  }

  TEST_CASE("svgd special cases") {
    const auto k = ScalarKernel::gaussian(1, 1.0);
    const auto init = draw_samples(Target::gaussian({3.0}, {0.25}), 20, 1);
    SVGDConfig cfg;
    cfg.iterations = 0;
    CHECK(svgd_run(normal, cfg, init, k).data() == init.data());

    cfg.iterations = 100;
    const auto sym = svgd_run(normal, cfg, SampleSet(1, {-1.5, 1.5}), k);
    CHECK(std::abs(sym.point(0)[0] + sym.point(1)[0]) < 1e-14);

    std::vector<std::size_t> seen;
    svgd_run(normal, cfg, init, k, [&](const SvgdSummary& s) { seen.push_back(s.iteration); });
    CHECK(seen.size() == 101);
    CHECK(seen.front() == 0);
    CHECK(seen.back() == 100);

    SVGDConfig bounded = cfg;
    bounded.kernel_choice = SvgdKernelChoice::bounded_stein_construction;
    const auto out = svgd_run(normal, bounded, init, k);
    CHECK(summarize_particles(out).mean[0] < summarize_particles(init).mean[0]);
    CHECK_THROWS_AS(svgd_run(normal, bounded, init, MatrixBaseKernel::promote(k)), InputError);
  }

  TEST_CASE("svgd divergence names the iteration") {
    // A huge step on a very narrow target overflows within a few iterations.
    const auto narrow = Target::gaussian({0.0}, {1e-150});
    SVGDConfig cfg;
    cfg.step_size = 1e10;
    cfg.iterations = 50;
    try {
      svgd_run(narrow, cfg, SampleSet(1, {1.0, 2.0}), ScalarKernel::gaussian(1, 1.0));
      FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("iteration") != std::string::npos);
    }
    SVGDConfig bad;
    bad.step_size = -1.0;
    CHECK_THROWS_AS(bad.validate(), InputError);
  }

  TEST_CASE("svgd transports a shifted cloud to N(0,1)") {
    SVGDConfig cfg;
    const auto out = svgd_run(normal, cfg, draw_samples(Target::gaussian({3.0}, {0.25}), 100, 0),
                              ScalarKernel::gaussian(1, 1.0));
    const auto s = summarize_particles(out);
    CHECK(std::abs(s.mean[0]) < 0.1);
    CHECK(std::abs(s.variance[0] - 1.0) < 0.2);
  }

  TEST_CASE("summaries") {
    const auto s = summarize_particles(SampleSet(2, {0.0, 1.0, 2.0, 3.0}));
    CHECK(s.mean == Point{1.0, 2.0});
    CHECK(s.variance == Point{1.0, 1.0});
  }

  TEST_CASE("ranking") {
    const auto one = rank_samples(imq_sk, {SampleSet(1, {0.5})});
    REQUIRE(one.size() == 1);
    CHECK(one[0].index == 0);
    const auto c = SampleSet(1, {0.1, -0.3});
    const auto tied = rank_samples(imq_sk, {c, SampleSet(1, {2.0}), c});
    CHECK(tied[0].index == 0);
    CHECK(tied[1].index == 2);
    CHECK(tied[2].index == 1);
    CHECK_THROWS_AS(rank_samples(imq_sk, {}), InputError);

    std::vector<SampleSet> cands;
    for (int i = 0; i < 6; ++i) cands.push_back(draw_samples(Target::gaussian({0.4 * i}, {1.0}), 60, 40 + i));
    cands.push_back(cands[2]);
    const auto base_order = rank_samples(imq_sk, cands);
    const std::vector<std::size_t> perm{4, 6, 0, 3, 1, 5, 2};
    std::vector<SampleSet> shuffled;
    for (std::size_t i : perm) shuffled.push_back(cands[i]);
    const auto perm_order = rank_samples(imq_sk, shuffled);
    for (std::size_t r = 0; r < cands.size(); ++r)
      CHECK(perm_order[r].estimate.squared_value == base_order[r].estimate.squared_value);

    int first = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const auto on = draw_samples(normal, 500, 2 * rep);
      const auto off = draw_samples(Target::gaussian({2.0}, {1.0}), 500, 2 * rep + 1);
      first += rank_samples(imq_sk, {off, on})[0].index == 1;
    }
    CHECK(first >= 95);
  }
}
