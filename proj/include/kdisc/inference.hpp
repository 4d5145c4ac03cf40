#pragma once

// Goodness-of-fit testing, Stein variational gradient descent and
// sample-quality ranking on top of the discrepancy estimators.

#include <cstdint>
#include <functional>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kdisc/discrepancy.hpp"

namespace kdisc {

struct TestResult {
  double statistic = 0.0;  ///< n * U-statistic
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  std::size_t n_bootstrap = 0;
  std::uint64_t seed = 0;
  double threshold = 0.0;  ///< (1 - alpha) empirical quantile of the bootstrap statistics

  nlohmann::json to_json() const;
};

/// KSD test of H0: q ~ P. Wild bootstrap with Rademacher multipliers;
/// replicate b draws its signs from Philox(seed, b).
TestResult gof_test(const SteinKernel& sk, const SampleSet& q, double alpha, std::size_t n_bootstrap,
                    std::uint64_t seed);

enum class SvgdKernelChoice { base_kernel_on_particles, bounded_stein_construction };

std::string_view to_string(SvgdKernelChoice c);
SvgdKernelChoice parse_svgd_kernel_choice(std::string_view s);

struct SVGDConfig {
  double step_size = 0.05;
  std::size_t iterations = 500;
  SvgdKernelChoice kernel_choice = SvgdKernelChoice::base_kernel_on_particles;
  std::uint64_t seed = 0;
  /// Tilt of the bounded construction; ignored for base_kernel_on_particles.
  TiltParams tilt{};

  void validate() const;
  nlohmann::json to_json() const;
};

struct SvgdSummary {
  std::size_t iteration = 0;
  Point mean;
  Point variance;  ///< per coordinate, 1/n normalization
  double ksd = 0.0;  ///< V-statistic KSD under the driving kernel
};

using SvgdObserver = std::function<void(const SvgdSummary&)>;

/// Synchronous SVGD: every particle moves by step_size * phi computed from the
/// previous iterate. With a scalar kernel and bounded_stein_construction the
/// driving kernel is bounded_stein_base(k, config.tilt). The observer, when
/// set, is called for the initial set (iteration 0) and after every iteration.
SampleSet svgd_run(const Target& target, const SVGDConfig& config, const SampleSet& initial,
                   const std::variant<ScalarKernel, MatrixBaseKernel>& kernel, const SvgdObserver& observer = {});

/// phi(x) = (1/n) sum_j [K(x_j, x) s_p(x_j) + div_{x_j} K(x_j, x)] at every particle.
std::vector<double> svgd_direction(const Target& target, const MatrixBaseKernel& K, const SampleSet& particles);

SvgdSummary summarize_particles(const SampleSet& particles);

struct RankedSample {
  std::size_t index;  ///< position in the candidate list
  DiscrepancyEstimate estimate;
};

/// Candidates ordered by V-statistic KSD ascending; ties keep input order.
std::vector<RankedSample> rank_samples(const SteinKernel& sk, const std::vector<SampleSet>& candidates);

namespace serial {

std::vector<double> svgd_direction(const Target& target, const MatrixBaseKernel& K, const SampleSet& particles);
/// Bootstrap statistics with the same sign streams as gof_test.
std::vector<double> bootstrap_statistics(const std::vector<double>& gram, std::size_t n, std::size_t n_bootstrap,
                                         std::uint64_t seed);

}  // namespace serial

}  // namespace kdisc
