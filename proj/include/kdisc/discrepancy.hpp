#pragma once

// MMD and KSD estimators: V- and U-statistics over sample sets, deterministic
// 1-d quadrature oracles and Monte Carlo embeddability diagnostics.

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kdisc/kernel.hpp"
#include "kdisc/quadrature.hpp"
#include "kdisc/sample_set.hpp"
#include "kdisc/stein.hpp"
#include "kdisc/target.hpp"

namespace kdisc {

enum class Estimator { v_stat, u_stat, quadrature };

std::string_view to_string(Estimator e);

struct DiscrepancyEstimate {
  double value = 0.0;          ///< sqrt(max(0, squared_value))
  double squared_value = 0.0;  ///< may be negative for the U-statistic
  Estimator estimator = Estimator::v_stat;
  std::size_t n_points = 0;    ///< Monte Carlo estimators
  double tolerance = 0.0;      ///< quadrature
  std::optional<double> standard_error;  ///< jackknife, of squared_value

  nlohmann::json to_json() const;
};

/// Closed interval; either end may be infinite.
struct Interval {
  double lo;
  double hi;
};

/// Scores of every point, row-major n x d.
std::vector<double> sample_scores(const Target& target, const SampleSet& q);

/// Stein Gram matrix H_ij = k_p(x_i, x_j), row-major n x n.
std::vector<double> stein_gram(const SteinKernel& sk, const SampleSet& q);

/// sum_ij w_i w_j k_p(x_i, x_j). Attaches a jackknife standard error for
/// uniform weights and n >= 3.
DiscrepancyEstimate ksd_v_stat(const SteinKernel& sk, const SampleSet& q);

/// (1 / (n (n - 1))) sum_{i != j} k_p(x_i, x_j) with jackknife standard error (n >= 3).
DiscrepancyEstimate ksd_u_stat(const SteinKernel& sk, const SampleSet& q);

DiscrepancyEstimate mmd_v_stat(const ScalarKernel& k, const SampleSet& q, const SampleSet& p);

/// Double integral of k_p(x, y) q(x) q(y) over domain^2 (d = 1). The density
/// must integrate to one over the domain within 1e-6.
DiscrepancyEstimate ksd_quadrature_1d(const SteinKernel& sk, const std::function<double(double)>& q_density,
                                      Interval domain, double tol = 1e-10);

/// Double integral of (s_p - s_q)(y) K(y, x) (s_p - s_q)(x) q(x) q(y) (d = 1).
DiscrepancyEstimate ksd_score_diff_quadrature(const MatrixBaseKernel& K, const Target& p, const Target& q,
                                              Interval domain, double tol = 1e-10);

struct EmbeddabilityReport {
  std::size_t n = 0;
  double mean_sqrt_kp = 0.0;
  double mean_sqrt_kp_se = 0.0;
  double mean_score_norm = 0.0;
  double mean_score_norm_se = 0.0;
  /// V-statistic of k_p under P-samples and its jackknife standard error.
  double double_integral = 0.0;
  double double_integral_se = 0.0;
  /// Unbiased counterpart, reported alongside.
  double u_stat = 0.0;
  double u_stat_se = 0.0;
  bool zero_mean_plausible = false;

  nlohmann::json to_json() const;
};

/// Monte Carlo embeddability checks under n samples of the target. Point i is
/// drawn from Philox(seed, i).
EmbeddabilityReport embeddability_diagnostics(const SteinKernel& sk, std::size_t n, std::uint64_t seed);

/// n i.i.d. draws from the target; point i uses stream i of the seed.
SampleSet draw_samples(const Target& target, std::size_t n, std::uint64_t seed);

namespace serial {

/// Naive double loops, kept as references for the tests and benchmarks.
double ksd_v_squared(const SteinKernel& sk, const SampleSet& q);
double ksd_u_squared(const SteinKernel& sk, const SampleSet& q);
double mmd_v_squared(const ScalarKernel& k, const SampleSet& q, const SampleSet& p);
std::vector<double> stein_gram(const SteinKernel& sk, const SampleSet& q);

}  // namespace serial

}  // namespace kdisc
