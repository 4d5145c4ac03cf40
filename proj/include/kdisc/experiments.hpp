#pragma once

// Plot-ready tables for the failure and convergence experiments.

#include <cstdint>
#include <string_view>
#include <vector>

#include "kdisc/discrepancy.hpp"
#include "kdisc/spec_io.hpp"

namespace kdisc {

struct EscapeOptions {
  std::size_t n_max = 100;
  double step = 1.0;  ///< point n sits at n * step * e_1
};

/// Point masses escaping along the first axis: columns n, point, kp_diag,
/// ksd_delta with KSD(delta_x) = sqrt(k_p(x, x)).
Table escape_sequence(const SteinKernel& sk, const EscapeOptions& opts = {});

enum class ConvergenceSequence { shrinking_shift, escaping_mixture };

ConvergenceSequence parse_convergence_sequence(std::string_view s);
std::string_view to_string(ConvergenceSequence s);

struct ConvergenceOptions {
  ConvergenceSequence sequence = ConvergenceSequence::shrinking_shift;
  std::vector<std::size_t> n_grid;
  double tol = 1e-10;
};

/// One-dimensional Gaussian target N(m, v) only. shrinking_shift uses
/// Q_n = N(m + 1/n, v); escaping_mixture uses Q_n = (1 - 1/n) P + (1/n) delta_n.
/// Columns n, ksd, wasserstein1 (exact in closed form).
Table convergence_curve(const SteinKernel& sk, const ConvergenceOptions& opts);

/// E|X - z| for X ~ N(m, v).
double gaussian_abs_moment(double m, double v, double z);

struct ScanOptions {
  std::vector<double> radii{0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  std::size_t directions = 16;
  std::uint64_t seed = 0;
};

/// k_p(x, x) over sphere points: columns radius, kp_diag_min, kp_diag_max.
Table boundedness_scan(const SteinKernel& sk, const ScanOptions& opts = {});

/// Per-radius dissipativity margins: columns radius, min_margin, min_drift
/// (-<s, x>), max_score_norm.
Table dissipativity_table(const Target& target, const DissipativityParams& params, const ScanOptions& opts = {});

}  // namespace kdisc
