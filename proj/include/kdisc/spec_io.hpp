#pragma once

// JSON specs for kernels, targets and Stein kernels, plus the CSV wire
// formats (headerless samples in, headed tables out).

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kdisc/sample_set.hpp"
#include "kdisc/stein.hpp"
#include "kdisc/target.hpp"

namespace kdisc {

/// {"family": "imq", "params": {"c": 1, "gamma": 0.5}, "dim": 1} or
/// {"tilt": {"c": 1, "gamma": 1}, "base": {...}}. "dim" may be omitted when
/// `default_dim` is given.
ScalarKernel parse_scalar_kernel(const nlohmann::json& j, std::optional<std::size_t> default_dim = {});

/// A scalar kernel spec (promoted to k Id), {"diagonal": [...]},
/// {"tilt": ..., "base": {"diagonal": ...}} or
/// {"bounded_stein_base": {"base": ..., "tilt": ...}}.
MatrixBaseKernel parse_matrix_base(const nlohmann::json& j, std::optional<std::size_t> default_dim = {});

/// True for the matrix-only forms accepted by parse_matrix_base.
bool is_matrix_kernel_spec(const nlohmann::json& j);

/// {"family": "gaussian", "mean": [...], "cov_diag": [...]},
/// {"family": "gaussian_mixture", "weights": [...], "means": [[...]], "cov_diags": [[...]]},
/// {"family": "student_t", "nu": 3, "loc": [...], "scale": [...]},
/// {"family": "cauchy", "loc": [...], "scale": [...]}.
Target parse_target(const nlohmann::json& j);

TiltParams parse_tilt(const nlohmann::json& j);
DissipativityParams parse_dissipativity(const nlohmann::json& j);

struct SteinSpec {
  std::optional<ScalarKernel> kernel;  ///< scalar base as given, absent for matrix specs
  std::optional<TiltParams> tilt;      ///< present: bounded construction
  bool bounded = false;                ///< whether the driving base kernel is bounded
  SteinKernel stein;
};

/// {"base": kernel, "target": target, "tilt": {"c": 1, "gamma": 1}}; with a
/// tilt the base becomes bounded_stein_base(kernel, tilt). "kernel" is
/// accepted as an alias of "base".
SteinSpec parse_stein(const nlohmann::json& j);

/// Headerless CSV, one point per row. Throws InputError naming the row of a
/// malformed or non-finite entry.
SampleSet read_samples_csv(const std::string& path);
SampleSet parse_samples_csv(const std::string& text, const std::string& source = "<input>");
std::string samples_to_csv(const SampleSet& s);

/// Shortest round-trip decimal form.
std::string format_double(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::string to_csv() const;
};

}  // namespace kdisc
