#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kdisc {

using Vec = std::span<const double>;
using MutVec = std::span<double>;
using Point = std::vector<double>;

/// Malformed input: bad parameters, dimension mismatch, unparsable specs.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite or internally inconsistent value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dot(Vec a, Vec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(Vec a) { return dot(a, a); }

inline double squared_distance(Vec a, Vec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline bool all_finite(Vec a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_dim(Vec x, std::size_t d, const char* what) {
  if (x.size() != d)
    throw InputError(std::string(what) + ": expected dimension " + std::to_string(d) + ", got " +
                     std::to_string(x.size()));
}

}  // namespace kdisc
