#pragma once

#include <cstddef>
#include <vector>

#include "kdisc/common.hpp"

namespace kdisc {

/// n points in R^d stored row-major, with optional weights summing to one.
class SampleSet {
 public:
  SampleSet(std::size_t dim, std::vector<double> points, std::vector<double> weights = {});
  static SampleSet from_points(const std::vector<Point>& points, std::vector<double> weights = {});

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }
  Vec point(std::size_t i) const { return {points_.data() + i * dim_, dim_}; }
  double weight(std::size_t i) const { return weights_.empty() ? 1.0 / static_cast<double>(n_) : weights_[i]; }
  bool uniform() const { return weights_.empty(); }
  const std::vector<double>& data() const { return points_; }
  const std::vector<double>& explicit_weights() const { return weights_; }
  std::vector<double> weights() const;

 private:
  std::size_t dim_;
  std::size_t n_;
  std::vector<double> points_;
  std::vector<double> weights_;  // empty means uniform
};

}  // namespace kdisc
