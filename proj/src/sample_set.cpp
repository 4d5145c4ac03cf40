#include "kdisc/sample_set.hpp"

#include <cmath>
#include <string>

#include "kdisc/reduce.hpp"

namespace kdisc {

SampleSet::SampleSet(std::size_t dim, std::vector<double> points, std::vector<double> weights)
    : dim_(dim), points_(std::move(points)), weights_(std::move(weights)) {
  if (dim_ == 0) throw InputError("sample set dimension must be positive");
  if (points_.empty() || points_.size() % dim_ != 0)
    throw InputError("sample set needs at least one complete point");
  n_ = points_.size() / dim_;
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (!std::isfinite(points_[i]))
      throw InputError("sample set has a non-finite coordinate in row " + std::to_string(i / dim_));
  if (!weights_.empty()) {
    if (weights_.size() != n_) throw InputError("sample set needs one weight per point");
    for (double w : weights_)
      if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("sample weights must be nonnegative");
    if (std::abs(pairwise_sum(weights_) - 1.0) > 1e-12) throw InputError("sample weights must sum to 1");
  }
}

SampleSet SampleSet::from_points(const std::vector<Point>& points, std::vector<double> weights) {
  if (points.empty()) throw InputError("sample set needs at least one point");
  const std::size_t d = points.front().size();
  std::vector<double> flat;
  flat.reserve(points.size() * d);
  for (const Point& p : points) {
    if (p.size() != d) throw InputError("sample set points must share one dimension");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return {d, std::move(flat), std::move(weights)};
}

std::vector<double> SampleSet::weights() const {
  if (!weights_.empty()) return weights_;
  return std::vector<double>(n_, 1.0 / static_cast<double>(n_));
}

}  // namespace kdisc
