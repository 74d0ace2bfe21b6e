#include "mkvlab/measure/empirical.hpp"

#include <cmath>
#include <string>

#include "mkvlab/core/errors.hpp"

namespace mkvlab {

EmpiricalMeasure::EmpiricalMeasure(int dim, std::vector<Vec> points) : dim_(dim), points_(std::move(points)) {
  if (dim < 1 || dim > kMaxDim) throw ParameterError("empirical measure dimension must be 1, 2 or 3");
  if (points_.empty()) throw ParameterError("empirical measure needs at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (int a = dim; a < kMaxDim; ++a) points_[i][a] = 0.0;
    if (!all_finite(points_[i])) throw ParameterError("point " + std::to_string(i) + " has a non-finite coordinate");
  }
}

Vec EmpiricalMeasure::mean() const {
  Vec m{};
  for (const Vec& p : points_) m += p;
  return (1.0 / static_cast<double>(points_.size())) * m;
}

Vec EmpiricalMeasure::stddev() const {
  Vec s{};
  const std::size_t n = points_.size();
  if (n < 2) return s;
  const Vec m = mean();
  for (const Vec& p : points_)
    for (int a = 0; a < dim_; ++a) s[a] += (p[a] - m[a]) * (p[a] - m[a]);
  for (int a = 0; a < dim_; ++a) s[a] = std::sqrt(s[a] / static_cast<double>(n - 1));
  return s;
}

}  // namespace mkvlab
