#pragma once

#include <cstddef>
#include <vector>

#include "mkvlab/core/vec.hpp"

namespace mkvlab {

// N equally weighted points in R^d.
class EmpiricalMeasure {
 public:
  // Throws ParameterError when points is empty, dim is out of range, or a
  // coordinate is not finite.
  EmpiricalMeasure(int dim, std::vector<Vec> points);

  int dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const Vec& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Vec>& points() const { return points_; }

  Vec mean() const;
  // Per-axis sample standard deviation (n - 1 denominator; 0 when N = 1).
  Vec stddev() const;

  bool operator==(const EmpiricalMeasure& other) const = default;

 private:
  int dim_;
  std::vector<Vec> points_;
};

}  // namespace mkvlab
