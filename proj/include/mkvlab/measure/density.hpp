#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mkvlab/measure/grid.hpp"

namespace mkvlab {

// Nonnegative grid function with unit midpoint-quadrature mass: the
// discretized Lebesgue density of a probability measure.
class Density {
 public:
  // Validates nonnegativity and rescales to unit mass. Throws
  // ParameterError on negative/non-finite values or zero mass.
  Density(Grid grid, std::vector<double> values);

  // Samples f at every node and normalizes.
  static Density from_function(const Grid& grid, const std::function<double(const Vec&)>& f);

  // Product Gaussian N(mean, diag(std^2)) evaluated on the grid.
  static Density gaussian(const Grid& grid, const Vec& mean, const Vec& std);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double mass() const;

  // Raw constructor for values already known to be a valid unit-mass
  // density (deserialization); still checks the invariants.
  static Density from_normalized(Grid grid, std::vector<double> values, double mass_tolerance = 1e-6);

 private:
  struct Trusted {};
  Density(Trusted, Grid grid, std::vector<double> values);

  Grid grid_;
  std::vector<double> values_;
};

// Midpoint quadrature of values over the grid.
double quadrature(const Grid& grid, std::span<const double> values);

}  // namespace mkvlab
