#include "mkvlab/measure/density.hpp"

#include <cmath>
#include <string>

#include "mkvlab/core/errors.hpp"

namespace mkvlab {
namespace {

void check_values(const Grid& grid, const std::vector<double>& values) {
  if (values.size() != grid.size())
    throw ShapeError("density has " + std::to_string(values.size()) + " values for a grid of " +
                     std::to_string(grid.size()) + " nodes");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
      throw ParameterError("density value at node " + std::to_string(i) + " is negative or not finite");
}

}  // namespace

double quadrature(const Grid& grid, std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

Density::Density(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  check_values(grid_, values_);
  const double m = quadrature(grid_, values_);
  if (!(m > 0.0)) throw ParameterError("density has zero mass on its grid");
  const double inv = 1.0 / m;
  for (double& v : values_) v *= inv;
}

Density::Density(Trusted, Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {}

Density Density::from_normalized(Grid grid, std::vector<double> values, double mass_tolerance) {
  check_values(grid, values);
  const double m = quadrature(grid, values);
  if (std::abs(m - 1.0) > mass_tolerance)
    throw ParameterError("density mass " + std::to_string(m) + " is not within tolerance of 1");
  return Density(Trusted{}, std::move(grid), std::move(values));
}

Density Density::from_function(const Grid& grid, const std::function<double(const Vec&)>& f) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.node(i));
  return Density(grid, std::move(v));
}

Density Density::gaussian(const Grid& grid, const Vec& mean, const Vec& std) {
  const int d = grid.dim();
  for (int a = 0; a < d; ++a)
    if (!(std[a] > 0.0)) throw ParameterError("gaussian density needs positive standard deviations");
  return from_function(grid, [&](const Vec& x) {
    double e = 0.0;
    for (int a = 0; a < d; ++a) {
      const double z = (x[a] - mean[a]) / std[a];
      e += z * z;
    }
    return std::exp(-0.5 * e);
  });
}

double Density::mass() const { return quadrature(grid_, values_); }

}  // namespace mkvlab
