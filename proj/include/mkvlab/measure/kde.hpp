#pragma once

#include "mkvlab/measure/density.hpp"
#include "mkvlab/measure/empirical.hpp"

namespace mkvlab {

// Per-axis bandwidths of a product Gaussian kernel.
using Bandwidth = Vec;

// Gaussian-kernel density estimate of `sample` on `grid`, renormalized to
// unit quadrature mass. Every sample point x must satisfy
// [x - 3h, x + 3h] inside the grid's cell domain; violations throw
// CoverageError listing the offending point indices. Bit-identical under
// any thread count.
Density kde_estimate(const EmpiricalMeasure& sample, const Grid& grid, const Bandwidth& h);
Density kde_estimate(const EmpiricalMeasure& sample, const Grid& grid, double h);

// h_a = sd_a * n^{-1/(d+4)}, floored at `floor` on every axis.
Bandwidth silverman_bandwidth(const EmpiricalMeasure& sample, double floor = 0.0);

struct AutoGridOptions {
  double half_width_floor = 1.0;
  std::size_t nodes_per_axis = 0;  // 0: default_nodes_per_axis(d)
  double coverage_bandwidths = 3.0;
};

// [-L, L]^d with L = max(4 * max_a sd_a, max_i |x_i|_inf + 3 h_max, floor).
Grid auto_grid(const EmpiricalMeasure& sample, const Bandwidth& h, const AutoGridOptions& opts = {});

}  // namespace mkvlab
