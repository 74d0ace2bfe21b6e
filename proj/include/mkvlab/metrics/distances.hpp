#pragma once

#include "mkvlab/measure/density.hpp"
#include "mkvlab/measure/empirical.hpp"

namespace mkvlab {

// Quadrature of |l_mu - l_nu|; in [0, 2]. Throws ShapeError on grid mismatch.
double tv_distance(const Density& mu, const Density& nu);

// Ent(mu | nu) by quadrature over nodes with l_mu > 0. Returns +inf when
// more than 1e-4 of mu's mass sits where l_nu < 1e-12 (no absolute
// continuity at grid resolution).
double relative_entropy(const Density& mu, const Density& nu);

// Exact W_q between two equal-size point clouds: sorting in d = 1, optimal
// assignment otherwise (N <= 4096).
double wasserstein_q(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double q);

}  // namespace mkvlab
