#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mkvlab/measure/density.hpp"

namespace mkvlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Exponent k of the localized L^k test-function ball (k > 1, or +inf) and
// radius r of the lattice balls B(z, r), z in Z^d. An unset radius means
// sqrt(d), the smallest radius whose lattice balls cover R^d.
struct KStarParams {
  double k = 2.0;
  std::optional<double> r;

  double radius(int dim) const;
  // Throws ParameterError unless k > 1 (or inf) and r >= sqrt(d).
  void validate(int dim) const;
};

// Hoelder conjugate k / (k - 1) of k; 1 when k is infinite.
double k_star_dual_exponent(double k);

struct CoveringConstants {
  // Max number of lattice balls B(z, r) meeting a unit ball.
  int lattice_balls_per_unit_ball = 0;
  // Number of unit balls that suffice to cover one B(z, r).
  int unit_balls_per_lattice_ball = 0;
  // The larger of the two: the two-sided constant between the lattice sum
  // and the dual norm.
  int c_of_r = 0;
};

// Computed by explicit enumeration; results are cached per (d, r).
CoveringConstants covering_constants(int dim, double r);

// Number of closed lattice balls B(z, r) containing each grid node.
std::vector<int> lattice_multiplicity(const Grid& grid, double r);

// Sum over lattice points z of || f 1_{B(z,r)} ||_{L^{k'}}, k' = k/(k-1),
// for a grid function f (absolute values are taken). Only balls meeting
// the grid's node box contribute.
double kstar_lattice_sum(const Grid& grid, std::span<const double> values, const KStarParams& params);

double kstar_norm_surrogate(const Density& mu, const KStarParams& params);

// Lattice sum of |l_mu - l_nu|. Throws ShapeError when the grids differ.
double kstar_distance(const Density& mu, const Density& nu, const KStarParams& params);

struct DualOracleOptions {
  double relative_tolerance = 1e-4;
  int max_iterations = 200000;
};

struct DualOracleResult {
  double value = 0.0;        // feasible primal value (lower bound)
  double upper_bound = 0.0;  // dual objective at the final multipliers
  int iterations = 0;
};

// Maximizes sum_i f_i l_i dV over f >= 0 subject to sum_{i in B(x_j,1)} f_i^k dV <= 1
// for every grid node x_j, by multiplicative updates on the constraint
// multipliers. Only d <= 2 and at most 256 nodes per axis. The lattice
// radius in params is ignored. Throws NonConvergenceError carrying the
// best bounds when the duality gap does not close.
DualOracleResult kstar_norm_dual_oracle_detail(const Density& mu, const KStarParams& params,
                                               const DualOracleOptions& opts = {});
double kstar_norm_dual_oracle(const Density& mu, const KStarParams& params, const DualOracleOptions& opts = {});

}  // namespace mkvlab
