#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mkvlab/core/vec.hpp"
#include "mkvlab/measure/density.hpp"
#include "mkvlab/measure/empirical.hpp"

namespace mkvlab {

enum class KernelFamily {
  kCoulomb,       // (x - y) / (d omega_d |x - y|^d)
  kNewton,        // minus Coulomb
  kBiotSavart,    // d = 2: (x - y)^perp / (2 pi |x - y|^2); d >= 3: (x - y) / (s_{d-1} |x - y|^d)
  kRiesz,         // kappa (x - y) / |x - y|^{beta + 1}
  kShiftedRiesz,  // Riesz in x - y plus kappa (x_i - y) / |x_i - y|^{beta + 1} per shift point x_i
};

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& name);

struct KernelSpec {
  KernelFamily family = KernelFamily::kCoulomb;
  int dim = 2;
  // Blob length: every |z|^a in a denominator becomes (|z|^2 + eps^2)^{a/2}.
  double epsilon = 0.0;
  double kappa = 1.0;  // Riesz / shifted Riesz amplitude
  double beta = 1.0;   // Riesz / shifted Riesz exponent, in (0, d)
  std::vector<Vec> shifts;
  // Optional truncation: K = 0 for |x - y| > cutoff.
  std::optional<double> cutoff;

  // Throws ParameterError on inadmissible parameters.
  void validate() const;
  bool antisymmetric() const { return family != KernelFamily::kShiftedRiesz || shifts.empty(); }
  // Power-law majorant |K(x, y)| <= c / |x - y|^beta of the x - y part.
  double majorant_coefficient() const;
  double majorant_exponent() const;
};

// K(x, y). Returns zero at x = y when epsilon > 0; throws SingularityError
// there (or at a shift point) when epsilon = 0.
Vec eval_kernel(const KernelSpec& spec, const Vec& x, const Vec& y);

// The shift-point part sum_i kappa (x_i - y) / |x_i - y|^{beta + 1} of a
// shifted Riesz kernel (zero for other families).
Vec shift_terms(const KernelSpec& spec, const Vec& y);

// (1/N) sum_j K(x, y_j). With epsilon = 0 one point bit-equal to x is
// skipped (self-interaction); a second one throws SingularityError.
Vec mean_field_drift(const KernelSpec& spec, const Vec& x, const EmpiricalMeasure& measure);

// Midpoint quadrature sum_nodes K(x, node) l(node) dV; with epsilon = 0 the
// node coinciding with x is skipped.
Vec mean_field_drift(const KernelSpec& spec, const Vec& x, const Density& measure);

struct KernelBound {
  double value = 0.0;  // +inf when k * beta >= d
  double k_lower = 1.0;
  double k_upper = 0.0;  // d / beta; finiteness needs k < k_upper
  bool finite() const;
};

// Closed form of int_{B(0,1)} (c / |y|^beta)^k dy = s_{d-1} c^k / (d - k beta)
// for the kernel's majorant. Shifted Riesz with l shifts is bounded by
// (l + 1)^k times the single-term value.
KernelBound kernel_bound_constant(const KernelSpec& spec, double k);

}  // namespace mkvlab
