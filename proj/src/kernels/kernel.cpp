#include "mkvlab/kernels/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mkvlab/core/errors.hpp"

namespace mkvlab {
namespace {

// (z2 + eps^2)^{a/2} with the common exponents done without pow.
double blob_power(double z2, double eps2, double a) {
  const double s = z2 + eps2;
  if (a == 1.0) return std::sqrt(s);
  if (a == 2.0) return s;
  if (a == 3.0) return s * std::sqrt(s);
  if (a == 1.5) return std::sqrt(s * std::sqrt(s));
  if (a == 2.5) return s * std::sqrt(std::sqrt(s));
  return std::pow(s, 0.5 * a);
}

// kappa z / (|z|^2 + eps^2)^{(beta+1)/2}; `where` names the singular point.
Vec riesz_term(const Vec& z, double kappa, double beta, double eps, const char* where) {
  const double z2 = norm2(z);
  if (z2 == 0.0) {
    if (eps == 0.0) throw SingularityError(std::string("kernel evaluated at its singularity (") + where + ") with epsilon = 0");
    return {};
  }
  return (kappa / blob_power(z2, eps * eps, beta + 1.0)) * z;
}

}  // namespace

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::kCoulomb: return "coulomb";
    case KernelFamily::kNewton: return "newton";
    case KernelFamily::kBiotSavart: return "biot_savart";
    case KernelFamily::kRiesz: return "riesz";
    case KernelFamily::kShiftedRiesz: return "shifted_riesz";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  for (auto f : {KernelFamily::kCoulomb, KernelFamily::kNewton, KernelFamily::kBiotSavart, KernelFamily::kRiesz,
                 KernelFamily::kShiftedRiesz})
    if (to_string(f) == name) return f;
  throw ParameterError("unknown kernel family '" + name +
                       "' (expected coulomb, newton, biot_savart, riesz or shifted_riesz)");
}

void KernelSpec::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ParameterError("kernel dimension must be 1, 2 or 3");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ParameterError("kernel epsilon must be finite and >= 0");
  if (cutoff && !(*cutoff > 0.0)) throw ParameterError("kernel cutoff must be positive");
  switch (family) {
    case KernelFamily::kBiotSavart:
      if (dim < 2) throw ParameterError("the Biot-Savart kernel needs d >= 2");
      break;
    case KernelFamily::kRiesz:
    case KernelFamily::kShiftedRiesz:
      if (kappa == 0.0 || !std::isfinite(kappa)) throw ParameterError("Riesz kernels need a finite nonzero kappa");
      if (!(beta > 0.0 && beta < dim)) throw ParameterError("Riesz kernels need beta in (0, d)");
      for (const Vec& s : shifts)
        if (!all_finite(s)) throw ParameterError("shift points must be finite");
      break;
    default:
      break;
  }
}

double KernelSpec::majorant_coefficient() const {
  switch (family) {
    case KernelFamily::kCoulomb:
    case KernelFamily::kNewton: return 1.0 / unit_sphere_area(dim);
    case KernelFamily::kBiotSavart: return dim == 2 ? 1.0 / (2.0 * std::numbers::pi) : 1.0 / unit_sphere_area(dim);
    default: return std::abs(kappa);
  }
}

double KernelSpec::majorant_exponent() const {
  switch (family) {
    case KernelFamily::kCoulomb:
    case KernelFamily::kNewton:
    case KernelFamily::kBiotSavart: return dim - 1.0;
    default: return beta;
  }
}

Vec eval_kernel(const KernelSpec& spec, const Vec& x, const Vec& y) {
  const Vec z = x - y;
  const double z2 = norm2(z);
  const double eps = spec.epsilon;
  if (spec.cutoff && z2 > *spec.cutoff * *spec.cutoff) return {};
  Vec out{};
  switch (spec.family) {
    case KernelFamily::kCoulomb:
    case KernelFamily::kNewton:
    case KernelFamily::kBiotSavart: {
      if (z2 == 0.0) {
        if (eps == 0.0) throw SingularityError("kernel evaluated at x = y with epsilon = 0");
        return {};
      }
      const double c = 1.0 / unit_sphere_area(spec.dim) / blob_power(z2, eps * eps, spec.dim);
      if (spec.family == KernelFamily::kBiotSavart && spec.dim == 2) return {-c * z[1], c * z[0], 0.0};
      out = c * z;
      if (spec.family == KernelFamily::kNewton) out = -1.0 * out;
      return out;
    }
    case KernelFamily::kRiesz: return riesz_term(z, spec.kappa, spec.beta, eps, "x = y");
    case KernelFamily::kShiftedRiesz: {
      out = riesz_term(z, spec.kappa, spec.beta, eps, "x = y");
      return out + shift_terms(spec, y);
    }
  }
  return out;
}

Vec shift_terms(const KernelSpec& spec, const Vec& y) {
  Vec out{};
  if (spec.family != KernelFamily::kShiftedRiesz) return out;
  for (const Vec& s : spec.shifts) out += riesz_term(s - y, spec.kappa, spec.beta, spec.epsilon, "y at a shift point");
  return out;
}

Vec mean_field_drift(const KernelSpec& spec, const Vec& x, const EmpiricalMeasure& measure) {
  Vec acc{};
  bool skipped = false;
  for (const Vec& y : measure.points()) {
    if (spec.epsilon == 0.0 && y == x) {
      if (skipped) throw SingularityError("two empirical points coincide with the evaluation point at epsilon = 0");
      skipped = true;
      // The self term is excluded but shift terms still see y.
      acc += shift_terms(spec, y);
      continue;
    }
    acc += eval_kernel(spec, x, y);
  }
  return (1.0 / static_cast<double>(measure.size())) * acc;
}

Vec mean_field_drift(const KernelSpec& spec, const Vec& x, const Density& measure) {
  const Grid& g = measure.grid();
  Vec acc{};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = measure[i];
    if (w == 0.0) continue;
    const Vec y = g.node(i);
    if (spec.epsilon == 0.0 && y == x) continue;
    acc += w * eval_kernel(spec, x, y);
  }
  return g.cell_volume() * acc;
}

bool KernelBound::finite() const { return std::isfinite(value); }

KernelBound kernel_bound_constant(const KernelSpec& spec, double k) {
  if (!(k > 0.0)) throw ParameterError("kernel bound exponent k must be positive");
  const int d = spec.dim;
  const double beta = spec.majorant_exponent();
  const double c = spec.majorant_coefficient();
  KernelBound out;
  out.k_upper = beta > 0.0 ? d / beta : std::numeric_limits<double>::infinity();
  if (k * beta >= d) {
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = unit_sphere_area(d) * std::pow(c, k) / (d - k * beta);
  if (spec.family == KernelFamily::kShiftedRiesz) out.value *= std::pow(spec.shifts.size() + 1.0, k);
  return out;
}

}  // namespace mkvlab
