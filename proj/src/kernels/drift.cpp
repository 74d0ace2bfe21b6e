#include "mkvlab/kernels/drift.hpp"

#include <cmath>
#include <string>

#include "mkvlab/core/errors.hpp"

namespace mkvlab {

LinearDrift LinearDrift::ornstein_uhlenbeck(int dim, double rate) {
  LinearDrift b;
  for (int a = 0; a < dim; ++a) b.matrix[a][a] = -rate;
  return b;
}

double LinearDrift::lipschitz_constant() const {
  double s = 0.0;
  for (const Vec& row : matrix) s += norm2(row);
  return std::sqrt(s);
}

Vec RadialPowerTerm::operator()(const Vec& x) const {
  const Vec z = x - centre;
  const double s = norm2(z) + epsilon * epsilon;
  if (s == 0.0) throw SingularityError("radial power drift evaluated at its centre with epsilon = 0");
  return (coefficient / std::pow(s, 0.5 * (beta + 1.0))) * z;
}

void DriftSpec::validate(int dim) const {
  if (b0) {
    b0->kernel.validate();
    if (b0->kernel.dim != dim) throw ParameterError("kernel dimension differs from the SDE dimension");
    if (!std::isfinite(b0->coupling)) throw ParameterError("mean-field coupling must be finite");
  }
  if (b1) {
    for (int a = 0; a < kMaxDim; ++a) {
      if (!all_finite(b1->matrix[a])) throw ParameterError("b1 matrix entries must be finite");
      for (int c = 0; c < kMaxDim; ++c)
        if ((a >= dim || c >= dim) && b1->matrix[a][c] != 0.0)
          throw ParameterError("b1 matrix has entries outside the first d rows/columns");
    }
    if (strict_linear && b1->offset != Vec{}) throw ParameterError("strict_linear drift needs b1(t, 0) = 0 (offset must be zero)");
  }
  for (std::size_t i = 0; i < extra_singular.size(); ++i) {
    const auto& e = extra_singular[i];
    const std::string tag = "extra singular drift " + std::to_string(i) + ": ";
    if (!(e.p_prime > 0.0 && e.q_prime > 0.0))
      throw ParameterError(tag + "declare positive integrability exponents p' and q'");
    const double lhs = dim / e.p_prime + 2.0 / e.q_prime;
    if (!(lhs < 1.0))
      throw ParameterError(tag + "d/p' + 2/q' = " + std::to_string(lhs) + " must be < 1");
    if (!(e.beta * e.p_prime < dim))
      throw ParameterError(tag + "|x|^-beta is not locally L^p' (beta p' = " + std::to_string(e.beta * e.p_prime) +
                           " >= d)");
    if (!(e.epsilon >= 0.0)) throw ParameterError(tag + "epsilon must be >= 0");
  }
}

Vec local_drift(const DriftSpec& drift, double /*t*/, const Vec& x) {
  Vec out{};
  if (drift.b1) out += (*drift.b1)(x);
  for (const auto& e : drift.extra_singular) out += e(x);
  return out;
}

Vec assemble_drift(const DriftSpec& drift, double t, const Vec& x, const EmpiricalMeasure& measure) {
  Vec out = local_drift(drift, t, x);
  if (drift.b0) out += drift.b0->coupling * mean_field_drift(drift.b0->kernel, x, measure);
  return out;
}

Vec assemble_drift(const DriftSpec& drift, double t, const Vec& x, const Density& measure) {
  Vec out = local_drift(drift, t, x);
  if (drift.b0) out += drift.b0->coupling * mean_field_drift(drift.b0->kernel, x, measure);
  return out;
}

}  // namespace mkvlab
