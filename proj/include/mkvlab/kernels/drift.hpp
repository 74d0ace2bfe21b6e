#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mkvlab/kernels/kernel.hpp"

namespace mkvlab {

using Mat3 = std::array<Vec, kMaxDim>;  // rows

inline Vec mat_vec(const Mat3& a, const Vec& x) { return {dot(a[0], x), dot(a[1], x), dot(a[2], x)}; }

// b1(t, x) = A x + offset. The Frobenius norm of A bounds its Lipschitz
// constant. Strict mode additionally asks b1(t, 0) = 0, i.e. offset = 0.
struct LinearDrift {
  Mat3 matrix{};
  Vec offset{};

  static LinearDrift ornstein_uhlenbeck(int dim, double rate);
  double lipschitz_constant() const;
  Vec operator()(const Vec& x) const { return mat_vec(matrix, x) + offset; }
};

// coefficient * (x - centre) / (|x - centre|^2 + eps^2)^{(beta + 1)/2}, a
// locally integrable singular drift declared to lie in L^{q'}_{p'}.
struct RadialPowerTerm {
  double coefficient = 1.0;
  double beta = 0.5;
  Vec centre{};
  double epsilon = 0.0;
  double p_prime = 0.0;
  double q_prime = 0.0;

  Vec operator()(const Vec& x) const;
};

struct MeanFieldTerm {
  KernelSpec kernel;
  double coupling = 1.0;
};

// b = b0 + b1 + sum_i b^(i).
struct DriftSpec {
  std::optional<MeanFieldTerm> b0;
  std::optional<LinearDrift> b1;
  std::vector<RadialPowerTerm> extra_singular;
  bool strict_linear = false;

  // Checks the kernel, each declared pair d/p' + 2/q' < 1 with beta p' < d,
  // and b1(t, 0) = 0 when strict_linear. Throws ParameterError.
  void validate(int dim) const;
  bool measure_dependent() const { return b0.has_value() && b0->coupling != 0.0; }
};

// b1(t, x) + sum_i b^(i)(t, x): the part that does not read the measure.
Vec local_drift(const DriftSpec& drift, double t, const Vec& x);

Vec assemble_drift(const DriftSpec& drift, double t, const Vec& x, const EmpiricalMeasure& measure);
Vec assemble_drift(const DriftSpec& drift, double t, const Vec& x, const Density& measure);

}  // namespace mkvlab
