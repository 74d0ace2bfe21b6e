#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/sde/sde.hpp"

namespace mkvlab {
namespace {

void check_eigenvalues(const Mat3& s, int d, int m, const std::pair<double, double>& bounds) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < m; ++l) a(i, j) += s[i][l] * s[j][l];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.topLeftCorner(d, d));
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  constexpr double slack = 1e-12;
  if (lo < bounds.first * (1 - slack) || hi > bounds.second * (1 + slack))
    throw ParameterError("eigenvalues of sigma sigma^T span [" + std::to_string(lo) + ", " + std::to_string(hi) +
                         "], outside the declared ellipticity bounds [" + std::to_string(bounds.first) + ", " +
                         std::to_string(bounds.second) + "]");
}

}  // namespace

DiffusionSpec DiffusionSpec::constant(int dim, double scale) {
  DiffusionSpec s;
  s.matrix = {};
  for (int a = 0; a < dim; ++a) s.matrix[a][a] = scale;
  return s;
}

Mat3 DiffusionSpec::at(const Vec& x) const {
  if (form == Form::kConstant) return matrix;
  Mat3 out{};
  for (int a = 0; a < kMaxDim; ++a) out[a][a] = base + slope * std::clamp(x[a], -clamp_radius, clamp_radius);
  return out;
}

void DiffusionSpec::validate(int dim) const {
  const int m = noise_axes(dim);
  if (m < 1 || m > kMaxDim) throw ParameterError("noise dimension must be 1, 2 or 3");
  if (ellipticity) {
    const auto [lo, hi] = *ellipticity;
    if (!(lo > 0.0 && hi >= lo && std::isfinite(hi)))
      throw ParameterError("ellipticity bounds need 0 < lambda_min <= lambda_max < inf");
  }
  if (form == Form::kConstant) {
    for (int a = 0; a < kMaxDim; ++a)
      for (int c = 0; c < kMaxDim; ++c) {
        if (!std::isfinite(matrix[a][c])) throw ParameterError("sigma entries must be finite");
        if ((a >= dim || c >= m) && matrix[a][c] != 0.0)
          throw ParameterError("sigma has entries outside its d x m block");
      }
    if (ellipticity) check_eigenvalues(matrix, dim, m, *ellipticity);
    return;
  }
  if (m != dim) throw ParameterError("diagonal-affine sigma needs as many noise axes as dimensions");
  if (!(clamp_radius > 0.0) || !std::isfinite(base) || !std::isfinite(slope))
    throw ParameterError("diagonal-affine sigma needs finite base/slope and a positive clamp radius");
  const double lo = base - std::abs(slope) * clamp_radius;
  const double hi = base + std::abs(slope) * clamp_radius;
  if (ellipticity) {
    // The diagonal entries range over [lo, hi]; sigma sigma^T has entries squared.
    if (lo <= 0.0) throw ParameterError("diagonal-affine sigma is not bounded away from zero");
    for (double v : {lo, hi}) {
      Mat3 probe{};
      for (int a = 0; a < dim; ++a) probe[a][a] = v;
      check_eigenvalues(probe, dim, m, *ellipticity);
    }
  }
}

}  // namespace mkvlab
