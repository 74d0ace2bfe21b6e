#include "mkvlab/metrics/distances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/metrics/assignment.hpp"

namespace mkvlab {
namespace {

void require_shared_grid(const Density& mu, const Density& nu, const char* what) {
  if (!(mu.grid() == nu.grid())) throw ShapeError(std::string(what) + " needs both densities on one grid");
}

constexpr std::size_t kMaxAssignment = 4096;

}  // namespace

double tv_distance(const Density& mu, const Density& nu) {
  require_shared_grid(mu, nu, "total variation");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.grid().size(); ++i) acc += std::abs(mu[i] - nu[i]);
  return acc * mu.grid().cell_volume();
}

double relative_entropy(const Density& mu, const Density& nu) {
  require_shared_grid(mu, nu, "relative entropy");
  const double cv = mu.grid().cell_volume();
  double ent = 0.0;
  double stranded = 0.0;
  for (std::size_t i = 0; i < mu.grid().size(); ++i) {
    const double a = mu[i];
    if (a <= 0.0) continue;
    const double b = nu[i];
    if (b < 1e-12) stranded += a * cv;
    ent += a * std::log(a / std::max(b, 1e-300));
  }
  if (stranded > 1e-4) return std::numeric_limits<double>::infinity();
  return std::max(0.0, ent * cv);
}

double wasserstein_q(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double q) {
  if (a.size() != b.size()) throw ShapeError("wasserstein_q needs equally sized point clouds");
  if (a.dim() != b.dim()) throw ShapeError("wasserstein_q needs point clouds of one dimension");
  if (!(q >= 1.0) || !std::isfinite(q)) throw ParameterError("wasserstein order q must be a finite real >= 1");
  const std::size_t n = a.size();
  double total = 0.0;
  if (a.dim() == 1) {
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = a[i][0];
      ys[i] = b[i][0];
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    for (std::size_t i = 0; i < n; ++i) total += std::pow(std::abs(xs[i] - ys[i]), q);
  } else {
    if (n > kMaxAssignment) throw ParameterError("exact assignment supports at most 4096 points");
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = std::pow(norm(a[i] - b[j]), q);
    const auto match = solve_assignment(cost, n);
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + match[i]];
  }
  return std::pow(total / static_cast<double>(n), 1.0 / q);
}

}  // namespace mkvlab
