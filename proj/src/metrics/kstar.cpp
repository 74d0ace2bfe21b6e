#include "mkvlab/metrics/kstar.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/parallel.hpp"

namespace mkvlab {
namespace {

constexpr double kBallSlack = 1e-12;

struct Box {
  std::array<long, kMaxDim> lo{};
  std::array<long, kMaxDim> hi{};
};

// Node index range per axis of the nodes that can lie in B(center, r).
Box node_range(const Grid& g, const Vec& center, double r) {
  Box b;
  for (int a = 0; a < kMaxDim; ++a) {
    if (a >= g.dim()) {
      b.lo[a] = 0;
      b.hi[a] = 0;
      continue;
    }
    const double s = g.spacing()[a];
    const auto n = static_cast<long>(g.counts()[a]);
    b.lo[a] = std::max(0L, static_cast<long>(std::ceil((center[a] - r - g.origin()[a]) / s - 1e-9)));
    b.hi[a] = std::min(n - 1, static_cast<long>(std::floor((center[a] + r - g.origin()[a]) / s + 1e-9)));
  }
  return b;
}

template <class F>
void for_each_in_ball(const Grid& g, const Vec& center, double r, F&& f) {
  const Box b = node_range(g, center, r);
  const double r2 = r * r + kBallSlack;
  for (long i = b.lo[0]; i <= b.hi[0]; ++i)
    for (long j = b.lo[1]; j <= b.hi[1]; ++j)
      for (long l = b.lo[2]; l <= b.hi[2]; ++l) {
        const std::size_t flat = g.flatten({std::size_t(i), std::size_t(j), std::size_t(l)});
        if (norm2(g.node(flat) - center) <= r2) f(flat);
      }
}

// Lattice points whose closed ball B(z, r) meets the node box of g.
std::vector<Vec> lattice_centres(const Grid& g, double r) {
  const Vec lo = g.lower();
  const Vec hi = g.upper();
  std::array<long, kMaxDim> zlo{}, zhi{};
  for (int a = 0; a < g.dim(); ++a) {
    zlo[a] = static_cast<long>(std::ceil(lo[a] - r));
    zhi[a] = static_cast<long>(std::floor(hi[a] + r));
  }
  std::vector<Vec> out;
  for (long i = zlo[0]; i <= zhi[0]; ++i)
    for (long j = zlo[1]; j <= zhi[1]; ++j)
      for (long l = zlo[2]; l <= zhi[2]; ++l) {
        const Vec z{double(i), double(j), double(l)};
        double d2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
          const double gap = std::max({lo[a] - z[a], 0.0, z[a] - hi[a]});
          d2 += gap * gap;
        }
        if (d2 <= r * r + kBallSlack) out.push_back(z);
      }
  return out;
}

int lattice_balls_meeting_unit_ball(int d, double r) {
  // Lattice balls B(z, r) meeting B(x, 1) are those with |z - x| < 1 + r.
  // The count is lower semicontinuous in x, so its maximum is attained on an
  // open set and a fine sample of the fundamental region [0, 1/2]^d finds it.
  const int steps = d == 3 ? 24 : 64;
  const long reach = static_cast<long>(std::ceil(1.0 + r)) + 1;
  int best = 0;
  std::array<int, kMaxDim> it{};
  const int total = static_cast<int>(std::pow(steps + 1, d));
  for (int s = 0; s < total; ++s) {
    int rem = s;
    Vec x{};
    for (int a = 0; a < d; ++a) {
      it[a] = rem % (steps + 1);
      rem /= steps + 1;
      x[a] = 0.5 * it[a] / steps;
    }
    int count = 0;
    const double lim = (1.0 + r) * (1.0 + r);
    for (long i = -reach; i <= reach; ++i)
      for (long j = d > 1 ? -reach : 0; j <= (d > 1 ? reach : 0); ++j)
        for (long l = d > 2 ? -reach : 0; l <= (d > 2 ? reach : 0); ++l)
          if (norm2(Vec{double(i), double(j), double(l)} - x) < lim - 1e-12) ++count;
    best = std::max(best, count);
  }
  return best;
}

int unit_balls_covering_lattice_ball(int d, double r) {
  // A cube of side 2/sqrt(d) has diameter 2 and sits inside a unit ball, so
  // the cubes of a tiling that meet B(0, r) give a unit-ball cover of it.
  const double side = 2.0 / std::sqrt(double(d));
  const long reach = static_cast<long>(std::ceil(r / side)) + 1;
  int best = 0;
  for (double shift : {0.0, 0.5}) {
    int count = 0;
    for (long i = -reach; i <= reach; ++i)
      for (long j = d > 1 ? -reach : 0; j <= (d > 1 ? reach : 0); ++j)
        for (long l = d > 2 ? -reach : 0; l <= (d > 2 ? reach : 0); ++l) {
          const long idx[3] = {i, j, l};
          double d2 = 0.0;
          for (int a = 0; a < d; ++a) {
            const double lo = (idx[a] + shift) * side;
            const double hi = lo + side;
            const double gap = std::max({lo, 0.0, -hi});
            d2 += gap * gap;
          }
          if (d2 < r * r) ++count;
        }
    best = best == 0 ? count : std::min(best, count);
  }
  return best;
}

}  // namespace

double KStarParams::radius(int dim) const { return r ? *r : std::sqrt(double(dim)); }

void KStarParams::validate(int dim) const {
  if (std::isnan(k) || !(k > 1.0))
    throw ParameterError("k must exceed 1 for k*-metrics (got " + std::to_string(k) + ")");
  if (dim < 1 || dim > kMaxDim) throw ParameterError("dimension must be 1, 2 or 3");
  const double rad = radius(dim);
  if (!(rad >= std::sqrt(double(dim)) - 1e-12) || !std::isfinite(rad))
    throw ParameterError("lattice radius r must be at least sqrt(d) so the balls cover R^d");
}

double k_star_dual_exponent(double k) { return std::isinf(k) ? 1.0 : k / (k - 1.0); }

CoveringConstants covering_constants(int dim, double r) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, CoveringConstants> cache;
  std::lock_guard lock(mu);
  const auto key = std::make_pair(dim, r);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  CoveringConstants c;
  c.lattice_balls_per_unit_ball = lattice_balls_meeting_unit_ball(dim, r);
  c.unit_balls_per_lattice_ball = unit_balls_covering_lattice_ball(dim, r);
  c.c_of_r = std::max({1, c.lattice_balls_per_unit_ball, c.unit_balls_per_lattice_ball});
  cache.emplace(key, c);
  return c;
}

std::vector<int> lattice_multiplicity(const Grid& grid, double r) {
  std::vector<int> m(grid.size(), 0);
  for (const Vec& z : lattice_centres(grid, r)) for_each_in_ball(grid, z, r, [&](std::size_t i) { ++m[i]; });
  return m;
}

double kstar_lattice_sum(const Grid& grid, std::span<const double> values, const KStarParams& params) {
  params.validate(grid.dim());
  if (values.size() != grid.size()) throw ShapeError("grid function size does not match its grid");
  const double r = params.radius(grid.dim());
  const double kp = k_star_dual_exponent(params.k);
  const double cv = grid.cell_volume();
  const std::vector<Vec> centres = lattice_centres(grid, r);
  std::vector<double> per_ball(centres.size(), 0.0);
  parallel_for(centres.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      double peak = 0.0;
      for_each_in_ball(grid, centres[c], r, [&](std::size_t i) { peak = std::max(peak, std::abs(values[i])); });
      if (peak == 0.0) continue;
      double acc = 0.0;
      if (kp == 1.0) {
        for_each_in_ball(grid, centres[c], r, [&](std::size_t i) { acc += std::abs(values[i]); });
        per_ball[c] = acc * cv;
      } else {
        for_each_in_ball(grid, centres[c], r, [&](std::size_t i) { acc += std::pow(std::abs(values[i]) / peak, kp); });
        per_ball[c] = peak * std::pow(acc * cv, 1.0 / kp);
      }
    }
  }, 1);
  double total = 0.0;
  for (double v : per_ball) total += v;
  return total;
}

double kstar_norm_surrogate(const Density& mu, const KStarParams& params) {
  return kstar_lattice_sum(mu.grid(), mu.values(), params);
}

double kstar_distance(const Density& mu, const Density& nu, const KStarParams& params) {
  if (!(mu.grid() == nu.grid())) throw ShapeError("k*-distance needs both densities on one grid");
  std::vector<double> diff(mu.grid().size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = mu[i] - nu[i];
  return kstar_lattice_sum(mu.grid(), diff, params);
}

}  // namespace mkvlab
