#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mkvlab/measure/density.hpp"
#include "mkvlab/measure/empirical.hpp"

namespace mkvlab::testing {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Random mixture of 1..4 Gaussian bumps with centres inside the grid's
// middle half and widths between 0.15 and 1.
inline Density random_mixture(const Grid& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Bump {
    double w;
    Vec m;
    double s;
  };
  std::vector<Bump> bumps(count(rng));
  const Vec lo = g.lower();
  const Vec hi = g.upper();
  for (auto& b : bumps) {
    b.w = 0.2 + unit(rng);
    for (int a = 0; a < g.dim(); ++a) b.m[a] = lo[a] + (0.25 + 0.5 * unit(rng)) * (hi[a] - lo[a]);
    b.s = 0.15 + 0.85 * unit(rng);
  }
  return Density::from_function(g, [&](const Vec& x) {
    double v = 0.0;
    for (const auto& b : bumps) v += b.w * std::exp(-0.5 * norm2(x - b.m) / (b.s * b.s));
    return v;
  });
}

inline EmpiricalMeasure random_cloud(int dim, std::size_t n, std::mt19937_64& rng, double spread = 1.0) {
  std::normal_distribution<double> z(0.0, spread);
  std::vector<Vec> pts(n);
  for (auto& p : pts)
    for (int a = 0; a < dim; ++a) p[a] = z(rng);
  return EmpiricalMeasure(dim, std::move(pts));
}

// Minimum over all n! matchings of sum |a_i - b_pi(i)|^q, by enumeration.
inline double brute_force_wasserstein(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double q) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += std::pow(norm(a[i] - b[perm[i]]), q);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / a.size(), 1.0 / q);
}

}  // namespace mkvlab::testing
