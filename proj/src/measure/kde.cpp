#include "mkvlab/measure/kde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/parallel.hpp"

namespace mkvlab {
namespace {

// Kernel tails beyond this many bandwidths are below e^{-32} and dropped.
constexpr double kWindow = 8.0;

struct AxisWindow {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive; first > last means empty
};

AxisWindow window(double x, double h, double origin, double spacing, std::size_t count) {
  const double lo = std::ceil((x - kWindow * h - origin) / spacing);
  const double hi = std::floor((x + kWindow * h - origin) / spacing);
  AxisWindow w;
  if (hi < 0.0 || lo > static_cast<double>(count - 1)) return {1, 0};
  w.first = static_cast<std::size_t>(std::max(lo, 0.0));
  w.last = static_cast<std::size_t>(std::min(hi, static_cast<double>(count - 1)));
  return w;
}

}  // namespace

Density kde_estimate(const EmpiricalMeasure& sample, const Grid& grid, const Bandwidth& h) {
  const int d = grid.dim();
  if (sample.dim() != d) throw ShapeError("sample and grid dimensions differ");
  for (int a = 0; a < d; ++a)
    if (!(h[a] > 0.0) || !std::isfinite(h[a])) throw ParameterError("KDE bandwidth must be positive");

  const Vec lo = grid.domain_lower();
  const Vec hi = grid.domain_upper();
  std::vector<std::size_t> offending;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (int a = 0; a < d; ++a) {
      if (sample[i][a] - 3.0 * h[a] < lo[a] || sample[i][a] + 3.0 * h[a] > hi[a]) {
        offending.push_back(i);
        break;
      }
    }
  }
  if (!offending.empty()) {
    std::ostringstream os;
    os << "grid does not cover " << offending.size() << " sample point(s) expanded by 3 bandwidths; first:";
    for (std::size_t j = 0; j < std::min<std::size_t>(offending.size(), 10); ++j) {
      const Vec& x = sample[offending[j]];
      os << " #" << offending[j] << "=(" << x[0];
      for (int a = 1; a < d; ++a) os << "," << x[a];
      os << ")";
    }
    throw CoverageError(os.str(), std::move(offending));
  }

  const auto& counts = grid.counts();
  const std::size_t slab = grid.size() / counts[0];
  std::vector<double> values(grid.size(), 0.0);

  // Threads own disjoint ranges of the first axis and visit points in sample
  // order, so every node accumulates in the same order for any thread count.
  parallel_for(
      counts[0],
      [&](std::size_t row_begin, std::size_t row_end) {
        std::array<std::vector<double>, kMaxDim> w;
        for (std::size_t i = 0; i < sample.size(); ++i) {
          const Vec& x = sample[i];
          std::array<AxisWindow, kMaxDim> win{};
          bool empty = false;
          for (int a = 0; a < d; ++a) {
            win[a] = window(x[a], h[a], grid.origin()[a], grid.spacing()[a], counts[a]);
            if (win[a].first > win[a].last) empty = true;
          }
          if (empty) continue;
          win[0].first = std::max(win[0].first, row_begin);
          win[0].last = std::min(win[0].last, row_end - 1);
          if (win[0].first > win[0].last) continue;
          for (int a = 0; a < d; ++a) {
            w[a].resize(win[a].last - win[a].first + 1);
            for (std::size_t j = win[a].first; j <= win[a].last; ++j) {
              const double z = (grid.origin()[a] + static_cast<double>(j) * grid.spacing()[a] - x[a]) / h[a];
              w[a][j - win[a].first] = std::exp(-0.5 * z * z);
            }
          }
          if (d == 1) {
            for (std::size_t j = win[0].first; j <= win[0].last; ++j) values[j] += w[0][j - win[0].first];
          } else if (d == 2) {
            for (std::size_t j0 = win[0].first; j0 <= win[0].last; ++j0) {
              const double w0 = w[0][j0 - win[0].first];
              double* row = values.data() + j0 * counts[1];
              for (std::size_t j1 = win[1].first; j1 <= win[1].last; ++j1) row[j1] += w0 * w[1][j1 - win[1].first];
            }
          } else {
            for (std::size_t j0 = win[0].first; j0 <= win[0].last; ++j0) {
              const double w0 = w[0][j0 - win[0].first];
              for (std::size_t j1 = win[1].first; j1 <= win[1].last; ++j1) {
                const double w01 = w0 * w[1][j1 - win[1].first];
                double* row = values.data() + j0 * slab + j1 * counts[2];
                for (std::size_t j2 = win[2].first; j2 <= win[2].last; ++j2) row[j2] += w01 * w[2][j2 - win[2].first];
              }
            }
          }
        }
      },
      1);

  return Density(grid, std::move(values));
}

Density kde_estimate(const EmpiricalMeasure& sample, const Grid& grid, double h) {
  return kde_estimate(sample, grid, Bandwidth{h, h, h});
}

Bandwidth silverman_bandwidth(const EmpiricalMeasure& sample, double floor) {
  const int d = sample.dim();
  const Vec sd = sample.stddev();
  const double factor = std::pow(static_cast<double>(sample.size()), -1.0 / (d + 4));
  Bandwidth h{1.0, 1.0, 1.0};
  for (int a = 0; a < d; ++a) h[a] = std::max(sd[a] * factor, floor);
  return h;
}

Grid auto_grid(const EmpiricalMeasure& sample, const Bandwidth& h, const AutoGridOptions& opts) {
  const int d = sample.dim();
  const Vec sd = sample.stddev();
  double spread = 0.0;
  double reach = 0.0;
  double hmax = 0.0;
  for (int a = 0; a < d; ++a) {
    spread = std::max(spread, sd[a]);
    hmax = std::max(hmax, h[a]);
  }
  for (const Vec& x : sample.points())
    for (int a = 0; a < d; ++a) reach = std::max(reach, std::abs(x[a]));
  const std::size_t nodes = opts.nodes_per_axis ? opts.nodes_per_axis : default_nodes_per_axis(d);
  double half = std::max({4.0 * spread, reach + opts.coverage_bandwidths * hmax, opts.half_width_floor});
  // The outermost cell extends half a spacing past the last node.
  half *= 1.0 + 1.0 / static_cast<double>(nodes);
  return Grid::cube(d, half, nodes);
}

}  // namespace mkvlab
