#include "mkvlab/measure/grid.hpp"

#include <string>

#include "mkvlab/core/errors.hpp"

namespace mkvlab {

Grid::Grid(int dim, Vec origin, Vec spacing, Index3 counts)
    : dim_(dim), origin_(origin), spacing_(spacing), counts_(counts), size_(1), cell_volume_(1.0) {
  if (dim < 1 || dim > kMaxDim) throw ParameterError("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
  for (int a = 0; a < kMaxDim; ++a) {
    if (a >= dim) {
      origin_[a] = 0.0;
      spacing_[a] = 1.0;
      counts_[a] = 1;
      continue;
    }
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
      throw ParameterError("grid spacing must be positive on axis " + std::to_string(a));
    if (counts_[a] < 2) throw ParameterError("grid needs at least 2 nodes on axis " + std::to_string(a));
    if (!std::isfinite(origin_[a])) throw ParameterError("grid origin must be finite");
    size_ *= counts_[a];
    cell_volume_ *= spacing_[a];
  }
}

Grid Grid::cube(int dim, double half_width, std::size_t nodes) {
  if (!(half_width > 0.0)) throw ParameterError("grid half width must be positive");
  if (nodes < 2) throw ParameterError("grid needs at least 2 nodes per axis");
  const double h = 2.0 * half_width / static_cast<double>(nodes - 1);
  Vec origin{};
  Vec spacing{1.0, 1.0, 1.0};
  Index3 counts{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    origin[a] = -half_width;
    spacing[a] = h;
    counts[a] = nodes;
  }
  return Grid(dim, origin, spacing, counts);
}

Vec Grid::node(std::size_t flat) const {
  const Index3 idx = unflatten(flat);
  Vec x{};
  for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + static_cast<double>(idx[a]) * spacing_[a];
  return x;
}

Index3 Grid::unflatten(std::size_t flat) const {
  Index3 idx{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = flat % counts_[a];
    flat /= counts_[a];
  }
  return idx;
}

std::size_t Grid::flatten(const Index3& idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) flat = flat * counts_[a] + idx[a];
  return flat;
}

Vec Grid::upper() const {
  Vec x{};
  for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + static_cast<double>(counts_[a] - 1) * spacing_[a];
  return x;
}

Vec Grid::domain_lower() const {
  Vec x{};
  for (int a = 0; a < dim_; ++a) x[a] = origin_[a] - 0.5 * spacing_[a];
  return x;
}

Vec Grid::domain_upper() const {
  Vec x = upper();
  for (int a = 0; a < dim_; ++a) x[a] += 0.5 * spacing_[a];
  return x;
}

bool Grid::operator==(const Grid& other) const {
  return dim_ == other.dim_ && origin_ == other.origin_ && spacing_ == other.spacing_ && counts_ == other.counts_;
}

std::size_t default_nodes_per_axis(int dim) {
  switch (dim) {
    case 1: return 128;
    case 2: return 96;
    default: return 48;
  }
}

}  // namespace mkvlab
