#pragma once

#include <array>
#include <cstddef>

#include "mkvlab/core/vec.hpp"

namespace mkvlab {

using Index3 = std::array<std::size_t, kMaxDim>;

// Regular node-centred grid in d <= 3 dimensions. Node i sits at
// origin + i * spacing; each node stands for the cell of side `spacing`
// around it, which is what the midpoint quadrature integrates over.
// Flat indices are row-major (last axis fastest).
class Grid {
 public:
  Grid(int dim, Vec origin, Vec spacing, Index3 counts);

  // [-half_width, half_width]^d with `nodes` nodes per axis.
  static Grid cube(int dim, double half_width, std::size_t nodes);

  int dim() const { return dim_; }
  const Vec& origin() const { return origin_; }
  const Vec& spacing() const { return spacing_; }
  const Index3& counts() const { return counts_; }

  std::size_t size() const { return size_; }
  double cell_volume() const { return cell_volume_; }

  Vec node(std::size_t flat) const;
  Index3 unflatten(std::size_t flat) const;
  std::size_t flatten(const Index3& idx) const;

  // First and last node positions.
  Vec lower() const { return origin_; }
  Vec upper() const;

  // Extent of the cells covered by the quadrature (nodes +- spacing/2).
  Vec domain_lower() const;
  Vec domain_upper() const;

  bool operator==(const Grid& other) const;

 private:
  int dim_;
  Vec origin_;
  Vec spacing_;
  Index3 counts_;
  std::size_t size_;
  double cell_volume_;
};

// Default node count per axis for auto-sized grids: 128 / 96 / 48 in d = 1 / 2 / 3.
std::size_t default_nodes_per_axis(int dim);

}  // namespace mkvlab
