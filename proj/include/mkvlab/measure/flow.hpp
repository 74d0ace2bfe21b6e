#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "mkvlab/measure/density.hpp"
#include "mkvlab/measure/initial_law.hpp"

namespace mkvlab {

// Time-indexed densities on a mesh 0 = t_0 < t_1 < ... < t_M = T, all on one
// grid. Node 0 may carry the initial law itself instead of a density when
// that law has none (Dirac, particle ensemble).
class MeasureFlow {
 public:
  using Node = std::variant<Density, InitialLaw>;

  // Throws ParameterError unless the mesh starts at 0, is strictly
  // increasing with M >= 1, only node 0 is a law, and every density shares
  // the grid of the first one.
  MeasureFlow(std::vector<double> mesh, std::vector<Node> nodes);

  // Same density at every mesh node.
  static MeasureFlow constant(std::vector<double> mesh, const Density& density);

  const std::vector<double>& mesh() const { return mesh_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return mesh_.size(); }
  double horizon() const { return mesh_.back(); }
  const Grid& grid() const;

  bool has_density(std::size_t j) const { return std::holds_alternative<Density>(nodes_[j]); }
  const Density& density(std::size_t j) const;

 private:
  std::vector<double> mesh_;
  std::vector<Node> nodes_;
};

// Piecewise constant in time: the density of the largest mesh node <= t.
// At t = 0 a law-only node 0 is replaced by node 1. Throws RangeError for t
// outside [0, T].
const Density& flow_interpolate(const MeasureFlow& flow, double t);

}  // namespace mkvlab
