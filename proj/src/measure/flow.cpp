#include "mkvlab/measure/flow.hpp"

#include <algorithm>
#include <string>

#include "mkvlab/core/errors.hpp"

namespace mkvlab {

MeasureFlow::MeasureFlow(std::vector<double> mesh, std::vector<Node> nodes)
    : mesh_(std::move(mesh)), nodes_(std::move(nodes)) {
  if (mesh_.size() < 2) throw ParameterError("measure flow needs at least two mesh nodes");
  if (mesh_.size() != nodes_.size()) throw ShapeError("measure flow mesh and node counts differ");
  if (mesh_.front() != 0.0) throw ParameterError("measure flow mesh must start at t = 0");
  for (std::size_t j = 1; j < mesh_.size(); ++j)
    if (!(mesh_[j] > mesh_[j - 1])) throw ParameterError("measure flow mesh must be strictly increasing");
  for (std::size_t j = 1; j < nodes_.size(); ++j)
    if (!has_density(j)) throw ParameterError("only the t = 0 node may carry a law instead of a density");
  const Grid& g = grid();
  for (std::size_t j = 0; j < nodes_.size(); ++j)
    if (has_density(j) && !(std::get<Density>(nodes_[j]).grid() == g))
      throw ShapeError("measure flow densities must share one grid (node " + std::to_string(j) + ")");
}

MeasureFlow MeasureFlow::constant(std::vector<double> mesh, const Density& density) {
  std::vector<Node> nodes(mesh.size(), density);
  return MeasureFlow(std::move(mesh), std::move(nodes));
}

const Grid& MeasureFlow::grid() const { return std::get<Density>(nodes_[has_density(0) ? 0 : 1]).grid(); }

const Density& MeasureFlow::density(std::size_t j) const {
  if (!has_density(j)) throw RangeError("mesh node " + std::to_string(j) + " carries a law, not a density");
  return std::get<Density>(nodes_[j]);
}

const Density& flow_interpolate(const MeasureFlow& flow, double t) {
  const auto& mesh = flow.mesh();
  if (!(t >= 0.0 && t <= mesh.back()))
    throw RangeError("time " + std::to_string(t) + " outside the flow horizon [0, " + std::to_string(mesh.back()) + "]");
  const std::size_t j = static_cast<std::size_t>(std::upper_bound(mesh.begin(), mesh.end(), t) - mesh.begin()) - 1;
  if (!flow.has_density(j)) return flow.density(1);
  return flow.density(j);
}

}  // namespace mkvlab
