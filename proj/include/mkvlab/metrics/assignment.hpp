#pragma once

#include <cstddef>
#include <vector>

namespace mkvlab {

// Minimum-cost perfect matching on a dense n x n cost matrix (row-major).
// Returns assignment[row] = column. Shortest augmenting paths with dual
// potentials; exact for finite costs.
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n);

}  // namespace mkvlab
