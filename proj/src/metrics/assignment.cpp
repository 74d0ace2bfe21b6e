#include "mkvlab/metrics/assignment.hpp"

#include <limits>

#include "mkvlab/core/errors.hpp"

namespace mkvlab {

std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n) {
  if (cost.size() != n * n) throw ShapeError("assignment cost matrix must be n x n");
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  // Row potentials u, column potentials v; column j is matched to row_of[j].
  // Column n is a virtual root used while augmenting.
  std::vector<double> u(n, 0.0), v(n + 1, 0.0), min_slack(n + 1);
  std::vector<std::size_t> row_of(n + 1, none), prev_col(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t row = 0; row < n; ++row) {
    row_of[n] = row;
    std::size_t col = n;
    std::fill(min_slack.begin(), min_slack.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col] = 1;
      const std::size_t r = row_of[col];
      const double* crow = cost.data() + r * n;
      double delta = inf;
      std::size_t next = none;
      for (std::size_t j = 0; j < n; ++j) {
        if (used[j]) continue;
        const double slack = crow[j] - u[r] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          prev_col[j] = col;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          next = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      col = next;
    } while (row_of[col] != none);
    while (col != n) {
      const std::size_t p = prev_col[col];
      row_of[col] = row_of[p];
      col = p;
    }
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 0; j < n; ++j) assignment[row_of[j]] = j;
  return assignment;
}

}  // namespace mkvlab
