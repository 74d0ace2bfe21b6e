#include <algorithm>
#include <cmath>
#include <string>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/metrics/kstar.hpp"

namespace mkvlab {
namespace {

// Offsets (in nodes) of the closed unit ball around any node.
std::vector<std::array<long, 2>> unit_ball_stencil(const Grid& g) {
  std::vector<std::array<long, 2>> out;
  const long ri = static_cast<long>(std::floor(1.0 / g.spacing()[0] + 1e-9));
  const long rj = g.dim() > 1 ? static_cast<long>(std::floor(1.0 / g.spacing()[1] + 1e-9)) : 0;
  for (long i = -ri; i <= ri; ++i)
    for (long j = -rj; j <= rj; ++j) {
      const double dx = i * g.spacing()[0];
      const double dy = g.dim() > 1 ? j * g.spacing()[1] : 0.0;
      if (dx * dx + dy * dy <= 1.0 + 1e-12) out.push_back({i, j});
    }
  return out;
}

class BallSums {
 public:
  explicit BallSums(const Grid& g) : n0_(long(g.counts()[0])), n1_(long(g.counts()[1])), stencil_(unit_ball_stencil(g)) {}

  // out_j = sum over nodes i in B(x_j, 1) of in_i (the relation is symmetric).
  void apply(const std::vector<double>& in, std::vector<double>& out) const {
    out.assign(in.size(), 0.0);
    for (long i = 0; i < n0_; ++i)
      for (long j = 0; j < n1_; ++j) {
        double acc = 0.0;
        for (const auto& o : stencil_) {
          const long a = i + o[0];
          const long b = j + o[1];
          if (a < 0 || a >= n0_ || b < 0 || b >= n1_) continue;
          acc += in[std::size_t(a * n1_ + b)];
        }
        out[std::size_t(i * n1_ + j)] = acc;
      }
  }

 private:
  long n0_;
  long n1_;
  std::vector<std::array<long, 2>> stencil_;
};

}  // namespace

DualOracleResult kstar_norm_dual_oracle_detail(const Density& mu, const KStarParams& params,
                                               const DualOracleOptions& opts) {
  const Grid& g = mu.grid();
  params.validate(g.dim());
  if (g.dim() > 2) throw ParameterError("the k*-norm dual oracle supports d = 1 or 2 only");
  for (int a = 0; a < g.dim(); ++a)
    if (g.counts()[a] > 256) throw ParameterError("the k*-norm dual oracle supports at most 256 nodes per axis");

  DualOracleResult res;
  const double cv = g.cell_volume();
  if (std::isinf(params.k)) {
    // Test functions bounded by 1: the supremum is the total mass.
    res.value = res.upper_bound = mu.mass();
    return res;
  }

  const double k = params.k;
  const std::size_t n = g.size();
  const BallSums sums(g);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = mu[i] * cv;

  std::vector<double> w(n), f(n), fk(n);
  // Given multipliers y: f maximizes the Lagrangian, `dual` is the dual
  // value and load_j the constraint value of ball j. False on overflow.
  auto evaluate = [&](const std::vector<double>& y, double& dual, double& objective, std::vector<double>& load) {
    sums.apply(y, w);
    objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (c[i] <= 0.0) {
        f[i] = fk[i] = 0.0;
        continue;
      }
      f[i] = std::pow(c[i] / (k * cv * w[i]), 1.0 / (k - 1.0));
      fk[i] = std::pow(f[i], k) * cv;
      objective += c[i] * f[i];
    }
    double ysum = 0.0;
    for (double v : y) ysum += v;
    dual = ysum + (1.0 - 1.0 / k) * objective;
    sums.apply(fk, load);
    return std::isfinite(dual);
  };

  std::vector<double> y(n, 1.0 / static_cast<double>(unit_ball_stencil(g).size()));
  double dual = 0.0;
  double objective = 0.0;
  std::vector<double> load(n), trial_load(n);
  evaluate(y, dual, objective, load);
  double best_lower = 0.0;
  double best_upper = dual;
  double eta = 0.5;
  std::vector<double> trial(n);
  for (int it = 0; it < opts.max_iterations; ++it) {
    const double peak = *std::max_element(load.begin(), load.end());
    if (peak > 0.0) best_lower = std::max(best_lower, objective / std::pow(peak, 1.0 / k));
    best_upper = std::min(best_upper, dual);
    res.iterations = it;
    if (best_upper - best_lower <= opts.relative_tolerance * best_lower) {
      res.value = best_lower;
      res.upper_bound = best_upper;
      return res;
    }
    for (std::size_t j = 0; j < n; ++j)
      trial[j] = std::max(1e-300, y[j] * std::exp(std::clamp(eta * (load[j] - 1.0), -50.0, 50.0)));
    double trial_dual = 0.0;
    double trial_objective = 0.0;
    if (evaluate(trial, trial_dual, trial_objective, trial_load) && trial_dual < dual) {
      y.swap(trial);
      load.swap(trial_load);
      dual = trial_dual;
      objective = trial_objective;
      eta *= 1.5;
    } else {
      eta *= 0.5;
    }
  }
  throw NonConvergenceError("k*-norm dual oracle did not close its duality gap (bounds " + std::to_string(best_lower) +
                                ", " + std::to_string(best_upper) + ")",
                            best_lower, best_upper);
}

double kstar_norm_dual_oracle(const Density& mu, const KStarParams& params, const DualOracleOptions& opts) {
  return kstar_norm_dual_oracle_detail(mu, params, opts).value;
}

}  // namespace mkvlab
