#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ranges>
#include <string>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/parallel.hpp"
#include "mkvlab/core/rng.hpp"
#include "mkvlab/sde/sde.hpp"

namespace mkvlab {
namespace {

std::vector<std::uint32_t> identity_ids(std::size_t n) {
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  return ids;
}

// Particles binned into cubic cells of side >= cutoff; neighbour candidates
// come back in ascending index order so sums match the direct loop.
class CellList {
 public:
  CellList(const std::vector<Vec>& pts, int dim, double cutoff) : dim_(dim) {
    lo_ = pts.front();
    Vec hi = pts.front();
    for (const Vec& p : pts)
      for (int a = 0; a < dim; ++a) {
        lo_[a] = std::min(lo_[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    // Cap the cell count near the particle count.
    const double cap = std::max(1.0, std::pow(double(pts.size()), 1.0 / dim));
    for (int a = 0; a < kMaxDim; ++a) {
      if (a >= dim) {
        n_[a] = 1;
        side_[a] = 1.0;
        continue;
      }
      const double extent = hi[a] - lo_[a];
      const double by_cutoff = std::floor(extent / cutoff) + 1.0;
      n_[a] = static_cast<long>(std::clamp(std::min(by_cutoff, cap), 1.0, 1e6));
      side_[a] = std::max(cutoff, extent / double(n_[a]) * (1 + 1e-12));
    }
    cells_.resize(std::size_t(n_[0] * n_[1] * n_[2]));
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[cell_of(pts[i])].push_back(std::uint32_t(i));
  }

  void candidates(const Vec& x, std::vector<std::uint32_t>& out) const {
    out.clear();
    const auto c = coords(x);
    for (long i = c[0] - 1; i <= c[0] + 1; ++i)
      for (long j = c[1] - 1; j <= c[1] + 1; ++j)
        for (long l = c[2] - 1; l <= c[2] + 1; ++l) {
          if (i < 0 || j < 0 || l < 0 || i >= n_[0] || j >= n_[1] || l >= n_[2]) continue;
          const auto& cell = cells_[std::size_t((i * n_[1] + j) * n_[2] + l)];
          out.insert(out.end(), cell.begin(), cell.end());
        }
    std::sort(out.begin(), out.end());
  }

 private:
  std::array<long, kMaxDim> coords(const Vec& x) const {
    std::array<long, kMaxDim> c{};
    for (int a = 0; a < dim_; ++a)
      c[a] = std::clamp(static_cast<long>(std::floor((x[a] - lo_[a]) / side_[a])), 0L, n_[a] - 1);
    return c;
  }
  std::size_t cell_of(const Vec& x) const {
    const auto c = coords(x);
    return std::size_t((c[0] * n_[1] + c[1]) * n_[2] + c[2]);
  }

  int dim_;
  Vec lo_{};
  Vec side_{};
  std::array<long, kMaxDim> n_{};
  std::vector<std::vector<std::uint32_t>> cells_;
};

class Stepper {
 public:
  Stepper(const SdeConfig& cfg, std::span<const std::uint32_t> ids) : cfg_(cfg), ids_(ids) {
    bundle_.dim = cfg.dim;
    bundle_.dt = cfg.step_length();
    bundle_.steps = cfg.record_steps();
    for (std::size_t s : bundle_.steps) bundle_.times.push_back(double(s) * bundle_.dt);
  }

  // prepare(step, positions) runs once before each step; drift(step, t, i,
  // positions) then gives the drift of particle i.
  template <class Prepare, class Drift>
  TrajectoryBundle run(std::vector<Vec> x, Prepare&& prepare, Drift&& drift, std::size_t grain) {
    const std::size_t n_steps = cfg_.steps();
    const double dt = bundle_.dt;
    const int m = cfg_.sigma.noise_axes(cfg_.dim);
    std::size_t next_record = 0;
    std::vector<Vec> next(x.size());
    for (std::size_t step = 0;; ++step) {
      if (next_record < bundle_.steps.size() && bundle_.steps[next_record] == step) {
        bundle_.states.push_back(x);
        ++next_record;
      }
      if (step == n_steps) break;
      const double t = double(step) * dt;
      prepare(step, x);
      parallel_for(x.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          const Vec b = drift(step, t, i, x);
          const Vec w = step_noise(cfg_.seed, ids_[i], step, m);
          next[i] = em_step(x[i], t, b, cfg_.sigma.at(x[i]), dt, w);
        }
      }, grain);
      x.swap(next);
    }
    return std::move(bundle_);
  }

 private:
  const SdeConfig& cfg_;
  std::span<const std::uint32_t> ids_;
  TrajectoryBundle bundle_;
};

void check_start(const SdeConfig& cfg, const EmpiricalMeasure& start, std::span<const std::uint32_t> ids) {
  cfg.validate();
  if (start.dim() != cfg.dim) throw ShapeError("initial sample dimension differs from the SDE dimension");
  if (!ids.empty() && ids.size() != start.size()) throw ShapeError("particle id list length differs from the sample size");
}

}  // namespace

void SdeConfig::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ParameterError("SDE dimension must be 1, 2 or 3");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("horizon T must be positive");
  if (!(dt > 0.0) || !(dt <= horizon)) throw ParameterError("time step must satisfy 0 < dt <= T");
  if (n_particles < 1) throw ParameterError("need at least one particle");
  for (double t : record_times)
    if (!(t >= 0.0 && t <= horizon)) throw ParameterError("record time " + std::to_string(t) + " outside [0, T]");
  drift.validate(dim);
  sigma.validate(dim);
}

std::size_t SdeConfig::steps() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9)));
}

double SdeConfig::step_length() const { return horizon / double(steps()); }

std::vector<std::size_t> SdeConfig::record_steps() const {
  const std::size_t n = steps();
  const double h = step_length();
  std::vector<std::size_t> out;
  if (record_times.empty()) return {0, n};
  for (double t : record_times) out.push_back(std::min(n, static_cast<std::size_t>(std::llround(t / h))));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t TrajectoryBundle::index_of(double t) const {
  for (std::size_t j = 0; j < times.size(); ++j)
    if (std::abs(times[j] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return j;
  throw RangeError("time " + std::to_string(t) + " is not a recorded time");
}

Vec em_step(const Vec& x, double t, const Vec& drift_value, const Mat3& sigma, double dt, const Vec& noise) {
  if (!(dt > 0.0)) throw ParameterError("time step must be positive");
  const Vec out = x + dt * drift_value + std::sqrt(dt) * mat_vec(sigma, noise);
  if (!all_finite(out)) throw OverflowError("Euler-Maruyama step produced a non-finite state at t = " + std::to_string(t), t, x);
  return out;
}

Vec step_noise(std::uint64_t seed, std::uint32_t id, std::size_t step, int m) {
  const std::uint64_t blocks_per_step = (std::uint64_t(m) + 1) / 2;
  CounterRng rng(seed, StreamDomain::kNoise, id, std::uint64_t(step) * blocks_per_step);
  Vec w{};
  for (int a = 0; a < m; ++a) w[a] = rng.normal();
  return w;
}

TrajectoryBundle simulate_interacting(const SdeConfig& config, const InitialLaw& init) {
  config.validate();
  return simulate_interacting(config, sample_initial(init, config.n_particles, config.seed));
}

TrajectoryBundle simulate_interacting(const SdeConfig& config, const EmpiricalMeasure& start,
                                      std::span<const std::uint32_t> particle_ids) {
  check_start(config, start, particle_ids);
  const std::vector<std::uint32_t> own = particle_ids.empty() ? identity_ids(start.size()) : std::vector<std::uint32_t>{};
  const std::span<const std::uint32_t> ids = particle_ids.empty() ? std::span<const std::uint32_t>(own) : particle_ids;
  const DriftSpec& drift = config.drift;
  const bool interacting = drift.measure_dependent();
  const KernelSpec* kernel = interacting ? &drift.b0->kernel : nullptr;
  const double scale = interacting ? drift.b0->coupling / double(start.size()) : 0.0;
  const bool exact = interacting && kernel->epsilon == 0.0;

  // Cell list rebuilt once per step, shared read-only by the workers.
  std::optional<CellList> cells;
  const bool use_cells = interacting && kernel->cutoff.has_value();

  auto pair_sum = [&](std::size_t step, std::size_t i, const std::vector<Vec>& x, auto&& range) {
    Vec acc{};
    for (std::size_t j : range) {
      if (j == i) {
        acc += shift_terms(*kernel, x[i]);
        continue;
      }
      if (exact && x[j] == x[i])
        throw CollisionError("particles " + std::to_string(std::min(i, j)) + " and " + std::to_string(std::max(i, j)) +
                                 " coincide at step " + std::to_string(step) + " with epsilon = 0",
                             step, std::min(i, j), std::max(i, j));
      acc += eval_kernel(*kernel, x[i], x[j]);
    }
    return acc;
  };

  Stepper stepper(config, ids);
  std::vector<Vec> x = start.points();
  auto drift_fn = [&](std::size_t step, double t, std::size_t i, const std::vector<Vec>& pos) {
    Vec b = local_drift(drift, t, pos[i]);
    if (!interacting) return b;
    Vec acc{};
    if (use_cells) {
      thread_local std::vector<std::uint32_t> cand;
      cells->candidates(pos[i], cand);
      acc = pair_sum(step, i, pos, cand);
    } else {
      acc = pair_sum(step, i, pos, std::views::iota(std::size_t{0}, pos.size()));
    }
    return b + scale * acc;
  };
  auto prepare = [&](std::size_t, const std::vector<Vec>& pos) {
    if (use_cells) cells.emplace(pos, config.dim, *kernel->cutoff);
  };
  return stepper.run(std::move(x), prepare, drift_fn, 8);
}

TrajectoryBundle simulate_decoupled(const SdeConfig& config, const MeasureFlow& flow, const InitialLaw& init) {
  config.validate();
  return simulate_decoupled(config, flow, sample_initial(init, config.n_particles, config.seed));
}

TrajectoryBundle simulate_decoupled(const SdeConfig& config, const MeasureFlow& flow, const EmpiricalMeasure& start,
                                    std::span<const std::uint32_t> particle_ids) {
  check_start(config, start, particle_ids);
  const DriftSpec& drift = config.drift;
  const bool reads_flow = drift.measure_dependent();
  if (reads_flow) {
    if (flow.horizon() < config.horizon * (1 - 1e-12))
      throw RangeError("measure flow ends before the SDE horizon");
    if (flow.grid().dim() != config.dim) throw ShapeError("measure flow dimension differs from the SDE dimension");
  }
  const std::vector<std::uint32_t> own = particle_ids.empty() ? identity_ids(start.size()) : std::vector<std::uint32_t>{};
  const std::span<const std::uint32_t> ids = particle_ids.empty() ? std::span<const std::uint32_t>(own) : particle_ids;
  Stepper stepper(config, ids);
  return stepper.run(start.points(), [](std::size_t, const std::vector<Vec>&) {}, [&](std::size_t, double t, std::size_t i, const std::vector<Vec>& pos) {
    Vec b = local_drift(drift, t, pos[i]);
    if (!reads_flow) return b;
    const Density& mu = flow_interpolate(flow, std::min(t, flow.horizon()));
    return b + drift.b0->coupling * mean_field_drift(drift.b0->kernel, pos[i], mu);
  }, 4);
}

Moments empirical_moments(const TrajectoryBundle& bundle, double t, double q) {
  if (!(q > 0.0)) throw ParameterError("moment order must be positive");
  const auto& pts = bundle.states[bundle.index_of(t)];
  const double n = double(pts.size());
  Moments m;
  for (const Vec& p : pts) {
    m.absolute += std::pow(norm(p), q);
    for (int a = 0; a < bundle.dim; ++a) {
      m.axis_absolute[a] += std::pow(std::abs(p[a]), q);
      m.mean[a] += p[a];
    }
  }
  m.absolute /= n;
  for (int a = 0; a < bundle.dim; ++a) {
    m.axis_absolute[a] /= n;
    m.mean[a] /= n;
  }
  if (pts.size() > 1) {
    for (const Vec& p : pts)
      for (int a = 0; a < bundle.dim; ++a) m.variance[a] += (p[a] - m.mean[a]) * (p[a] - m.mean[a]);
    for (int a = 0; a < bundle.dim; ++a) m.variance[a] /= n - 1;
  }
  return m;
}

}  // namespace mkvlab
