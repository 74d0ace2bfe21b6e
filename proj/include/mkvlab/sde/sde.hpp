#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mkvlab/kernels/drift.hpp"
#include "mkvlab/measure/flow.hpp"
#include "mkvlab/measure/initial_law.hpp"

namespace mkvlab {

// Diffusion coefficient sigma(x), a d x m matrix (m <= 3 noise axes).
struct DiffusionSpec {
  enum class Form {
    kConstant,        // `matrix`
    kDiagonalAffine,  // sigma_aa(x) = base + slope * clamp(x_a, -clamp_radius, clamp_radius), m = d
  };
  Form form = Form::kConstant;
  Mat3 matrix{Vec{1, 0, 0}, Vec{0, 1, 0}, Vec{0, 0, 1}};
  int noise_dim = 0;  // 0: same as d
  double base = 1.0;
  double slope = 0.0;
  double clamp_radius = 1.0;
  // Declared bounds [lambda_min, lambda_max] on the eigenvalues of sigma sigma^T.
  std::optional<std::pair<double, double>> ellipticity;

  static DiffusionSpec constant(int dim, double scale);
  int noise_axes(int dim) const { return noise_dim > 0 ? noise_dim : dim; }
  Mat3 at(const Vec& x) const;
  // Checks shapes and, when declared, that the eigenvalues of sigma sigma^T
  // stay inside the ellipticity bounds for every x. Throws ParameterError.
  void validate(int dim) const;
};

struct SdeConfig {
  int dim = 1;
  DriftSpec drift;
  DiffusionSpec sigma;
  double horizon = 1.0;
  double dt = 0.01;
  std::size_t n_particles = 1000;
  std::uint64_t seed = 0;
  // Requested output times; empty means {0, T}. Each snaps to the nearest step.
  std::vector<double> record_times;

  void validate() const;
  // Steps of length T / ceil(T / dt), so the horizon is hit exactly.
  std::size_t steps() const;
  double step_length() const;
  // Distinct snapped record steps in increasing order.
  std::vector<std::size_t> record_steps() const;
};

struct TrajectoryBundle {
  int dim = 1;
  double dt = 0.0;
  std::vector<std::size_t> steps;
  std::vector<double> times;
  std::vector<std::vector<Vec>> states;  // states[j][i]: particle i at times[j]

  std::size_t particles() const { return states.empty() ? 0 : states.front().size(); }
  EmpiricalMeasure at(std::size_t j) const { return EmpiricalMeasure(dim, states[j]); }
  // Index of a recorded time; throws RangeError when t is not recorded.
  std::size_t index_of(double t) const;
  bool operator==(const TrajectoryBundle&) const = default;
};

// x + b dt + sigma sqrt(dt) w. Throws OverflowError carrying (t, x) when the
// result is not finite.
Vec em_step(const Vec& x, double t, const Vec& drift_value, const Mat3& sigma, double dt, const Vec& noise);

// Standard normal noise of particle `id` at `step`; m components.
Vec step_noise(std::uint64_t seed, std::uint32_t id, std::size_t step, int m);

// N-particle system: the b0 term uses the current empirical measure. With
// epsilon = 0 a particle never interacts with itself and two bit-equal
// particles raise CollisionError. Kernels with a cutoff use cell lists and
// give the same sums as the direct loop.
TrajectoryBundle simulate_interacting(const SdeConfig& config, const InitialLaw& init);
TrajectoryBundle simulate_interacting(const SdeConfig& config, const EmpiricalMeasure& start,
                                      std::span<const std::uint32_t> particle_ids = {});

// Independent paths; the b0 term integrates the kernel against
// flow_interpolate(flow, t) by grid quadrature.
TrajectoryBundle simulate_decoupled(const SdeConfig& config, const MeasureFlow& flow, const InitialLaw& init);
TrajectoryBundle simulate_decoupled(const SdeConfig& config, const MeasureFlow& flow, const EmpiricalMeasure& start,
                                    std::span<const std::uint32_t> particle_ids = {});

struct Moments {
  double absolute = 0.0;  // (1/N) sum |x_i|^q
  Vec axis_absolute{};    // (1/N) sum |x_ia|^q
  Vec mean{};
  Vec variance{};  // n - 1 denominator
};

Moments empirical_moments(const TrajectoryBundle& bundle, double t, double q);

}  // namespace mkvlab
