#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mkvlab/measure/density.hpp"
#include "mkvlab/measure/empirical.hpp"

namespace mkvlab {

struct GaussianLaw {
  Vec mean{};
  Vec std{1.0, 1.0, 1.0};
};

struct UniformLaw {
  Vec lower{};
  Vec upper{1.0, 1.0, 1.0};
};

struct MixtureComponent {
  double weight = 1.0;
  GaussianLaw law;
};

struct MixtureLaw {
  std::vector<MixtureComponent> components;
};

struct DiracLaw {
  Vec at{};
};

// Density proportional to |x|^{-alpha} on the ball B(0, radius).
struct PowerLawLaw {
  double alpha = 0.5;
  double radius = 1.0;
};

using SamplerFamily = std::variant<GaussianLaw, UniformLaw, MixtureLaw, DiracLaw, PowerLawLaw>;

struct ExactSampler {
  int dim = 1;
  SamplerFamily family;
};

// Initial distribution gamma: a named exact sampler, a grid density, or a
// fixed particle ensemble.
class InitialLaw {
 public:
  using Variant = std::variant<ExactSampler, Density, EmpiricalMeasure>;

  // Validates family parameters (positive variances, lower < upper,
  // positive mixture weights, alpha in (0, d), ...). Throws ParameterError.
  explicit InitialLaw(Variant v);

  int dim() const;
  const Variant& variant() const { return v_; }

  // True when the law has no Lebesgue density (Dirac or empirical ensemble).
  bool is_singular() const;

  std::string describe() const;

 private:
  Variant v_;
};

// n i.i.d. draws from the law; deterministic in (law, n, seed) and
// independent of the thread count (point i uses its own counter stream).
// An EmpiricalMeasure law with n equal to its size is returned unchanged;
// other sizes resample it with replacement. Density laws draw a node with
// probability proportional to its mass and jitter uniformly inside the cell.
EmpiricalMeasure sample_initial(const InitialLaw& law, std::size_t n, std::uint64_t seed);

}  // namespace mkvlab
