#include "mkvlab/measure/initial_law.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/parallel.hpp"
#include "mkvlab/core/rng.hpp"

namespace mkvlab {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void validate_gaussian(const GaussianLaw& g, int d) {
  for (int a = 0; a < d; ++a) {
    if (!(g.std[a] > 0.0) || !std::isfinite(g.std[a]))
      throw ParameterError("gaussian initial law needs positive standard deviations");
    if (!std::isfinite(g.mean[a])) throw ParameterError("gaussian initial law needs a finite mean");
  }
}

void validate_sampler(const ExactSampler& s) {
  const int d = s.dim;
  if (d < 1 || d > kMaxDim) throw ParameterError("initial law dimension must be 1, 2 or 3");
  std::visit(Overloaded{
                 [&](const GaussianLaw& g) { validate_gaussian(g, d); },
                 [&](const UniformLaw& u) {
                   for (int a = 0; a < d; ++a)
                     if (!(u.lower[a] < u.upper[a])) throw ParameterError("uniform initial law needs lower < upper");
                 },
                 [&](const MixtureLaw& m) {
                   if (m.components.empty()) throw ParameterError("mixture initial law needs components");
                   for (const auto& c : m.components) {
                     if (!(c.weight > 0.0)) throw ParameterError("mixture weights must be positive");
                     validate_gaussian(c.law, d);
                   }
                 },
                 [&](const DiracLaw& dl) {
                   if (!all_finite(dl.at)) throw ParameterError("dirac location must be finite");
                 },
                 [&](const PowerLawLaw& p) {
                   if (!(p.alpha > 0.0 && p.alpha < d))
                     throw ParameterError("power-law exponent alpha must lie in (0, d)");
                   if (!(p.radius > 0.0)) throw ParameterError("power-law truncation radius must be positive");
                 },
             },
             s.family);
}

// Uniform direction on S^{d-1} from d normals.
Vec random_direction(CounterRng& rng, int d) {
  if (d == 1) return {rng.uniform() < 0.5 ? -1.0 : 1.0, 0.0, 0.0};
  Vec v{};
  double n2 = 0.0;
  do {
    for (int a = 0; a < d; ++a) v[a] = rng.normal();
    n2 = norm2(v);
  } while (n2 == 0.0);
  return (1.0 / std::sqrt(n2)) * v;
}

Vec draw_gaussian(const GaussianLaw& g, int d, CounterRng& rng) {
  Vec x{};
  for (int a = 0; a < d; ++a) x[a] = g.mean[a] + g.std[a] * rng.normal();
  return x;
}

Vec draw_exact(const ExactSampler& s, CounterRng& rng, const std::vector<double>& mixture_cdf) {
  const int d = s.dim;
  return std::visit(
      Overloaded{
          [&](const GaussianLaw& g) { return draw_gaussian(g, d, rng); },
          [&](const UniformLaw& u) {
            Vec x{};
            for (int a = 0; a < d; ++a) x[a] = u.lower[a] + (u.upper[a] - u.lower[a]) * rng.uniform();
            return x;
          },
          [&](const MixtureLaw& m) {
            const double u = rng.uniform();
            auto it = std::upper_bound(mixture_cdf.begin(), mixture_cdf.end(), u);
            const std::size_t c = std::min<std::size_t>(it - mixture_cdf.begin(), m.components.size() - 1);
            return draw_gaussian(m.components[c].law, d, rng);
          },
          [&](const DiracLaw& dl) { return dl.at; },
          [&](const PowerLawLaw& p) {
            // Radial law with density proportional to r^{d-1-alpha} on [0, R].
            const double r = p.radius * std::pow(rng.uniform(), 1.0 / (d - p.alpha));
            return r * random_direction(rng, d);
          },
      },
      s.family);
}

}  // namespace

InitialLaw::InitialLaw(Variant v) : v_(std::move(v)) {
  if (const auto* s = std::get_if<ExactSampler>(&v_)) validate_sampler(*s);
}

int InitialLaw::dim() const {
  return std::visit(Overloaded{
                        [](const ExactSampler& s) { return s.dim; },
                        [](const Density& dn) { return dn.grid().dim(); },
                        [](const EmpiricalMeasure& e) { return e.dim(); },
                    },
                    v_);
}

bool InitialLaw::is_singular() const {
  if (std::holds_alternative<EmpiricalMeasure>(v_)) return true;
  if (const auto* s = std::get_if<ExactSampler>(&v_)) return std::holds_alternative<DiracLaw>(s->family);
  return false;
}

std::string InitialLaw::describe() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const ExactSampler& s) {
                   os << "sampler:";
                   std::visit(Overloaded{
                                  [&](const GaussianLaw&) { os << "gaussian"; },
                                  [&](const UniformLaw&) { os << "uniform"; },
                                  [&](const MixtureLaw&) { os << "mixture"; },
                                  [&](const DiracLaw&) { os << "dirac"; },
                                  [&](const PowerLawLaw&) { os << "power_law"; },
                              },
                              s.family);
                 },
                 [&](const Density&) { os << "density"; },
                 [&](const EmpiricalMeasure& e) { os << "empirical:" << e.size(); },
             },
             v_);
  return os.str();
}

EmpiricalMeasure sample_initial(const InitialLaw& law, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ParameterError("sample size must be at least 1");
  const int d = law.dim();
  std::vector<Vec> pts(n);

  if (const auto* e = std::get_if<EmpiricalMeasure>(&law.variant())) {
    if (n == e->size()) return *e;
    parallel_for(n, [&](std::size_t b, std::size_t end) {
      for (std::size_t i = b; i < end; ++i) {
        CounterRng rng(seed, StreamDomain::kResample, static_cast<std::uint32_t>(i));
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(e->size()));
        pts[i] = (*e)[std::min(j, e->size() - 1)];
      }
    });
    return EmpiricalMeasure(d, std::move(pts));
  }

  if (const auto* dens = std::get_if<Density>(&law.variant())) {
    const Grid& g = dens->grid();
    std::vector<double> cdf(g.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) cdf[i] = (acc += (*dens)[i]);
    for (double& c : cdf) c /= acc;
    parallel_for(n, [&](std::size_t b, std::size_t end) {
      for (std::size_t i = b; i < end; ++i) {
        CounterRng rng(seed, StreamDomain::kInitialSample, static_cast<std::uint32_t>(i));
        const double u = rng.uniform();
        const std::size_t node =
            std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), g.size() - 1);
        Vec x = g.node(node);
        for (int a = 0; a < d; ++a) x[a] += (rng.uniform() - 0.5) * g.spacing()[a];
        pts[i] = x;
      }
    });
    return EmpiricalMeasure(d, std::move(pts));
  }

  const auto& sampler = std::get<ExactSampler>(law.variant());
  std::vector<double> mixture_cdf;
  if (const auto* m = std::get_if<MixtureLaw>(&sampler.family)) {
    double total = 0.0;
    for (const auto& c : m->components) total += c.weight;
    double acc = 0.0;
    for (const auto& c : m->components) mixture_cdf.push_back((acc += c.weight) / total);
  }
  parallel_for(n, [&](std::size_t b, std::size_t end) {
    for (std::size_t i = b; i < end; ++i) {
      CounterRng rng(seed, StreamDomain::kInitialSample, static_cast<std::uint32_t>(i));
      pts[i] = draw_exact(sampler, rng, mixture_cdf);
    }
  });
  return EmpiricalMeasure(d, std::move(pts));
}

}  // namespace mkvlab
