#include "mkvlab/io/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/io/manifest.hpp"
#include "mkvlab/io/serialize.hpp"
#include "toml.hpp"

namespace mkvlab {
namespace {

using Json = nlohmann::ordered_json;

Json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Json json_vec(const Vec& v, int dim) {
  Json a = Json::array();
  for (int i = 0; i < dim; ++i) a.push_back(v[i]);
  return a;
}

// One TOML table being read: remembers which keys were consumed, echoes the
// resolved value of every key it is asked for, and reports errors with the
// line of the offending node.
class Section {
 public:
  Section(const toml::table& t, std::string path, const std::string& file) : t_(t), path_(std::move(path)), file_(file) {}

  bool has(const std::string& key) const { return t_.contains(key); }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const toml::node* n = t_.get(key);
    fail_at(n ? n->source().begin.line : line(), key, msg);
  }

  [[noreturn]] void fail_at(std::size_t line, const std::string& key, const std::string& msg) const {
    std::ostringstream os;
    os << file_;
    if (line > 0) os << ":" << line;
    os << ": ";
    if (!key.empty()) os << "key '" << qualified(key) << "': ";
    os << msg;
    throw ConfigError(os.str());
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  std::optional<double> maybe_number(const std::string& key, bool allow_inf = false) {
    const toml::node* n = take(key);
    if (!n) return std::nullopt;
    double v;
    if (auto i = n->as_integer()) v = double(i->get());
    else if (auto f = n->as_floating_point()) v = f->get();
    else if (auto s = n->as_string(); s && allow_inf && (s->get() == "inf" || s->get() == "infinity")) v = INFINITY;
    else fail(key, allow_inf ? "expected a number or \"inf\"" : "expected a number");
    if (std::isnan(v) || (!allow_inf && std::isinf(v))) fail(key, "expected a finite number");
    echo_[key] = json_number(v);
    return v;
  }

  double number(const std::string& key, double def, bool allow_inf = false) {
    if (auto v = maybe_number(key, allow_inf)) return *v;
    echo_[key] = json_number(def);
    return def;
  }

  double positive(const std::string& key, double def) {
    const double v = number(key, def);
    if (!(v > 0.0)) fail(key, "must be positive");
    return v;
  }

  std::int64_t integer(const std::string& key, std::int64_t def, std::int64_t min) {
    std::int64_t v = def;
    if (const toml::node* n = take(key)) {
      auto i = n->as_integer();
      if (!i) fail(key, "expected an integer");
      v = i->get();
      if (v < min) fail(key, "must be >= " + std::to_string(min));
    }
    echo_[key] = v;
    return v;
  }

  bool flag(const std::string& key, bool def) {
    bool v = def;
    if (const toml::node* n = take(key)) {
      auto b = n->as_boolean();
      if (!b) fail(key, "expected true or false");
      v = b->get();
    }
    echo_[key] = v;
    return v;
  }

  std::string text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {}) {
    std::string v = def;
    if (const toml::node* n = take(key)) {
      auto s = n->as_string();
      if (!s) fail(key, "expected a string");
      v = s->get();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(key, "'" + v + "' is not one of " + list);
    }
    echo_[key] = v;
    return v;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
    std::vector<double> v = def;
    if (const toml::node* n = take(key)) {
      auto a = n->as_array();
      if (!a) fail(key, "expected an array of numbers");
      v.clear();
      for (const toml::node& e : *a) {
        if (auto i = e.as_integer()) v.push_back(double(i->get()));
        else if (auto f = e.as_floating_point()) v.push_back(f->get());
        else fail(key, "expected an array of numbers");
        if (!std::isfinite(v.back())) fail(key, "entries must be finite");
      }
    }
    Json a = Json::array();
    for (double x : v) a.push_back(x);
    echo_[key] = a;
    return v;
  }

  std::vector<std::string> strings(const std::string& key) {
    std::vector<std::string> v;
    if (const toml::node* n = take(key)) {
      auto a = n->as_array();
      if (!a) fail(key, "expected an array of strings");
      for (const toml::node& e : *a) {
        auto s = e.as_string();
        if (!s) fail(key, "expected an array of strings");
        v.push_back(s->get());
      }
    }
    echo_[key] = v;
    return v;
  }

  Vec vec(const std::string& key, const Vec& def, int dim) {
    Vec v = def;
    if (has(key)) {
      const std::vector<double> xs = numbers(key, {});
      if (static_cast<int>(xs.size()) != dim) fail(key, "expected " + std::to_string(dim) + " entries (one per dimension)");
      v = Vec{};
      for (int i = 0; i < dim; ++i) v[i] = xs[i];
    }
    echo_[key] = json_vec(v, dim);
    return v;
  }

  // Rows of a dim x cols matrix.
  Mat3 matrix(const std::string& key, const Mat3& def, int dim, int cols) {
    Mat3 m = def;
    if (const toml::node* n = take(key)) {
      auto rows = n->as_array();
      if (!rows || static_cast<int>(rows->size()) != dim) fail(key, "expected " + std::to_string(dim) + " rows");
      m = Mat3{};
      for (int r = 0; r < dim; ++r) {
        auto row = (*rows)[r].as_array();
        if (!row || static_cast<int>(row->size()) != cols) fail(key, "each row needs " + std::to_string(cols) + " numbers");
        for (int c = 0; c < cols; ++c) {
          const toml::node& e = (*row)[c];
          if (auto i = e.as_integer()) m[r][c] = double(i->get());
          else if (auto f = e.as_floating_point()) m[r][c] = f->get();
          else fail(key, "matrix entries must be numbers");
        }
      }
    }
    Json a = Json::array();
    for (int r = 0; r < dim; ++r) a.push_back(json_vec(m[r], cols));
    echo_[key] = a;
    return m;
  }

  std::vector<Vec> points(const std::string& key, int dim) {
    std::vector<Vec> out;
    Json echo = Json::array();
    if (const toml::node* n = take(key)) {
      auto a = n->as_array();
      if (!a) fail(key, "expected an array of points");
      for (const toml::node& e : *a) {
        auto row = e.as_array();
        if (!row || static_cast<int>(row->size()) != dim)
          fail(key, "each point needs " + std::to_string(dim) + " coordinates");
        Vec v{};
        for (int i = 0; i < dim; ++i) {
          const toml::node& x = (*row)[i];
          if (auto k = x.as_integer()) v[i] = double(k->get());
          else if (auto f = x.as_floating_point()) v[i] = f->get();
          else fail(key, "coordinates must be numbers");
        }
        out.push_back(v);
        echo.push_back(json_vec(v, dim));
      }
    }
    echo_[key] = echo;
    return out;
  }

  // Reads a sub-table (an empty one when absent, so defaults are echoed).
  template <class F>
  bool table(const std::string& key, F&& f) {
    static const toml::table empty;
    const toml::node* n = take(key);
    if (n && !n->is_table()) fail(key, "expected a table");
    Section s(n ? *n->as_table() : empty, qualified(key), file_);
    if (!n) s.line_hint_ = t_.source().begin.line;
    f(s);
    s.finish();
    echo_[key] = std::move(s.echo_);
    return n != nullptr;
  }

  const toml::array* table_array(const std::string& key) {
    const toml::node* n = take(key);
    if (!n) return nullptr;
    auto a = n->as_array();
    if (!a || !a->is_array_of_tables()) fail(key, "expected an array of tables");
    return a;
  }

  Section element(const toml::node& n, const std::string& key, std::size_t i) {
    return Section(*n.as_table(), qualified(key) + "[" + std::to_string(i) + "]", file_);
  }

  void finish() const {
    for (const auto& [k, v] : t_)
      if (!used_.count(std::string(k.str()))) fail_at(v.source().begin.line, std::string(k.str()), "unknown key");
  }

  std::size_t line() const { return t_.source().begin.line ? t_.source().begin.line : line_hint_; }
  const Json& echo() const { return echo_; }
  Json& echo() { return echo_; }

 private:
  const toml::node* take(const std::string& key) {
    used_.insert(key);
    return t_.get(key);
  }

  const toml::table& t_;
  std::string path_;
  const std::string& file_;
  std::set<std::string> used_;
  Json echo_ = Json::object();
  std::size_t line_hint_ = 0;
};

// Runs `f` and rewraps a ParameterError as a ConfigError located at the
// section's line.
template <class F>
auto located(const Section& s, const std::string& what, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const ParameterError& e) {
    s.fail_at(s.line(), "", what + ": " + e.what());
  }
}

DiffusionSpec read_sigma(Section& s, int dim) {
  DiffusionSpec d;
  const std::string form = s.text("form", "constant", {"constant", "diagonal_affine"});
  if (form == "constant") {
    if (s.has("scale") && s.has("matrix")) s.fail("matrix", "give either scale or matrix, not both");
    const int m = static_cast<int>(s.integer("noise_dim", dim, 1));
    if (m > kMaxDim) s.fail("noise_dim", "at most 3 noise axes");
    if (s.has("matrix")) {
      d = DiffusionSpec::constant(dim, 1.0);
      d.matrix = s.matrix("matrix", d.matrix, dim, m);
      d.noise_dim = m;
    } else {
      if (m != dim) s.fail("noise_dim", "a scalar scale needs noise_dim = dim; give a matrix otherwise");
      d = DiffusionSpec::constant(dim, s.number("scale", 1.0));
    }
  } else {
    d.form = DiffusionSpec::Form::kDiagonalAffine;
    d.base = s.number("base", 1.0);
    d.slope = s.number("slope", 0.0);
    d.clamp_radius = s.positive("clamp_radius", 1.0);
  }
  if (s.has("ellipticity")) {
    const auto e = s.numbers("ellipticity", {});
    if (e.size() != 2) s.fail("ellipticity", "expected [lambda_min, lambda_max]");
    d.ellipticity = std::make_pair(e[0], e[1]);
  }
  return d;
}

void read_sde(Section& s, SdeConfig& c) {
  c.dim = static_cast<int>(s.integer("dim", 1, 1));
  if (c.dim > kMaxDim) s.fail("dim", "must be 1, 2 or 3");
  c.horizon = s.positive("horizon", 1.0);
  c.dt = s.positive("dt", 0.01);
  c.n_particles = static_cast<std::size_t>(s.integer("particles", 1000, 1));
  c.record_times = s.numbers("record_times", {});
  s.table("sigma", [&](Section& t) { c.sigma = read_sigma(t, c.dim); });
}

InitialLaw read_initial(Section& s, int dim, const std::filesystem::path& base_dir) {
  const std::string law = s.text("law", "dirac",
                                 {"dirac", "gaussian", "uniform", "mixture", "power_law", "density", "empirical"});
  const Vec ones{1.0, 1.0, 1.0};
  auto make = [&](SamplerFamily f) { return InitialLaw(ExactSampler{dim, std::move(f)}); };
  return located(s, "initial law", [&]() -> InitialLaw {
    if (law == "dirac") return make(DiracLaw{s.vec("at", Vec{}, dim)});
    if (law == "gaussian") {
      GaussianLaw g;
      g.mean = s.vec("mean", Vec{}, dim);
      g.std = s.vec("std", ones, dim);
      for (int a = dim; a < kMaxDim; ++a) g.std[a] = 1.0;
      return make(g);
    }
    if (law == "uniform") {
      UniformLaw u;
      u.lower = s.vec("lower", Vec{}, dim);
      u.upper = s.vec("upper", ones, dim);
      for (int a = dim; a < kMaxDim; ++a) u.upper[a] = 1.0;
      return make(u);
    }
    if (law == "mixture") {
      MixtureLaw m;
      const toml::array* comps = s.table_array("components");
      if (!comps) s.fail("components", "a mixture needs [[initial.components]] entries");
      Json echo = Json::array();
      std::size_t i = 0;
      for (const toml::node& n : *comps) {
        Section c = s.element(n, "components", i++);
        MixtureComponent mc;
        mc.weight = c.number("weight", 1.0);
        mc.law.mean = c.vec("mean", Vec{}, dim);
        mc.law.std = c.vec("std", ones, dim);
        for (int a = dim; a < kMaxDim; ++a) mc.law.std[a] = 1.0;
        c.finish();
        echo.push_back(c.echo());
        m.components.push_back(mc);
      }
      s.echo()["components"] = echo;
      return make(m);
    }
    if (law == "power_law") {
      PowerLawLaw p;
      p.alpha = s.number("alpha", 0.5);
      p.radius = s.positive("radius", 1.0);
      return make(p);
    }
    const std::string rel = s.text("path", "");
    if (rel.empty()) s.fail("path", "law '" + law + "' needs a CSV path");
    const std::filesystem::path path = base_dir / rel;
    std::ifstream in(path);
    if (!in) s.fail("path", "cannot open '" + path.string() + "'");
    InitialLaw out = law == "density" ? InitialLaw(read_density_csv(in, path.string()))
                                      : InitialLaw(read_empirical_csv(in, path.string()));
    if (out.dim() != dim) s.fail("path", "file dimension differs from sde.dim");
    return out;
  });
}

KernelSpec read_kernel(Section& s, int dim, double& coupling) {
  KernelSpec k;
  k.dim = dim;
  if (!s.has("family")) s.fail_at(s.line(), "family", "required (coulomb, newton, biot_savart, riesz or shifted_riesz)");
  k.family = kernel_family_from_string(
      s.text("family", "", {"coulomb", "newton", "biot_savart", "riesz", "shifted_riesz"}));
  k.epsilon = s.number("epsilon", 0.0);
  if (k.family == KernelFamily::kRiesz || k.family == KernelFamily::kShiftedRiesz) {
    k.kappa = s.number("kappa", 1.0);
    k.beta = s.number("beta", 0.5);
  }
  if (k.family == KernelFamily::kShiftedRiesz) k.shifts = s.points("shifts", dim);
  if (s.has("cutoff")) k.cutoff = s.positive("cutoff", 1.0);
  coupling = s.number("coupling", 1.0);
  located(s, "kernel", [&] {
    k.validate();
    return 0;
  });
  return k;
}

void read_drift(Section& s, DriftSpec& d, int dim) {
  d.strict_linear = s.flag("strict_linear", false);
  if (s.has("linear")) {
    s.table("linear", [&](Section& t) {
      LinearDrift l;
      if (t.has("ou_rate") && t.has("matrix")) t.fail("matrix", "give either ou_rate or matrix, not both");
      if (t.has("matrix")) l.matrix = t.matrix("matrix", Mat3{}, dim, dim);
      else l = LinearDrift::ornstein_uhlenbeck(dim, t.number("ou_rate", 1.0));
      l.offset = t.vec("offset", Vec{}, dim);
      d.b1 = l;
    });
  }
  if (const toml::array* terms = s.table_array("singular")) {
    Json echo = Json::array();
    std::size_t i = 0;
    for (const toml::node& n : *terms) {
      Section t = s.element(n, "singular", i++);
      RadialPowerTerm r;
      r.coefficient = t.number("coefficient", 1.0);
      r.beta = t.number("beta", 0.5);
      r.centre = t.vec("centre", Vec{}, dim);
      r.epsilon = t.number("epsilon", 0.0);
      r.p_prime = t.positive("p_prime", 1.0);
      r.q_prime = t.positive("q_prime", 1.0);
      t.finish();
      echo.push_back(t.echo());
      d.extra_singular.push_back(r);
    }
    s.echo()["singular"] = echo;
  }
}

// Class D first, so an inadmissible pair is reported with its inequality
// even when k = 1 would also be refused.
ExponentParams read_exponents(Section& s, int dim, KStarParams& kp) {
  const double p = s.number("p", kInfinity, true);
  const double k = s.number("k", 2.0, true);
  std::optional<double> r = s.maybe_number("r");
  if (!r) s.echo()["r"] = nullptr;
  const ExponentParams e = located(s, "exponents", [&] { return class_d_check(dim, p, k); });
  if (!e.in_class_D) s.fail_at(s.line(), "", "(p, k) is not admissible: " + e.inequality());
  kp = KStarParams{k, r};
  located(s, "exponents", [&] {
    kp.validate(dim);
    return 0;
  });
  s.echo()["theta"] = e.theta;
  s.echo()["decay_exponent"] = e.decay_exponent;
  return e;
}

void read_picard(Section& s, PicardConfig& c) {
  c.lambda = s.number("lambda", c.lambda);
  c.auto_lambda = s.flag("auto_lambda", c.auto_lambda);
  c.tol = s.positive("tol", c.tol);
  c.max_iter = static_cast<int>(s.integer("max_iter", c.max_iter, 1));
  c.particles = static_cast<std::size_t>(s.integer("particles", c.particles, 2));
  c.mesh_intervals = static_cast<std::size_t>(s.integer("mesh_intervals", c.mesh_intervals, 1));
  c.bandwidth_scale = s.positive("bandwidth_scale", c.bandwidth_scale);
  c.grid_nodes = static_cast<std::size_t>(s.integer("grid_nodes", c.grid_nodes, 0));
  c.grid_half_width = s.number("grid_half_width", c.grid_half_width);
  c.beta0 = s.number("beta0", c.beta0);
  c.n = static_cast<int>(s.integer("n", c.n, 1));
  c.blowup_ceiling = s.positive("blowup_ceiling", c.blowup_ceiling);
}

void read_metrics(Section& s, MetricsConfig& m, const std::filesystem::path& base_dir) {
  const double k = s.number("k", 2.0, true);
  std::optional<double> r = s.maybe_number("r");
  if (!r) s.echo()["r"] = nullptr;
  m.kstar = KStarParams{k, r};
  m.q = s.number("q", 2.0);
  if (!(m.q >= 1.0)) s.fail("q", "must be >= 1");
  m.kind = s.text("kind", "density", {"density", "empirical"});
  const std::string mu = s.text("mu", "");
  const std::string nu = s.text("nu", "");
  if (!mu.empty()) m.mu = base_dir / mu;
  if (!nu.empty()) m.nu = base_dir / nu;
  m.quantities = s.strings("quantities");
  const std::vector<std::string> density_q{"kstar_norm", "kstar_distance", "kstar_oracle", "tv", "entropy"};
  const std::vector<std::string> empirical_q{"wasserstein"};
  const auto& allowed = m.kind == "density" ? density_q : empirical_q;
  for (const auto& q : m.quantities)
    if (std::find(allowed.begin(), allowed.end(), q) == allowed.end())
      s.fail("quantities", "'" + q + "' does not apply to " + m.kind + " inputs");
}

void read_seeds(Section& s, SeedPlan& plan, int count) {
  plan.count = static_cast<int>(s.integer("seeds", count, 1));
}

void read_interaction(Section& s, BoundedInteraction& in) {
  in.enabled = s.flag("enabled", in.enabled);
  in.kappa = s.number("kappa", in.kappa);
  in.beta = s.number("beta", in.beta);
  in.epsilon = s.number("epsilon", in.epsilon);
  in.coupling = s.number("coupling", in.coupling);
}

void read_lamb_oseen(Section& s, LambOseenParams& p, int seeds) {
  p.nu = s.positive("nu", p.nu);
  p.sigma0 = s.positive("sigma0", p.sigma0);
  p.epsilon = s.number("epsilon", p.epsilon);
  p.particles = static_cast<std::size_t>(s.integer("particles", p.particles, 2));
  p.dt = s.positive("dt", p.dt);
  p.horizon = s.positive("horizon", p.horizon);
  p.radial_bins = static_cast<std::size_t>(s.integer("radial_bins", p.radial_bins, 0));
  p.epsilon_halving = s.flag("epsilon_halving", p.epsilon_halving);
  p.pair_radius = s.positive("pair_radius", p.pair_radius);
  p.pair_dt = s.positive("pair_dt", p.pair_dt);
  p.pair_horizon = s.positive("pair_horizon", p.pair_horizon);
  read_seeds(s, p.seeds, seeds);
  p.max_radial_l1 = s.positive("max_radial_l1", p.max_radial_l1);
  p.max_halving_growth = s.number("max_halving_growth", p.max_halving_growth);
  p.max_radius_drift = s.positive("max_radius_drift", p.max_radius_drift);
}

void read_decay(Section& s, DecayParams& p, int seeds) {
  p.dim = static_cast<int>(s.integer("dim", p.dim, 1));
  p.k = s.number("k", p.k);
  p.horizon = s.positive("horizon", p.horizon);
  p.t_min_fraction = s.positive("t_min_fraction", p.t_min_fraction);
  p.times = static_cast<int>(s.integer("times", p.times, 3));
  p.particles = static_cast<std::size_t>(s.integer("particles", p.particles, 2));
  p.sigma = s.number("sigma", p.sigma);
  p.start_std = s.number("start_std", p.start_std);
  p.radius = s.number("radius", p.radius);
  read_seeds(s, p.seeds, seeds);
  p.slope_rel_tol = s.positive("slope_rel_tol", p.slope_rel_tol);
  p.slope_abs_tol = s.positive("slope_abs_tol", p.slope_abs_tol);
}

void read_entropy(Section& s, EntropyCostParams& p, int seeds) {
  p.mean_offset = s.positive("mean_offset", p.mean_offset);
  p.times = s.numbers("t_grid", p.times);
  p.particles = static_cast<std::size_t>(s.integer("particles", p.particles, 2));
  p.dt = s.positive("dt", p.dt);
  p.sigma = s.positive("sigma", p.sigma);
  p.sigma0 = s.positive("sigma0", p.sigma0);
  p.grid_nodes = static_cast<std::size_t>(s.integer("grid_nodes", p.grid_nodes, 8));
  s.table("interaction", [&](Section& t) { read_interaction(t, p.interaction); });
  read_seeds(s, p.seeds, seeds);
  p.max_stability_ratio = s.positive("max_stability_ratio", p.max_stability_ratio);
  p.closed_form_rel_tol = s.positive("closed_form_rel_tol", p.closed_form_rel_tol);
  p.w2_rel_tol = s.positive("w2_rel_tol", p.w2_rel_tol);
}

void read_kstar_w(Section& s, KStarWassersteinParams& p, int seeds) {
  p.k = s.number("k", p.k, true);
  p.p = s.number("p", p.p, true);
  p.q = s.number("q", p.q);
  p.offsets = s.numbers("offsets", p.offsets);
  p.time = s.positive("time", p.time);
  p.particles = static_cast<std::size_t>(s.integer("particles", p.particles, 2));
  p.dt = s.positive("dt", p.dt);
  p.sigma = s.positive("sigma", p.sigma);
  p.sigma0 = s.positive("sigma0", p.sigma0);
  p.grid_nodes = static_cast<std::size_t>(s.integer("grid_nodes", p.grid_nodes, 8));
  s.table("interaction", [&](Section& t) { read_interaction(t, p.interaction); });
  read_seeds(s, p.seeds, seeds);
  p.min_r2 = s.number("min_r2", p.min_r2);
}

void read_contraction(Section& s, PicardContractionParams& p, int seeds) {
  p.horizon_from_tau = s.flag("horizon_from_tau", p.horizon_from_tau);
  p.gate_cases = static_cast<std::size_t>(s.integer("gate_cases", p.gate_cases, 1));
  p.chaos_check = s.flag("chaos_check", p.chaos_check);
  p.chaos_particles = static_cast<std::size_t>(s.integer("chaos_particles", p.chaos_particles, 2));
  read_seeds(s, p.seeds, seeds);
  p.max_median_ratio = s.positive("max_median_ratio", p.max_median_ratio);
  p.self_consistency_factor = s.positive("self_consistency_factor", p.self_consistency_factor);
  p.chaos_factor = s.positive("chaos_factor", p.chaos_factor);
}

RunConfig build(const toml::table& root, const std::filesystem::path& source) {
  RunConfig c;
  c.source = source;
  const std::string file = source.string();
  const std::filesystem::path base_dir = source.has_parent_path() ? source.parent_path() : ".";
  Section top(root, "", file);

  c.command = top.text("command", "");
  const std::vector<std::string> commands{"simulate", "picard", "metrics", "experiment"};
  if (!c.command.empty() && std::find(commands.begin(), commands.end(), c.command) == commands.end())
    top.fail("command", "'" + c.command + "' is not one of simulate, picard, metrics, experiment");
  c.scenario = top.text("scenario", "");
  const auto& names = scenario_names();
  if (!c.scenario.empty() && std::find(names.begin(), names.end(), c.scenario) == names.end())
    top.fail("scenario", "unknown scenario '" + c.scenario + "'");
  c.output = top.text("output", "");
  c.seed = static_cast<std::uint64_t>(top.integer("seed", static_cast<std::int64_t>(SeedPlan{}.base), 0));

  top.table("sde", [&](Section& s) { read_sde(s, c.sde); });
  const int dim = c.sde.dim;
  c.has_initial = top.has("initial");
  top.table("initial", [&](Section& s) { c.initial = read_initial(s, dim, base_dir); });
  const bool has_kernel = top.has("kernel");
  if (has_kernel) {
    top.table("kernel", [&](Section& s) {
      double coupling = 1.0;
      KernelSpec k = read_kernel(s, dim, coupling);
      c.sde.drift.b0 = MeanFieldTerm{k, coupling};
    });
  } else {
    top.echo()["kernel"] = nullptr;
  }
  top.table("drift", [&](Section& s) { read_drift(s, c.sde.drift, dim); });
  located(top, "drift", [&] {
    c.sde.drift.validate(dim);
    return 0;
  });

  const bool has_exponents = top.has("exponents");
  if (has_exponents) {
    top.table("exponents", [&](Section& s) { c.exponents = read_exponents(s, dim, c.picard.kparams); });
  } else {
    top.echo()["exponents"] = nullptr;
  }
  const bool has_picard = top.has("picard");
  top.table("picard", [&](Section& s) { read_picard(s, c.picard); });
  c.has_picard_tables = has_picard || has_kernel || has_exponents;

  top.table("metrics", [&](Section& s) { read_metrics(s, c.metrics, base_dir); });

  top.table("experiment", [&](Section& s) {
    const int seeds = static_cast<int>(s.integer("seeds", 10, 1));
    s.table("lamb_oseen", [&](Section& t) { read_lamb_oseen(t, c.lamb_oseen, seeds); });
    s.table("decay_slope", [&](Section& t) { read_decay(t, c.decay_slope, seeds); });
    s.table("entropy_cost", [&](Section& t) { read_entropy(t, c.entropy_cost, seeds); });
    s.table("kstar_wasserstein", [&](Section& t) { read_kstar_w(t, c.kstar_wasserstein, seeds); });
    s.table("picard_contraction", [&](Section& t) { read_contraction(t, c.picard_contraction, seeds); });
  });
  top.finish();

  located(top, "sde", [&] {
    c.sde.validate();
    return 0;
  });
  if (c.initial.dim() != dim) top.fail("initial", "law dimension differs from sde.dim");

  // Picard run and the contraction template share the same tables.
  c.picard.sde = c.sde;
  if (c.exponents) c.picard.exponents = *c.exponents;
  if (c.has_picard_tables) {
    c.picard_contraction.picard = c.picard;
    if (c.has_initial) c.picard_contraction.gamma = c.initial;
  } else {
    c.picard_contraction.picard = default_contraction_picard();
  }

  c.resolved = std::move(top.echo());
  c.set_seed(c.seed);
  return c;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  sde.seed = s;
  picard.sde.seed = s;
  picard_contraction.picard.sde.seed = s;
  for (SeedPlan* plan : {&lamb_oseen.seeds, &decay_slope.seeds, &entropy_cost.seeds, &kstar_wasserstein.seeds,
                         &picard_contraction.seeds})
    plan->base = s;
  resolved["seed"] = s;
}

std::string RunConfig::hash() const { return sha256_hex(resolved.dump()); }

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& source) {
  toml::table root;
  try {
    root = toml::parse(text, source.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source.string() << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }
  return build(root, source);
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace mkvlab
