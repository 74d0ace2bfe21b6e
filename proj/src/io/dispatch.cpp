#include "mkvlab/io/dispatch.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/parallel.hpp"
#include "mkvlab/io/config.hpp"
#include "mkvlab/io/manifest.hpp"
#include "mkvlab/io/serialize.hpp"
#include "mkvlab/metrics/distances.hpp"

namespace mkvlab {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::ordered_json;

Json num(double x) { return std::isfinite(x) ? Json(x) : Json(format_double(x)); }

Json nums(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

template <class Write, class T>
void write_csv(StagedOutput& st, const std::string& name, Write w, const T& value) {
  std::ofstream os(st.file(name), std::ios::binary);
  w(os, value);
  if (!os) throw Error("cannot write " + name);
}

void write_json(StagedOutput& st, const std::string& name, const Json& j) { st.write_text(name, j.dump(2) + "\n"); }

// Returns the exit status the command earned (0, 3 or 4); thrown errors are
// handled by the caller.
int do_simulate(const RunConfig& c, StagedOutput& st) {
  const TrajectoryBundle b = simulate_interacting(c.sde, c.initial);
  write_csv(st, "trajectories.csv", write_trajectories_csv, b);
  std::ostringstream os;
  os << "t,abs_moment_2";
  for (int a = 0; a < b.dim; ++a) os << ",mean_x" << a + 1;
  for (int a = 0; a < b.dim; ++a) os << ",var_x" << a + 1;
  os << "\n";
  for (double t : b.times) {
    const Moments m = empirical_moments(b, t, 2.0);
    os << format_double(t) << "," << format_double(m.absolute);
    for (int a = 0; a < b.dim; ++a) os << "," << format_double(m.mean[a]);
    for (int a = 0; a < b.dim; ++a) os << "," << format_double(m.variance[a]);
    os << "\n";
  }
  st.write_text("moments.csv", os.str());
  write_json(st, "config.json", c.resolved);
  return 0;
}

int do_picard(const RunConfig& c, StagedOutput& st, bool timing) {
  const PicardResult r = solve_fixed_point(c.initial, c.picard);
  std::ostringstream os;
  os << "iter,rho,ratio,lambda,floor,wall_ms\n";
  for (const auto& it : r.log)
    os << it.iter << "," << format_double(it.rho) << "," << format_double(it.ratio) << "," << format_double(it.lambda)
       << "," << format_double(it.floor) << "," << format_double(timing ? it.wall_ms : 0.0) << "\n";
  st.write_text("picard_log.csv", os.str());
  write_csv(st, "flow.csv", write_flow_csv, r.flow);

  const FlowDiagnostics& d = r.diagnostics;
  Json j;
  j["status"] = to_string(r.status);
  j["iterations"] = r.log.size();
  j["lambda"] = r.lambda;
  j["mc_floor"] = r.mc_floor;
  j["tau"] = num(r.tau);
  j["exponents"] = {{"d", c.picard.exponents.d},
                    {"p", num(c.picard.exponents.p)},
                    {"k", num(c.picard.exponents.k)},
                    {"theta", c.picard.exponents.theta},
                    {"decay_exponent", c.picard.exponents.decay_exponent}};
  j["mesh"] = nums(r.flow.mesh());
  j["kstar_norms"] = nums(d.kstar_norms);
  j["rho_seminorm"] = num(d.rho_seminorm);
  j["kappa"] = nums(d.kappa);
  j["kstar_square_integral"] = num(d.kstar_square_integral);
  j["blowup_flag"] = d.blowup_flag;
  j["blowup_time"] = d.blowup_time;
  j["leray_series"] = nums(d.leray_series);
  write_json(st, "diagnostics.json", j);
  return r.status == PicardStatus::kConverged ? 0 : 3;
}

template <class T, class Read>
T load(const fs::path& p, Read read, const char* key) {
  if (p.empty()) throw ConfigError("metrics." + std::string(key) + " is required");
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("metrics." + std::string(key) + ": cannot open " + p.string());
  try {
    return read(in, p.string());
  } catch (const ParameterError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

int do_metrics(const RunConfig& c, StagedOutput& st) {
  const MetricsConfig& m = c.metrics;
  Json j;
  j["kind"] = m.kind;
  j["mu"] = m.mu.string();
  j["nu"] = m.nu.empty() ? Json(nullptr) : Json(m.nu.string());
  Json values;
  auto wants = [&](const std::string& q) {
    return m.quantities.empty() || std::find(m.quantities.begin(), m.quantities.end(), q) != m.quantities.end();
  };
  auto needs_nu = [&](const std::string& q) {
    if (m.nu.empty()) {
      if (!m.quantities.empty()) throw ConfigError("metrics quantity '" + q + "' needs metrics.nu");
      return false;
    }
    return true;
  };
  if (m.kind == "density") {
    const Density mu = load<Density>(m.mu, read_density_csv, "mu");
    std::optional<Density> nu;
    if (!m.nu.empty()) nu = load<Density>(m.nu, read_density_csv, "nu");
    j["k"] = num(m.kstar.k);
    j["r"] = m.kstar.radius(mu.grid().dim());
    if (wants("kstar_norm")) {
      values["kstar_norm_mu"] = num(kstar_norm_surrogate(mu, m.kstar));
      if (nu) values["kstar_norm_nu"] = num(kstar_norm_surrogate(*nu, m.kstar));
    }
    if (wants("kstar_oracle")) {
      const DualOracleResult o = kstar_norm_dual_oracle_detail(mu, m.kstar);
      values["kstar_oracle_mu"] = {{"lower", num(o.value)}, {"upper", num(o.upper_bound)}, {"iterations", o.iterations}};
    }
    if (wants("kstar_distance") && needs_nu("kstar_distance"))
      values["kstar_distance"] = num(kstar_distance(mu, *nu, m.kstar));
    if (wants("tv") && needs_nu("tv")) values["tv"] = num(tv_distance(mu, *nu));
    if (wants("entropy") && needs_nu("entropy")) values["relative_entropy"] = num(relative_entropy(mu, *nu));
  } else {
    const EmpiricalMeasure mu = load<EmpiricalMeasure>(m.mu, read_empirical_csv, "mu");
    const EmpiricalMeasure nu = load<EmpiricalMeasure>(m.nu, read_empirical_csv, "nu");
    j["q"] = m.q;
    values["wasserstein"] = num(wasserstein_q(mu, nu, m.q));
  }
  j["values"] = values;
  write_json(st, "metrics.json", j);
  return 0;
}

ExperimentReport run_scenario(const RunConfig& c, const std::string& s) {
  if (s == "lamb_oseen") return run_lamb_oseen(c.lamb_oseen);
  if (s == "decay_slope") return run_decay_slope(c.decay_slope);
  if (s == "entropy_cost") return run_entropy_cost(c.entropy_cost);
  if (s == "kstar_wasserstein") return run_kstar_wasserstein(c.kstar_wasserstein);
  if (s == "picard_contraction") return run_picard_contraction(c.picard_contraction);
  throw ConfigError("unknown scenario '" + s + "'");
}

int do_experiment(const RunConfig& c, const std::string& scenario, StagedOutput& st, bool timing, std::ostream& log) {
  ExperimentReport r = run_scenario(c, scenario);
  r.config_hash = c.hash();
  r.seed = c.seed;
  write_json(st, "report.json", report_to_json(r, timing));
  for (const auto& t : r.tables) write_csv(st, t.name + ".csv", write_table_csv, t);
  for (const auto& v : r.verdicts) log << (v.passed ? "  [ok]   " : "  [FAIL] ") << v.criterion << ": " << v.detail << "\n";
  return r.passed() ? 0 : 4;
}

std::string status_name(int code) {
  switch (code) {
    case 0: return "ok";
    case 2: return "config_error";
    case 4: return "acceptance_failure";
    default: return "numeric_failure";
  }
}

Json error_json(const std::exception& e) {
  Json j;
  j["message"] = e.what();
  if (auto* c = dynamic_cast<const CollisionError*>(&e)) {
    j["type"] = "collision";
    j["step"] = c->step();
    j["particles"] = {c->first(), c->second()};
  } else if (auto* o = dynamic_cast<const OverflowError*>(&e)) {
    j["type"] = "overflow";
    j["time"] = o->time();
  } else if (auto* n = dynamic_cast<const NonConvergenceError*>(&e)) {
    j["type"] = "non_convergence";
    j["bounds"] = {num(n->lower_bound()), num(n->upper_bound())};
  } else if (auto* cov = dynamic_cast<const CoverageError*>(&e)) {
    j["type"] = "coverage";
    j["offending"] = cov->offending();
  } else if (dynamic_cast<const ConfigError*>(&e)) {
    j["type"] = "config";
  } else if (dynamic_cast<const ParameterError*>(&e)) {
    j["type"] = "parameter";
  } else {
    j["type"] = "numeric";
  }
  return j;
}

}  // namespace

int run_request(const CliRequest& req, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest m;
  m.command = req.command;
  m.config = req.config.string();
  m.started = utc_now();
  m.threads = max_threads();

  // Errors before an output directory is known go to the log only.
  RunConfig c;
  std::string scenario = req.scenario;
  fs::path out;
  try {
    c = parse_config(req.config);
    if (!c.command.empty() && c.command != req.command)
      throw ConfigError(req.config.string() + ": config is for '" + c.command + "', not '" + req.command + "'");
    if (req.seed) c.set_seed(*req.seed);
    if (req.command == "experiment") {
      if (scenario.empty()) scenario = c.scenario;
      if (scenario.empty()) throw ConfigError("experiment needs a scenario (`experiment run <name>` or `scenario =`)");
      if (!c.scenario.empty() && c.scenario != scenario)
        throw ConfigError(req.config.string() + ": config is for scenario '" + c.scenario + "', not '" + scenario + "'");
      const auto& names = scenario_names();
      if (std::find(names.begin(), names.end(), scenario) == names.end())
        throw ConfigError("unknown scenario '" + scenario + "'");
    }
    out = req.out ? *req.out : !c.output.empty() ? c.output : fs::path("runs") / (scenario.empty() ? req.command : scenario);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return e.exit_code();
  }

  m.scenario = scenario;
  m.config_hash = c.hash();
  m.seed = c.seed;

  std::optional<StagedOutput> st;
  try {
    st.emplace(out);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return 3;
  }

  auto finish = [&](int code) {
    m.exit_code = code;
    m.status = status_name(code);
    m.finished = utc_now();
    m.wall_ms = req.timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() : 0.0;
  };

  int code = 0;
  try {
    if (req.command == "simulate") code = do_simulate(c, *st);
    else if (req.command == "picard") code = do_picard(c, *st, req.timing);
    else if (req.command == "metrics") code = do_metrics(c, *st);
    else if (req.command == "experiment") code = do_experiment(c, scenario, *st, req.timing, log);
    else throw ConfigError("unknown command '" + req.command + "'");
  } catch (const std::exception& e) {
    code = 3;
    if (auto* err = dynamic_cast<const Error*>(&e)) code = err->exit_code();
    log << "error: " << e.what() << "\n";
    m.error = error_json(e);
    finish(code);
    try {
      st->fail(m);
    } catch (const std::exception& e2) {
      log << "error: could not write manifest: " << e2.what() << "\n";
    }
    return code;
  }

  finish(code);
  try {
    st->commit(m);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 3;
  }
  log << req.command << (scenario.empty() ? "" : " " + scenario) << ": " << m.status << " -> " << out.string()
      << "\n";
  return code;
}

}  // namespace mkvlab
