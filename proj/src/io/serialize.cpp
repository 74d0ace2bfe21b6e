#include "mkvlab/io/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mkvlab/core/errors.hpp"

namespace mkvlab {
namespace {

using Json = nlohmann::ordered_json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string join(const double* v, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ShapeError(source_ + ":" + std::to_string(line_) + ": " + msg);
  }

  bool next(std::string& out) {
    while (std::getline(in_, out)) {
      ++line_;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      if (!out.empty()) return true;
    }
    return false;
  }

  // Parses "# mkvlab-<kind> k=v k=v ..." and returns the key/value pairs.
  std::map<std::string, std::string> header(const std::string& kind) {
    std::string l;
    if (!next(l)) fail("empty file");
    std::istringstream ss(l);
    std::string hash, tag;
    ss >> hash >> tag;
    if (hash != "#" || tag != "mkvlab-" + kind) fail("expected a '# mkvlab-" + kind + "' header");
    std::map<std::string, std::string> kv;
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) fail("malformed header entry '" + tok + "'");
      kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
  }

  double number(const std::string& s) const {
    const char* b = s.c_str();
    char* e = nullptr;
    const double v = std::strtod(b, &e);
    if (e == b || *e != '\0') fail("not a number: '" + s + "'");
    return v;
  }

  std::vector<double> numbers(const std::string& s) const {
    std::vector<double> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(number(cell));
    if (!s.empty() && s.back() == ',') fail("trailing comma");
    return out;
  }

  std::size_t count(const std::string& s) const {
    const double v = number(s);
    if (!(v >= 0.0) || v != std::floor(v)) fail("not a count: '" + s + "'");
    return static_cast<std::size_t>(v);
  }

  std::string need(const std::map<std::string, std::string>& kv, const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) fail("header lacks '" + key + "'");
    return it->second;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

std::string grid_header(const Grid& g) {
  const int d = g.dim();
  std::string s = "dim=" + std::to_string(d) + " origin=" + join(g.origin().data(), d) +
                  " spacing=" + join(g.spacing().data(), d) + " counts=";
  for (int a = 0; a < d; ++a) s += (a ? "," : "") + std::to_string(g.counts()[a]);
  return s;
}

Grid grid_from_header(const Reader& r, const std::map<std::string, std::string>& kv) {
  const int d = static_cast<int>(r.count(r.need(kv, "dim")));
  if (d < 1 || d > kMaxDim) r.fail("dimension must be 1, 2 or 3");
  const auto o = r.numbers(r.need(kv, "origin"));
  const auto h = r.numbers(r.need(kv, "spacing"));
  const auto c = r.numbers(r.need(kv, "counts"));
  if (int(o.size()) != d || int(h.size()) != d || int(c.size()) != d) r.fail("grid header entries need dim values");
  Vec origin{}, spacing{1, 1, 1};
  Index3 counts{1, 1, 1};
  for (int a = 0; a < d; ++a) {
    origin[a] = o[a];
    spacing[a] = h[a];
    counts[a] = static_cast<std::size_t>(c[a]);
  }
  try {
    return Grid(d, origin, spacing, counts);
  } catch (const ParameterError& e) {
    r.fail(e.what());
  }
}

std::string coord_columns(int d) {
  std::string s;
  for (int a = 0; a < d; ++a) s += (a ? ",x" : "x") + std::to_string(a + 1);
  return s;
}

Json vec_json(const Vec& v, int d) {
  Json a = Json::array();
  for (int i = 0; i < d; ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from(const Json& j) {
  if (!j.is_array() || j.size() > kMaxDim) throw ShapeError("expected a coordinate array");
  Vec v{};
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_density_csv(std::ostream& out, const Density& mu) {
  const Grid& g = mu.grid();
  out << "# mkvlab-density " << grid_header(g) << "\n";
  out << coord_columns(g.dim()) << ",density\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.node(i);
    out << join(x.data(), g.dim()) << "," << format_double(mu[i]) << "\n";
  }
}

Density read_density_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  const Grid g = grid_from_header(r, r.header("density"));
  std::string l;
  if (!r.next(l)) r.fail("missing column header");
  std::vector<double> values;
  values.reserve(g.size());
  while (r.next(l)) {
    const auto row = r.numbers(l);
    if (int(row.size()) != g.dim() + 1) r.fail("expected " + std::to_string(g.dim() + 1) + " columns");
    values.push_back(row.back());
  }
  if (values.size() != g.size())
    r.fail("expected " + std::to_string(g.size()) + " rows, found " + std::to_string(values.size()));
  try {
    return Density::from_normalized(g, std::move(values));
  } catch (const ParameterError& e) {
    r.fail(e.what());
  }
}

void write_empirical_csv(std::ostream& out, const EmpiricalMeasure& x) {
  out << "# mkvlab-empirical dim=" << x.dim() << " points=" << x.size() << "\n";
  out << coord_columns(x.dim()) << "\n";
  for (const Vec& p : x.points()) out << join(p.data(), x.dim()) << "\n";
}

EmpiricalMeasure read_empirical_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  const auto kv = r.header("empirical");
  const int d = static_cast<int>(r.count(r.need(kv, "dim")));
  const std::size_t n = r.count(r.need(kv, "points"));
  std::string l;
  if (!r.next(l)) r.fail("missing column header");
  std::vector<Vec> pts;
  pts.reserve(n);
  while (r.next(l)) {
    const auto row = r.numbers(l);
    if (int(row.size()) != d) r.fail("expected " + std::to_string(d) + " columns");
    Vec v{};
    for (int a = 0; a < d; ++a) v[a] = row[a];
    pts.push_back(v);
  }
  if (pts.size() != n) r.fail("expected " + std::to_string(n) + " points, found " + std::to_string(pts.size()));
  try {
    return EmpiricalMeasure(d, std::move(pts));
  } catch (const ParameterError& e) {
    r.fail(e.what());
  }
}

void write_flow_csv(std::ostream& out, const MeasureFlow& flow) {
  const Grid& g = flow.grid();
  out << "# mkvlab-flow " << grid_header(g) << " nodes=" << flow.size()
      << " mesh=" << join(flow.mesh().data(), static_cast<int>(flow.size())) << "\n";
  for (std::size_t j = 0; j < flow.size(); ++j)
    if (!flow.has_density(j)) out << "# law " << j << " " << law_to_json(std::get<InitialLaw>(flow.nodes()[j])).dump() << "\n";
  out << "t," << coord_columns(g.dim()) << ",density\n";
  for (std::size_t j = 0; j < flow.size(); ++j) {
    if (!flow.has_density(j)) continue;
    const Density& mu = flow.density(j);
    const std::string t = format_double(flow.mesh()[j]);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec x = g.node(i);
      out << t << "," << join(x.data(), g.dim()) << "," << format_double(mu[i]) << "\n";
    }
  }
}

MeasureFlow read_flow_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  const auto kv = r.header("flow");
  const Grid g = grid_from_header(r, kv);
  const std::size_t n = r.count(r.need(kv, "nodes"));
  const std::vector<double> mesh = r.numbers(r.need(kv, "mesh"));
  if (mesh.size() != n) r.fail("mesh length differs from nodes");
  std::vector<std::optional<MeasureFlow::Node>> nodes(n);
  std::string l;
  while (r.next(l) && l.rfind("# law ", 0) == 0) {
    std::istringstream ss(l.substr(6));
    std::size_t j;
    ss >> j;
    std::string rest;
    std::getline(ss, rest);
    if (!ss && !ss.eof()) r.fail("malformed law line");
    if (j >= n) r.fail("law node index out of range");
    try {
      nodes[j] = law_from_json(Json::parse(rest));
    } catch (const Json::exception& e) {
      r.fail(std::string("bad law JSON: ") + e.what());
    } catch (const ParameterError& e) {
      r.fail(e.what());
    }
  }
  // `l` now holds the column header.
  std::vector<double> values;
  std::size_t j = 0;
  auto flush = [&] {
    while (j < n && nodes[j]) ++j;
    if (j >= n) r.fail("more density rows than nodes");
    try {
      nodes[j] = Density::from_normalized(g, std::move(values));
    } catch (const ParameterError& e) {
      r.fail(e.what());
    }
    values.clear();
  };
  while (r.next(l)) {
    const auto row = r.numbers(l);
    if (int(row.size()) != g.dim() + 2) r.fail("expected " + std::to_string(g.dim() + 2) + " columns");
    values.push_back(row.back());
    if (values.size() == g.size()) flush();
  }
  if (!values.empty()) r.fail("incomplete density block");
  std::vector<MeasureFlow::Node> out;
  for (auto& node : nodes) {
    if (!node) r.fail("flow has fewer density blocks than nodes");
    out.push_back(std::move(*node));
  }
  try {
    return MeasureFlow(mesh, std::move(out));
  } catch (const Error& e) {
    r.fail(e.what());
  }
}

void write_trajectories_csv(std::ostream& out, const TrajectoryBundle& b) {
  const std::size_t n = b.particles();
  out << "# mkvlab-trajectories dim=" << b.dim << " dt=" << format_double(b.dt) << " particles=" << n
      << " records=" << b.times.size() << "\n";
  out << "step,t,particle," << coord_columns(b.dim) << "\n";
  for (std::size_t j = 0; j < b.times.size(); ++j) {
    const std::string head = std::to_string(b.steps[j]) + "," + format_double(b.times[j]) + ",";
    for (std::size_t i = 0; i < n; ++i) out << head << i << "," << join(b.states[j][i].data(), b.dim) << "\n";
  }
}

TrajectoryBundle read_trajectories_csv(std::istream& in, const std::string& source) {
  Reader r(in, source);
  const auto kv = r.header("trajectories");
  TrajectoryBundle b;
  b.dim = static_cast<int>(r.count(r.need(kv, "dim")));
  b.dt = r.number(r.need(kv, "dt"));
  const std::size_t n = r.count(r.need(kv, "particles"));
  const std::size_t records = r.count(r.need(kv, "records"));
  std::string l;
  if (!r.next(l)) r.fail("missing column header");
  for (std::size_t j = 0; j < records; ++j) {
    std::vector<Vec> states(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!r.next(l)) r.fail("truncated trajectory file");
      const auto row = r.numbers(l);
      if (int(row.size()) != b.dim + 3) r.fail("expected " + std::to_string(b.dim + 3) + " columns");
      if (i == 0) {
        b.steps.push_back(static_cast<std::size_t>(row[0]));
        b.times.push_back(row[1]);
      } else if (row[1] != b.times.back()) {
        r.fail("record time changes inside a block");
      }
      if (static_cast<std::size_t>(row[2]) != i) r.fail("particle index out of order");
      for (int a = 0; a < b.dim; ++a) states[i][a] = row[3 + a];
    }
    b.states.push_back(std::move(states));
  }
  if (r.next(l)) r.fail("trailing rows after the last record");
  return b;
}

void write_table_csv(std::ostream& out, const RawTable& table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << "\n";
  }
}

Json law_to_json(const InitialLaw& law) {
  Json j;
  const int d = law.dim();
  std::visit(Overloaded{
                 [&](const ExactSampler& s) {
                   j["dim"] = d;
                   std::visit(Overloaded{
                                  [&](const GaussianLaw& g) {
                                    j["law"] = "gaussian";
                                    j["mean"] = vec_json(g.mean, d);
                                    j["std"] = vec_json(g.std, d);
                                  },
                                  [&](const UniformLaw& u) {
                                    j["law"] = "uniform";
                                    j["lower"] = vec_json(u.lower, d);
                                    j["upper"] = vec_json(u.upper, d);
                                  },
                                  [&](const MixtureLaw& m) {
                                    j["law"] = "mixture";
                                    Json cs = Json::array();
                                    for (const auto& c : m.components)
                                      cs.push_back({{"weight", c.weight},
                                                    {"mean", vec_json(c.law.mean, d)},
                                                    {"std", vec_json(c.law.std, d)}});
                                    j["components"] = cs;
                                  },
                                  [&](const DiracLaw& x) {
                                    j["law"] = "dirac";
                                    j["at"] = vec_json(x.at, d);
                                  },
                                  [&](const PowerLawLaw& p) {
                                    j["law"] = "power_law";
                                    j["alpha"] = p.alpha;
                                    j["radius"] = p.radius;
                                  },
                              },
                              s.family);
                 },
                 [&](const Density& mu) {
                   std::ostringstream os;
                   write_density_csv(os, mu);
                   j["dim"] = d;
                   j["law"] = "density";
                   j["csv"] = os.str();
                 },
                 [&](const EmpiricalMeasure& x) {
                   j["dim"] = d;
                   j["law"] = "empirical";
                   Json pts = Json::array();
                   for (const Vec& p : x.points()) pts.push_back(vec_json(p, d));
                   j["points"] = pts;
                 },
             },
             law.variant());
  return j;
}

InitialLaw law_from_json(const Json& j) {
  const int d = j.at("dim").get<int>();
  const std::string law = j.at("law").get<std::string>();
  auto with_unit_tail = [d](Vec v) {
    for (int a = d; a < kMaxDim; ++a) v[a] = 1.0;
    return v;
  };
  if (law == "gaussian")
    return InitialLaw(ExactSampler{d, GaussianLaw{vec_from(j.at("mean")), with_unit_tail(vec_from(j.at("std")))}});
  if (law == "uniform")
    return InitialLaw(ExactSampler{d, UniformLaw{vec_from(j.at("lower")), with_unit_tail(vec_from(j.at("upper")))}});
  if (law == "mixture") {
    MixtureLaw m;
    for (const auto& c : j.at("components"))
      m.components.push_back(
          {c.at("weight").get<double>(), GaussianLaw{vec_from(c.at("mean")), with_unit_tail(vec_from(c.at("std")))}});
    return InitialLaw(ExactSampler{d, m});
  }
  if (law == "dirac") return InitialLaw(ExactSampler{d, DiracLaw{vec_from(j.at("at"))}});
  if (law == "power_law")
    return InitialLaw(ExactSampler{d, PowerLawLaw{j.at("alpha").get<double>(), j.at("radius").get<double>()}});
  if (law == "density") {
    std::istringstream in(j.at("csv").get<std::string>());
    return InitialLaw(read_density_csv(in, "embedded density"));
  }
  if (law == "empirical") {
    std::vector<Vec> pts;
    for (const auto& p : j.at("points")) pts.push_back(vec_from(p));
    return InitialLaw(EmpiricalMeasure(d, std::move(pts)));
  }
  throw ShapeError("unknown law '" + law + "'");
}

Json report_to_json(const ExperimentReport& r, bool timing) {
  Json j;
  j["scenario"] = r.scenario;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["passed"] = r.passed();
  Json q = Json::array();
  for (const auto& x : r.quantities) {
    Json e;
    e["name"] = x.name;
    e["value"] = std::isfinite(x.value) ? Json(x.value) : Json(format_double(x.value));
    e["half_width"] = x.half_width;
    q.push_back(e);
  }
  j["quantities"] = q;
  Json v = Json::array();
  for (const auto& x : r.verdicts) v.push_back({{"criterion", x.criterion}, {"passed", x.passed}, {"detail", x.detail}});
  j["verdicts"] = v;
  Json t = Json::array();
  for (const auto& x : r.tables) t.push_back(x.name + ".csv");
  j["tables"] = t;
  if (timing) j["wall_ms"] = r.wall_ms;
  return j;
}

}  // namespace mkvlab
