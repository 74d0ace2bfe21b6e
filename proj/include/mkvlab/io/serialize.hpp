#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "mkvlab/experiments/experiments.hpp"

namespace mkvlab {

// "%.17g"; non-finite values print as nan / inf / -inf.
std::string format_double(double x);

// Every CSV starts with one "# mkvlab-<kind> key=value ..." line carrying
// the exact layout; readers throw ShapeError naming `source` on malformed
// input.
void write_density_csv(std::ostream& out, const Density& mu);
Density read_density_csv(std::istream& in, const std::string& source);

void write_empirical_csv(std::ostream& out, const EmpiricalMeasure& x);
EmpiricalMeasure read_empirical_csv(std::istream& in, const std::string& source);

// Long format t,x1..xd,density; a law node is stored as JSON in the header.
void write_flow_csv(std::ostream& out, const MeasureFlow& flow);
MeasureFlow read_flow_csv(std::istream& in, const std::string& source);

void write_trajectories_csv(std::ostream& out, const TrajectoryBundle& b);
TrajectoryBundle read_trajectories_csv(std::istream& in, const std::string& source);

void write_table_csv(std::ostream& out, const RawTable& table);

nlohmann::ordered_json law_to_json(const InitialLaw& law);
InitialLaw law_from_json(const nlohmann::ordered_json& j);

// Without timing the report's wall time is left out, so reruns are
// byte-identical.
nlohmann::ordered_json report_to_json(const ExperimentReport& r, bool timing);

}  // namespace mkvlab
