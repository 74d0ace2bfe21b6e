#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mkvlab/experiments/experiments.hpp"

namespace mkvlab {

struct MetricsConfig {
  KStarParams kstar{2.0, std::nullopt};
  double q = 2.0;
  std::string kind = "density";  // "density" or "empirical" inputs
  std::filesystem::path mu;
  std::filesystem::path nu;
  std::vector<std::string> quantities;  // empty: everything that applies to `kind`
};

// Everything a subcommand needs, with defaults resolved. `resolved` echoes
// every setting (given or defaulted) and is what the config hash covers.
struct RunConfig {
  std::filesystem::path source;
  std::string command;  // optional in the file; must match the CLI when given
  std::string scenario;
  std::filesystem::path output;
  std::uint64_t seed = 0;

  SdeConfig sde;
  InitialLaw initial{ExactSampler{1, DiracLaw{}}};
  bool has_initial = false;
  std::optional<ExponentParams> exponents;
  PicardConfig picard;
  bool has_picard_tables = false;  // [picard], [kernel] or [exponents] given
  MetricsConfig metrics;

  LambOseenParams lamb_oseen;
  DecayParams decay_slope;
  EntropyCostParams entropy_cost;
  KStarWassersteinParams kstar_wasserstein;
  PicardContractionParams picard_contraction;

  nlohmann::ordered_json resolved;

  // Replaces the seed everywhere it is used (and in `resolved`).
  void set_seed(std::uint64_t s);
  std::string hash() const;  // SHA-256 of resolved.dump()
};

// Parses and validates a TOML config. Unknown keys, wrong types and
// inadmissible parameters throw ConfigError as "file:line: message".
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& source);

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"lamb_oseen", "decay_slope", "entropy_cost", "kstar_wasserstein",
                                              "picard_contraction"};
  return names;
}

}  // namespace mkvlab
