#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace mkvlab {

struct CliRequest {
  std::string command;   // simulate | picard | metrics | experiment
  std::string scenario;  // experiment only; falls back to the config's `scenario`
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  bool timing = false;  // record wall-clock times in outputs (breaks byte-identical reruns)
};

// Runs one subcommand end to end and returns the process exit code:
// 0 ok, 2 config error, 3 numeric failure, 4 acceptance failure.
// Progress and errors go to `log`.
int run_request(const CliRequest& req, std::ostream& log);

}  // namespace mkvlab
