#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace mkvlab {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr const char* kToolVersion = "0.1.0";

struct FileRecord {
  std::string name;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string scenario;
  std::string config;  // path as given
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started;  // UTC, ISO 8601
  std::string finished;
  std::string status = "ok";  // ok | config_error | numeric_failure | acceptance_failure
  int exit_code = 0;
  nlohmann::ordered_json error;  // null unless the run failed
  std::vector<FileRecord> files;
  double wall_ms = 0.0;
  std::size_t threads = 1;

  nlohmann::ordered_json to_json() const;
};

std::string utc_now();

// Writes into a sibling staging directory and publishes it with a rename, so
// `out` never holds a half-written run. A failed run publishes only its
// manifest.
class StagedOutput {
 public:
  explicit StagedOutput(std::filesystem::path out);
  ~StagedOutput();
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;

  const std::filesystem::path& staging() const { return staging_; }
  const std::filesystem::path& target() const { return out_; }
  std::filesystem::path file(const std::string& name);  // remembers the name for the manifest
  void write_text(const std::string& name, const std::string& content);

  void commit(RunManifest& m);
  void fail(RunManifest& m);

 private:
  void publish(RunManifest& m, bool keep_files);

  std::filesystem::path out_;
  std::filesystem::path staging_;
  std::vector<std::string> names_;
  bool done_ = false;
};

}  // namespace mkvlab
