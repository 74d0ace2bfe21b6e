#include "mkvlab/io/manifest.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "mkvlab/core/errors.hpp"

namespace mkvlab {
namespace fs = std::filesystem;
namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  void update(const void* p, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), p, n) != 1) throw Error("sha256 update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &n) != 1) throw Error("sha256 final failed");
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < n; ++i) {
      s += digits[md[i] >> 4];
      s += digits[md[i] & 15];
    }
    return s;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "mkvlab";
  j["version"] = kToolVersion;
  j["command"] = command;
  if (!scenario.empty()) j["scenario"] = scenario;
  j["config"] = config;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["threads"] = threads;
  j["started"] = started;
  j["finished"] = finished;
  j["status"] = status;
  j["exit_code"] = exit_code;
  j["error"] = error;
  auto files_j = nlohmann::ordered_json::array();
  for (const auto& f : files) files_j.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = files_j;
  j["wall_ms"] = wall_ms;
  return j;
}

StagedOutput::StagedOutput(fs::path out) : out_(std::move(out)) {
  if (out_.empty()) throw ConfigError("output directory is empty");
  if (!out_.has_filename()) out_ = out_.parent_path();
  if (fs::exists(out_) && !fs::is_directory(out_)) throw ConfigError(out_.string() + " exists and is not a directory");
  const fs::path parent = out_.has_parent_path() ? out_.parent_path() : fs::path(".");
  fs::create_directories(parent);
  staging_ = parent / (out_.filename().string() + ".partial." + std::to_string(::getpid()));
  fs::remove_all(staging_);
  fs::create_directory(staging_);
}

StagedOutput::~StagedOutput() {
  std::error_code ec;
  if (!done_) fs::remove_all(staging_, ec);
}

fs::path StagedOutput::file(const std::string& name) {
  if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
  return staging_ / name;
}

void StagedOutput::write_text(const std::string& name, const std::string& content) {
  std::ofstream os(file(name), std::ios::binary);
  os << content;
  if (!os) throw Error("cannot write " + (staging_ / name).string());
}

void StagedOutput::commit(RunManifest& m) { publish(m, true); }
void StagedOutput::fail(RunManifest& m) { publish(m, false); }

void StagedOutput::publish(RunManifest& m, bool keep_files) {
  m.files.clear();
  if (keep_files) {
    for (const auto& n : names_) {
      const fs::path p = staging_ / n;
      if (!fs::exists(p)) continue;
      m.files.push_back({n, sha256_file(p), fs::file_size(p)});
    }
  } else {
    for (const auto& entry : fs::directory_iterator(staging_)) fs::remove_all(entry.path());
  }
  if (m.finished.empty()) m.finished = utc_now();
  {
    std::ofstream os(staging_ / "manifest.json", std::ios::binary);
    os << m.to_json().dump(2) << "\n";
    if (!os) throw Error("cannot write manifest");
  }
  // Swap in the new directory; the previous contents survive until the rename
  // has succeeded.
  fs::path backup;
  if (fs::exists(out_)) {
    backup = out_;
    backup += ".old." + std::to_string(::getpid());
    fs::remove_all(backup);
    fs::rename(out_, backup);
  }
  try {
    fs::rename(staging_, out_);
  } catch (...) {
    if (!backup.empty()) fs::rename(backup, out_);
    throw;
  }
  done_ = true;
  if (!backup.empty()) fs::remove_all(backup);
}

}  // namespace mkvlab
