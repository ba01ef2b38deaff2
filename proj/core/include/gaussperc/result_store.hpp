#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaussperc/config.hpp"

namespace gaussperc {

/// Version string compiled into the library.
std::string_view code_version();

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// First 16 hex digits of sha256(canonical config + code version). Thread
/// count and output directory are excluded since they never change results.
std::string run_id(const ExperimentConfig& config);

/// Output directory of one run. Holds an exclusive lock for its lifetime;
/// the manifest is written last, so a directory without one is partial.
class ResultStore {
 public:
  /// Opens <root>/<run_id>, clearing leftovers of any earlier attempt.
  ResultStore(const std::filesystem::path& root, const ExperimentConfig& config);
  ~ResultStore();
  ResultStore(const ResultStore&) = delete;
  ResultStore& operator=(const ResultStore&) = delete;

  const std::string& id() const noexcept { return id_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// Absolute path for artifact `name` (relative to dir()); registers it.
  std::filesystem::path artifact(const std::string& name);
  void write_text(const std::string& name, std::string_view text);
  void write_json(const std::string& name, const nlohmann::ordered_json& j);

  const std::vector<std::string>& artifacts() const noexcept { return artifacts_; }

  /// Checksums every artifact and atomically writes manifest.json.
  void finalize();

 private:
  ExperimentConfig config_;
  std::string id_;
  std::filesystem::path dir_;
  std::string started_;
  std::vector<std::string> artifacts_;
  int lock_fd_ = -1;
};

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace gaussperc
