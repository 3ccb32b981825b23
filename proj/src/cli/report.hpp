#pragma once

// Output directory handling for one run: CSV files, the JSON manifest and the
// machine-readable error record.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stripspec/error.hpp"

namespace stripspec::cli {

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& resolved);

std::string utc_timestamp();

class Report {
 public:
  Report(std::filesystem::path out_dir, std::string command, nlohmann::json resolved);

  const std::string& hash() const noexcept { return hash_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// Opens out_dir/name for writing and lists it in the manifest.
  std::ofstream open(const std::string& name);
  nlohmann::json& diagnostics() noexcept { return diagnostics_; }

  /// manifest.json with status "ok".
  void finish() const;
  /// error.json plus a manifest with status "error"; returns the exit code.
  int fail(ErrorKind kind, const std::string& message) const;

 private:
  void write_manifest(const std::string& status) const;

  std::filesystem::path dir_;
  std::string command_;
  nlohmann::json resolved_;
  std::string hash_;
  std::vector<std::string> outputs_;
  nlohmann::json diagnostics_ = nlohmann::json::object();
};

/// The error record printed to stderr and written as error.json.
nlohmann::json error_record(ErrorKind kind, const std::string& message);

}  // namespace stripspec::cli
