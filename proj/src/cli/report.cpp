#include "cli/report.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>

namespace stripspec::cli {

std::string config_hash(const nlohmann::json& resolved) {
  const std::string s = resolved.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json error_record(ErrorKind kind, const std::string& message) {
  const char* name = kind == ErrorKind::Validation ? "validation" : kind == ErrorKind::Numerical ? "numerical" : "budget";
  return {{"error", {{"kind", name}, {"message", message}, {"exit_code", exit_code(kind)}}}};
}

Report::Report(std::filesystem::path out_dir, std::string command, nlohmann::json resolved)
    : dir_(std::move(out_dir)), command_(std::move(command)), resolved_(std::move(resolved)) {
  hash_ = config_hash(resolved_);
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

std::ofstream Report::open(const std::string& name) {
  std::ofstream f(dir_ / name, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + (dir_ / name).string());
  outputs_.push_back(name);
  return f;
}

void Report::write_manifest(const std::string& status) const {
  nlohmann::json m = {{"command", command_},   {"status", status},           {"config_hash", hash_},
                      {"timestamp", utc_timestamp()}, {"config", resolved_}, {"outputs", outputs_},
                      {"diagnostics", diagnostics_}};
  std::ofstream f(dir_ / "manifest.json", std::ios::binary);
  f << m.dump(2) << '\n';
}

void Report::finish() const { write_manifest("ok"); }

int Report::fail(ErrorKind kind, const std::string& message) const {
  std::ofstream f(dir_ / "error.json", std::ios::binary);
  f << error_record(kind, message).dump(2) << '\n';
  write_manifest("error");
  return exit_code(kind);
}

}  // namespace stripspec::cli
