#pragma once

// Command dispatch for the stripspec tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace stripspec::cli {

inline constexpr const char* kCommands[] = {"spectrum", "monodromy", "crosscheck", "completeness", "evolve", "kernel"};

struct RunOptions {
  std::string command;
  std::filesystem::path config;
  std::filesystem::path out = "out";
  std::optional<int> n_trunc;
  std::optional<double> strip_height;
  std::optional<int> keep;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

/// Config file with flag overrides folded in: top-level T and N, and
/// run.keep / run.seed filled with their effective values. This is what the
/// config hash covers; the thread count is left out so it cannot change outputs.
nlohmann::json resolve_config(const RunOptions& opt);

/// Runs one command. Errors become error.json in the output directory, a JSON
/// line on stderr and the matching exit code.
int run(const RunOptions& opt);

/// Command line front end; flags fall back to SPECTRA_* environment variables.
int main_entry(int argc, char** argv);

}  // namespace stripspec::cli
