#pragma once

// Operator configuration files:
//   {"K": 1, "T": 0.5, "N": 64, "form": "standard"|"divergence",
//    "coeffs": {"P2": [[series, ...], ...], "P1": ..., "P0": ...}}
// with series = [[n, re, im], ...]. A missing P2 gives a first-order operator;
// a missing P1 or P0 is zero.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "stripspec/operator.hpp"

namespace stripspec {

struct OperatorConfig {
  PeriodicOperator op;
  int N;  // Galerkin truncation order
  nlohmann::json source;
};

HardyFunction parse_series(const nlohmann::json& series, StripDomain dom);
nlohmann::json series_to_json(const HardyFunction& f);

PeriodicOperator parse_operator(const nlohmann::json& j);
OperatorConfig parse_operator_config(const nlohmann::json& j);
nlohmann::json operator_to_json(const PeriodicOperator& L, int N);

/// Reads and parses a JSON file, mapping I/O and syntax failures to ConfigError.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace stripspec
