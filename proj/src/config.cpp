#include "stripspec/config.hpp"

#include <fstream>
#include <map>

#include "stripspec/error.hpp"

namespace stripspec {

HardyFunction parse_series(const nlohmann::json& series, StripDomain dom) {
  if (!series.is_array()) throw ConfigError("series must be an array of [n, re, im] triples");
  std::map<int, cplx> terms;
  int order = 0;
  for (const auto& t : series) {
    if (!t.is_array() || t.size() < 2 || t.size() > 3) throw ConfigError("series term must be [n, re] or [n, re, im]");
    const int n = t[0].get<int>();
    const cplx c{t[1].get<double>(), t.size() == 3 ? t[2].get<double>() : 0.0};
    terms[n] += c;
    order = std::max(order, std::abs(n));
  }
  HardyFunction f(dom, order);
  for (const auto& [n, c] : terms) f.at(n) = c;
  return f;
}

nlohmann::json series_to_json(const HardyFunction& f) {
  nlohmann::json out = nlohmann::json::array();
  for (int n = -f.order(); n <= f.order(); ++n) {
    if (f[n] != cplx{}) out.push_back({n, f[n].real(), f[n].imag()});
  }
  return out;
}

namespace {

CoefficientMatrix parse_matrix(const nlohmann::json& j, StripDomain dom, int K, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != K) {
    throw ConfigError(std::string(name) + ": expected " + std::to_string(K) + " rows");
  }
  std::vector<HardyFunction> entries;
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != K) {
      throw ConfigError(std::string(name) + ": expected " + std::to_string(K) + " entries per row");
    }
    for (const auto& s : row) entries.push_back(parse_series(s, dom));
  }
  return CoefficientMatrix(K, std::move(entries));
}

nlohmann::json matrix_to_json(const CoefficientMatrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < M.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < M.size(); ++j) row.push_back(series_to_json(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

PeriodicOperator parse_operator(const nlohmann::json& j) {
  try {
    const int K = j.value("K", 1);
    if (K < 1) throw ConfigError("K must be at least 1");
    const StripDomain dom(j.at("T").get<double>());
    const std::string form = j.value("form", std::string("standard"));
    if (form != "standard" && form != "divergence") throw ConfigError("form must be \"standard\" or \"divergence\"");
    const auto& c = j.at("coeffs");
    auto get = [&](const char* key) -> std::optional<CoefficientMatrix> {
      if (!c.contains(key)) return std::nullopt;
      return parse_matrix(c.at(key), dom, K, key);
    };
    auto P2 = get("P2");
    auto P1 = get("P1");
    auto P0 = get("P0");
    if (!P1) P1 = CoefficientMatrix(dom, K, 0);
    if (!P0) P0 = CoefficientMatrix(dom, K, 0);
    if (!P2 && (*P1).order() == 0 && (*P1).coefficient(0).isZero()) {
      throw ConfigError("operator has neither P2 nor a nonzero P1");
    }
    return PeriodicOperator(form == "divergence" ? Form::Divergence : Form::Standard,
                            {std::move(P0), std::move(P1), std::move(P2)});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("operator config: ") + e.what());
  }
}

OperatorConfig parse_operator_config(const nlohmann::json& j) {
  PeriodicOperator op = parse_operator(j);
  int N = 0;
  try {
    N = j.at("N").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("operator config: ") + e.what());
  }
  check_truncation(N, op.domain().half_height());
  if (N < op.coefficient_order()) {
    throw ConfigError("truncation N = " + std::to_string(N) + " is below the coefficient order " +
                      std::to_string(op.coefficient_order()));
  }
  return {std::move(op), N, j};
}

nlohmann::json operator_to_json(const PeriodicOperator& L, int N) {
  nlohmann::json c;
  c["P0"] = matrix_to_json(L.coeff(0));
  c["P1"] = matrix_to_json(L.coeff(1));
  if (L.order() == 2) c["P2"] = matrix_to_json(L.coeff(2));
  return {{"K", L.size()},
          {"T", L.domain().half_height()},
          {"N", N},
          {"form", L.form() == Form::Divergence ? "divergence" : "standard"},
          {"coeffs", std::move(c)}};
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

}  // namespace stripspec
