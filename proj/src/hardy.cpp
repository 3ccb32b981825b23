#include "stripspec/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stripspec/error.hpp"

namespace stripspec {

namespace {

// Relative slack used to decide that a point sits on the boundary line.
constexpr double kBoundarySlack = 1e-14;

// sum_{n=-N}^{N} c_n q^n with q = exp(iz), split into two Horner passes so that
// neither pass needs a negative power.
cplx fourier_sum(std::span<const cplx> c, int N, cplx z) {
  const cplx q = std::exp(kI * z);
  const cplx qinv = std::exp(-kI * z);
  cplx pos{};
  for (int n = N; n >= 0; --n) pos = pos * q + c[static_cast<std::size_t>(n + N)];
  cplx neg{};
  for (int n = N; n >= 1; --n) neg = (neg + c[static_cast<std::size_t>(N - n)]) * qinv;
  return pos + neg;
}

}  // namespace

StripDomain::StripDomain(double half_height) : half_height_(half_height) {
  if (!(half_height > 0.0) || !std::isfinite(half_height)) {
    throw ConfigError("strip half-height must be positive and finite, got " + std::to_string(half_height));
  }
}

bool StripDomain::contains_closed(cplx z) const noexcept {
  return std::abs(z.imag()) <= half_height_ * (1.0 + kBoundarySlack);
}

double hardy_weight(int n, double T) {
  const double x = 2.0 * std::abs(n) * T;
  if (x > kMaxWeightExponent) {
    throw ConfigError("cosh(2nT) overflow guard: n = " + std::to_string(n) + ", T = " + std::to_string(T) +
                      " gives 2|n|T = " + std::to_string(x) + " > 700");
  }
  return 0.5 * (std::exp(x) + std::exp(-x));
}

void check_truncation(int N, double T) {
  if (N < 0) throw ConfigError("truncation order must be nonnegative, got " + std::to_string(N));
  (void)hardy_weight(N, T);
}

HardyFunction::HardyFunction(StripDomain dom, int order)
    : domain_(dom), order_(order), coeffs_() {
  check_truncation(order, dom.half_height());
  coeffs_.assign(static_cast<std::size_t>(2 * order + 1), cplx{});
}

HardyFunction::HardyFunction(StripDomain dom, std::vector<cplx> coeffs)
    : domain_(dom), order_(0), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() % 2 == 0) {
    throw ConfigError("coefficient list must have odd length 2N+1, got " + std::to_string(coeffs_.size()));
  }
  order_ = static_cast<int>(coeffs_.size() / 2);
  check_truncation(order_, dom.half_height());
  for (const auto& c : coeffs_) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw ConfigError("non-finite Fourier coefficient");
  }
}

HardyFunction HardyFunction::constant(StripDomain dom, cplx value, int order) {
  HardyFunction f(dom, order);
  f.at(0) = value;
  return f;
}

HardyFunction HardyFunction::exponential(StripDomain dom, int n, int order) {
  HardyFunction f(dom, std::max(std::abs(n), order));
  f.at(n) = 1.0;
  return f;
}

cplx& HardyFunction::at(int n) {
  if (n < -order_ || n > order_) {
    throw DomainError("coefficient index " + std::to_string(n) + " outside truncation " + std::to_string(order_));
  }
  return coeffs_[static_cast<std::size_t>(n + order_)];
}

HardyFunction HardyFunction::resized(int order) const {
  HardyFunction out(domain_, order);
  const int m = std::min(order, order_);
  for (int n = -m; n <= m; ++n) out.at(n) = (*this)[n];
  return out;
}

double HardyFunction::tail_norm(int order) const {
  const double T = domain_.half_height();
  double s = 0.0;
  for (int n = -order_; n <= order_; ++n) {
    if (std::abs(n) > order) s += std::norm((*this)[n]) * hardy_weight(n, T);
  }
  return std::sqrt(s);
}

HardyFunction& HardyFunction::operator+=(const HardyFunction& other) {
  check_same_domain(*this, other);
  if (other.order_ > order_) *this = resized(other.order_);
  for (int n = -other.order_; n <= other.order_; ++n) at(n) += other[n];
  return *this;
}

HardyFunction& HardyFunction::operator-=(const HardyFunction& other) {
  check_same_domain(*this, other);
  if (other.order_ > order_) *this = resized(other.order_);
  for (int n = -other.order_; n <= other.order_; ++n) at(n) -= other[n];
  return *this;
}

HardyFunction& HardyFunction::operator*=(cplx s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

void check_same_domain(const HardyFunction& f, const HardyFunction& g) {
  if (!(f.domain() == g.domain())) {
    throw DomainError("strip mismatch: T = " + std::to_string(f.domain().half_height()) + " vs " +
                      std::to_string(g.domain().half_height()));
  }
}

cplx h_inner(const HardyFunction& f, const HardyFunction& g) {
  check_same_domain(f, g);
  const double T = f.domain().half_height();
  const int m = std::min(f.order(), g.order());
  cplx s{};
  for (int n = -m; n <= m; ++n) s += f[n] * std::conj(g[n]) * hardy_weight(n, T);
  return s;
}

double h_norm(const HardyFunction& f) {
  const double T = f.domain().half_height();
  double s = 0.0;
  for (int n = -f.order(); n <= f.order(); ++n) s += std::norm(f[n]) * hardy_weight(n, T);
  return std::sqrt(s);
}

cplx l2_inner(const HardyFunction& f, const HardyFunction& g) {
  const int m = std::min(f.order(), g.order());
  cplx s{};
  for (int n = -m; n <= m; ++n) s += f[n] * std::conj(g[n]);
  return s;
}

double l2_norm(const HardyFunction& f) {
  double s = 0.0;
  for (const auto& c : f.coeffs()) s += std::norm(c);
  return std::sqrt(s);
}

namespace {
void check_same_size(const HardyVector& f, const HardyVector& g) {
  if (f.size() != g.size()) {
    throw DomainError("vector dimension mismatch: " + std::to_string(f.size()) + " vs " + std::to_string(g.size()));
  }
}
}  // namespace

cplx h_inner(const HardyVector& f, const HardyVector& g) {
  check_same_size(f, g);
  cplx s{};
  for (std::size_t k = 0; k < f.size(); ++k) s += h_inner(f[k], g[k]);
  return s;
}

double h_norm(const HardyVector& f) {
  double s = 0.0;
  for (const auto& fk : f) s += std::pow(h_norm(fk), 2);
  return std::sqrt(s);
}

cplx l2_inner(const HardyVector& f, const HardyVector& g) {
  check_same_size(f, g);
  cplx s{};
  for (std::size_t k = 0; k < f.size(); ++k) s += l2_inner(f[k], g[k]);
  return s;
}

double l2_norm(const HardyVector& f) {
  double s = 0.0;
  for (const auto& fk : f) s += std::pow(l2_norm(fk), 2);
  return std::sqrt(s);
}

cplx boundary_inner(const HardyFunction& f, const HardyFunction& g, int nodes) {
  check_same_domain(f, g);
  const double T = f.domain().half_height();
  if (nodes <= 0) nodes = 4 * std::max(f.order(), g.order()) + 4;
  cplx s{};
  for (int j = 0; j < nodes; ++j) {
    const double x = kTwoPi * j / nodes;
    const cplx top{x, T}, bottom{x, -T};
    s += evaluate_closed(f, top).value * std::conj(evaluate_closed(g, top).value);
    s += evaluate_closed(f, bottom).value * std::conj(evaluate_closed(g, bottom).value);
  }
  // (1/4pi) * (2pi/nodes) * sum
  return s / (2.0 * nodes);
}

cplx evaluate(const HardyFunction& f, cplx z) {
  if (!f.domain().contains(z)) {
    throw DomainError("evaluation point Im z = " + std::to_string(z.imag()) + " outside open strip |Im z| < " +
                      std::to_string(f.domain().half_height()));
  }
  return fourier_sum(f.coeffs(), f.order(), z);
}

ClosedEvaluation evaluate_closed(const HardyFunction& f, cplx z) {
  const auto& dom = f.domain();
  if (!dom.contains_closed(z)) {
    throw DomainError("evaluation point Im z = " + std::to_string(z.imag()) + " outside closed strip |Im z| <= " +
                      std::to_string(dom.half_height()));
  }
  return {fourier_sum(f.coeffs(), f.order(), z), !dom.contains(z)};
}

CVector evaluate(const HardyVector& f, cplx z) {
  CVector v(static_cast<Eigen::Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) v(static_cast<Eigen::Index>(k)) = evaluate(f[k], z);
  return v;
}

CVector evaluate_closed(const HardyVector& f, cplx z) {
  CVector v(static_cast<Eigen::Index>(f.size()));
  for (std::size_t k = 0; k < f.size(); ++k) v(static_cast<Eigen::Index>(k)) = evaluate_closed(f[k], z).value;
  return v;
}

double pointwise_bound(const HardyFunction& f, double tau) {
  const double T = f.domain().half_height();
  const double q = std::exp(2.0 * (std::abs(tau) - T));
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  return 2.0 * h_norm(f) / std::sqrt(1.0 - q);
}

KernelElement eval_kernel(cplx w, StripDomain dom, int N) {
  if (!dom.contains(w)) {
    throw DomainError("kernel base point Im w = " + std::to_string(w.imag()) + " outside open strip");
  }
  HardyFunction g(dom, N);
  const double T = dom.half_height();
  for (int n = -N; n <= N; ++n) g.at(n) = std::conj(std::exp(kI * static_cast<double>(n) * w)) / hardy_weight(n, T);
  return {w, std::move(g)};
}

double kernel_continuity_bound(cplx v, cplx w, double T) {
  const double tau = std::max(std::abs(v.imag()), std::abs(w.imag()));
  const double q = std::exp(tau - T);
  return 4.0 * std::norm(v - w) * q / ((1.0 - q) * (1.0 - q));
}

double kernel_continuity_bound_sharp(cplx v, cplx w, double T) {
  const double tau = std::max(std::abs(v.imag()), std::abs(w.imag()));
  const double q2 = std::exp(2.0 * (tau - T));
  return 4.0 * std::norm(v - w) * q2 * (1.0 + q2) / std::pow(1.0 - q2, 3);
}

HardyFunction from_real_samples(std::span<const cplx> samples, StripDomain dom, int N) {
  const auto count = static_cast<long>(samples.size());
  if (count < 2L * N + 2) {
    throw ConfigError("from_real_samples needs at least 2N+2 = " + std::to_string(2 * N + 2) + " samples, got " +
                      std::to_string(count));
  }
  std::vector<cplx> roots(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) roots[static_cast<std::size_t>(k)] = std::polar(1.0, -kTwoPi * k / count);
  HardyFunction f(dom, N);
  for (int n = -N; n <= N; ++n) {
    cplx s{};
    const long step = ((n % count) + count) % count;
    long idx = 0;
    for (long j = 0; j < count; ++j) {
      s += samples[static_cast<std::size_t>(j)] * roots[static_cast<std::size_t>(idx)];
      idx += step;
      if (idx >= count) idx -= count;
    }
    f.at(n) = s / static_cast<double>(count);
  }
  return f;
}

HardyFunction from_boundary_samples(const std::function<cplx(cplx)>& f, StripDomain dom, int N, int count) {
  const double T = dom.half_height();
  if (count == 0) count = 4 * N;
  std::vector<cplx> lo(static_cast<std::size_t>(count)), hi(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    const double x = kTwoPi * j / count;
    lo[static_cast<std::size_t>(j)] = f(cplx(x, -T));
    hi[static_cast<std::size_t>(j)] = f(cplx(x, T));
  }
  // on Im z = y the DFT returns c_n e^{-n y}
  const HardyFunction dlo = from_real_samples(lo, dom, N), dhi = from_real_samples(hi, dom, N);
  HardyFunction out(dom, N);
  for (int n = 1; n <= N; ++n) {
    out.at(n) = dlo[n] * std::exp(-n * T);
    out.at(-n) = dhi[-n] * std::exp(-n * T);
  }
  out.at(0) = 0.5 * (dlo[0] + dhi[0]);
  return out;
}

std::vector<cplx> real_samples(const HardyFunction& f, int count) {
  std::vector<cplx> out(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) out[static_cast<std::size_t>(j)] = fourier_sum(f.coeffs(), f.order(), kTwoPi * j / count);
  return out;
}

HardyFunction derivative(const HardyFunction& f) {
  HardyFunction out = f;
  for (int n = -f.order(); n <= f.order(); ++n) out.at(n) *= kI * static_cast<double>(n);
  return out;
}

HardyFunction product(const HardyFunction& f, const HardyFunction& g) {
  check_same_domain(f, g);
  const int order = f.order() + g.order();
  HardyFunction out(f.domain(), order);
  for (int k = -f.order(); k <= f.order(); ++k) {
    const cplx fk = f[k];
    if (fk == cplx{}) continue;
    for (int m = -g.order(); m <= g.order(); ++m) out.at(k + m) += fk * g[m];
  }
  return out;
}

Truncated product_truncated(const HardyFunction& f, const HardyFunction& g, int order) {
  HardyFunction full = product(f, g);
  const double tail = full.tail_norm(order);
  return {full.resized(order), tail};
}

nlohmann::json to_json(const HardyFunction& f) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : f.coeffs()) coeffs.push_back({c.real(), c.imag()});
  return {{"T", f.domain().half_height()}, {"N", f.order()}, {"coeffs", std::move(coeffs)}};
}

nlohmann::json to_json(const HardyVector& f) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& fk : f) arr.push_back(to_json(fk));
  return arr;
}

HardyFunction hardy_from_json(const nlohmann::json& j) {
  try {
    const double T = j.at("T").get<double>();
    const int N = j.at("N").get<int>();
    const auto& arr = j.at("coeffs");
    if (!arr.is_array() || arr.size() != static_cast<std::size_t>(2 * N + 1)) {
      throw ConfigError("HardyFunction JSON: expected " + std::to_string(2 * N + 1) + " coefficients");
    }
    std::vector<cplx> coeffs;
    coeffs.reserve(arr.size());
    for (const auto& c : arr) coeffs.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    return HardyFunction(StripDomain(T), std::move(coeffs));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("HardyFunction JSON: ") + e.what());
  }
}

HardyVector hardy_vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) return {hardy_from_json(j)};
  HardyVector out;
  for (const auto& e : j) out.push_back(hardy_from_json(e));
  return out;
}

}  // namespace stripspec
