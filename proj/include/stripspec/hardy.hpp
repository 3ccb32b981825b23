#pragma once

// Truncated Fourier representation of the periodic Hardy space on the strip
// |Im z| < T. A function is stored by its coefficients c_n, n = -N..N, of
// f(z) = sum c_n exp(i n z); the Hardy norm weights |c_n|^2 by cosh(2nT).

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "stripspec/types.hpp"

namespace stripspec {

class StripDomain {
 public:
  explicit StripDomain(double half_height);

  double half_height() const noexcept { return half_height_; }
  bool contains(cplx z) const noexcept { return std::abs(z.imag()) < half_height_; }
  bool contains_closed(cplx z) const noexcept;

  friend bool operator==(const StripDomain& a, const StripDomain& b) noexcept {
    return a.half_height_ == b.half_height_;
  }

 private:
  double half_height_;
};

/// Largest admissible value of 2|n|T before cosh(2nT) is considered unsafe.
inline constexpr double kMaxWeightExponent = 700.0;

/// cosh(2nT), rejecting 2|n|T > kMaxWeightExponent with a ConfigError naming n.
double hardy_weight(int n, double T);

/// Throws ConfigError if truncation order N is unusable on a strip of half-height T.
void check_truncation(int N, double T);

class HardyFunction {
 public:
  HardyFunction(StripDomain dom, int order);
  /// coeffs ordered n = -N..N; size must be odd.
  HardyFunction(StripDomain dom, std::vector<cplx> coeffs);

  static HardyFunction constant(StripDomain dom, cplx value, int order = 0);
  /// exp(i n z), stored with truncation max(|n|, order).
  static HardyFunction exponential(StripDomain dom, int n, int order = 0);

  const StripDomain& domain() const noexcept { return domain_; }
  int order() const noexcept { return order_; }

  /// Coefficient of exp(i n z); zero outside the stored range.
  cplx operator[](int n) const noexcept {
    return (n < -order_ || n > order_) ? cplx{} : coeffs_[static_cast<std::size_t>(n + order_)];
  }
  cplx& at(int n);
  std::span<const cplx> coeffs() const noexcept { return coeffs_; }

  /// Truncates or zero-pads to the given order.
  HardyFunction resized(int order) const;
  /// Hardy norm of the part that resized(order) would discard.
  double tail_norm(int order) const;

  HardyFunction& operator+=(const HardyFunction& other);
  HardyFunction& operator-=(const HardyFunction& other);
  HardyFunction& operator*=(cplx s);

  friend HardyFunction operator+(HardyFunction a, const HardyFunction& b) { return a += b; }
  friend HardyFunction operator-(HardyFunction a, const HardyFunction& b) { return a -= b; }
  friend HardyFunction operator*(cplx s, HardyFunction a) { return a *= s; }
  friend HardyFunction operator*(HardyFunction a, cplx s) { return a *= s; }

 private:
  StripDomain domain_;
  int order_;
  std::vector<cplx> coeffs_;
};

/// A C^K-valued element of the Hardy space, one scalar function per component.
using HardyVector = std::vector<HardyFunction>;

double h_norm(const HardyFunction& f);
cplx h_inner(const HardyFunction& f, const HardyFunction& g);
double h_norm(const HardyVector& f);
cplx h_inner(const HardyVector& f, const HardyVector& g);

/// Inner product (1/2pi) int_0^{2pi} g* f dx on the real line.
double l2_norm(const HardyFunction& f);
cplx l2_inner(const HardyFunction& f, const HardyFunction& g);
double l2_norm(const HardyVector& f);
cplx l2_inner(const HardyVector& f, const HardyVector& g);

/// The boundary-line form of the inner product, integrated by the trapezoid
/// rule on `nodes` points per line (nodes = 0 selects 4N+4).
cplx boundary_inner(const HardyFunction& f, const HardyFunction& g, int nodes = 0);

/// Fourier sum at z; requires |Im z| < T.
cplx evaluate(const HardyFunction& f, cplx z);
CVector evaluate(const HardyVector& f, cplx z);

struct ClosedEvaluation {
  cplx value;
  bool on_boundary;  // |Im z| == T: pointwise bounds degenerate here
};
/// Fourier sum on the closed strip; boundary points are accepted but flagged.
ClosedEvaluation evaluate_closed(const HardyFunction& f, cplx z);
CVector evaluate_closed(const HardyVector& f, cplx z);

/// Upper bound 2||f||_H (1 - exp(2(|tau| - T)))^{-1/2} for |f(x + i tau)|.
double pointwise_bound(const HardyFunction& f, double tau);

/// Reproducing kernel g_w truncated at order N: <f, g_w>_H = f(w).
struct KernelElement {
  cplx base;
  HardyFunction g;
};
KernelElement eval_kernel(cplx w, StripDomain dom, int N);

/// Printed continuity estimate 4|v-w|^2 q/(1-q)^2 with q = exp(tau - T),
/// tau = max(|Im v|, |Im w|).
double kernel_continuity_bound(cplx v, cplx w, double T);
/// Estimate 4|v-w|^2 q^2 (1+q^2)/(1-q^2)^3 obtained by summing n^2 q^{2n};
/// valid for the untruncated kernel up to the boundary.
double kernel_continuity_bound_sharp(cplx v, cplx w, double T);

/// Discrete Fourier analysis of samples at x_j = 2 pi j / count.
HardyFunction from_real_samples(std::span<const cplx> samples, StripDomain dom, int N);
/// Coefficients of an analytic f from samples on the boundary lines Im z = -T
/// (n >= 0) and Im z = T (n < 0), count points each (default 4N). Errors are
/// then relative to the H^2 size of f instead of being amplified by cosh(2nT).
HardyFunction from_boundary_samples(const std::function<cplx(cplx)>& f, StripDomain dom, int N, int count = 0);
/// Values at x_j = 2 pi j / count.
std::vector<cplx> real_samples(const HardyFunction& f, int count);

HardyFunction derivative(const HardyFunction& f);
/// Full convolution; the result has order f.order() + g.order().
HardyFunction product(const HardyFunction& f, const HardyFunction& g);

struct Truncated {
  HardyFunction value;
  double tail_norm;  // Hardy norm of the discarded coefficients
};
Truncated product_truncated(const HardyFunction& f, const HardyFunction& g, int order);

void check_same_domain(const HardyFunction& f, const HardyFunction& g);

nlohmann::json to_json(const HardyFunction& f);
nlohmann::json to_json(const HardyVector& f);
HardyFunction hardy_from_json(const nlohmann::json& j);
HardyVector hardy_vector_from_json(const nlohmann::json& j);

}  // namespace stripspec
