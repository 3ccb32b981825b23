#pragma once

// Periodic differential operators of order one or two with K x K matrix
// coefficients analytic on the strip.

#include <array>
#include <optional>

#include "stripspec/hardy.hpp"

namespace stripspec {

/// K x K grid of scalar Hardy functions on a common strip, row-major.
class CoefficientMatrix {
 public:
  CoefficientMatrix(StripDomain dom, int K, int order);
  CoefficientMatrix(int K, std::vector<HardyFunction> entries);

  static CoefficientMatrix identity(StripDomain dom, int K, cplx scale = 1.0);
  /// scalar p times I_K.
  static CoefficientMatrix scalar(const HardyFunction& p, int K);

  int size() const noexcept { return K_; }
  const StripDomain& domain() const noexcept { return domain_; }
  /// Largest truncation order over the entries.
  int order() const noexcept;

  const HardyFunction& operator()(int i, int j) const { return entries_[static_cast<std::size_t>(i * K_ + j)]; }
  HardyFunction& operator()(int i, int j) { return entries_[static_cast<std::size_t>(i * K_ + j)]; }

  /// Entry-wise Fourier sum at z on the closed strip.
  CMatrix evaluate(cplx z) const;
  /// Fourier coefficient matrix of index n.
  CMatrix coefficient(int n) const;

  CoefficientMatrix derivative() const;
  CoefficientMatrix operator-() const;
  friend CoefficientMatrix operator+(const CoefficientMatrix& a, const CoefficientMatrix& b);
  friend CoefficientMatrix operator-(const CoefficientMatrix& a, const CoefficientMatrix& b);

 private:
  StripDomain domain_;
  int K_;
  std::vector<HardyFunction> entries_;
};

/// (M f)_i = sum_j M_ij f_j with full convolution.
HardyVector multiply(const CoefficientMatrix& M, const HardyVector& f);

enum class Form { Standard, Divergence };

/// For order 2, Standard means A2 D^2 + A1 D + A0 and Divergence means
/// -D P2 D + P1 D + P0. Order 1 has only A1 D + A0 and both forms coincide.
class PeriodicOperator {
 public:
  /// coeffs[k] multiplies D^k (standard) or is P_k (divergence); coeffs[2] empty for order 1.
  PeriodicOperator(Form form, std::array<std::optional<CoefficientMatrix>, 3> coeffs);

  static PeriodicOperator standard(CoefficientMatrix A2, CoefficientMatrix A1, CoefficientMatrix A0);
  static PeriodicOperator divergence(CoefficientMatrix P2, CoefficientMatrix P1, CoefficientMatrix P0);
  static PeriodicOperator first_order(CoefficientMatrix A1, CoefficientMatrix A0);

  int order() const noexcept { return coeffs_[2] ? 2 : 1; }
  Form form() const noexcept { return form_; }
  int size() const noexcept { return coeffs_[0]->size(); }
  const StripDomain& domain() const noexcept { return coeffs_[0]->domain(); }
  /// Largest coefficient truncation order.
  int coefficient_order() const noexcept;

  /// Coefficient as stored in the operator's own form.
  const CoefficientMatrix& coeff(int k) const;
  /// Standard-form coefficient A_k (k <= order()).
  const CoefficientMatrix& standard_coeff(int k) const;
  /// Coefficient of the highest derivative in standard form.
  const CoefficientMatrix& leading() const { return standard_coeff(order()); }
  /// Divergence-form P2 = -A2 (order 2 only).
  CoefficientMatrix divergence_leading() const;

  /// The same operator re-encoded in the other form.
  PeriodicOperator converted(Form target) const;

  PeriodicOperator scaled(cplx s) const;
  PeriodicOperator shifted(cplx mu) const;  // L + mu I

 private:
  Form form_;
  std::array<std::optional<CoefficientMatrix>, 3> coeffs_;
  std::array<std::optional<CoefficientMatrix>, 3> standard_;
};

/// Exact application; output truncation is f.order() + coefficient_order().
HardyVector apply_operator(const PeriodicOperator& L, const HardyVector& f);

struct TruncatedVector {
  HardyVector value;
  double tail_norm;
};
/// apply_operator() re-truncated to `order`, reporting the discarded Hardy norm.
TruncatedVector apply_truncated(const PeriodicOperator& L, const HardyVector& f, int order);

struct GridSpec {
  int nx = 64;
  int ny = 33;
};

struct RegularityReport {
  double min_abs_det;
  cplx argmin;
  double floor;
  bool pass;
};
/// Minimum of |det leading(z)| over the closed fundamental strip, refined by
/// a local Newton search on det from the best grid points.
RegularityReport regularity_check(const PeriodicOperator& L, GridSpec grid = {}, double floor = 1e-8);

struct SectorialityReport {
  double c0;  // min over z of the smallest eigenvalue of Re P2(z)
  cplx argmin;
  bool pass;
};
/// Positivity of the Hermitian part of the divergence-form leading coefficient.
/// real_axis_only restricts the scan to Im z = 0.
SectorialityReport sectoriality_check(const PeriodicOperator& L, GridSpec grid = {}, bool real_axis_only = false);

}  // namespace stripspec
