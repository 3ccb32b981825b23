#pragma once

// First-order reduction of (L - lambda) Y = 0, transfer matrices along straight
// complex paths, the Floquet determinant and the periodic resolvent.

#include "stripspec/ode.hpp"
#include "stripspec/operator.hpp"

namespace stripspec {

/// A(z, lambda) for u = (Y, Y'): [[0, I], [-A2^{-1}(A0 - lambda), -A2^{-1} A1]].
/// A first-order operator gives the K x K system -A1^{-1}(A0 - lambda).
class FirstOrderSystem {
 public:
  FirstOrderSystem(PeriodicOperator op, cplx lambda);

  int dim() const noexcept { return op_.order() * op_.size(); }
  cplx lambda() const noexcept { return lambda_; }
  const PeriodicOperator& op() const noexcept { return op_; }
  CMatrix matrix(cplx z) const;
  /// Inhomogeneous term for (L - lambda) Y = f: [0; A2^{-1} f] or A1^{-1} f.
  CVector forcing(cplx z, const CVector& f) const;

 private:
  PeriodicOperator op_;
  cplx lambda_;
};

/// Principal square root by Schur decomposition; BranchError if an eigenvalue
/// lies on (-inf, 0].
CMatrix principal_sqrt(const CMatrix& A);
/// A^{1/2} = (2/pi) A int_0^inf (t^2 + A)^{-1} dt by trapezoid rule in log t.
CMatrix dunford_taylor_sqrt(const CMatrix& A, int nodes = 400);
/// Principal square root of A2(z).
CMatrix analytic_sqrt(const CoefficientMatrix& A2, cplx z);

/// A square root of Q(z) continuous along z = t zeta, t in [0, 1]: the
/// principal root of e^{-i theta} Q rotated back, with the cut angle theta
/// fixed per path so the sampled spectrum stays clear of it.
class SqrtBranch {
 public:
  SqrtBranch(CoefficientMatrix Q, cplx zeta, int samples = 256);
  CMatrix operator()(cplx z) const;
  double cut_angle() const noexcept { return theta_; }
  double clearance() const noexcept { return clearance_; }  // min angular distance to the cut

 private:
  CoefficientMatrix Q_;
  double theta_;
  double clearance_;
};

struct TransferOptions {
  OdeOptions ode{};
  bool precondition = false;  // integrate the block-diagonalized W system
  bool bounds = true;         // also compute the Gronwall integrals
};

struct TransferMatrix {
  CMatrix U;
  cplx zeta;
  cplx lambda;
  double error_estimate;
  long steps;
  double log_norm;          // log ||U||_2
  double gronwall_bound;    // int_0^1 ||A(t zeta)||_2 |zeta| dt; NaN without bounds
  double preconditioned_bound;  // log(||B(zeta)|| ||B^{-1}(0)||) + int ||W-system|| |zeta|; NaN if unavailable
};

/// U(zeta, lambda) along the segment from 0 to zeta.
TransferMatrix transfer_matrix(const PeriodicOperator& L, cplx lambda, cplx zeta, const TransferOptions& opt = {});

/// Bound on log||U(zeta)|| from the block-diagonalizing similarity B(z, lambda);
/// requires an order-2 operator and lambda != 0.
double preconditioned_gronwall(const PeriodicOperator& L, cplx lambda, cplx zeta);

/// U(2 pi, lambda) on the real period.
CMatrix monodromy_matrix(const PeriodicOperator& L, cplx lambda, const OdeOptions& opt = {});

/// d(lambda) = det(I - U(2 pi, lambda)).
cplx floquet_determinant(const PeriodicOperator& L, cplx lambda, const OdeOptions& opt = {});

struct ResolventResult {
  HardyVector Y;
  double residual;  // ||(L - lambda) Y - f||_L
  double abs_det;   // |det(I - U(2 pi))|
};

/// Periodic solution of (L - lambda) Y = f, sampled on 4N real points and re-expanded at order N.
/// Throws NumericalError when |det(I - U(2 pi))| < det_floor.
ResolventResult periodic_resolvent(const PeriodicOperator& L, cplx lambda, const HardyVector& f, int N,
                                   const OdeOptions& opt = {}, double det_floor = 1e-12);

}  // namespace stripspec
