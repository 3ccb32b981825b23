#include "stripspec/monodromy.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SparseLU>

#include "stripspec/error.hpp"

namespace stripspec {

namespace {

double op_norm(const CMatrix& A) {
  if (A.size() == 1) return std::abs(A(0, 0));
  return Eigen::JacobiSVD<CMatrix>(A).singularValues()(0);
}

CMatrix solve(const CMatrix& A, const CMatrix& B, cplx z) {
  Eigen::PartialPivLU<CMatrix> lu(A);
  const cplx det = lu.determinant();
  if (!(std::abs(det) > 0.0) || !std::isfinite(std::abs(det))) {
    throw NumericalError("leading coefficient singular at z = (" + std::to_string(z.real()) + ", " +
                         std::to_string(z.imag()) + ")");
  }
  return lu.solve(B);
}

double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a - std::numbers::pi;
}

// Angular distance of q from the cut ray at angle theta + pi.
double cut_distance(cplx q, double theta) {
  if (std::abs(q) == 0.0) return 0.0;
  return std::numbers::pi - std::abs(wrap_angle(std::arg(q) - theta));
}

}  // namespace

FirstOrderSystem::FirstOrderSystem(PeriodicOperator op, cplx lambda) : op_(std::move(op)), lambda_(lambda) {}

CMatrix FirstOrderSystem::matrix(cplx z) const {
  const int K = op_.size();
  const CMatrix A0 = op_.standard_coeff(0).evaluate(z) - lambda_ * CMatrix::Identity(K, K);
  if (op_.order() == 1) return -solve(op_.standard_coeff(1).evaluate(z), A0, z);
  const CMatrix A2 = op_.standard_coeff(2).evaluate(z);
  CMatrix rhs(K, 2 * K);
  rhs << A0, op_.standard_coeff(1).evaluate(z);
  const CMatrix X = solve(A2, rhs, z);
  CMatrix A = CMatrix::Zero(2 * K, 2 * K);
  A.topRightCorner(K, K).setIdentity();
  A.bottomRows(K) = -X;
  return A;
}

CVector FirstOrderSystem::forcing(cplx z, const CVector& f) const {
  const int K = op_.size();
  if (op_.order() == 1) return solve(op_.standard_coeff(1).evaluate(z), f, z);
  CVector out = CVector::Zero(2 * K);
  out.tail(K) = solve(op_.standard_coeff(2).evaluate(z), f, z);
  return out;
}

CMatrix principal_sqrt(const CMatrix& A) {
  const Eigen::Index n = A.rows();
  Eigen::ComplexSchur<CMatrix> schur(A);
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition failed in matrix square root");
  const CMatrix& T = schur.matrixT();
  const double scale = std::max(T.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx q = T(i, i);
    if (std::abs(q) <= 1e-14 * scale || (q.real() <= 0.0 && std::abs(q.imag()) <= 1e-14 * scale)) {
      throw BranchError("eigenvalue (" + std::to_string(q.real()) + ", " + std::to_string(q.imag()) +
                        ") on the square-root cut (-inf, 0]");
    }
  }
  CMatrix R = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    R(j, j) = std::sqrt(T(j, j));
    for (Eigen::Index i = j - 1; i >= 0; --i) {
      cplx s = T(i, j);
      for (Eigen::Index k = i + 1; k < j; ++k) s -= R(i, k) * R(k, j);
      R(i, j) = s / (R(i, i) + R(j, j));
    }
  }
  const CMatrix& Q = schur.matrixU();
  return Q * R * Q.adjoint();
}

CMatrix dunford_taylor_sqrt(const CMatrix& A, int nodes) {
  const Eigen::Index n = A.rows();
  Eigen::ComplexEigenSolver<CMatrix> es(A, false);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx q = es.eigenvalues()(k);
    if (q.real() <= 0.0 && std::abs(q.imag()) <= 1e-14 * std::abs(q)) {
      throw BranchError("eigenvalue on the square-root cut (-inf, 0]");
    }
    lo = std::min(lo, std::abs(q));
    hi = std::max(hi, std::abs(q));
  }
  // t = e^x; the integrand decays like sqrt|q| e^x below and e^{-x} above the spectrum
  const double xa = 0.5 * std::log(lo) - 36.0, xb = 0.5 * std::log(hi) + 36.0;
  const double h = (xb - xa) / nodes;
  const CMatrix I = CMatrix::Identity(n, n);
  CMatrix acc = CMatrix::Zero(n, n);
  for (int k = 0; k <= nodes; ++k) {
    const double t = std::exp(xa + k * h);
    const double w = (k == 0 || k == nodes) ? 0.5 : 1.0;
    acc += w * t * (t * t * I + A).partialPivLu().inverse();
  }
  return (2.0 / std::numbers::pi) * h * A * acc;
}

CMatrix analytic_sqrt(const CoefficientMatrix& A2, cplx z) { return principal_sqrt(A2.evaluate(z)); }

SqrtBranch::SqrtBranch(CoefficientMatrix Q, cplx zeta, int samples) : Q_(std::move(Q)), theta_(0.0), clearance_(0.0) {
  std::vector<cplx> spec;
  for (int s = 0; s <= samples; ++s) {
    Eigen::ComplexEigenSolver<CMatrix> es(Q_.evaluate(zeta * (static_cast<double>(s) / samples)), false);
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) spec.push_back(es.eigenvalues()(k));
  }
  auto clearance = [&](double th) {
    double c = std::numbers::pi;
    for (cplx q : spec) c = std::min(c, cut_distance(q, th));
    return c;
  };
  clearance_ = clearance(0.0);
  if (clearance_ < 0.05) {
    for (int k = 1; k < 16; ++k) {
      const double th = wrap_angle(k * std::numbers::pi / 8);
      const double c = clearance(th);
      if (c > clearance_) clearance_ = c, theta_ = th;
    }
  }
  if (clearance_ < 1e-3) throw BranchError("no square-root cut avoids the spectrum of the leading coefficient on this path");
}

CMatrix SqrtBranch::operator()(cplx z) const {
  const CMatrix Q = Q_.evaluate(z);
  if (theta_ == 0.0) return principal_sqrt(Q);
  return std::polar(1.0, theta_ / 2) * principal_sqrt(std::polar(1.0, -theta_) * Q);
}

namespace {

// Block-diagonalizing similarity for order-2 operators: B = [[I, -I], [M, M]],
// M = mu S^{-1}, S^2 = Q = sigma A2, mu^2 = sigma lambda.
class Preconditioner {
 public:
  Preconditioner(const PeriodicOperator& L, cplx lambda, cplx zeta) : sys_(L, lambda), K_(L.size()) {
    if (L.order() != 2) throw ConfigError("preconditioning needs a second-order operator");
    if (lambda == cplx{}) throw ConfigError("preconditioning needs lambda != 0");
    const auto& A2 = L.standard_coeff(2);
    // sigma makes Q(0) as far from the negative axis as possible
    Eigen::ComplexEigenSolver<CMatrix> es(A2.evaluate(0.0), false);
    double plus = std::numbers::pi, minus = std::numbers::pi;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      plus = std::min(plus, cut_distance(es.eigenvalues()(k), 0.0));
      minus = std::min(minus, cut_distance(-es.eigenvalues()(k), 0.0));
    }
    sigma_ = plus >= minus ? 1.0 : -1.0;
    Q_ = sigma_ > 0 ? A2 : -A2;
    dQ_ = Q_.derivative();
    mu_ = std::sqrt(sigma_ * lambda);
    branch_.emplace(Q_, zeta);
  }

  struct Frame {
    CMatrix S, Sinv, dS;
  };
  Frame frame(cplx z) const {
    Frame fr;
    fr.S = (*branch_)(z);
    fr.Sinv = fr.S.inverse();
    // S S' + S' S = Q'
    const CMatrix dQ = dQ_.evaluate(z);
    const CMatrix I = CMatrix::Identity(K_, K_);
    CMatrix kron(K_ * K_, K_ * K_);
    for (int a = 0; a < K_; ++a)
      for (int b = 0; b < K_; ++b)
        for (int c = 0; c < K_; ++c)
          for (int d = 0; d < K_; ++d) kron(a * K_ + b, c * K_ + d) = I(b, d) * fr.S(a, c) + fr.S(d, b) * I(a, c);
    CVector rhs(K_ * K_);
    for (int a = 0; a < K_; ++a)
      for (int b = 0; b < K_; ++b) rhs(a * K_ + b) = dQ(a, b);
    const CVector x = kron.partialPivLu().solve(rhs);
    fr.dS.resize(K_, K_);
    for (int a = 0; a < K_; ++a)
      for (int b = 0; b < K_; ++b) fr.dS(a, b) = x(a * K_ + b);
    return fr;
  }

  CMatrix B(const Frame& fr) const {
    const CMatrix M = mu_ * fr.Sinv;
    CMatrix out(2 * K_, 2 * K_);
    out << CMatrix::Identity(K_, K_), -CMatrix::Identity(K_, K_), M, M;
    return out;
  }
  CMatrix Binv(const Frame& fr) const {
    const CMatrix Minv = fr.S / mu_;
    CMatrix out(2 * K_, 2 * K_);
    out << CMatrix::Identity(K_, K_), Minv, -CMatrix::Identity(K_, K_), Minv;
    return 0.5 * out;
  }
  /// W-system matrix B^{-1} A B - B^{-1} B'.
  CMatrix system(cplx z) const {
    const Frame fr = frame(z);
    const CMatrix Bz = B(fr), Bi = Binv(fr);
    const CMatrix dM = -mu_ * fr.Sinv * fr.dS * fr.Sinv;
    CMatrix dB = CMatrix::Zero(2 * K_, 2 * K_);
    dB.bottomLeftCorner(K_, K_) = dM;
    dB.bottomRightCorner(K_, K_) = dM;
    return Bi * sys_.matrix(z) * Bz - Bi * dB;
  }

 private:
  FirstOrderSystem sys_;
  int K_;
  double sigma_ = 1.0;
  CoefficientMatrix Q_{StripDomain(1.0), 1, 0};
  CoefficientMatrix dQ_{StripDomain(1.0), 1, 0};
  cplx mu_;
  std::optional<SqrtBranch> branch_;
};

}  // namespace

double preconditioned_gronwall(const PeriodicOperator& L, cplx lambda, cplx zeta) {
  const Preconditioner pc(L, lambda, zeta);
  const double edge = std::log(op_norm(pc.B(pc.frame(zeta))) * op_norm(pc.Binv(pc.frame(0.0))));
  const double integral = integrate_smooth([&](double t) { return op_norm(pc.system(t * zeta)) * std::abs(zeta); }, 0.0,
                                           1.0, 1e-10);
  return edge + integral;
}

TransferMatrix transfer_matrix(const PeriodicOperator& L, cplx lambda, cplx zeta, const TransferOptions& opt) {
  const FirstOrderSystem sys(L, lambda);
  const int n = sys.dim();
  const double gronwall =
      opt.bounds
          ? integrate_smooth([&](double t) { return op_norm(sys.matrix(t * zeta)) * std::abs(zeta); }, 0.0, 1.0, 1e-10)
          : std::numeric_limits<double>::quiet_NaN();
  TransferMatrix out{CMatrix(), zeta, lambda, 0.0, 0, 0.0, gronwall, std::numeric_limits<double>::quiet_NaN()};
  if (opt.precondition) {
    const Preconditioner pc(L, lambda, zeta);
    auto rhs = [&](double t, const CMatrix& W) -> CMatrix { return zeta * (pc.system(t * zeta) * W); };
    auto res = integrate_dop853(rhs, 0.0, 1.0, CMatrix::Identity(n, n), opt.ode);
    out.U = pc.B(pc.frame(zeta)) * res.y * pc.Binv(pc.frame(0.0));
    out.error_estimate = res.error_estimate;
    out.steps = res.steps;
    if (opt.bounds) out.preconditioned_bound = preconditioned_gronwall(L, lambda, zeta);
  } else {
    auto rhs = [&](double t, const CMatrix& Y) -> CMatrix { return zeta * (sys.matrix(t * zeta) * Y); };
    auto res = integrate_dop853(rhs, 0.0, 1.0, CMatrix::Identity(n, n), opt.ode);
    out.U = std::move(res.y);
    out.error_estimate = res.error_estimate;
    out.steps = res.steps;
  }
  out.log_norm = std::log(op_norm(out.U));
  return out;
}

CMatrix monodromy_matrix(const PeriodicOperator& L, cplx lambda, const OdeOptions& opt) {
  TransferOptions t;
  t.ode = opt;
  t.bounds = false;
  return transfer_matrix(L, lambda, kTwoPi, t).U;
}

cplx floquet_determinant(const PeriodicOperator& L, cplx lambda, const OdeOptions& opt) {
  const CMatrix U = monodromy_matrix(L, lambda, opt);
  return (CMatrix::Identity(U.rows(), U.cols()) - U).determinant();
}

// Multiple shooting over the 4N sample intervals: v_{j+1} = U_j v_j + p_j with
// v_{4N} = v_0. Equivalent to the single-shot formula for xi, but the cyclic
// system stays well conditioned when U(2 pi) has exponential dichotomy.
ResolventResult periodic_resolvent(const PeriodicOperator& L, cplx lambda, const HardyVector& f, int N,
                                   const OdeOptions& opt, double det_floor) {
  if (static_cast<int>(f.size()) != L.size()) throw DomainError("forcing dimension does not match the operator");
  const FirstOrderSystem sys(L, lambda);
  const int n = sys.dim();
  const int K = L.size();
  const int segs = 4 * N;

  auto rhs = [&](double t, const CMatrix& Y) -> CMatrix {
    const cplx z = kTwoPi * t;
    const CMatrix A = sys.matrix(z);
    CMatrix d = A * Y;
    d.col(n) += sys.forcing(z, evaluate_closed(f, z));
    return kTwoPi * d;
  };
  CMatrix y0 = CMatrix::Zero(n, n + 1);
  y0.leftCols(n).setIdentity();
  std::vector<CMatrix> seg(static_cast<std::size_t>(segs));
  for (int j = 0; j < segs; ++j) {
    seg[static_cast<std::size_t>(j)] =
        integrate_dop853(rhs, static_cast<double>(j) / segs, static_cast<double>(j + 1) / segs, y0, opt).y;
  }

  CMatrix U = CMatrix::Identity(n, n);
  for (const auto& s : seg) U = s.leftCols(n) * U;
  const double abs_det = std::abs((CMatrix::Identity(n, n) - U).determinant());
  if (abs_det < det_floor) {
    throw NumericalError("lambda is within tolerance of an eigenvalue: |det(I - U(2pi))| = " + std::to_string(abs_det));
  }

  using Sparse = Eigen::SparseMatrix<cplx>;
  std::vector<Eigen::Triplet<cplx>> trip;
  CVector b(static_cast<Eigen::Index>(segs) * n);
  for (int j = 0; j < segs; ++j) {
    const int row = ((j + 1) % segs) * n, col = j * n;
    const CMatrix& s = seg[static_cast<std::size_t>(j)];
    for (int a = 0; a < n; ++a) {
      trip.emplace_back(row + a, row + a, 1.0);
      for (int c = 0; c < n; ++c) trip.emplace_back(row + a, col + c, -s(a, c));
      b(row + a) = s(a, n);
    }
  }
  Sparse S(b.size(), b.size());
  S.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Sparse> lu(S);
  if (lu.info() != Eigen::Success) throw NumericalError("periodic shooting system is singular");
  const CVector v = lu.solve(b);

  HardyVector Y;
  for (int i = 0; i < K; ++i) {
    std::vector<cplx> vals(static_cast<std::size_t>(segs));
    for (int j = 0; j < segs; ++j) vals[static_cast<std::size_t>(j)] = v(j * n + i);
    Y.push_back(from_real_samples(vals, L.domain(), N));
  }

  HardyVector r = apply_operator(L, Y);
  for (int i = 0; i < K; ++i) {
    r[i] -= lambda * Y[i];
    r[i] -= f[i];
  }
  return {std::move(Y), l2_norm(r), abs_det};
}

}  // namespace stripspec
