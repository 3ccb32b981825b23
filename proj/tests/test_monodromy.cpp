#include <doctest.h>

#include <cmath>
#include <random>

#include "stripspec/error.hpp"
#include "stripspec/monodromy.hpp"

using namespace stripspec;

namespace {

HardyFunction cos_series(StripDomain dom, int k, double amp, double mean = 0.0) {
  HardyFunction f(dom, k);
  f.at(0) += mean;
  f.at(k) += amp / 2;
  f.at(-k) += amp / 2;
  return f;
}

PeriodicOperator hill(StripDomain dom, double a, double shift) {
  return PeriodicOperator::standard(CoefficientMatrix::identity(dom, 1, -1.0), CoefficientMatrix(dom, 1, 0),
                                    CoefficientMatrix::scalar(cos_series(dom, 2, 2 * a, shift), 1));
}

CMatrix free_transfer(cplx lambda, cplx z) {
  const cplx k = std::sqrt(lambda);
  CMatrix U(2, 2);
  U << std::cos(k * z), std::sin(k * z) / k, -k * std::sin(k * z), std::cos(k * z);
  return U;
}

const OdeOptions kTight{1e-12, 1e-14};

// Composite Gauss-Legendre for complex integrands on [a, b].
template <class F>
cplx gauss(F f, double a, double b, int panels = 200) {
  static const double x[5] = {0.0, 0.5384693101056831, 0.9061798459386640, -0.5384693101056831, -0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.2369268850561891, 0.4786286704993665,
                              0.2369268850561891};
  cplx s = 0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double m = a + (p + 0.5) * h;
    for (int k = 0; k < 5; ++k) s += w[k] * f(m + 0.5 * h * x[k]);
  }
  return 0.5 * h * s;
}

}  // namespace

TEST_CASE("transfer matrix of -D^2 against closed form") {
  StripDomain dom(0.5);
  auto L = hill(dom, 0.0, 0.0);
  for (cplx lambda : {cplx(2.3, 0.0), cplx(-1.5, 0.7), cplx(40.0, -3.0)}) {
    for (cplx zeta : {cplx(kTwoPi, 0.0), cplx(1.0, 0.4), cplx(kTwoPi, -0.5)}) {
      auto t = transfer_matrix(L, lambda, zeta, {kTight});
      CHECK((t.U - free_transfer(lambda, zeta)).norm() < 1e-9 * std::max(1.0, free_transfer(lambda, zeta).norm()));
      CHECK(t.log_norm <= t.gronwall_bound + 1e-9);
    }
  }
  auto t0 = transfer_matrix(L, 0.0, kTwoPi);
  CMatrix want(2, 2);
  want << 1, kTwoPi, 0, 1;
  CHECK((t0.U - want).norm() < 1e-9);
}

TEST_CASE("Floquet determinant of -D^2") {
  StripDomain dom(0.5);
  auto L = hill(dom, 0.0, 0.0);
  for (cplx lambda : {cplx(0.3, 0.0), cplx(2.0, 1.0), cplx(7.5, -0.2)}) {
    const cplx want = 2.0 - 2.0 * std::cos(kTwoPi * std::sqrt(lambda));
    CHECK(std::abs(floquet_determinant(L, lambda) - want) < 1e-8 * std::max(1.0, std::abs(want)));
  }
  for (int n = 0; n <= 4; ++n) CHECK(std::abs(floquet_determinant(L, double(n * n), kTight)) < 1e-9);
}

TEST_CASE("first-order operator monodromy") {
  StripDomain dom(0.5);
  auto L = PeriodicOperator::first_order(CoefficientMatrix::identity(dom, 1), CoefficientMatrix(dom, 1, 0));
  for (cplx lambda : {cplx(0.2, 0.5), cplx(-0.3, 2.0)}) {
    const cplx d = floquet_determinant(L, lambda);
    CHECK(std::abs(d - (1.0 - std::exp(kTwoPi * lambda))) < 1e-9);
  }
  CHECK(std::abs(floquet_determinant(L, cplx(0, 3))) < 1e-9);
}

TEST_CASE("matrix square roots") {
  CHECK((principal_sqrt(CMatrix::Identity(3, 3)) - CMatrix::Identity(3, 3)).norm() < 1e-15);
  CMatrix D = CMatrix::Zero(2, 2);
  D(0, 0) = 4;
  D(1, 1) = 9;
  CMatrix R = principal_sqrt(D);
  CHECK(std::abs(R(0, 0) - 2.0) < 1e-15);
  CHECK(std::abs(R(1, 1) - 3.0) < 1e-15);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    CMatrix A(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) A(i, j) = cplx(g(rng), g(rng)) * 0.3;
    A += 3.0 * CMatrix::Identity(3, 3);
    const CMatrix S = principal_sqrt(A);
    CHECK((S * S - A).norm() < 1e-10 * A.norm());
    CHECK((S - dunford_taylor_sqrt(A)).norm() < 1e-10 * S.norm());
    Eigen::ComplexEigenSolver<CMatrix> es(S, false);
    for (int k = 0; k < 3; ++k) CHECK(es.eigenvalues()(k).real() > 0);
  }

  CMatrix neg = -CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(principal_sqrt(neg), BranchError);
  CHECK_THROWS_AS(dunford_taylor_sqrt(neg), BranchError);
}

TEST_CASE("square-root branch along a path") {
  StripDomain dom(1.0);
  // Q(z) = 1 + 0.9 cos z: at z = i the eigenvalue is 1 + 0.9 cosh 1 > 0, fine with the principal cut
  CoefficientMatrix Q = CoefficientMatrix::scalar(cos_series(dom, 1, 0.9, 1.0), 1);
  SqrtBranch b(Q, cplx(0, 1.0));
  CHECK(b.cut_angle() == 0.0);
  const CMatrix s = b(cplx(0, 0.5));
  CHECK(std::abs(s(0, 0) * s(0, 0) - (1.0 + 0.9 * std::cosh(0.5))) < 1e-13);

  // -1 + 0.2i sits next to the principal cut; the branch rotates it away
  CoefficientMatrix P = CoefficientMatrix::scalar(HardyFunction::constant(dom, cplx(-1.0, 0.02)), 1);
  SqrtBranch c(P, cplx(1.0, 0.0));
  CHECK(c.cut_angle() != 0.0);
  CHECK(c.clearance() > 0.5);
  const CMatrix sc = c(0.3);
  CHECK(std::abs(sc(0, 0) * sc(0, 0) - cplx(-1.0, 0.02)) < 1e-14);
}

TEST_CASE("preconditioned transfer agrees and bounds the growth") {
  StripDomain dom(0.5);
  auto L = hill(dom, 1.0, 1.0);
  for (cplx lambda : {cplx(50.0, 10.0), cplx(400.0, 0.0), cplx(-300.0, 200.0)}) {
    const cplx zeta(kTwoPi, 0.3);
    auto plain = transfer_matrix(L, lambda, zeta, {kTight, false});
    auto pre = transfer_matrix(L, lambda, zeta, {kTight, true});
    CHECK((plain.U - pre.U).norm() < 1e-8 * plain.U.norm());
    CHECK(pre.log_norm <= pre.preconditioned_bound + 1e-9);
    CHECK(plain.log_norm <= plain.gronwall_bound + 1e-9);
  }
  auto L1 = PeriodicOperator::first_order(CoefficientMatrix::identity(dom, 1), CoefficientMatrix(dom, 1, 0));
  CHECK_THROWS_AS(preconditioned_gronwall(L1, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(preconditioned_gronwall(L, 0.0, 1.0), ConfigError);
}

TEST_CASE("first-order periodic resolvent, constant coefficient") {
  StripDomain dom(0.5);
  auto L = PeriodicOperator::first_order(CoefficientMatrix::identity(dom, 1), CoefficientMatrix(dom, 1, 0));
  HardyVector f{HardyFunction::exponential(dom, 1, 0)};
  auto r = periodic_resolvent(L, 0.5, f, 16, kTight);
  const cplx want = 1.0 / cplx(-0.5, 1.0);
  for (int n = -16; n <= 16; ++n) CHECK(std::abs(r.Y[0][n] - (n == 1 ? want : cplx(0))) < 1e-10);
  CHECK(r.residual < 1e-9);
}

TEST_CASE("first-order periodic resolvent, variable coefficient") {
  const double b = 0.3;
  StripDomain dom(0.5);
  // p = (1 + b cos x) / sqrt(1 - b^2), so that int_0^{2 pi} 1/p = 2 pi
  const double c = 1.0 / std::sqrt(1 - b * b);
  auto L = PeriodicOperator::first_order(CoefficientMatrix::scalar(cos_series(dom, 1, b * c, c), 1),
                                         CoefficientMatrix(dom, 1, 0));
  const cplx lambda(0.4, 0.7);
  HardyFunction f0(dom, 2);
  f0.at(1) = 1.0;
  f0.at(-2) = cplx(0.0, 0.5);
  auto fx = [&](double x) { return std::exp(cplx(0, x)) + cplx(0, 0.5) * std::exp(cplx(0, -2 * x)); };
  auto p = [&](double x) { return c * (1 + b * std::cos(x)); };
  // w(x) = int_0^x 1/p, continuous in x
  auto w = [&](double x) {
    const double turns = std::floor((x + std::numbers::pi) / kTwoPi);
    const double y = x - turns * kTwoPi;
    return 2 * std::atan(std::sqrt((1 - b) / (1 + b)) * std::tan(y / 2)) + turns * kTwoPi;
  };
  auto integrand = [&](double s) { return std::exp(-lambda * w(s)) * fx(s) / p(s); };
  const cplx J = gauss(integrand, 0.0, kTwoPi, 400);
  const cplx y0 = J / (std::exp(-kTwoPi * lambda) - 1.0);
  auto exact = [&](double x) { return std::exp(lambda * w(x)) * (y0 + gauss(integrand, 0.0, x, 400)); };

  auto r = periodic_resolvent(L, lambda, {f0}, 32, kTight);
  for (double x : {0.0, 0.7, 2.0, 3.5, 5.9}) CHECK(std::abs(evaluate(r.Y[0], x) - exact(x)) < 1e-9);
  CHECK(r.residual < 1e-8);
}

TEST_CASE("second-order periodic resolvent") {
  StripDomain dom(0.5);
  auto L0 = hill(dom, 0.0, 0.0);
  HardyVector f{HardyFunction::exponential(dom, 1, 0)};
  auto r = periodic_resolvent(L0, 0.5, f, 16, kTight);
  CHECK(std::abs(r.Y[0][1] - 2.0) < 1e-10);

  auto L = hill(dom, 1.0, 1.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 3; ++trial) {
    HardyFunction h(dom, 6);
    for (int n = -6; n <= 6; ++n) h.at(n) = cplx(g(rng), g(rng)) * std::exp(-std::abs(n));
    const cplx lambda(5.0 * g(rng), 1.0 + std::abs(g(rng)));
    auto rr = periodic_resolvent(L, lambda, {h}, 48, kTight);
    CHECK(rr.residual < 1e-8);
  }
  CHECK_THROWS_AS(periodic_resolvent(L0, 1.0, f, 16, kTight), NumericalError);
}
