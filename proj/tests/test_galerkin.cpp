#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stripspec/error.hpp"
#include "stripspec/galerkin.hpp"

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
  // -D^2 + 2a cos 2x + shift
  return PeriodicOperator::standard(CoefficientMatrix::identity(dom, 1, -1.0), CoefficientMatrix(dom, 1, 0),
                                    CoefficientMatrix::scalar(cos_series(dom, 2, 2 * a, shift), 1));
}

PeriodicOperator derivative_op(StripDomain dom) {
  return PeriodicOperator::first_order(CoefficientMatrix::identity(dom, 1), CoefficientMatrix(dom, 1, 0));
}

}  // namespace

TEST_CASE("assembled matrices of model operators") {
  StripDomain dom(0.5);
  const int N = 6;
  auto M = assemble(hill(dom, 0.0, 0.0), Basis::L2, N).matrix;
  CMatrix want = CMatrix::Zero(2 * N + 1, 2 * N + 1);
  for (int n = -N; n <= N; ++n) want(n + N, n + N) = n * n;
  CHECK((M - want).norm() == 0.0);

  auto D = assemble(derivative_op(dom), Basis::L2, N).matrix;
  for (int n = -N; n <= N; ++n) CHECK(D(n + N, n + N) == cplx(0, n));
  CHECK((D - CMatrix(D.diagonal().asDiagonal())).norm() == 0.0);

  const double a = 0.7;
  auto H = assemble(hill(dom, a, 0.0), Basis::L2, N).matrix;
  for (int m = -N; m <= N; ++m)
    for (int n = -N; n <= N; ++n) {
      const cplx expect = m == n ? cplx(n * n) : (std::abs(m - n) == 2 ? cplx(a) : cplx(0));
      CHECK(std::abs(H(m + N, n + N) - expect) < 1e-15);
    }

  auto Hh = assemble(hill(dom, a, 0.0), Basis::H2, N).matrix;
  CHECK(std::abs(Hh(3 + N, 1 + N) - a * std::sqrt(std::cosh(3.0) / std::cosh(1.0))) < 1e-14);
}

TEST_CASE("size cap") {
  StripDomain dom(0.5);
  CHECK_THROWS_AS(assemble(hill(dom, 1, 0), Basis::L2, 100, 150), BudgetError);
}

TEST_CASE("diagonal spectrum") {
  StripDomain dom(0.5);
  auto d = spectrum(assemble(hill(dom, 0.0, 0.0), Basis::L2, 32), 33);
  CHECK(d.hermitian);
  auto v = d.eigenvalues();
  CHECK(std::abs(v[0]) < 1e-12);
  CHECK(d.pairs[0].multiplicity == 1);
  for (int k = 1; k <= 16; ++k) {
    CHECK(std::abs(v[2 * k - 1] - double(k * k)) < 1e-10);
    CHECK(std::abs(v[2 * k] - double(k * k)) < 1e-10);
    CHECK(d.pairs[2 * k].multiplicity == 2);
  }
  CHECK(d.max_residual() < 1e-12);
  for (const auto& p : d.pairs) CHECK(p.trusted);
}

TEST_CASE("Mathieu lowest eigenvalue converges") {
  StripDomain dom(0.5);
  auto d32 = spectrum(assemble(hill(dom, 1.0, 0.0), Basis::L2, 32), 10);
  auto d64 = spectrum(assemble(hill(dom, 1.0, 0.0), Basis::L2, 64), 10);
  const double l32 = d32.pairs[0].lambda.real(), l64 = d64.pairs[0].lambda.real();
  CHECK(std::abs(l32 - l64) < 1e-10);
  CHECK(l64 == doctest::Approx(-0.4551).epsilon(1e-4));
}

TEST_CASE("L2 and H2 bases give the same spectrum") {
  StripDomain dom(0.5);
  auto L = hill(dom, 1.0, 1.0);
  auto dl = spectrum(assemble(L, Basis::L2, 64), 40);
  auto dh = spectrum(assemble(L, Basis::H2, 64), 40);
  CHECK_FALSE(dh.hermitian);
  for (std::size_t k = 0; k < 40; ++k) CHECK(std::abs(dl.pairs[k].lambda - dh.pairs[k].lambda) < 1e-8);
  CHECK(dh.max_residual() < 1e-8);
}

TEST_CASE("Hermitian case: real eigenvalues and orthonormal eigenvectors") {
  StripDomain dom(0.5);
  auto d = spectrum(assemble(hill(dom, 0.8, 2.0), Basis::L2, 40), 40);
  for (const auto& p : d.pairs) CHECK(std::abs(p.lambda.imag()) < 1e-10);
  for (std::size_t i = 0; i < d.pairs.size(); ++i)
    for (std::size_t j = 0; j < d.pairs.size(); ++j) {
      const cplx g = l2_inner(d.pairs[i].psi, d.pairs[j].psi);
      CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-8);
    }
}

TEST_CASE("residuals decrease with truncation") {
  StripDomain dom(0.5);
  // p2 = 2 + cos x in divergence form has full Toeplitz coupling
  auto L = PeriodicOperator::divergence(CoefficientMatrix::scalar(cos_series(dom, 1, 1.0, 2.0), 1),
                                        CoefficientMatrix(dom, 1, 0), CoefficientMatrix::scalar(cos_series(dom, 1, 0.5, 1.0), 1));
  auto d8 = spectrum(assemble(L, Basis::L2, 8), 6);
  auto d16 = spectrum(assemble(L, Basis::L2, 16), 6);
  for (int k = 0; k < 6; ++k) CHECK(d16.pairs[k].residual < d8.pairs[k].residual);
}

TEST_CASE("Weyl bounds") {
  StripDomain dom(0.5);
  auto w = weyl_bounds(spectrum(assemble(hill(dom, 0.0, 1.0), Basis::L2, 64), 64));
  CHECK(w.pass);
  CHECK(w.m_max == 40);
  CHECK(w.beta1_sq >= 0.24);
  CHECK(w.beta2_sq <= 2.1);

  auto L = PeriodicOperator::divergence(CoefficientMatrix::scalar(cos_series(dom, 1, 1.0, 2.0), 1),
                                        CoefficientMatrix(dom, 1, 0), CoefficientMatrix(dom, 1, 0));
  auto wd = weyl_bounds(spectrum(assemble(L, Basis::L2, 64), 64));
  CHECK(wd.pass);
  CHECK(wd.beta1_sq > 0.0);
  CHECK(std::isfinite(wd.beta2_sq));

  auto w4 = weyl_bounds(spectrum(assemble(hill(dom, 0.0, 1.0).scaled(4.0), Basis::L2, 64), 64));
  CHECK(w4.beta1_sq == doctest::Approx(4 * w.beta1_sq).epsilon(1e-12));
  CHECK(w4.beta2_sq == doctest::Approx(4 * w.beta2_sq).epsilon(1e-12));
}

TEST_CASE("growth fit") {
  const double T = 0.5;
  StripDomain dom(T);
  auto d = spectrum(assemble(hill(dom, 0.0, 0.0), Basis::L2, 32), 33);
  auto s = growth_samples(d, T, {64, 9}, 33);
  CHECK(s.size() == 17);
  auto fit = growth_fit(s);
  CHECK(fit.C2 == doctest::Approx(T).epsilon(0.02));
  CHECK(fit.max_excess <= 1e-15);

  std::vector<GrowthSample> one{s[5]};
  auto f1 = growth_fit(one);
  CHECK(f1.C2 == 0.0);
  CHECK(std::log(f1.C1) == doctest::Approx(s[5].log_max));
  CHECK(envelope_excess(f1, one) == doctest::Approx(0.0));
}

TEST_CASE("self-adjoint defect through Galerkin matrix") {
  StripDomain dom(0.5);
  auto r = selfadjoint_defect(hill(dom, 1.0, 0.0), 32);
  CHECK(r.defect < 1e-13);
  CHECK(r.min_rayleigh == doctest::Approx(-0.4551).epsilon(1e-4));
}

TEST_CASE("size comparison evidence") {
  StripDomain dom(0.5);
  auto sc = size_comparison(hill(dom, 1.0, 3.0), 16, 20, 1);
  CHECK(sc.min_ratio > 0.0);
  CHECK(sc.max_ratio < 10.0);
  CHECK(sc.samples == 20);
}

TEST_CASE("spectrum CSV") {
  StripDomain dom(0.5);
  auto d = spectrum(assemble(hill(dom, 0.0, 0.0), Basis::L2, 2), 3);
  std::ostringstream os;
  write_spectrum_csv(os, d, "abc123");
  std::string line;
  std::istringstream is(os.str());
  std::getline(is, line);
  CHECK(line == "index,re_lambda,im_lambda,multiplicity,residual,trusted,config_hash");
  std::getline(is, line);
  CHECK(line.rfind("0,", 0) == 0);
  CHECK(line.substr(line.size() - 7) == ",abc123");
}
