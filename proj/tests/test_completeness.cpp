#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stripspec/completeness.hpp"
#include "stripspec/error.hpp"

using namespace stripspec;

namespace {

// truncated series of I0(a) e^{a cos z}
HardyFunction exp_cos_series(StripDomain dom, double a, int N) {
  HardyFunction p(dom, N);
  const double i0 = std::cyl_bessel_i(0.0, a);
  for (int n = -N; n <= N; ++n) p.at(n) = i0 * std::cyl_bessel_i(static_cast<double>(std::abs(n)), a);
  return p;
}

}  // namespace

TEST_CASE("constant coefficient gives the identity map") {
  StripDomain dom(1.0);
  HardyFunction one(dom, 0);
  one.at(0) = 1.0;
  ConformalMap m(one);
  CHECK(std::abs(m.c1() - 1.0) < 1e-15);
  for (cplx z : {cplx(0.4, 0.3), cplx(5.0, -0.9)}) CHECK(std::abs(m(z) - z) < 1e-14);
  CHECK(!collision_search(m, 0.9, {64, 16}).witness);
  CHECK(injectivity_certificate(m, 0.9).pass);
  CHECK(!threshold_scan(m, 0.25, 0.95, 4, {64, 16}).T_star);
}

TEST_CASE("vanishing coefficient is rejected") {
  StripDomain dom(1.0);
  HardyFunction p(dom, 1);
  p.at(1) = 0.5;
  p.at(-1) = 0.5;  // cos z
  CHECK_THROWS_AS(ConformalMap{p}, DomainError);
}

TEST_CASE("exponential family: period and closed form") {
  auto m = ConformalMap::exp_cos(2.0, StripDomain(2.0));
  CHECK(std::abs(m(cplx(kTwoPi, 0.0)) - kTwoPi) < 1e-13);
  CHECK(m.period_defect() < 1e-12);
  // w' = c1 / p1
  const cplx z(1.1, 0.7), h = 1e-5;
  CHECK(std::abs((m(z + h) - m(z - h)) / (2.0 * h) - m.derivative(z)) < 1e-8 * std::abs(m.derivative(z)));

  StripDomain small(0.5);
  ConformalMap g(exp_cos_series(small, 2.0, 40));
  auto c = ConformalMap::exp_cos(2.0, small);
  CHECK(std::abs(g.c1() - 1.0) < 1e-14);
  for (cplx z : {cplx(0.3, 0.2), cplx(2.0, -0.4), cplx(5.0, 0.45)}) CHECK(std::abs(g(z) - c(z)) < 1e-12);
}

TEST_CASE("narrow strip: certificate and no collisions") {
  auto m = ConformalMap::exp_cos(2.0, StripDomain(2.0));
  const auto cert = injectivity_certificate(m, 0.3);
  CHECK(cert.pass);
  CHECK(cert.min_re > 0.0);
  CHECK(!collision_search(m, 0.3).witness);
}

TEST_CASE("wide strip: witness with equal exponentials") {
  auto m = ConformalMap::exp_cos(2.0, StripDomain(2.0));
  const auto c = collision_search(m, 1.2);
  REQUIRE(c.witness);
  const auto& w = *c.witness;
  CHECK(w.residual < 1e-10);
  CHECK(w.separation >= 0.05);
  CHECK(std::abs(w.z1.imag()) < 1.2);
  CHECK(std::abs(w.z2.imag()) < 1.2);
  double worst = 0.0;
  for (int n = -50; n <= 50; ++n)
    worst = std::max(worst, std::abs(std::exp(kI * double(n) * m(w.z1)) - std::exp(kI * double(n) * m(w.z2))));
  CHECK(worst < 1e-8);
  CHECK(!injectivity_certificate(m, 1.2).pass);
}

TEST_CASE("threshold: finite and grid independent after refinement") {
  auto m = ConformalMap::exp_cos(2.0, StripDomain(2.0));
  const auto a = threshold_scan(m, 0.25, 1.5, 6, {256, 64});
  const auto b = threshold_scan(m, 0.25, 1.5, 6, {512, 128});
  REQUIRE(a.T_star);
  REQUIRE(b.T_star);
  REQUIRE(a.refined);
  REQUIRE(b.refined);
  CHECK(a.refined->converged);
  CHECK(*a.T_star >= a.refined->T - 1e-12);
  CHECK(std::abs(a.refined->T - b.refined->T) < 1e-9);
  CHECK(a.refined->witness.residual < 1e-12);
  CHECK(std::abs(std::abs(a.refined->witness.z1.imag()) - std::abs(a.refined->witness.z2.imag())) < 1e-9);
  for (const auto& row : a.rows)
    if (row.certificate) CHECK(!row.found);
  // a larger amplitude loses injectivity sooner
  auto m3 = ConformalMap::exp_cos(3.0, StripDomain(2.0));
  const auto c = threshold_scan(m3, 0.25, 1.5, 6, {256, 64});
  REQUIRE(c.refined);
  CHECK(c.refined->T <= a.refined->T);
}

TEST_CASE("span residuals: orthonormal exponentials") {
  StripDomain dom(0.6);
  std::vector<HardyFunction> psi, tests;
  for (int m = 0; m < 9; ++m) {
    HardyFunction e = HardyFunction::exponential(dom, eigen_index(m), 4);
    psi.push_back((1.0 / h_norm(e)) * e);
  }
  HardyFunction t(dom, 2);
  t.at(0) = 1.0;
  t.at(-2) = cplx(0.5, -0.25);
  tests.push_back(t);
  const auto r = span_residuals(psi, tests);
  CHECK(r.r[0][0] > 0.1);
  CHECK(r.r[0][8] < 1e-14);
  CHECK(r.rank.back() == 9);
  CHECK(r.max_increase <= 1e-12);
  std::ostringstream os;
  write_residual_csv(os, r, "h");
  CHECK(os.str().rfind("M,r_1,config_hash\n1,", 0) == 0);
}

TEST_CASE("span residuals: Hill operator eigenfunctions are complete") {
  StripDomain dom(0.4);
  HardyFunction q(dom, 1);
  q.at(1) = 1.0;
  q.at(-1) = 1.0;  // 2 cos x
  const auto L = PeriodicOperator::standard(CoefficientMatrix::identity(dom, 1, -1.0), CoefficientMatrix(dom, 1, 0),
                                            CoefficientMatrix::scalar(q, 1));
  const auto d = spectrum(assemble(L, Basis::H2, 64), 40);
  std::vector<HardyFunction> psi, tests;
  for (const auto& p : d.pairs) psi.push_back(p.psi[0]);
  for (int m = 0; m < 5; ++m) tests.push_back(HardyFunction::exponential(dom, eigen_index(m)));
  const auto r = span_residuals(psi, tests);
  for (const auto& row : r.r) {
    CHECK(row.back() < 1e-3);
    CHECK(row.back() < 1e-3 * row.front() + 1e-12);
  }
  CHECK(r.max_increase <= 1e-12);
}

TEST_CASE("witness kernel difference is orthogonal to every eigenfunction") {
  auto m = ConformalMap::exp_cos(2.0, StripDomain(2.0));
  const double T = 1.5;
  const auto c = collision_search(m, T);
  REQUIRE(c.witness);
  const auto r = witness_span_check(m, *c.witness, T);
  CHECK(r.nosep < 1e-7);
  CHECK(r.annihilator < 1e-7);
  CHECK(r.max_deviation < 1e-6);
  REQUIRE(r.residuals.size() == 60);
  CHECK(r.h_norm > 0.0);
}

TEST_CASE("similarity example") {
  StripDomain dom(2.0);
  HardyFunction phi(dom, 1);
  phi.at(1) = cplx(0.0, -0.5);
  phi.at(-1) = cplx(0.0, 0.5);  // sin z
  const auto s = similarity_example_check(phi, 10, 64);
  CHECK(s.max_sine < 1e-7);
  CHECK(s.max_eig_error < 1e-10);

  HardyFunction zero(dom, 0);
  const auto z = similarity_example_check(zero, 5, 16);
  CHECK(z.max_sine < 1e-14);
  CHECK(z.max_eig_error < 1e-12);
}

TEST_CASE("atlas table") {
  auto m = ConformalMap::exp_cos(2.0, StripDomain(2.0));
  const auto s = threshold_scan(m, 0.5, 1.0, 3, {128, 32}, 0.05);
  std::ostringstream os;
  write_atlas_csv(os, 2.0, s, "h");
  const std::string t = os.str();
  CHECK(t.rfind("a,T,collision_found,re_z1,im_z1,re_z2,im_z2,polish_residual,config_hash\n", 0) == 0);
  CHECK(t.find("2,0.5,0,,,,,,h\n") != std::string::npos);
  CHECK(t.find(",1,") != std::string::npos);
}
