#include "stripspec/operator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stripspec/error.hpp"

namespace stripspec {

CoefficientMatrix::CoefficientMatrix(StripDomain dom, int K, int order) : domain_(dom), K_(K) {
  if (K < 1) throw ConfigError("matrix size K must be at least 1, got " + std::to_string(K));
  entries_.assign(static_cast<std::size_t>(K * K), HardyFunction(dom, order));
}

CoefficientMatrix::CoefficientMatrix(int K, std::vector<HardyFunction> entries)
    : domain_(entries.empty() ? StripDomain(1.0) : entries.front().domain()), K_(K), entries_(std::move(entries)) {
  if (K < 1 || entries_.size() != static_cast<std::size_t>(K * K)) {
    throw ConfigError("coefficient matrix needs K*K = " + std::to_string(K * K) + " entries, got " +
                      std::to_string(entries_.size()));
  }
  for (const auto& e : entries_) check_same_domain(entries_.front(), e);
}

CoefficientMatrix CoefficientMatrix::identity(StripDomain dom, int K, cplx scale) {
  CoefficientMatrix M(dom, K, 0);
  for (int i = 0; i < K; ++i) M(i, i).at(0) = scale;
  return M;
}

CoefficientMatrix CoefficientMatrix::scalar(const HardyFunction& p, int K) {
  CoefficientMatrix M(p.domain(), K, p.order());
  for (int i = 0; i < K; ++i) M(i, i) = p;
  return M;
}

int CoefficientMatrix::order() const noexcept {
  int m = 0;
  for (const auto& e : entries_) m = std::max(m, e.order());
  return m;
}

CMatrix CoefficientMatrix::evaluate(cplx z) const {
  CMatrix M(K_, K_);
  for (int i = 0; i < K_; ++i)
    for (int j = 0; j < K_; ++j) M(i, j) = evaluate_closed((*this)(i, j), z).value;
  return M;
}

CMatrix CoefficientMatrix::coefficient(int n) const {
  CMatrix M(K_, K_);
  for (int i = 0; i < K_; ++i)
    for (int j = 0; j < K_; ++j) M(i, j) = (*this)(i, j)[n];
  return M;
}

CoefficientMatrix CoefficientMatrix::derivative() const {
  CoefficientMatrix out = *this;
  for (auto& e : out.entries_) e = stripspec::derivative(e);
  return out;
}

CoefficientMatrix CoefficientMatrix::operator-() const {
  CoefficientMatrix out = *this;
  for (auto& e : out.entries_) e *= -1.0;
  return out;
}

namespace {
void check_same_shape(const CoefficientMatrix& a, const CoefficientMatrix& b) {
  if (a.size() != b.size()) {
    throw DomainError("coefficient size mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}
}  // namespace

CoefficientMatrix operator+(const CoefficientMatrix& a, const CoefficientMatrix& b) {
  check_same_shape(a, b);
  CoefficientMatrix out = a;
  for (std::size_t k = 0; k < out.entries_.size(); ++k) out.entries_[k] += b.entries_[k];
  return out;
}

CoefficientMatrix operator-(const CoefficientMatrix& a, const CoefficientMatrix& b) {
  check_same_shape(a, b);
  CoefficientMatrix out = a;
  for (std::size_t k = 0; k < out.entries_.size(); ++k) out.entries_[k] -= b.entries_[k];
  return out;
}

HardyVector multiply(const CoefficientMatrix& M, const HardyVector& f) {
  const int K = M.size();
  if (static_cast<int>(f.size()) != K) {
    throw DomainError("operand has " + std::to_string(f.size()) + " components, operator expects " + std::to_string(K));
  }
  int fo = 0;
  for (const auto& fj : f) fo = std::max(fo, fj.order());
  HardyVector out(static_cast<std::size_t>(K), HardyFunction(M.domain(), fo + M.order()));
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) out[i] += product(M(i, j), f[j]);
  return out;
}

PeriodicOperator::PeriodicOperator(Form form, std::array<std::optional<CoefficientMatrix>, 3> coeffs)
    : form_(form), coeffs_(std::move(coeffs)) {
  if (!coeffs_[0] || !coeffs_[1]) throw ConfigError("operator needs at least the P1 and P0 coefficients");
  for (int k = 1; k < 3; ++k) {
    if (!coeffs_[k]) continue;
    check_same_shape(*coeffs_[0], *coeffs_[k]);
    check_same_domain((*coeffs_[0])(0, 0), (*coeffs_[k])(0, 0));
  }
  if (!coeffs_[2]) form_ = Form::Standard;
  if (form_ == Form::Standard) {
    standard_ = coeffs_;
  } else {
    // -D P2 D = -P2 D^2 - P2' D
    const auto& P2 = *coeffs_[2];
    standard_[2] = -P2;
    standard_[1] = *coeffs_[1] - P2.derivative();
    standard_[0] = coeffs_[0];
  }
}

PeriodicOperator PeriodicOperator::standard(CoefficientMatrix A2, CoefficientMatrix A1, CoefficientMatrix A0) {
  return PeriodicOperator(Form::Standard, {std::move(A0), std::move(A1), std::move(A2)});
}

PeriodicOperator PeriodicOperator::divergence(CoefficientMatrix P2, CoefficientMatrix P1, CoefficientMatrix P0) {
  return PeriodicOperator(Form::Divergence, {std::move(P0), std::move(P1), std::move(P2)});
}

PeriodicOperator PeriodicOperator::first_order(CoefficientMatrix A1, CoefficientMatrix A0) {
  return PeriodicOperator(Form::Standard, {std::move(A0), std::move(A1), std::nullopt});
}

int PeriodicOperator::coefficient_order() const noexcept {
  int m = 0;
  for (const auto& c : standard_)
    if (c) m = std::max(m, c->order());
  for (const auto& c : coeffs_)
    if (c) m = std::max(m, c->order());
  return m;
}

const CoefficientMatrix& PeriodicOperator::coeff(int k) const {
  if (k < 0 || k > order()) throw DomainError("no coefficient of index " + std::to_string(k));
  return *coeffs_[static_cast<std::size_t>(k)];
}

const CoefficientMatrix& PeriodicOperator::standard_coeff(int k) const {
  if (k < 0 || k > order()) throw DomainError("no coefficient of index " + std::to_string(k));
  return *standard_[static_cast<std::size_t>(k)];
}

CoefficientMatrix PeriodicOperator::divergence_leading() const {
  if (order() != 2) throw ConfigError("divergence-form leading coefficient requires a second-order operator");
  return form_ == Form::Divergence ? *coeffs_[2] : -*standard_[2];
}

PeriodicOperator PeriodicOperator::converted(Form target) const {
  if (order() == 1 || target == form_) return *this;
  if (target == Form::Standard) return PeriodicOperator(Form::Standard, standard_);
  // P2 = -A2, P1 = A1 + P2' = A1 - A2', P0 = A0
  const auto& A2 = *standard_[2];
  return PeriodicOperator(Form::Divergence, {standard_[0], *standard_[1] - A2.derivative(), -A2});
}

PeriodicOperator PeriodicOperator::scaled(cplx s) const {
  auto c = coeffs_;
  for (auto& m : c) {
    if (!m) continue;
    for (int i = 0; i < m->size(); ++i)
      for (int j = 0; j < m->size(); ++j) (*m)(i, j) *= s;
  }
  return PeriodicOperator(form_, std::move(c));
}

PeriodicOperator PeriodicOperator::shifted(cplx mu) const {
  auto c = coeffs_;
  c[0] = *c[0] + CoefficientMatrix::identity(domain(), size(), mu);
  return PeriodicOperator(form_, std::move(c));
}

namespace {

HardyVector derivative(const HardyVector& f) {
  HardyVector out;
  out.reserve(f.size());
  for (const auto& fj : f) out.push_back(stripspec::derivative(fj));
  return out;
}

void add_into(HardyVector& acc, const HardyVector& term, cplx sign = 1.0) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += sign * term[i];
}

}  // namespace

HardyVector apply_operator(const PeriodicOperator& L, const HardyVector& f) {
  if (static_cast<int>(f.size()) != L.size()) {
    throw DomainError("operand has " + std::to_string(f.size()) + " components, operator expects " +
                      std::to_string(L.size()));
  }
  for (const auto& fj : f) check_same_domain(fj, L.coeff(0)(0, 0));
  const HardyVector df = derivative(f);
  HardyVector out = multiply(L.coeff(0), f);
  add_into(out, multiply(L.coeff(1), df));
  if (L.order() == 2) {
    if (L.form() == Form::Standard) {
      add_into(out, multiply(L.coeff(2), derivative(df)));
    } else {
      add_into(out, derivative(multiply(L.coeff(2), df)), -1.0);
    }
  }
  return out;
}

TruncatedVector apply_truncated(const PeriodicOperator& L, const HardyVector& f, int order) {
  HardyVector full = apply_operator(L, f);
  double tail2 = 0.0;
  HardyVector out;
  out.reserve(full.size());
  for (const auto& g : full) {
    tail2 += std::pow(g.tail_norm(order), 2);
    out.push_back(g.resized(order));
  }
  return {std::move(out), std::sqrt(tail2)};
}

namespace {

std::vector<cplx> strip_grid(double T, GridSpec grid, bool real_axis_only) {
  if (grid.nx < 1 || grid.ny < 1) throw ConfigError("grid densities must be positive");
  std::vector<cplx> pts;
  const int ny = real_axis_only ? 1 : grid.ny;
  pts.reserve(static_cast<std::size_t>(grid.nx * ny));
  for (int b = 0; b < ny; ++b) {
    const double y = (ny == 1) ? 0.0 : -T + 2.0 * T * b / (ny - 1);
    for (int a = 0; a < grid.nx; ++a) pts.emplace_back(kTwoPi * a / grid.nx, y);
  }
  return pts;
}

}  // namespace

RegularityReport regularity_check(const PeriodicOperator& L, GridSpec grid, double floor) {
  const auto& A = L.leading();
  const double T = L.domain().half_height();
  auto det = [&](cplx z) { return A.evaluate(z).determinant(); };

  const auto pts = strip_grid(T, grid, false);
  std::vector<std::pair<double, cplx>> vals;
  vals.reserve(pts.size());
  for (cplx z : pts) vals.emplace_back(std::abs(det(z)), z);
  std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  double best = vals.front().first;
  cplx arg = vals.front().second;
  // det is analytic; Newton from the lowest grid values finds zeros between nodes
  const std::size_t seeds = std::min<std::size_t>(8, vals.size());
  const double h = 1e-6;
  for (std::size_t s = 0; s < seeds; ++s) {
    cplx z = vals[s].second;
    for (int it = 0; it < 40; ++it) {
      const cplx d = det(z);
      if (std::abs(d) < best) best = std::abs(d), arg = z;
      if (std::abs(d) == 0.0) break;
      const cplx dd = (det(z + h) - det(z - h)) / (2.0 * h);
      if (std::abs(dd) == 0.0) break;
      cplx step = d / dd;
      if (std::abs(step) > 0.5) step *= 0.5 / std::abs(step);
      z -= step;
      if (std::abs(z.imag()) > T) z.imag(std::copysign(T, z.imag()));
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) break;
    }
    const double v = std::abs(det(z));
    if (v < best) best = v, arg = z;
  }
  return {best, arg, floor, best > floor};
}

SectorialityReport sectoriality_check(const PeriodicOperator& L, GridSpec grid, bool real_axis_only) {
  const CoefficientMatrix P2 = L.divergence_leading();
  const auto pts = strip_grid(L.domain().half_height(), grid, real_axis_only);
  double c0 = std::numeric_limits<double>::infinity();
  cplx arg{};
  for (cplx z : pts) {
    const CMatrix P = P2.evaluate(z);
    const CMatrix H = 0.5 * (P + P.adjoint());
    const double m = Eigen::SelfAdjointEigenSolver<CMatrix>(H, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (m < c0) c0 = m, arg = z;
  }
  return {c0, arg, c0 > 0.0};
}

}  // namespace stripspec
