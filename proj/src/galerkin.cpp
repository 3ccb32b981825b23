#include "stripspec/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "stripspec/error.hpp"

namespace stripspec {

GalerkinMatrix assemble(const PeriodicOperator& L, Basis basis, int N, int size_cap) {
  const int K = L.size();
  const int B = 2 * N + 1;
  const long size = static_cast<long>(B) * K;
  if (N < 0) throw ConfigError("truncation order must be nonnegative");
  if (size > size_cap) {
    throw BudgetError("Galerkin size (2N+1)K = " + std::to_string(size) + " exceeds cap " + std::to_string(size_cap));
  }
  const double T = L.domain().half_height();
  check_truncation(N, T);

  CMatrix M = CMatrix::Zero(size, size);
  for (int k = 0; k <= L.order(); ++k) {
    const auto& A = L.standard_coeff(k);
    const int co = A.order();
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < K; ++j) {
        const auto& a = A(i, j);
        for (int n = -N; n <= N; ++n) {
          const cplx dn = std::pow(kI * static_cast<double>(n), k);
          for (int m = std::max(-N, n - co); m <= std::min(N, n + co); ++m) {
            M(i * B + m + N, j * B + n + N) += a[m - n] * dn;
          }
        }
      }
    }
  }
  if (basis == Basis::H2) {
    std::vector<double> s(static_cast<std::size_t>(B));
    for (int n = -N; n <= N; ++n) s[static_cast<std::size_t>(n + N)] = std::sqrt(hardy_weight(n, T));
    for (long r = 0; r < size; ++r)
      for (long c = 0; c < size; ++c) M(r, c) *= s[static_cast<std::size_t>(r % B)] / s[static_cast<std::size_t>(c % B)];
  }
  return {std::move(M), basis, N, L};
}

HardyVector to_hardy(const CVector& v, const GalerkinMatrix& M) {
  const int B = 2 * M.N + 1;
  const double T = M.source.domain().half_height();
  HardyVector out;
  for (int i = 0; i < M.K(); ++i) {
    HardyFunction f(M.source.domain(), M.N);
    for (int n = -M.N; n <= M.N; ++n) {
      cplx c = v(i * B + n + M.N);
      if (M.basis == Basis::H2) c /= std::sqrt(hardy_weight(n, T));
      f.at(n) = c;
    }
    out.push_back(std::move(f));
  }
  return out;
}

CVector to_coefficients(const HardyVector& f, Basis basis, int N) {
  const int B = 2 * N + 1;
  CVector v(static_cast<Eigen::Index>(B * f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double T = f[i].domain().half_height();
    for (int n = -N; n <= N; ++n) {
      cplx c = f[i][n];
      if (basis == Basis::H2) c *= std::sqrt(hardy_weight(n, T));
      v(static_cast<Eigen::Index>(i) * B + n + N) = c;
    }
  }
  return v;
}

std::vector<cplx> SpectralDecomposition::eigenvalues() const {
  std::vector<cplx> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.lambda);
  return out;
}

double SpectralDecomposition::max_residual(bool trusted_only) const {
  double r = 0.0;
  for (const auto& p : pairs)
    if (p.trusted || !trusted_only) r = std::max(r, p.residual);
  return r;
}

namespace {

double scale_of(const std::vector<cplx>& v) {
  double s = 1.0;
  for (cplx x : v) s = std::max(s, std::abs(x));
  return s;
}

// Sort a permutation of values by Re with near-equal real parts ordered by Im.
std::vector<std::size_t> spectral_order(const std::vector<cplx>& values, double rel_tol) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a].real() < values[b].real(); });
  const double tol = rel_tol * scale_of(values);
  std::size_t start = 0;
  while (start < idx.size()) {
    std::size_t end = start + 1;
    while (end < idx.size() && values[idx[end]].real() - values[idx[end - 1]].real() <= tol) ++end;
    std::stable_sort(idx.begin() + static_cast<long>(start), idx.begin() + static_cast<long>(end),
                     [&](auto a, auto b) { return values[a].imag() < values[b].imag(); });
    start = end;
  }
  return idx;
}

void normalize_phase(CVector& v) {
  Eigen::Index k = 0;
  double best = -1.0;
  for (Eigen::Index r = 0; r < v.size(); ++r) {
    // small relative margin keeps the choice stable when two moduli tie
    if (std::abs(v(r)) > best * (1.0 + 1e-10)) best = std::abs(v(r)), k = r;
  }
  if (best > 0.0) v *= std::conj(v(k)) / std::abs(v(k));
}

}  // namespace

void sort_spectrum(std::vector<cplx>& values, double rel_tol) {
  const auto idx = spectral_order(values, rel_tol);
  std::vector<cplx> out;
  out.reserve(values.size());
  for (auto i : idx) out.push_back(values[i]);
  values = std::move(out);
}

SpectralDecomposition spectrum(const GalerkinMatrix& M, int keep, double cluster_tol) {
  const auto size = M.matrix.rows();
  if (keep < 1 || keep > size) {
    throw ConfigError("keep = " + std::to_string(keep) + " must lie in [1, " + std::to_string(size) + "]");
  }
  const double fro = M.matrix.norm();
  const bool hermitian =
      M.basis == Basis::L2 && (M.matrix - M.matrix.adjoint()).norm() <= 1e-14 * std::max(fro, 1e-300);

  std::vector<cplx> values(static_cast<std::size_t>(size));
  CMatrix vectors;
  if (hermitian) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (M.matrix + M.matrix.adjoint()));
    if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");
    for (Eigen::Index k = 0; k < size; ++k) values[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    vectors = es.eigenvectors();
  } else {
    Eigen::ComplexEigenSolver<CMatrix> es(M.matrix);
    if (es.info() != Eigen::Success) throw NumericalError("complex eigensolver did not converge");
    for (Eigen::Index k = 0; k < size; ++k) values[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    vectors = es.eigenvectors();
  }

  // modulus rank decides which pairs are kept and trusted
  std::vector<std::size_t> by_mod(values.size());
  std::iota(by_mod.begin(), by_mod.end(), 0);
  std::stable_sort(by_mod.begin(), by_mod.end(), [&](auto a, auto b) {
    const double ma = std::abs(values[a]), mb = std::abs(values[b]);
    if (ma != mb) return ma < mb;
    if (values[a].real() != values[b].real()) return values[a].real() < values[b].real();
    return values[a].imag() < values[b].imag();
  });
  std::vector<std::size_t> kept(by_mod.begin(), by_mod.begin() + keep);
  std::vector<bool> trusted(values.size(), false);
  for (std::size_t r = 0; r < values.size(); ++r) trusted[by_mod[r]] = 2 * static_cast<long>(r) < size;

  std::vector<cplx> kv;
  for (auto k : kept) kv.push_back(values[k]);
  const auto order = spectral_order(kv, 1e-9);

  // clusters: adjacent in spectral order and within the relative gap
  std::vector<int> cluster(order.size());
  int cid = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (r > 0) {
      const cplx a = kv[order[r - 1]], b = kv[order[r]];
      if (std::abs(a - b) > cluster_tol * std::max(1.0, std::abs(b))) ++cid;
    }
    cluster[r] = cid;
  }

  SpectralDecomposition d{{}, M.basis, M.N, static_cast<int>(size), cluster_tol, hermitian};
  std::size_t r = 0;
  while (r < order.size()) {
    std::size_t e = r;
    while (e < order.size() && cluster[e] == cluster[r]) ++e;
    const int mult = static_cast<int>(e - r);
    // L^2-orthonormalize the cluster's eigenvectors
    CMatrix Vc(size, mult);
    for (std::size_t q = r; q < e; ++q) {
      const CVector v = to_coefficients(to_hardy(vectors.col(static_cast<Eigen::Index>(kept[order[q]])), M), Basis::L2, M.N);
      Vc.col(static_cast<Eigen::Index>(q - r)) = v;
    }
    if (mult > 1) {
      Eigen::HouseholderQR<CMatrix> qr(Vc);
      CMatrix Q = qr.householderQ() * CMatrix::Identity(size, mult);
      Vc = Q;
    }
    for (std::size_t q = r; q < e; ++q) {
      const auto src = kept[order[q]];
      CVector v = Vc.col(static_cast<Eigen::Index>(q - r));
      v /= v.norm();
      normalize_phase(v);
      GalerkinMatrix l2view{CMatrix(), Basis::L2, M.N, M.source};
      HardyVector psi = to_hardy(v, l2view);
      const cplx lam = values[src];
      HardyVector res = apply_operator(M.source, psi);
      for (std::size_t i = 0; i < res.size(); ++i) res[i] -= lam * psi[i];
      d.pairs.push_back({lam, std::move(psi), mult, cluster[q], l2_norm(res), trusted[src]});
    }
    r = e;
  }
  return d;
}

SelfAdjointReport selfadjoint_defect(const PeriodicOperator& L, int N) {
  const auto G = assemble(L, Basis::L2, N);
  const double fro = G.matrix.norm();
  const double defect = fro == 0.0 ? 0.0 : (G.matrix - G.matrix.adjoint()).norm() / fro;
  const CMatrix H = 0.5 * (G.matrix + G.matrix.adjoint());
  const double rq = Eigen::SelfAdjointEigenSolver<CMatrix>(H, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  return {defect, rq};
}

WeylBounds weyl_bounds(const SpectralDecomposition& d, int m_max) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  int used = 0;
  for (int m = 1; m <= m_max && m < static_cast<int>(d.pairs.size()); ++m) {
    if (!d.pairs[static_cast<std::size_t>(m)].trusted) break;
    const double r = d.pairs[static_cast<std::size_t>(m)].lambda.real() / (static_cast<double>(m) * m);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    used = m;
  }
  const bool pass = used > 0 && std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && lo <= hi;
  return {lo, hi, used, pass};
}

std::vector<GrowthSample> growth_samples(const SpectralDecomposition& d, double height, GridSpec grid,
                                         int max_index) {
  std::vector<cplx> pts;
  for (int b = 0; b < grid.ny; ++b) {
    const double y = grid.ny == 1 ? 0.0 : -height + 2.0 * height * b / (grid.ny - 1);
    for (int a = 0; a < grid.nx; ++a) pts.emplace_back(kTwoPi * a / grid.nx, y);
  }
  std::vector<GrowthSample> out;
  const int limit = std::min<int>(max_index, static_cast<int>(d.pairs.size()));
  int r = 0;
  while (r < limit) {
    int e = r;
    while (e < static_cast<int>(d.pairs.size()) && d.pairs[e].cluster == d.pairs[r].cluster) ++e;
    std::vector<double> acc(pts.size(), 0.0);
    double lam = 0.0;
    for (int q = r; q < e; ++q) {
      lam += std::abs(d.pairs[q].lambda) / (e - r);
      for (std::size_t p = 0; p < pts.size(); ++p) acc[p] += evaluate_closed(d.pairs[q].psi, pts[p]).squaredNorm();
    }
    out.push_back({d.pairs[r].cluster, std::sqrt(lam), 0.5 * std::log(*std::max_element(acc.begin(), acc.end()))});
    r = e;
  }
  return out;
}

GrowthFit growth_fit(const std::vector<GrowthSample>& s) {
  if (s.empty()) throw ConfigError("growth_fit needs at least one sample");
  double mx = 0.0, my = 0.0;
  for (const auto& g : s) mx += g.sqrt_lambda, my += g.log_max;
  mx /= s.size();
  my /= s.size();
  double sxx = 0.0, sxy = 0.0;
  for (const auto& g : s) {
    sxx += (g.sqrt_lambda - mx) * (g.sqrt_lambda - mx);
    sxy += (g.sqrt_lambda - mx) * (g.log_max - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double a = -std::numeric_limits<double>::infinity();
  for (const auto& g : s) a = std::max(a, g.log_max - slope * g.sqrt_lambda);
  GrowthFit fit{std::exp(a), slope, 0.0, static_cast<int>(s.size())};
  fit.max_excess = envelope_excess(fit, s);
  return fit;
}

double envelope_excess(const GrowthFit& fit, const std::vector<GrowthSample>& s) {
  double e = -std::numeric_limits<double>::infinity();
  for (const auto& g : s) e = std::max(e, g.log_max - std::log(fit.C1) - fit.C2 * g.sqrt_lambda);
  return e;
}

SizeComparison size_comparison(const PeriodicOperator& L, int N, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto& dom = L.domain();
  auto ref = PeriodicOperator::standard(CoefficientMatrix::identity(dom, L.size(), -1.0),
                                        CoefficientMatrix(dom, L.size(), 0), CoefficientMatrix::identity(dom, L.size()));
  SizeComparison out{std::numeric_limits<double>::infinity(), 0.0, samples};
  for (int s = 0; s < samples; ++s) {
    HardyVector f;
    for (int i = 0; i < L.size(); ++i) {
      HardyFunction c(dom, N);
      for (int n = -N; n <= N; ++n) c.at(n) = cplx{g(rng), g(rng)} / (1.0 + n * n);
      f.push_back(std::move(c));
    }
    const double r = l2_norm(apply_operator(ref, f)) / l2_norm(apply_operator(L, f));
    out.min_ratio = std::min(out.min_ratio, r);
    out.max_ratio = std::max(out.max_ratio, r);
  }
  return out;
}

namespace {
std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace

void write_spectrum_csv(std::ostream& out, const SpectralDecomposition& d, const std::string& config_hash,
                        const std::string& source) {
  out << "index,re_lambda,im_lambda,multiplicity,residual,trusted";
  if (!source.empty()) out << ",source";
  out << ",config_hash\n";
  for (std::size_t k = 0; k < d.pairs.size(); ++k) {
    const auto& p = d.pairs[k];
    out << k << ',' << fmt(p.lambda.real()) << ',' << fmt(p.lambda.imag()) << ',' << p.multiplicity << ','
        << fmt(p.residual) << ',' << (p.trusted ? 1 : 0);
    if (!source.empty()) out << ',' << source;
    out << ',' << config_hash << '\n';
  }
}

}  // namespace stripspec
