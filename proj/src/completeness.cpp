#include "stripspec/completeness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <tuple>
#include <unordered_map>

#include "stripspec/error.hpp"

namespace stripspec {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// 8-point Gauss-Legendre on [-1, 1].
constexpr double kGx[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
constexpr double kGw[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <class F>
cplx panel_sum(const F& f, int panels) {
  cplx s = 0;
  const double h = 1.0 / panels;
  for (int p = 0; p < panels; ++p) {
    const double m = (p + 0.5) * h;
    for (int k = 0; k < 4; ++k) {
      const double d = 0.5 * h * kGx[k];
      s += kGw[k] * (f(m - d) + f(m + d));
    }
  }
  return 0.5 * h * s;
}

double separation(cplx a, cplx b) {
  const cplx d = a - b;
  return std::abs(cplx(std::remainder(d.real(), kTwoPi), d.imag()));
}

}  // namespace

ConformalMap::ConformalMap(HardyFunction p1) : domain_(p1.domain()), order_(p1.order()) {
  coeffs_.assign(p1.coeffs().begin(), p1.coeffs().end());
  const double T = domain_.half_height();
  double pmax = 0.0, pmin = std::numeric_limits<double>::infinity();
  cplx where{};
  for (int i = 0; i < 256; ++i)
    for (int j = 0; j < 65; ++j) {
      const cplx z(kTwoPi * i / 256, -T + 2 * T * j / 64);
      const double v = std::abs(this->p1(z));
      pmax = std::max(pmax, v);
      if (v < pmin) pmin = v, where = z;
    }
  if (!(pmin > 1e-12 * pmax)) {
    throw DomainError("p1 vanishes near z = (" + std::to_string(where.real()) + ", " + std::to_string(where.imag()) +
                      ") on the closed strip");
  }
  // 1/p1 is periodic and analytic, so the trapezoid rule converges geometrically
  cplx prev{};
  for (int n = 64;; n *= 2) {
    cplx s{};
    for (int j = 0; j < n; ++j) s += 1.0 / this->p1(kTwoPi * j / n);
    s *= kTwoPi / n;
    if (n > 64 && std::abs(s - prev) <= 1e-15 * std::abs(s)) {
      c1_ = kTwoPi / s;
      break;
    }
    if (n > (1 << 20)) throw NumericalError("mean of 1/p1 did not converge");
    prev = s;
  }
}

ConformalMap ConformalMap::exp_cos(double a, StripDomain dom) {
  ConformalMap m;
  m.domain_ = dom;
  m.closed_form_ = true;
  m.a_ = a;
  m.i0_ = std::cyl_bessel_i(0.0, a);
  // I_{n-1}/I_n = 2n/a + I_{n+1}/I_n, run downward from far beyond the used range
  const int top = 1200;
  m.ratios_.assign(top + 2, 0.0);
  if (a != 0.0) {
    double r = 0.0;
    for (int n = top; n >= 1; --n) {
      r = 1.0 / (2.0 * n / a + r);
      m.ratios_[static_cast<std::size_t>(n)] = r;
    }
  }
  return m;
}

cplx ConformalMap::p1(cplx z) const {
  if (closed_form_) return i0_ * std::exp(a_ * std::cos(z));
  const cplx q = std::exp(kI * z);
  const cplx qi = 1.0 / q;
  cplx hi = 0, lo = 0;
  for (int n = order_; n >= 1; --n) {
    hi = (hi + coeffs_[static_cast<std::size_t>(order_ + n)]) * q;
    lo = (lo + coeffs_[static_cast<std::size_t>(order_ - n)]) * qi;
  }
  return coeffs_[static_cast<std::size_t>(order_)] + hi + lo;
}

cplx ConformalMap::derivative(cplx z) const {
  if (closed_form_) return std::exp(-a_ * std::cos(z)) / i0_;
  return c1_ / p1(z);
}

cplx ConformalMap::operator()(cplx z) const {
  if (closed_form_) {
    const cplx q = std::exp(kI * z), qi = 1.0 / q;
    const double growth = std::max(std::abs(q), std::abs(qi));
    cplx A = 1.0, B = 1.0, s = 0.0;
    for (int n = 1; n + 1 < static_cast<int>(ratios_.size()); ++n) {
      const double r = ratios_[static_cast<std::size_t>(n)];
      A *= r * q;
      B *= r * qi;
      const cplx term = (A - B) / (kI * static_cast<double>(n));
      s += (n % 2) ? -term : term;
      if (n > 4 && std::abs(A) + std::abs(B) < 1e-18 * (std::abs(s) + std::abs(z) + 1.0) &&
          ratios_[static_cast<std::size_t>(n + 1)] * growth < 0.5)
        break;
    }
    return z + s;
  }
  auto f = [&](double t) {
    const cplx p = p1(t * z);
    if (std::abs(p) == 0.0) throw DomainError("p1 vanishes on the integration path");
    return 1.0 / p;
  };
  cplx prev = panel_sum(f, 2);
  for (int panels = 4; panels <= 8192; panels *= 2) {
    const cplx s = panel_sum(f, panels);
    if (std::abs(s - prev) <= 1e-14 * std::max(1.0, std::abs(s))) return c1_ * z * s;
    prev = s;
  }
  throw NumericalError("path integral of 1/p1 did not converge");
}

double ConformalMap::period_defect() const {
  const double T = domain_.half_height();
  double d = 0.0;
  for (cplx z : {cplx(0.3, 0.2 * T), cplx(1.7, -0.5 * T), cplx(4.0, 0.9 * T)})
  {
    const cplx w = (*this)(z);
    d = std::max(d, std::abs((*this)(z + kTwoPi) - w - kTwoPi) / std::max(1.0, std::abs(w)));
  }
  return d;
}

InjectivityCertificate injectivity_certificate(const ConformalMap& map, double T, GridSpec grid) {
  InjectivityCertificate c{std::numeric_limits<double>::infinity(), {}, false};
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j) {
      const cplx z(kTwoPi * i / grid.nx, grid.ny == 1 ? 0.0 : -T + 2 * T * j / (grid.ny - 1));
      const double v = map.derivative(z).real();
      if (v < c.min_re) c.min_re = v, c.argmin = z;
    }
  c.pass = c.min_re > 0.0;
  return c;
}

CollisionSearch collision_search(const ConformalMap& map, double T, GridSpec grid, double polish_tol) {
  CollisionSearch out;
  out.grid = grid;
  out.T = T;

  std::vector<cplx> pts;
  const double dy = 2 * T / grid.ny;
  bool has_axis = false;
  for (int j = 0; j < grid.ny; ++j) {
    const double y = -T + (j + 0.5) * dy;
    has_axis = has_axis || std::abs(y) < 1e-14;
    for (int i = 0; i < grid.nx; ++i) pts.emplace_back(kTwoPi * i / grid.nx, y);
  }
  if (!has_axis)
    for (int i = 0; i < grid.nx; ++i) pts.emplace_back(kTwoPi * i / grid.nx, 0.0);

  const std::size_t n = pts.size();
  std::vector<cplx> W(n);
  std::vector<double> rho(n);
  const double d = std::hypot(kTwoPi / grid.nx, dy);
  for (std::size_t s = 0; s < n; ++s) {
    W[s] = map(pts[s]);
    rho[s] = 1.5 * std::abs(map.derivative(pts[s])) * d;
  }
  std::vector<double> sorted = rho;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(n / 2), sorted.end());
  const double h = std::max(sorted[n / 2], 1e-300);

  auto cell = [h](double v) { return static_cast<long long>(std::floor(v / h)); };
  auto key = [](long long a, long long b) { return (a << 32) ^ (b & 0xffffffffLL); };
  std::unordered_map<long long, std::vector<std::size_t>> buckets;
  for (std::size_t a = 0; a < n; ++a) buckets[key(cell(W[a].real()), cell(W[a].imag()))].push_back(a);

  // fallback for wide search discs
  std::vector<std::size_t> by_re(n);
  for (std::size_t a = 0; a < n; ++a) by_re[a] = a;
  std::sort(by_re.begin(), by_re.end(), [&](std::size_t x, std::size_t y) { return W[x].real() < W[y].real(); });

  // (anchor, k) -> seeds; every seed gets a score |W_s - t| / rho_s
  struct Cand {
    std::size_t a;
    int k;
    double score;
    std::size_t s;
  };
  std::vector<Cand> cands;
  auto take = [&](std::size_t a, std::size_t s, int k, cplx t, double r) {
    const double e = std::abs(W[a] - t);
    if (e <= r && separation(pts[a], pts[s]) >= 0.05) cands.push_back({a, k, e / r, s});
  };
  for (std::size_t s = 0; s < n; ++s) {
    for (int k = -2; k <= 2; ++k) {
      // anchors a with w(z_a) - w(z_s) = 2 pi k
      const cplx t = W[s] + kTwoPi * k;
      const double r = rho[s];
      const long long x0 = cell(t.real() - r), x1 = cell(t.real() + r);
      const long long y0 = cell(t.imag() - r), y1 = cell(t.imag() + r);
      if ((x1 - x0 + 1) * (y1 - y0 + 1) > 400) {
        auto it = std::lower_bound(by_re.begin(), by_re.end(), t.real() - r,
                                   [&](std::size_t a, double v) { return W[a].real() < v; });
        for (; it != by_re.end() && W[*it].real() <= t.real() + r; ++it) take(*it, s, k, t, r);
        continue;
      }
      for (long long cx = x0; cx <= x1; ++cx)
        for (long long cy = y0; cy <= y1; ++cy) {
          auto it = buckets.find(key(cx, cy));
          if (it == buckets.end()) continue;
          for (std::size_t a : it->second) take(a, s, k, t, r);
        }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    return std::tie(x.a, x.k, x.score, x.s) < std::tie(y.a, y.k, y.score, y.s);
  });
  out.candidates = static_cast<long>(cands.size());

  const auto rank = [](const CollisionWitness& x) {
    return std::make_tuple(std::abs(x.im_w), x.residual, x.z1.real(), x.z1.imag(), x.z2.real(), x.z2.imag());
  };
  // seeds within this distance of a seed already polished for the same anchor
  // lead to the same root
  const double near = 2.0 * d;
  std::vector<cplx> done;
  for (std::size_t g = 0; g < cands.size();) {
    std::size_t e = g;
    while (e < cands.size() && cands[e].a == cands[g].a && cands[e].k == cands[g].k) ++e;
    const std::size_t a = cands[g].a;
    const int k = cands[g].k;
    done.clear();
    for (std::size_t c = g; c < e; ++c) {
      const cplx seed = pts[cands[c].s];
      bool dup = false;
      for (cplx q : done) dup = dup || separation(q, seed) < near;
      if (dup) continue;
      done.push_back(seed);
      ++out.polished;
      const cplx target = W[a] - kTwoPi * k;
      cplx z = seed;
      bool ok = true;
      for (int it = 0; it < 40; ++it) {
        const cplx step = (map(z) - target) / map.derivative(z);
        z -= step;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || std::abs(z.imag()) > T + 1.0) {
          ok = false;
          break;
        }
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) break;
      }
      if (!ok) continue;
      const double m = std::floor(z.real() / kTwoPi);
      z -= kTwoPi * m;
      const int k2 = k + static_cast<int>(m);
      done.push_back(z);
      if (!(std::abs(z.imag()) < T)) continue;
      const double sep = separation(pts[a], z);
      if (sep < 0.05) continue;
      const double res = std::abs(W[a] - map(z) - kTwoPi * k2);
      if (res > polish_tol * std::max(1.0, std::abs(W[a]))) continue;
      const CollisionWitness w{pts[a], z, k2, res, sep, W[a].imag()};
      if (!out.witness || rank(w) < rank(*out.witness)) out.witness = w;
    }
    g = e;
  }
  return out;
}

std::optional<RefinedThreshold> refine_threshold(const ConformalMap& map, const CollisionWitness& wit) {
  const int k = wit.k;
  cplx z2 = wit.z2;
  // z2 on the collision curve through z1, continued from the last solution
  auto track = [&](cplx z1) -> bool {
    const cplx target = map(z1) - kTwoPi * k;
    cplx z = z2;
    for (int it = 0; it < 60; ++it) {
      const cplx step = (map(z) - target) / map.derivative(z);
      z -= step;
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) {
        if (std::abs(z - z2) > 0.5) return false;
        z2 = z;
        return true;
      }
    }
    return false;
  };
  const double sgn = wit.z1.imag() < 0 ? -1.0 : 1.0;
  // height u(x) at which |Im z2(x + i sgn u)| = u
  auto height = [&](double x, double u0) -> std::optional<double> {
    auto phi = [&](double u) -> std::optional<double> {
      if (!track(cplx(x, sgn * u))) return std::nullopt;
      return std::abs(z2.imag()) - u;
    };
    double a = u0, b = u0 + 1e-4;
    auto fa = phi(a), fb = phi(b);
    for (int it = 0; it < 60 && fa && fb; ++it) {
      if (std::abs(*fb) < 1e-14 || std::abs(b - a) < 1e-15) return b;
      const double c = b - *fb * (b - a) / (*fb - *fa);
      if (!std::isfinite(c) || c <= 0.0) return std::nullopt;
      a = b, fa = fb;
      b = c, fb = phi(b);
    }
    return std::nullopt;
  };

  double x0 = wit.z1.real();
  double u_start = std::max(std::abs(wit.z1.imag()), std::abs(wit.z2.imag()));
  auto f0 = height(x0, u_start);
  if (!f0) return std::nullopt;
  // bracket a minimum of u(x) by walking downhill, then golden section
  double h = 0.02;
  auto fr = height(x0 + h, *f0);
  if (!fr) return std::nullopt;
  if (*fr > *f0) {
    h = -h;
    fr = height(x0 + h, *f0);
    if (!fr) return std::nullopt;
  }
  double xa = x0 - h, xb = x0, xc = x0 + h;
  double fb = *f0, fc = *fr;
  for (int it = 0; it < 200 && fc < fb; ++it) {
    xa = xb;
    xb = xc, fb = fc;
    xc = xb + h;
    auto f = height(xc, fb);
    if (!f) return std::nullopt;
    fc = *f;
  }
  if (fc < fb) return std::nullopt;
  double lo = std::min(xa, xc), hi = std::max(xa, xc);
  const double g = 0.5 * (3.0 - std::sqrt(5.0));
  double x1 = lo + g * (hi - lo), x2 = hi - g * (hi - lo);
  auto h1 = height(x1, fb), h2 = height(x2, fb);
  for (int it = 0; it < 200 && h1 && h2 && hi - lo > 1e-10; ++it) {
    if (*h1 < *h2) {
      hi = x2, x2 = x1, h2 = h1;
      x1 = lo + g * (hi - lo);
      h1 = height(x1, *h2);
    } else {
      lo = x1, x1 = x2, h1 = h2;
      x2 = hi - g * (hi - lo);
      h2 = height(x2, *h1);
    }
  }
  if (!h1 || !h2) return std::nullopt;
  const double x = 0.5 * (lo + hi);
  auto u = height(x, *h1);
  if (!u) return std::nullopt;
  const cplx z1(x, sgn * *u);
  cplx zz = z2;
  const double m = std::floor(zz.real() / kTwoPi);
  zz -= kTwoPi * m;
  const int k2 = k + static_cast<int>(m);
  const cplx w1 = map(z1);
  RefinedThreshold r;
  r.T = *u;
  r.witness = {z1, zz, k2, std::abs(w1 - map(zz) - kTwoPi * k2), separation(z1, zz), w1.imag()};
  r.converged = hi - lo <= 1e-10 && r.witness.separation >= 0.05;
  return r;
}

ThresholdScan threshold_scan(const ConformalMap& map, double T_min, double T_max, int steps, GridSpec grid,
                             double resolution, double polish_tol) {
  if (steps < 2 || !(T_max > T_min) || !(T_min > 0)) throw ConfigError("threshold ladder needs 0 < T_min < T_max, steps >= 2");
  ThresholdScan out;
  out.grid = grid;
  out.resolution = resolution;
  auto probe = [&](double T) {
    const auto c = collision_search(map, T, grid, polish_tol);
    const auto cert = injectivity_certificate(map, T);
    out.rows.push_back({T, c.witness.has_value(), c.witness, cert.pass});
    return c.witness.has_value();
  };
  double lo = 0.0, hi = 0.0;
  bool found = false;
  for (int i = 0; i < steps; ++i) {
    const double T = T_min + (T_max - T_min) * i / (steps - 1);
    if (probe(T)) {
      hi = T;
      found = true;
      break;
    }
    lo = T;
  }
  if (!found) return out;
  if (lo > 0.0) {
    while (hi - lo > resolution) {
      const double mid = 0.5 * (lo + hi);
      (probe(mid) ? hi : lo) = mid;
    }
  }
  out.T_star = hi;
  for (const auto& row : out.rows)
    if (row.found && row.T == hi) out.refined = refine_threshold(map, *row.witness);
  return out;
}

SpanResiduals span_residuals_gram(const CMatrix& G, const CMatrix& B, const std::vector<double>& test_norms,
                                  double cutoff) {
  const int M = static_cast<int>(G.rows());
  const int J = static_cast<int>(B.cols());
  SpanResiduals out;
  out.r.assign(static_cast<std::size_t>(J), std::vector<double>(static_cast<std::size_t>(M)));
  for (int m = 1; m <= M; ++m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(G.topLeftCorner(m, m));
    const auto& ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    int rank = 0;
    for (int k = 0; k < m; ++k) rank += ev(k) > cutoff * top;
    out.rank.push_back(rank);
    for (int j = 0; j < J; ++j) {
      const CVector c = es.eigenvectors().adjoint() * B.col(j).head(m);
      double proj = 0.0;
      for (int k = 0; k < m; ++k)
        if (ev(k) > cutoff * top) proj += std::norm(c(k)) / ev(k);
      const double t2 = test_norms[static_cast<std::size_t>(j)] * test_norms[static_cast<std::size_t>(j)];
      out.r[static_cast<std::size_t>(j)][static_cast<std::size_t>(m - 1)] = std::sqrt(std::max(0.0, t2 - proj));
    }
  }
  for (const auto& row : out.r)
    for (std::size_t m = 1; m < row.size(); ++m) out.max_increase = std::max(out.max_increase, row[m] - row[m - 1]);
  return out;
}

SpanResiduals span_residuals(const std::vector<HardyVector>& psi, const std::vector<HardyVector>& tests, double cutoff) {
  if (psi.empty()) throw ConfigError("span residuals need at least one function");
  const std::size_t K = psi.front().size();
  const StripDomain dom = psi.front().front().domain();
  int order = 0;
  for (const auto* set : {&psi, &tests})
    for (const auto& v : *set) {
      if (v.size() != K) throw ConfigError("span residuals: component counts differ");
      for (const auto& f : v) {
        if (!(f.domain() == dom)) throw ConfigError("span residuals: functions live on different strips");
        order = std::max(order, f.order());
      }
    }
  // isometric coordinates: c_n sqrt(cosh 2nT), component-major
  const int width = 2 * order + 1;
  std::vector<double> root(static_cast<std::size_t>(width));
  for (int n = -order; n <= order; ++n) root[static_cast<std::size_t>(n + order)] = std::sqrt(hardy_weight(n, dom.half_height()));
  auto coords = [&](const HardyVector& v) {
    CVector x(static_cast<Eigen::Index>(K) * width);
    for (std::size_t k = 0; k < K; ++k)
      for (int n = -order; n <= order; ++n)
        x(static_cast<Eigen::Index>(k) * width + n + order) = v[k][n] * root[static_cast<std::size_t>(n + order)];
    return x;
  };

  const int M = static_cast<int>(psi.size()), J = static_cast<int>(tests.size());
  SpanResiduals out;
  out.r.assign(static_cast<std::size_t>(J), std::vector<double>(static_cast<std::size_t>(M)));
  std::vector<CVector> t;
  for (const auto& v : tests) t.push_back(coords(v));
  std::vector<CVector> q;  // orthonormal basis of the span so far
  double top = 0.0;
  for (int m = 0; m < M; ++m) {
    CVector v = coords(psi[static_cast<std::size_t>(m)]);
    top = std::max(top, v.squaredNorm());
    // classical Gram-Schmidt applied twice
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : q) v -= b.dot(v) * b;
    const double rest = v.squaredNorm();
    if (rest > cutoff * top) {
      q.push_back(v / std::sqrt(rest));
      for (auto& x : t) {
        x -= q.back().dot(x) * q.back();
        x -= q.back().dot(x) * q.back();
      }
    }
    out.rank.push_back(static_cast<int>(q.size()));
    for (int j = 0; j < J; ++j) out.r[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] = t[static_cast<std::size_t>(j)].norm();
  }
  for (const auto& row : out.r)
    for (std::size_t m = 1; m < row.size(); ++m) out.max_increase = std::max(out.max_increase, row[m] - row[m - 1]);
  return out;
}

SpanResiduals span_residuals(const std::vector<HardyFunction>& psi, const std::vector<HardyFunction>& tests,
                             double cutoff) {
  std::vector<HardyVector> p, t;
  for (const auto& f : psi) p.push_back({f});
  for (const auto& f : tests) t.push_back({f});
  return span_residuals(p, t, cutoff);
}

int eigen_index(int m) { return m % 2 ? (m + 1) / 2 : -(m / 2); }

WitnessSpanCheck witness_span_check(const ConformalMap& map, const CollisionWitness& wit, double T, int M_max,
                                    int n_max) {
  WitnessSpanCheck out{};
  out.T = T;
  StripDomain dom(T);

  const int Nk = static_cast<int>(690.0 / (2.0 * T));
  const HardyFunction h = eval_kernel(wit.z1, dom, Nk).g - eval_kernel(wit.z2, dom, Nk).g;
  out.h_norm = h_norm(h);

  const cplx w1 = map(wit.z1), w2 = map(wit.z2);
  std::vector<int> ns;
  for (int m = 0; m < M_max; ++m) ns.push_back(eigen_index(m));

  // Gram matrix of e^{i n w} on the boundary lines, each function scaled by its
  // boundary maximum so that nothing overflows
  CMatrix G, Gprev;
  std::vector<double> scale(static_cast<std::size_t>(M_max));
  for (int P = 1024;; P *= 2) {
    std::vector<cplx> lo(static_cast<std::size_t>(P)), hi(static_cast<std::size_t>(P));
    for (int j = 0; j < P; ++j) {
      lo[static_cast<std::size_t>(j)] = map(cplx(kTwoPi * j / P, -T));
      hi[static_cast<std::size_t>(j)] = map(cplx(kTwoPi * j / P, T));
    }
    CMatrix V(2 * P, M_max);
    for (int m = 0; m < M_max; ++m) {
      const double n = ns[static_cast<std::size_t>(m)];
      double s = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < P; ++j) s = std::max({s, -n * lo[static_cast<std::size_t>(j)].imag(), -n * hi[static_cast<std::size_t>(j)].imag()});
      scale[static_cast<std::size_t>(m)] = s;
      for (int j = 0; j < P; ++j) {
        V(j, m) = std::exp(kI * n * lo[static_cast<std::size_t>(j)] - s);
        V(P + j, m) = std::exp(kI * n * hi[static_cast<std::size_t>(j)] - s);
      }
    }
    G = (V.adjoint() * V) / (2.0 * P);
    if (Gprev.size() && (G - Gprev).cwiseAbs().maxCoeff() <= 1e-13 * G.cwiseAbs().maxCoeff()) {
      out.quadrature_points = P;
      break;
    }
    if (P >= (1 << 16)) throw NumericalError("boundary Gram matrix of e^{i n w} did not converge");
    Gprev = G;
  }

  CMatrix B(M_max, 1);
  out.annihilator = 0.0;
  for (int m = 0; m < M_max; ++m) {
    const double n = ns[static_cast<std::size_t>(m)];
    const cplx diff = std::exp(kI * n * w1) - std::exp(kI * n * w2);
    out.annihilator = std::max(out.annihilator, std::abs(diff) / out.h_norm);
    B(m, 0) = std::conj(diff) * std::exp(-scale[static_cast<std::size_t>(m)]);
  }
  const auto res = span_residuals_gram(G, B, {out.h_norm});
  out.residuals = res.r[0];
  out.rank = res.rank.back();
  out.max_deviation = 0.0;
  for (double r : out.residuals) out.max_deviation = std::max(out.max_deviation, std::abs(r - out.h_norm) / out.h_norm);

  out.nosep = 0.0;
  for (int n = -n_max; n <= n_max; ++n)
    out.nosep = std::max(out.nosep, std::abs(std::exp(kI * double(n) * w1) - std::exp(kI * double(n) * w2)));
  return out;
}

SimilarityCheck similarity_example_check(const HardyFunction& phi, int n_range, int N) {
  const StripDomain dom = phi.domain();
  HardyFunction a0 = derivative(phi);
  a0 *= -kI;
  const auto L = PeriodicOperator::first_order(CoefficientMatrix::identity(dom, 1), CoefficientMatrix::scalar(a0, 1));
  const auto d = spectrum(assemble(L, Basis::H2, N), 2 * n_range + 5);
  SimilarityCheck out{0.0, 0.0, N};
  for (int n = -n_range; n <= n_range; ++n) {
    const cplx want(0.0, n);
    const Eigenpair* best = nullptr;
    for (const auto& p : d.pairs)
      if (!best || std::abs(p.lambda - want) < std::abs(best->lambda - want)) best = &p;
    out.max_eig_error = std::max(out.max_eig_error, std::abs(best->lambda - want));
    const HardyFunction ref = from_boundary_samples(
        [&](cplx z) { return std::exp(kI * evaluate_closed(phi, z).value + kI * double(n) * z); }, dom, N);
    const HardyFunction& psi = best->psi[0];
    const HardyFunction a = (1.0 / h_norm(psi)) * psi.resized(N);
    const HardyFunction b = (1.0 / h_norm(ref)) * ref;
    out.max_sine = std::max(out.max_sine, h_norm(b - h_inner(b, a) * a));
  }
  return out;
}

void write_atlas_csv(std::ostream& out, double a, const ThresholdScan& scan, const std::string& config_hash) {
  out << "a,T,collision_found,re_z1,im_z1,re_z2,im_z2,polish_residual,config_hash\n";
  for (const auto& row : scan.rows) {
    out << fmt(a) << ',' << fmt(row.T) << ',' << (row.found ? 1 : 0) << ',';
    if (row.witness) {
      const auto& w = *row.witness;
      out << fmt(w.z1.real()) << ',' << fmt(w.z1.imag()) << ',' << fmt(w.z2.real()) << ',' << fmt(w.z2.imag()) << ','
          << fmt(w.residual);
    } else {
      out << ",,,,";
    }
    out << ',' << config_hash << '\n';
  }
}

void write_residual_csv(std::ostream& out, const SpanResiduals& r, const std::string& config_hash) {
  out << "M";
  for (std::size_t j = 0; j < r.r.size(); ++j) out << ",r_" << j + 1;
  out << ",config_hash\n";
  const std::size_t M = r.r.empty() ? 0 : r.r[0].size();
  for (std::size_t m = 0; m < M; ++m) {
    out << m + 1;
    for (const auto& row : r.r) out << ',' << fmt(row[m]);
    out << ',' << config_hash << '\n';
  }
}

}  // namespace stripspec
