#include "stripspec/locate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <ostream>
#include <tuple>

#include "stripspec/error.hpp"
#include "stripspec/galerkin.hpp"

namespace stripspec {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct EdgeScan {
  double darg = 0.0;
  double min_abs = std::numeric_limits<double>::infinity();
};

class Locator {
 public:
  Locator(const PeriodicOperator& L, const LocateOptions& opt, LocateResult& out) : L_(L), opt_(opt), out_(out) {}

  cplx det(cplx z, int cell) {
    const auto key = std::make_pair(z.real(), z.imag());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const cplx d = floquet_determinant(L_, z, opt_.ode);
    cache_.emplace(key, d);
    out_.scan.push_back({z, std::abs(d), cell});
    return d;
  }

  cplx det_uncached(cplx z) const { return floquet_determinant(L_, z, opt_.ode); }

  // Points are generated by repeated midpoints only, so edges shared between
  // neighbouring cells reuse the same cached samples.
  EdgeScan edge(cplx p, cplx q, int cell, double phase_step) {
    EdgeScan s;
    const cplx dp = det(p, cell), dq = det(q, cell);
    s.min_abs = std::min(std::abs(dp), std::abs(dq));
    walk(p, q, dp, dq, 0, cell, phase_step, s);
    return s;
  }

  EdgeScan boundary(const Rectangle& r, int cell, double phase_step) {
    const cplx a(r.re0, r.im0), b(r.re1, r.im0), c(r.re1, r.im1), d(r.re0, r.im1);
    EdgeScan total;
    for (auto [p, q, sign] : {std::tuple{a, b, 1.0}, {b, c, 1.0}, {d, c, -1.0}, {a, d, -1.0}}) {
      const EdgeScan e = edge(p, q, cell, phase_step);
      total.darg += sign * e.darg;
      total.min_abs = std::min(total.min_abs, e.min_abs);
    }
    return total;
  }

  int count(const Rectangle& r, int cell, double* min_abs = nullptr) {
    double step = opt_.phase_step;
    for (int attempt = 0; attempt < 4; ++attempt, step *= 0.5) {
      const EdgeScan s = boundary(r, cell, step);
      if (min_abs) *min_abs = s.min_abs;
      const double w = s.darg / kTwoPi;
      const long n = std::lround(w);
      if (std::abs(w - n) < 0.2) return static_cast<int>(n);
    }
    throw NumericalError("winding number of the Floquet determinant did not settle to an integer");
  }

 private:
  // A segment is accepted when the midpoint agrees with linear interpolation
  // and the phase moves little, so zeros touching the edge get resolved down
  // to the boundary floor instead of slipping between samples.
  void walk(cplx p, cplx q, cplx dp, cplx dq, int depth, int cell, double phase_step, EdgeScan& s) {
    const cplx m = 0.5 * (p + q);
    const cplx dm = det(m, cell);
    s.min_abs = std::min(s.min_abs, std::abs(dm));
    if (s.min_abs < opt_.boundary_floor) return;  // zero on this edge; the caller moves the edge
    const double a1 = std::arg(dm / dp), a2 = std::arg(dq / dm);
    const bool fine = depth >= 2 && std::abs(a1) < phase_step && std::abs(a2) < phase_step &&
                      std::abs(dm - 0.5 * (dp + dq)) <= 0.125 * (std::abs(dp) + std::abs(dq));
    if (fine) {
      s.darg += a1 + a2;
      return;
    }
    if (depth >= opt_.max_depth) throw BudgetError("edge sampling exceeded the maximum refinement depth");
    walk(p, m, dp, dm, depth + 1, cell, phase_step, s);
    walk(m, q, dm, dq, depth + 1, cell, phase_step, s);
  }

  const PeriodicOperator& L_;
  const LocateOptions& opt_;
  LocateResult& out_;
  std::map<std::pair<double, double>, cplx> cache_;
};

bool spectrum_less(cplx a, cplx b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  if (std::abs(a.real() - b.real()) > 1e-9 * scale) return a.real() < b.real();
  return a.imag() < b.imag();
}

// Newton on d with a central difference derivative.
cplx newton(const Locator& loc, cplx z, const LocateOptions& opt) {
  for (int it = 0; it < 60; ++it) {
    const double h = 1e-6 * (1.0 + std::abs(z));
    const cplx d = loc.det_uncached(z);
    const cplx dd = (loc.det_uncached(z + h) - loc.det_uncached(z - h)) / (2.0 * h);
    if (dd == cplx{}) break;
    const cplx step = d / dd;
    z -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(z)) || (std::abs(d) < opt.tol && std::abs(step) < 1e-11 * (1.0 + std::abs(z))))
      break;
  }
  return z;
}

// G(z + mu) ~ G(z) + mu G'(z) with G = I - U(2 pi); det of the linear model is
// a polynomial in mu whose roots are the eigenvalues of -G'^{-1} G.
std::vector<cplx> model_steps(const PeriodicOperator& L, cplx z, const OdeOptions& ode) {
  const double h = 1e-6 * (1.0 + std::abs(z));
  const CMatrix U = monodromy_matrix(L, z, ode);
  const CMatrix dU = (monodromy_matrix(L, z + h, ode) - monodromy_matrix(L, z - h, ode)) / (2.0 * h);
  const CMatrix G = CMatrix::Identity(U.rows(), U.cols()) - U;
  const CMatrix M = dU.partialPivLu().solve(G);  // -G'^{-1} G with G' = -U'
  Eigen::ComplexEigenSolver<CMatrix> es(M, false);
  std::vector<cplx> mu(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(mu.begin(), mu.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  return mu;
}

std::vector<cplx> cluster_roots(const PeriodicOperator& L, cplx center, int count, const OdeOptions& ode) {
  const auto mu0 = model_steps(L, center, ode);
  if (static_cast<int>(mu0.size()) < count) return {};
  std::vector<cplx> roots;
  for (int k = 0; k < count; ++k) {
    cplx z = center + mu0[static_cast<std::size_t>(k)];
    for (int it = 0; it < 40; ++it) {
      const cplx step = model_steps(L, z, ode).front();
      z += step;
      if (std::abs(step) < 1e-14 * (1.0 + std::abs(z))) break;
    }
    roots.push_back(z);
  }
  return roots;
}

}  // namespace

std::vector<cplx> LocateResult::expanded() const {
  std::vector<cplx> v;
  for (const auto& e : eigenvalues)
    for (int k = 0; k < e.multiplicity; ++k) v.push_back(e.lambda);
  return v;
}

LocateResult locate_eigenvalues(const PeriodicOperator& L, const Rectangle& rect, const LocateOptions& opt) {
  LocateResult out;
  Locator loc(L, opt, out);

  Rectangle r = rect;
  int total = 0;
  for (int attempt = 0;; ++attempt) {
    double min_abs = 0.0;
    total = loc.count(r, 0, &min_abs);
    if (min_abs >= opt.boundary_floor) break;
    if (attempt >= opt.max_dilations) {
      throw NumericalError("zero of the Floquet determinant on the search boundary after " +
                           std::to_string(opt.max_dilations) + " dilations (|d| = " + std::to_string(min_abs) + ")");
    }
    const cplx c = r.center();
    const double hw = 0.505 * (r.re1 - r.re0), hh = 0.505 * (r.im1 - r.im0);
    r = {c.real() - hw, c.real() + hw, c.imag() - hh, c.imag() + hh};
  }
  out.searched = r;
  out.total_count = total;
  out.cells.push_back({0, -1, 0, r, total});

  std::deque<int> queue;
  if (total > 0) queue.push_back(0);
  while (!queue.empty()) {
    const WindingCell cell = out.cells[static_cast<std::size_t>(queue.front())];
    queue.pop_front();
    const cplx c = cell.rect.center();
    const double scale = 1.0 + std::abs(c);

    bool split = false;
    if (cell.count == 1) {
      const cplx z = newton(loc, c, opt);
      if (cell.rect.contains(z, 1e-9 * scale)) {
        out.eigenvalues.push_back({z, 1, std::abs(loc.det_uncached(z)), cell.id});
      } else {
        split = true;
      }
    } else if (cell.rect.diameter() > 1e-3 * scale) {
      split = true;
    } else {
      const auto roots = cluster_roots(L, c, cell.count, opt.ode);
      bool inside = static_cast<int>(roots.size()) == cell.count;
      for (cplx z : roots) inside = inside && cell.rect.contains(z, 1e-6 * scale);
      if (!inside) {
        split = true;
      } else {
        // coincident roots are one eigenvalue with the winding multiplicity
        std::vector<cplx> rs = roots;
        std::sort(rs.begin(), rs.end(), spectrum_less);
        std::size_t i = 0;
        while (i < rs.size()) {
          std::size_t j = i + 1;
          cplx sum = rs[i];
          while (j < rs.size() && std::abs(rs[j] - rs[i]) <= kClusterTol * std::max(1.0, std::abs(rs[i]))) sum += rs[j++];
          const cplx z = sum / static_cast<double>(j - i);
          out.eigenvalues.push_back({z, static_cast<int>(j - i), std::abs(loc.det_uncached(z)), cell.id});
          i = j;
        }
      }
    }
    if (!split) continue;
    if (cell.depth + 1 > opt.max_depth) throw BudgetError("rectangle subdivision exceeded the maximum depth");

    const bool vertical_cut = (cell.rect.re1 - cell.rect.re0) >= (cell.rect.im1 - cell.rect.im0);
    std::array<Rectangle, 2> kids{};
    bool placed = false;
    for (double frac : {0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65}) {
      const Rectangle& b = cell.rect;
      if (vertical_cut) {
        const double x = frac == 0.5 ? 0.5 * (b.re0 + b.re1) : b.re0 + frac * (b.re1 - b.re0);
        if (loc.edge({x, b.im0}, {x, b.im1}, cell.id, opt.phase_step).min_abs < opt.boundary_floor) continue;
        kids = {Rectangle{b.re0, x, b.im0, b.im1}, Rectangle{x, b.re1, b.im0, b.im1}};
      } else {
        const double y = frac == 0.5 ? 0.5 * (b.im0 + b.im1) : b.im0 + frac * (b.im1 - b.im0);
        if (loc.edge({b.re0, y}, {b.re1, y}, cell.id, opt.phase_step).min_abs < opt.boundary_floor) continue;
        kids = {Rectangle{b.re0, b.re1, b.im0, y}, Rectangle{b.re0, b.re1, y, b.im1}};
      }
      placed = true;
      break;
    }
    if (!placed) throw NumericalError("no zero-free bisection line for a winding cell");

    int sum = 0;
    std::array<int, 2> counts{};
    for (int k = 0; k < 2; ++k) {
      const int id = static_cast<int>(out.cells.size());
      counts[k] = loc.count(kids[k], id);
      sum += counts[k];
      out.cells.push_back({id, cell.id, cell.depth + 1, kids[k], counts[k]});
    }
    if (sum != cell.count) {
      out.conserved = false;
      throw NumericalError("winding counts of subdivided cells do not add up to the parent count");
    }
    for (int k = 0; k < 2; ++k)
      if (counts[k] > 0) queue.push_back(static_cast<int>(out.cells.size()) - 2 + k);
  }

  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
            [](const LocatedEigenvalue& a, const LocatedEigenvalue& b) { return spectrum_less(a.lambda, b.lambda); });
  return out;
}

void write_scan_csv(std::ostream& out, const LocateResult& r, const std::string& config_hash) {
  out << "re_lambda,im_lambda,abs_det,winding_cell_id,config_hash\n";
  for (const auto& p : r.scan) {
    out << fmt(p.lambda.real()) << ',' << fmt(p.lambda.imag()) << ',' << fmt(p.abs_det) << ',' << p.cell << ','
        << config_hash << '\n';
  }
}

void write_located_csv(std::ostream& out, const LocateResult& r, const std::string& config_hash) {
  out << "index,re_lambda,im_lambda,multiplicity,residual,trusted,source,config_hash\n";
  for (std::size_t k = 0; k < r.eigenvalues.size(); ++k) {
    const auto& e = r.eigenvalues[k];
    out << k << ',' << fmt(e.lambda.real()) << ',' << fmt(e.lambda.imag()) << ',' << e.multiplicity << ','
        << fmt(e.abs_det) << ",1,monodromy," << config_hash << '\n';
  }
}

}  // namespace stripspec
