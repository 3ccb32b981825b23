#pragma once

// Zeros of the Floquet determinant d(lambda) inside a rectangle, counted by the
// argument principle on recursively bisected cells and polished afterwards.

#include <iosfwd>
#include <string>
#include <vector>

#include "stripspec/monodromy.hpp"

namespace stripspec {

struct Rectangle {
  double re0, re1, im0, im1;
  cplx center() const { return {0.5 * (re0 + re1), 0.5 * (im0 + im1)}; }
  bool contains(cplx z, double margin = 0.0) const {
    return z.real() >= re0 - margin && z.real() <= re1 + margin && z.imag() >= im0 - margin && z.imag() <= im1 + margin;
  }
  double diameter() const { return std::hypot(re1 - re0, im1 - im0); }
};

struct LocateOptions {
  double tol = 1e-10;             // Newton stops once |d| < tol and the step stalls
  double boundary_floor = 1e-8;   // |d| below this on an edge counts as a zero on the boundary
  int max_depth = 40;
  int max_dilations = 3;
  double phase_step = 0.4;        // max arg change between neighbouring edge samples
  OdeOptions ode{1e-12, 1e-14, 2'000'000};
};

struct LocatedEigenvalue {
  cplx lambda;
  int multiplicity;  // from the winding count
  double abs_det;
  int cell;
};

struct WindingCell {
  int id;
  int parent;
  int depth;
  Rectangle rect;
  int count;
};

struct ScanPoint {
  cplx lambda;
  double abs_det;
  int cell;  // first cell whose boundary needed this point
};

struct LocateResult {
  std::vector<LocatedEigenvalue> eigenvalues;  // sorted by real part, then imaginary part
  int total_count = 0;
  Rectangle searched{};                        // after any dilation
  std::vector<WindingCell> cells;
  std::vector<ScanPoint> scan;
  bool conserved = true;                       // children counts always summed to the parent count

  /// Eigenvalues repeated by multiplicity.
  std::vector<cplx> expanded() const;
};

/// Throws BudgetError past max_depth and NumericalError when the boundary
/// still meets a zero after dilation.
LocateResult locate_eigenvalues(const PeriodicOperator& L, const Rectangle& rect, const LocateOptions& opt = {});

void write_scan_csv(std::ostream& out, const LocateResult& r, const std::string& config_hash);
/// Eigenvalue list in the spectrum table layout with source "monodromy".
void write_located_csv(std::ostream& out, const LocateResult& r, const std::string& config_hash);

}  // namespace stripspec
