#pragma once

// Change of variables w(z) for first-order operators p(z) D, collision pairs of
// w on the fundamental domain, the width threshold where they appear, and
// Hardy-space distances from test functions to spans of eigenfunctions.

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stripspec/galerkin.hpp"

namespace stripspec {

/// w(z) = c1 int_0^z ds / p1(s) with c1 = 2 pi / int_0^{2 pi} ds / p1, so that
/// w(z + 2 pi) = w(z) + 2 pi. The eigenfunctions of p1 D are e^{i n w(z)},
/// with eigenvalues i n c1.
class ConformalMap {
 public:
  /// General coefficient; w by adaptive Gauss-Legendre along the segment [0, z].
  /// DomainError if p1 vanishes on the sampled closed strip or along a path.
  explicit ConformalMap(HardyFunction p1);
  /// p1 = I0(a) e^{a cos z}; then c1 = 1 and
  /// w(z) = z + (2 / I0(a)) sum_{n >= 1} (-1)^n I_n(a) sin(n z) / n.
  static ConformalMap exp_cos(double a, StripDomain dom);

  cplx operator()(cplx z) const;
  cplx derivative(cplx z) const;  // c1 / p1(z)
  cplx p1(cplx z) const;
  cplx c1() const noexcept { return c1_; }
  const StripDomain& domain() const noexcept { return domain_; }
  bool closed_form() const noexcept { return closed_form_; }
  double amplitude() const noexcept { return a_; }  // NaN for a general coefficient
  /// max |w(z + 2 pi) - w(z) - 2 pi| / max(1, |w(z)|) over a few interior points.
  double period_defect() const;

 private:
  ConformalMap() = default;
  StripDomain domain_{1.0};
  std::vector<cplx> coeffs_;  // p1 coefficients, index n + order
  int order_ = 0;
  cplx c1_ = 1.0;
  bool closed_form_ = false;
  double a_ = std::numeric_limits<double>::quiet_NaN();
  double i0_ = 1.0;
  std::vector<double> ratios_;  // I_n(a) / I_{n-1}(a), n = 1..
};

struct InjectivityCertificate {
  double min_re;  // min Re(1 / p1) over the closed-strip grid
  cplx argmin;
  bool pass;      // min_re > 0, which makes w injective on the strip
};
InjectivityCertificate injectivity_certificate(const ConformalMap& map, double T, GridSpec grid = {256, 65});

struct CollisionWitness {
  cplx z1, z2;        // distinct mod 2 pi, both in the open strip
  int k;              // w(z1) - w(z2) = 2 pi k
  double residual;    // |w(z1) - w(z2) - 2 pi k| after polishing
  double separation;  // |z1 - z2| reduced mod 2 pi
  double im_w;        // Im w(z1)
};

struct CollisionSearch {
  std::optional<CollisionWitness> witness;  // smallest |Im w(z1)| among all polished pairs
  long candidates = 0;
  long polished = 0;
  GridSpec grid{};
  double T = 0.0;
};

/// Anchors z1 on a nx x ny cell-centred grid of the fundamental domain plus the
/// real axis; seeds z2 from grid points whose w values match w(z1) - 2 pi k,
/// k in -2..2; Newton on w(z2) = w(z1) - 2 pi k with z1 fixed.
CollisionSearch collision_search(const ConformalMap& map, double T, GridSpec grid = {256, 64}, double polish_tol = 1e-10);

struct ThresholdRow {
  double T;
  bool found;
  std::optional<CollisionWitness> witness;
  bool certificate;  // injectivity certificate at this T
};

struct RefinedThreshold {
  double T;                  // max(|Im z1|, |Im z2|) at the local minimum
  CollisionWitness witness;
  bool converged;
};

/// Slides z1 along the collision curve of a witness (z2 follows by Newton) to
/// a local minimum of the strip half-height that still contains both points.
/// Unlike the grid bisection this does not depend on the grid density.
std::optional<RefinedThreshold> refine_threshold(const ConformalMap& map, const CollisionWitness& wit);

struct ThresholdScan {
  std::optional<double> T_star;  // smallest T with a witness, to within `resolution`
  std::optional<RefinedThreshold> refined;  // from the witness found at T_star
  std::vector<ThresholdRow> rows;  // ladder then bisection, in evaluation order
  GridSpec grid{};
  double resolution = 0.0;
};

ThresholdScan threshold_scan(const ConformalMap& map, double T_min, double T_max, int steps, GridSpec grid = {256, 64},
                             double resolution = 1e-3, double polish_tol = 1e-10);

struct SpanResiduals {
  std::vector<std::vector<double>> r;  // r[j][M - 1]
  std::vector<int> rank;               // effective Gram rank for each M
  double max_increase = 0.0;           // max over j, M of r(M + 1) - r(M)
};

/// Distances from t_j to span{psi_1..psi_M} for every M, from the Gram matrix
/// G(i, k) = <psi_k, psi_i> and B(i, j) = <t_j, psi_i>; eigenvalues of G below
/// cutoff * max are discarded.
SpanResiduals span_residuals_gram(const CMatrix& G, const CMatrix& B, const std::vector<double>& test_norms,
                                  double cutoff = 1e-10);
/// Same distances from the coefficients directly, by orthogonalizing psi in
/// H^2; a psi whose new direction has squared norm below cutoff * max ||psi||^2
/// does not raise the rank.
SpanResiduals span_residuals(const std::vector<HardyFunction>& psi, const std::vector<HardyFunction>& tests,
                             double cutoff = 1e-10);
SpanResiduals span_residuals(const std::vector<HardyVector>& psi, const std::vector<HardyVector>& tests,
                             double cutoff = 1e-10);

/// Eigenfunction order used for e^{i n w}: n = 0, 1, -1, 2, -2, ...
int eigen_index(int m);

struct WitnessSpanCheck {
  double T;
  double h_norm;                  // ||g_{z1} - g_{z2}||_H
  std::vector<double> residuals;  // M = 1..M_max
  double max_deviation;           // max_M |r(M) - ||h||| / ||h||
  double annihilator;             // max_{m <= M_max} |<psi_m, h>| / ||h||
  double nosep;                   // max_{|n| <= n_max} |e^{i n w(z1)} - e^{i n w(z2)}|
  int quadrature_points;          // per boundary line, for the Gram matrix
  int rank;                       // effective Gram rank at M_max
};

/// Span residual of the kernel difference h = g_{z1} - g_{z2} against the first
/// M_max eigenfunctions e^{i n w}. The Gram matrix is integrated on the boundary
/// lines with direct evaluation of e^{i n w}; <h, psi> comes from the
/// reproducing property.
WitnessSpanCheck witness_span_check(const ConformalMap& map, const CollisionWitness& wit, double T, int M_max = 60,
                                    int n_max = 50);

struct SimilarityCheck {
  double max_sine;        // subspace-angle sine in H^2, over n in -n_range..n_range
  double max_eig_error;   // max |lambda_n - i n|
  int N;
};

/// Eigenfunctions of D - i phi' against e^{i phi(z)} e^{i n z}.
SimilarityCheck similarity_example_check(const HardyFunction& phi, int n_range, int N);

void write_atlas_csv(std::ostream& out, double a, const ThresholdScan& scan, const std::string& config_hash);
void write_residual_csv(std::ostream& out, const SpanResiduals& r, const std::string& config_hash);

}  // namespace stripspec
