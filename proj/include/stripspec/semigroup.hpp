#pragma once

// The semigroup S(t) f = sum_n <f, psi_n>_L e^{-t lambda_n} psi_n built from the
// eigenpairs of a self-adjoint periodic operator, with probes for the
// semigroup law, strong continuity at t = 0 and contraction after a shift.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stripspec/completeness.hpp"
#include "stripspec/galerkin.hpp"

namespace stripspec {

class SemigroupState {
 public:
  /// Uses the first `modes` eigenpairs (0: every trusted pair). Needs a
  /// decomposition whose matrix was detected Hermitian in the L2 basis, so the
  /// psi_n are L^2-orthonormal; DomainError otherwise.
  explicit SemigroupState(const SpectralDecomposition& d, int modes = 0, GridSpec growth_grid = {64, 9});

  int modes() const noexcept { return static_cast<int>(lambda_.size()); }
  double lambda(int n) const { return lambda_[static_cast<std::size_t>(n)]; }
  const HardyVector& psi(int n) const { return psi_[static_cast<std::size_t>(n)]; }
  /// max(0, 1 - min lambda) + 1, so lambda_n + shift >= 1.
  double shift() const noexcept { return shift_; }
  double min_rayleigh() const noexcept { return min_rayleigh_; }
  /// Pointwise envelope C1 e^{C2 sqrt|lambda|} of the psi_n on the closed strip.
  const GrowthFit& envelope() const noexcept { return envelope_; }

  CVector coefficients(const HardyVector& f) const;  // <f, psi_n>_L
  /// e^{-t (L + mu)} with mu = shift() when `shifted`. ConfigError for t < 0.
  HardyVector evolve(const HardyVector& f, double t, bool shifted = false) const;
  HardyVector synthesize(const CVector& c) const;
  /// Bound on the H^2 norm of the modes of S(t) f beyond the mode cap, from
  /// ||f - P f||_L and the envelope with lambda_m >= beta m^2 past the cap.
  /// At t = 0 this is ||f - P f||_H.
  double tail_bound(const HardyVector& f, double t) const;

 private:
  std::vector<double> lambda_;
  std::vector<HardyVector> psi_;
  double shift_ = 0.0;
  double min_rayleigh_ = 0.0;
  double beta_ = 0.0;  // lambda_m / m^2 at the cap
  StripDomain domain_{1.0};
  GrowthFit envelope_{};
};

/// Gaussian coefficients scaled by 1 / (1 + n^2), normalized to ||f||_H = 1.
HardyVector random_test_function(StripDomain dom, int K, int order, std::uint64_t seed);

struct SemigroupLaw {
  double error;  // ||S(t+s) f - S(t) S(s) f||_H
  double t, s;
};
SemigroupLaw semigroup_law(const SemigroupState& st, const HardyVector& f, double t, double s);

struct ContinuityRow {
  double t;
  double norm_H;  // ||S(t) f - f||_H
  double norm_L;
  double tail_bound;
};
struct ContinuityProbe {
  std::vector<ContinuityRow> rows;
  double projection_defect;  // ||f - P f||_H, the limit as t -> 0
  bool decreasing;           // norm_H strictly decreasing along the ladder
  double final_value;
};
/// Needs a strictly decreasing positive ladder; ConfigError otherwise.
ContinuityProbe continuity_probe(const SemigroupState& st, const HardyVector& f, const std::vector<double>& ladder);

struct ContractionReport {
  double max_ratio_L;            // shifted, ||e^{-t(L+mu)} f||_L / ||f||_L
  double max_ratio_H;            // shifted, in H^2; reported only
  double max_ratio_L_unshifted;  // ||S(t) f||_L / ||f||_L
  bool pass;                     // max_ratio_L <= 1 + 1e-8
};
ContractionReport contraction_check(const SemigroupState& st, const std::vector<HardyVector>& samples,
                                    const std::vector<double>& times);

struct AnnihilatorProbe {
  double h_norm;       // ||g_{z1} - g_{z2}||_H
  double max_inner;    // max over t of |<S(t) f, h>_H| / scale(t)
  std::vector<double> times;
};
/// f = sum_{m < M} a_m e^{i n_m w} with random a_m and S(t) f = sum a_m e^{-t i n_m c1} e^{i n_m w},
/// for the first-order operator p1 D. <S(t) f, h>_H reduces to point values at
/// the witness; scale(t) = sum |a_m| |e^{i n_m w(z1)}|.
AnnihilatorProbe annihilator_probe(const ConformalMap& map, const CollisionWitness& wit, double T,
                                   const std::vector<double>& times, int M, std::uint64_t seed);

/// CSV: t, norm_H, norm_L, tail_bound, config_hash
void write_evolution_csv(std::ostream& out, const ContinuityProbe& p, const std::string& config_hash);

}  // namespace stripspec
