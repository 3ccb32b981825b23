#pragma once

// Fourier-Galerkin matrices of a periodic operator in the exponential bases of
// L^2_per and of the Hardy space, and their dense eigen-decomposition.

#include <cstdint>
#include <iosfwd>

#include "stripspec/operator.hpp"

namespace stripspec {

enum class Basis { L2, H2 };

inline constexpr int kDefaultSizeCap = 4096;

struct GalerkinMatrix {
  CMatrix matrix;
  Basis basis;
  int N;
  PeriodicOperator source;

  int K() const noexcept { return source.size(); }
  /// Row/column of component i, Fourier index n.
  int index(int i, int n) const noexcept { return i * (2 * N + 1) + (n + N); }
};

/// Matrix of L on span{e^{inz} : |n| <= N}^K followed by re-truncation to |m| <= N.
/// In the H2 basis e^{inz}/sqrt(cosh 2nT) entries pick up sqrt(cosh 2mT / cosh 2nT).
GalerkinMatrix assemble(const PeriodicOperator& L, Basis basis, int N, int size_cap = kDefaultSizeCap);

/// Coefficient-space vector (component-major) back to a HardyVector.
HardyVector to_hardy(const CVector& v, const GalerkinMatrix& M);
CVector to_coefficients(const HardyVector& f, Basis basis, int N);

struct Eigenpair {
  cplx lambda;
  HardyVector psi;  // ||psi||_L = 1, largest coefficient real positive
  int multiplicity;
  int cluster;  // pairs with the same cluster id share one multiple eigenvalue
  double residual;  // ||L psi - lambda psi||_L with exact application
  bool trusted;
};

struct SpectralDecomposition {
  std::vector<Eigenpair> pairs;  // sorted by Re, then Im
  Basis basis;
  int N;
  int computed;  // matrix size
  double cluster_tol;
  bool hermitian;

  std::vector<cplx> eigenvalues() const;
  double max_residual(bool trusted_only = true) const;
};

inline constexpr double kClusterTol = 1e-7;

/// Dense eigen-decomposition; keeps the `keep` eigenvalues of smallest modulus.
/// Only pairs whose modulus rank is below half the matrix size are trusted.
SpectralDecomposition spectrum(const GalerkinMatrix& M, int keep, double cluster_tol = kClusterTol);

/// Orders eigenvalues by real part; real parts within tol*scale tie and are ordered by imaginary part.
void sort_spectrum(std::vector<cplx>& values, double rel_tol = 1e-9);

struct SelfAdjointReport {
  double defect;         // ||M - M*||_F / ||M||_F, L^2 basis
  double min_rayleigh;   // smallest eigenvalue of (M + M*)/2
};
SelfAdjointReport selfadjoint_defect(const PeriodicOperator& L, int N);

struct WeylBounds {
  double beta1_sq;
  double beta2_sq;
  int m_max;
  bool pass;
};
/// min and max of lambda_m / m^2 over m = 1..m_max, eigenvalues indexed from m = 0.
WeylBounds weyl_bounds(const SpectralDecomposition& d, int m_max = 40);

struct GrowthSample {
  int cluster;
  double sqrt_lambda;
  double log_max;  // log max_z of the cluster's basis-invariant pointwise norm
};

/// max over the z grid of sqrt(sum over the cluster of ||psi(z)||^2), one sample per
/// eigenvalue cluster with index below max_index. Grid covers |Im z| <= height.
std::vector<GrowthSample> growth_samples(const SpectralDecomposition& d, double height, GridSpec grid,
                                         int max_index);

struct GrowthFit {
  double C1;
  double C2;
  double max_excess;  // largest log-excess of a sample over the envelope (<= 0 on the fitting set)
  int samples;
};
/// C2 is the least-squares slope of log max against sqrt(lambda); C1 is the smallest
/// constant for which log C1 + C2 sqrt(lambda) bounds every sample. One sample gives C2 = 0.
GrowthFit growth_fit(const std::vector<GrowthSample>& samples);
/// Largest log-excess of samples over the envelope; PASS iff <= log(1 + slack).
double envelope_excess(const GrowthFit& fit, const std::vector<GrowthSample>& samples);

struct SizeComparison {
  double min_ratio;  // ||(-D^2 + I) f||_L / ||L f||_L over random f
  double max_ratio;
  int samples;
};
SizeComparison size_comparison(const PeriodicOperator& L, int N, int samples, std::uint64_t seed);

/// CSV: index, re_lambda, im_lambda, multiplicity, residual, trusted
void write_spectrum_csv(std::ostream& out, const SpectralDecomposition& d, const std::string& config_hash,
                        const std::string& source = "");

}  // namespace stripspec
