#pragma once

// Dormand-Prince 8(5,3) integration of complex matrix-valued ODEs Y' = f(t, Y)
// on a real parameter interval.

#include <functional>
#include <vector>

#include "stripspec/types.hpp"

namespace stripspec {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  long max_steps = 2'000'000;
};

struct OdeResult {
  CMatrix y;
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
  double error_estimate = 0.0;  // sum of accepted local error estimates, absolute units
};

using OdeRhs = std::function<CMatrix(double t, const CMatrix& y)>;
using OdeObserver = std::function<void(double t, const CMatrix& y)>;

/// Integrates from t0 to t1. Steps are clipped so that every entry of `stops`
/// inside (t0, t1] is hit exactly; the observer is called there and at t1.
/// Throws BudgetError past max_steps and NumericalError on step-size underflow.
OdeResult integrate_dop853(const OdeRhs& f, double t0, double t1, CMatrix y0, const OdeOptions& opt = {},
                           const std::vector<double>& stops = {}, const OdeObserver& observer = {});

/// Composite Gauss-Legendre quadrature of a smooth function, panels doubled
/// until successive estimates agree to rtol.
double integrate_smooth(const std::function<double(double)>& f, double a, double b, double rtol = 1e-10);

}  // namespace stripspec
