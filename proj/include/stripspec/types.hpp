#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace stripspec {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

}  // namespace stripspec
