#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace bmk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace bmk
