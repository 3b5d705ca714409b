#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hbm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Index = Eigen::Index;

/// Raised when a numerical procedure cannot produce a result (singular
/// systems, non-finite samples, diverging iterations).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed models, configurations or inconsistent dimensions.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace hbm
