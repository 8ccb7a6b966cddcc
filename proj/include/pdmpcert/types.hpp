#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pdmpcert {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a model violates one of its structural invariants
/// (positive invariance, rate-matrix sign/irreducibility, parameter ranges).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a numerical routine cannot complete (step budget, escaping
/// trajectory, rate bound violation).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pdmpcert
