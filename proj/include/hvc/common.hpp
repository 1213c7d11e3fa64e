#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hvc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// Every stochastic operation takes one of these by reference. A generator must
// not be shared between threads.
using Rng = std::mt19937_64;

// Error hierarchy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// I/O failures and malformed files (exit code 1).
struct IoError : Error {
    using Error::Error;
};

// Inputs that are well-formed but numerically degenerate (exit code 2).
struct DegenerateInput : Error {
    using Error::Error;
};

// Divergence, non-finite iterates (exit code 3).
struct NumericError : Error {
    using Error::Error;
};

// Dimension mismatch between arguments.
struct ShapeError : Error {
    using Error::Error;
};

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

// sign with sign(0) = 0.
inline double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

}  // namespace hvc
