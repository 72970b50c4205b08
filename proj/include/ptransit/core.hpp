// ptransit core types
// Phase-space vectors, matrices, symplectic structure and error types.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ptransit {

/// Planar phase-space point (x, y, px, py), nondimensional rotating-frame units.
using PhaseState = Eigen::Vector4d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: non-convergence, step underflow, singular systems.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Trajectory came within the collision radius of a massive body.
class SingularityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Newton or continuation failed to converge.
class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Spectrum of a monodromy matrix is not elliptic-hyperbolic.
class ClassificationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// ---------------------------------------------------------------------------
// Symplectic structure
// ---------------------------------------------------------------------------

/// Canonical structure for the (x, y, px, py) ordering: [[0, I], [-I, 0]].
inline Mat4 physical_j() {
    Mat4 j = Mat4::Zero();
    j(0, 2) = 1.0;
    j(1, 3) = 1.0;
    j(2, 0) = -1.0;
    j(3, 1) = -1.0;
    return j;
}

/// Canonical structure for the interleaved (q1, p1, q2, p2) ordering.
inline Mat4 local_j() {
    Mat4 j = Mat4::Zero();
    j(0, 1) = 1.0;
    j(1, 0) = -1.0;
    j(2, 3) = 1.0;
    j(3, 2) = -1.0;
    return j;
}

/// Symplectic pairing a^T J b.
template <typename A, typename B>
auto symplectic_form(const A &a, const Mat4 &j, const B &b) {
    return a.dot(j * b);
}

/// || M^T J_out M - J_in ||_F / ||M||_F^2, the scale-free symplecticity defect.
inline double symplectic_defect(const Mat4 &m, const Mat4 &j_in, const Mat4 &j_out) {
    const double scale = m.squaredNorm();
    return (m.transpose() * j_in * m - j_out).norm() / scale;
}

inline double symplectic_defect(const Mat4 &m) {
    return symplectic_defect(m, physical_j(), physical_j());
}

inline bool all_finite(const Vec4 &v) { return v.allFinite(); }

inline void require(bool ok, const std::string &what) {
    if (!ok) throw ValidationError(what);
}

} // namespace ptransit
