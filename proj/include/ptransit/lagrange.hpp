// ptransit lagrange
// Equilibrium geometry of the CR3BP: Lagrange points, Hill-region energy
// thresholds, and the saddle x center linearization at L1/L2.
#pragma once

#include <ptransit/detail/symplectic_basis.hpp>
#include <ptransit/models.hpp>

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <complex>
#include <limits>

namespace ptransit {

struct LagrangePointSet {
    double l1 = 0.0;
    double l2 = 0.0;
    double l3 = 0.0;
    Eigen::Vector2d l4 = Eigen::Vector2d::Zero();
    Eigen::Vector2d l5 = Eigen::Vector2d::Zero();
};

struct EnergyThresholds {
    double e1 = 0.0;
    double e2 = 0.0;
    double e3 = 0.0;
    double e4 = 0.0;
};

/// Linearization at a collinear point in its symplectic eigenbasis.
/// Columns of `basis` are (unstable, stable, center-q, center-p).
struct LinearizedSaddleCenter {
    double lambda = 0.0;
    double nu = 0.0;
    Mat4 basis = Mat4::Identity();
};

enum class CollinearPoint { L1, L2 };

/// dU_eff/dx on the x-axis; zero at the collinear points.
inline double collinear_condition(double mu, double x) {
    const double d1 = x + mu;
    const double d2 = x - 1.0 + mu;
    return x - (1.0 - mu) * d1 / std::abs(d1 * d1 * d1) - mu * d2 / std::abs(d2 * d2 * d2);
}

namespace detail {

inline double bisect_collinear(double mu, double lo, double hi) {
    double flo = collinear_condition(mu, lo);
    const double fhi = collinear_condition(mu, hi);
    if (!(flo * fhi < 0.0)) throw NumericalError("collinear point bracket does not change sign");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = collinear_condition(mu, mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return std::abs(collinear_condition(mu, lo)) < std::abs(collinear_condition(mu, hi)) ? lo : hi;
}

} // namespace detail

inline LagrangePointSet lagrange_points(double mu) {
    validate(Cr3bpParams{mu});
    // Brackets open at the primaries, where the condition is singular.
    const double gap = 1e-12;
    LagrangePointSet p;
    p.l1 = detail::bisect_collinear(mu, -mu + gap, 1.0 - mu - gap);
    p.l2 = detail::bisect_collinear(mu, 1.0 - mu + gap, 3.0);
    p.l3 = detail::bisect_collinear(mu, -3.0, -mu - gap);
    const double h = std::sqrt(3.0) / 2.0;
    p.l4 = {0.5 - mu, h};
    p.l5 = {0.5 - mu, -h};
    return p;
}

/// Collinear part of the Lagrange point set.
inline std::array<double, 3> collinear_points(double mu) {
    const auto p = lagrange_points(mu);
    return {p.l1, p.l2, p.l3};
}

/// Phase state of an equilibrium at (x, y): zero velocity in the rotating frame.
inline PhaseState equilibrium_state(double x, double y = 0.0) { return {x, y, -y, x}; }

inline EnergyThresholds energy_thresholds(double mu) {
    const Model m(Cr3bpParams{mu});
    const auto p = lagrange_points(mu);
    return {hamiltonian(m, equilibrium_state(p.l1)), hamiltonian(m, equilibrium_state(p.l2)),
            hamiltonian(m, equilibrium_state(p.l3)), hamiltonian(m, equilibrium_state(p.l4.x(), p.l4.y()))};
}

/// Hill-region case 1..5 for energy E; ties go to the lower case.
inline int hill_region_case(double mu, double energy) {
    const auto e = energy_thresholds(mu);
    if (energy <= e.e1) return 1;
    if (energy <= e.e2) return 2;
    if (energy <= e.e3) return 3;
    if (energy <= e.e4) return 4;
    return 5;
}

/// True when the eigenvalues of the Jacobian at L4 are purely imaginary.
inline bool triangular_linearly_stable(double mu, double tol = 1e-9) {
    const auto p = lagrange_points(mu);
    const Model m(Cr3bpParams{mu});
    const Mat4 a = jacobian(m, equilibrium_state(p.l4.x(), p.l4.y()));
    Eigen::EigenSolver<Mat4> es(a, false);
    for (int i = 0; i < 4; ++i)
        if (std::abs(es.eigenvalues()(i).real()) > tol) return false;
    return true;
}

inline LinearizedSaddleCenter linearize_collinear(double mu, CollinearPoint which) {
    const auto p = lagrange_points(mu);
    const double x = which == CollinearPoint::L1 ? p.l1 : p.l2;
    const Model m(Cr3bpParams{mu});
    const Mat4 a = jacobian(m, equilibrium_state(x));
    Eigen::EigenSolver<Mat4> es(a);
    const auto &ev = es.eigenvalues();
    int iu = -1, is = -1, ic = -1;
    for (int i = 0; i < 4; ++i) {
        const auto z = ev(i);
        if (std::abs(z.imag()) < 1e-9 * std::abs(z)) {
            if (z.real() > 0.0)
                iu = i;
            else
                is = i;
        } else if (z.imag() > 0.0) {
            ic = i;
        }
    }
    if (iu < 0 || is < 0 || ic < 0) throw NumericalError("Jacobian at the collinear point is not saddle x center");

    const Mat4 j = physical_j();
    Vec4 u = es.eigenvectors().col(iu).real();
    Vec4 s = es.eigenvectors().col(is).real();
    detail::normalize_saddle_pair(u, s, j);

    Eigen::Vector4cd w = es.eigenvectors().col(ic);
    Vec4 c3 = w.real();
    Vec4 c4 = w.imag();
    if (symplectic_form(c3, j, c4) < 0.0) throw NumericalError("center direction has negative Krein signature");
    c3 = detail::symplectic_complement(c3, u, s, j);
    c4 = detail::symplectic_complement(c4, u, s, j);
    detail::normalize_center_pair(c3, c4, j);

    LinearizedSaddleCenter out;
    out.lambda = ev(iu).real();
    out.nu = ev(ic).imag();
    out.basis.col(0) = u;
    out.basis.col(1) = s;
    out.basis.col(2) = c3;
    out.basis.col(3) = c4;
    return out;
}

/// Instantaneous zero of the vector field at fixed t (Newton from `guess`).
/// For the perturbed models this point moves with t and is not a trajectory.
inline PhaseState instantaneous_zero(const Model &model, double t, PhaseState guess, double tol = 1e-14,
                                     int max_iter = 50) {
    check_state(guess);
    for (int k = 0; k < max_iter; ++k) {
        const Vec4 f = vector_field(model, guess, t);
        if (f.norm() < tol) return guess;
        guess -= jacobian(model, guess, t).fullPivLu().solve(f);
    }
    if (vector_field(model, guess, t).norm() < 1e3 * tol) return guess;
    throw ConvergenceError("instantaneous zero did not converge");
}

/// Canonical generator blockdiag([[lambda, 0], [0, -lambda]], [[0, nu], [-nu, 0]]).
inline Mat4 saddle_center_generator(double lambda, double nu) {
    Mat4 g = Mat4::Zero();
    g(0, 0) = lambda;
    g(1, 1) = -lambda;
    g(2, 3) = nu;
    g(3, 2) = -nu;
    return g;
}

/// Quadratic Hamiltonian lambda q1 p1 + nu (q2^2 + p2^2) / 2.
inline double quadratic_hamiltonian(double lambda, double nu, const Vec4 &q) {
    return lambda * q(0) * q(1) + 0.5 * nu * (q(2) * q(2) + q(3) * q(3));
}

} // namespace ptransit
