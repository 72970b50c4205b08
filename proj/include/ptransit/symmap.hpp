// ptransit symmap
// Elliptic-hyperbolic normal form of a 4x4 symplectic monodromy matrix, its
// symplectic eigenbasis, and the effective quadratic Hamiltonian whose time-T
// flow reproduces the linear map.
#pragma once

#include <ptransit/detail/symplectic_basis.hpp>
#include <ptransit/porbit.hpp>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <optional>

namespace ptransit {

/// Lambda = blockdiag([[sigma, 0], [0, 1/sigma]], [[cos psi, sin psi], [-sin psi, cos psi]]).
inline Mat4 normal_form_matrix(double sigma, double psi) {
    Mat4 m = Mat4::Zero();
    m(0, 0) = sigma;
    m(1, 1) = 1.0 / sigma;
    m(2, 2) = std::cos(psi);
    m(2, 3) = std::sin(psi);
    m(3, 2) = -std::sin(psi);
    m(3, 3) = std::cos(psi);
    return m;
}

struct NormalForm {
    double sigma = 1.0; ///< real multiplier > 1
    double psi = 0.0;   ///< principal argument of the unit-circle multiplier with positive imaginary part
    Mat4 lambda_matrix = Mat4::Identity();
};

/// Change of basis C with C^T J C = J_local and C^-1 M C = Lambda(sigma, psi_basis).
/// psi_basis is psi or 2 pi - psi: a symplectic C can only realize the
/// rotation sense fixed by the Krein signature of the center pair.
struct MapEigenbasis {
    Mat4 c = Mat4::Identity();
    double psi_basis = 0.0;
    std::optional<PeriodicOrbit> orbit_ref;

    Mat4 realized_normal_form(double sigma) const { return normal_form_matrix(sigma, psi_basis); }
};

struct EffectiveHamiltonian {
    double lambda_tilde = 0.0;
    double nu_tilde = 0.0;
    double period = 0.0;

    double operator()(const Vec4 &q) const { return quadratic_hamiltonian(lambda_tilde, nu_tilde, q); }

    /// Generator A of the linear flow x' = A x, blockdiag([[l, 0], [0, -l]], [[0, n], [-n, 0]]).
    Mat4 generator() const { return saddle_center_generator(lambda_tilde, nu_tilde); }
};

struct SpectrumReport {
    Eigen::Vector4cd eigenvalues;
    double reciprocity = 0.0; ///< |sigma(M) / sigma(M^-1) - 1|
};

namespace detail {

/// Diagonal similarity D^-1 A D equilibrating row and column norms (powers of two).
inline Mat4 balance(const Mat4 &a, Vec4 &d) {
    Mat4 b = a;
    d.setOnes();
    constexpr double radix = 2.0;
    bool done = false;
    for (int sweep = 0; sweep < 100 && !done; ++sweep) {
        done = true;
        for (int i = 0; i < 4; ++i) {
            double c = 0.0, r = 0.0;
            for (int j = 0; j < 4; ++j) {
                if (j == i) continue;
                c += std::abs(b(j, i));
                r += std::abs(b(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double f = 1.0;
            const double s = c + r;
            double g = r / radix;
            while (c < g) {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix * radix;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                d(i) *= f;
                b.col(i) *= f;
                b.row(i) /= f;
            }
        }
    }
    return b;
}

struct BalancedEigen {
    Eigen::Vector4cd values;
    Eigen::Matrix4cd vectors;
};

inline BalancedEigen balanced_eigen(const Mat4 &m) {
    Vec4 d;
    const Mat4 b = balance(m, d);
    Eigen::EigenSolver<Mat4> es(b);
    if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition failed");
    BalancedEigen out{es.eigenvalues(), es.eigenvectors()};
    for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < 4; ++i) out.vectors(i, k) *= d(i);
        out.vectors.col(k).normalize();
    }
    return out;
}

inline int dominant_index(const Eigen::Vector4cd &ev) {
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (std::abs(ev(i)) > std::abs(ev(best))) best = i;
    return best;
}

inline Vec4 dominant_real_eigenvector(const Mat4 &m) {
    const auto e = balanced_eigen(m);
    const int i = dominant_index(e.values);
    if (std::abs(e.values(i).imag()) > 1e-9 * std::abs(e.values(i)))
        throw ClassificationError("dominant multiplier is not real");
    Eigen::Vector4cd v = e.vectors.col(i);
    // Rotate the complex phase away before taking the real part.
    int big = 0;
    for (int k = 1; k < 4; ++k)
        if (std::abs(v(k)) > std::abs(v(big))) big = k;
    v *= std::conj(v(big)) / std::abs(v(big));
    return v.real().normalized();
}

} // namespace detail

/// Multipliers of m (balanced eigensolver). The stable multiplier 1/sigma is
/// below the rounding level of m itself when sigma is large, so reciprocity
/// is measured against the dominant multiplier of the inverse map.
inline SpectrumReport spectrum(const Mat4 &m, const Mat4 &m_inv) {
    const auto e = detail::balanced_eigen(m);
    const auto e_inv = detail::balanced_eigen(m_inv);
    SpectrumReport r;
    r.eigenvalues = e.values;
    const double sigma = std::abs(e.values(detail::dominant_index(e.values)));
    const double sigma_inv = std::abs(e_inv.values(detail::dominant_index(e_inv.values)));
    r.reciprocity = std::abs(sigma / sigma_inv - 1.0);
    return r;
}

/// Reduces a symplectic monodromy matrix with an elliptic-hyperbolic spectrum
/// to (sigma, psi).
inline NormalForm normal_form(const Mat4 &m, double period) {
    require(period > 0.0, "period must be positive");
    require(m.allFinite(), "monodromy matrix has non-finite entries");
    if (symplectic_defect(m) > 1e-6 && symplectic_defect(m, local_j(), local_j()) > 1e-6)
        throw ValidationError("matrix is not symplectic to tolerance");

    const auto e = detail::balanced_eigen(m);
    const auto &ev = e.values;
    constexpr double circle_tol = 1e-6;
    int n_real_hyperbolic = 0, n_circle = 0;
    double sigma = 0.0;
    std::complex<double> rot{1.0, 0.0};
    bool have_rot = false;
    for (int i = 0; i < 4; ++i) {
        const auto z = ev(i);
        const bool is_real = std::abs(z.imag()) <= 1e-9 * std::max(1.0, std::abs(z));
        const double mod = std::abs(z);
        if (std::abs(mod - 1.0) <= circle_tol) {
            ++n_circle;
            if (z.imag() > 0.0) {
                rot = z;
                have_rot = true;
            }
        } else if (is_real) {
            ++n_real_hyperbolic;
            if (z.real() > sigma) sigma = z.real();
        }
    }
    if (n_circle == 4) throw ClassificationError("spectrum is fully elliptic");
    if (n_circle == 0) throw ClassificationError("spectrum is fully hyperbolic or complex-saddle");
    if (n_real_hyperbolic != 2 || n_circle != 2)
        throw ClassificationError("spectrum is not of elliptic-hyperbolic type");
    if (!(sigma > 1.0)) throw ClassificationError("hyperbolic multiplier is not a positive real > 1");
    if (sigma - 1.0 < 1e-8) throw ClassificationError("degenerate: hyperbolic multiplier too close to 1");
    if (!have_rot) throw ClassificationError("degenerate: unit-circle multipliers at +1 or -1");

    NormalForm nf;
    nf.sigma = sigma;
    nf.psi = std::arg(rot);
    if (nf.psi <= 1e-10 || nf.psi >= std::numbers::pi - 1e-10)
        throw ClassificationError("degenerate: unit-circle multipliers too close to +1 or -1");
    nf.lambda_matrix = normal_form_matrix(nf.sigma, nf.psi);
    return nf;
}

/// Symplectic eigenbasis of m; `j` is the structure of the space m acts on.
/// By default the stable direction is the dominant eigenvector of the
/// symplectic inverse -J m^T J, which is exactly consistent with m. A
/// separately integrated inverse can be passed as `m_inv` instead; its
/// integration error is amplified by sigma in C^-1 M C.
inline MapEigenbasis symplectic_eigenbasis(const Mat4 &m, const NormalForm &nf,
                                           const std::optional<Mat4> &m_inv = std::nullopt,
                                           const Mat4 &j = physical_j()) {
    Vec4 u = detail::dominant_real_eigenvector(m);
    Vec4 s;
    if (m_inv) {
        s = detail::dominant_real_eigenvector(*m_inv);
    } else {
        // For symplectic m, J s is a left eigenvector of m for sigma.
        const Vec4 left = detail::dominant_real_eigenvector(m.transpose());
        s = (-j * left).normalized();
    }
    detail::normalize_saddle_pair(u, s, j);

    // Basis of the symplectic complement of span{u, s}.
    Vec4 b1 = Vec4::Zero(), b2 = Vec4::Zero();
    {
        std::array<Vec4, 4> cand;
        for (int i = 0; i < 4; ++i) cand[i] = detail::symplectic_complement(Vec4::Unit(i), u, s, j);
        int i1 = 0;
        for (int i = 1; i < 4; ++i)
            if (cand[i].norm() > cand[i1].norm()) i1 = i;
        b1 = cand[i1].normalized();
        double best = -1.0;
        for (int i = 0; i < 4; ++i) {
            const Vec4 r = cand[i] - cand[i].dot(b1) * b1;
            if (r.norm() > best) {
                best = r.norm();
                b2 = r;
            }
        }
        b2.normalize();
        b1 = detail::symplectic_complement(b1, u, s, j);
        b2 = detail::symplectic_complement(b2, u, s, j);
        const double w = symplectic_form(b1, j, b2);
        if (std::abs(w) < 1e-12) throw NumericalError("center plane is symplectically degenerate");
        if (w < 0.0) b2 = -b2;
        const double k = std::sqrt(std::abs(w));
        b1 /= k;
        b2 /= k;
    }
    // Center block of m in the (b1, b2) coordinates.
    const Vec4 mb1 = m * b1;
    const Vec4 mb2 = m * b2;
    Eigen::Matrix2d r;
    r << symplectic_form(mb1, j, b2), symplectic_form(mb2, j, b2), symplectic_form(b1, j, mb1),
        symplectic_form(b1, j, mb2);
    const double half_trace = 0.5 * r.trace() / std::sqrt(std::abs(r.determinant()));
    if (!(std::abs(half_trace) < 1.0)) throw ClassificationError("center block is not elliptic");
    const double angle = std::acos(half_trace);
    MapEigenbasis basis;
    basis.psi_basis = r(1, 0) < 0.0 ? angle : kTwoPi - angle;

    // Real and imaginary parts of the eigenvector for exp(i psi_basis).
    const std::complex<double> z = std::polar(1.0, basis.psi_basis);
    Eigen::Vector2cd w2;
    if (std::abs(r(0, 1)) >= std::abs(r(1, 0)))
        w2 << r(0, 1), z - r(0, 0);
    else
        w2 << z - r(1, 1), r(1, 0);
    Vec4 c3 = w2(0).real() * b1 + w2(1).real() * b2;
    Vec4 c4 = w2(0).imag() * b1 + w2(1).imag() * b2;
    if (symplectic_form(c3, j, c4) < 0.0) c4 = -c4;
    detail::normalize_center_pair(c3, c4, j);

    basis.c.col(0) = u;
    basis.c.col(1) = s;
    basis.c.col(2) = c3;
    basis.c.col(3) = c4;
    (void)nf;
    return basis;
}

inline EffectiveHamiltonian effective_hamiltonian(const NormalForm &nf, double period) {
    require(nf.sigma > 1.0, "sigma must be > 1");
    require(period > 0.0, "period must be positive");
    return {std::log(nf.sigma) / period, nf.psi / period, period};
}

/// ||exp(A T) - Lambda||_F / ||Lambda||_F for the effective generator A.
inline double verify_proposition_1(const EffectiveHamiltonian &eh, const NormalForm &nf) {
    const Mat4 at = eh.generator() * eh.period;
    const Mat4 flow = at.exp();
    return (flow - nf.lambda_matrix).norm() / nf.lambda_matrix.norm();
}

/// Diagnostics of a computed eigenbasis against its monodromy matrix.
struct EigenbasisResiduals {
    double symplectic = 0.0; ///< max |C^T J C - J_local|
    double similarity = 0.0; ///< ||C^-1 M C - Lambda||_F / ||Lambda||_F
};

inline EigenbasisResiduals eigenbasis_residuals(const Mat4 &m, const NormalForm &nf, const MapEigenbasis &b,
                                                const Mat4 &j = physical_j()) {
    EigenbasisResiduals r;
    r.symplectic = (b.c.transpose() * j * b.c - local_j()).cwiseAbs().maxCoeff();
    const Mat4 lam = b.realized_normal_form(nf.sigma);
    r.similarity = (b.c.inverse() * m * b.c - lam).norm() / lam.norm();
    return r;
}

} // namespace ptransit
