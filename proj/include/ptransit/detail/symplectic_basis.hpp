// Helpers shared by the continuous (Lagrange point) and discrete (monodromy)
// symplectic eigenbasis constructions.
#pragma once

#include <ptransit/core.hpp>

#include <cmath>
#include <utility>

namespace ptransit::detail {

/// Scales the saddle pair so that omega(u, s) = +1 and u(0) > 0.
inline void normalize_saddle_pair(Vec4 &u, Vec4 &s, const Mat4 &j) {
    if (u(0) < 0.0) u = -u;
    const double pairing = symplectic_form(u, j, s);
    if (!(std::abs(pairing) > 1e-300) || !std::isfinite(pairing))
        throw NumericalError("saddle eigenvectors have zero symplectic pairing");
    const double k = std::sqrt(std::abs(pairing));
    u /= k;
    s /= (pairing > 0.0 ? k : -k);
}

/// Scales the center pair to omega(c3, c4) = +1 (the caller guarantees a
/// positive pairing) and rotates it within its plane so that c3 has a zero
/// last component and c4 a positive one.
inline void normalize_center_pair(Vec4 &c3, Vec4 &c4, const Mat4 &j) {
    const double pairing = symplectic_form(c3, j, c4);
    if (!(pairing > 1e-300) || !std::isfinite(pairing))
        throw NumericalError("center eigenvectors have non-positive symplectic pairing");
    const double k = std::sqrt(pairing);
    c3 /= k;
    c4 /= k;
    const double a = c3(3);
    const double b = c4(3);
    const double r = std::hypot(a, b);
    if (r == 0.0) return;
    const double ca = b / r;
    const double sa = -a / r;
    const Vec4 n3 = ca * c3 + sa * c4;
    const Vec4 n4 = -sa * c3 + ca * c4;
    c3 = n3;
    c4 = n4;
    c3(3) = 0.0;
}

/// Projects v onto the symplectic complement of span{u, s} (omega(u, s) = 1).
inline Vec4 symplectic_complement(const Vec4 &v, const Vec4 &u, const Vec4 &s, const Mat4 &j) {
    // v = a u + b s + w with omega(w, u) = omega(w, s) = 0.
    const double a = symplectic_form(v, j, s);
    const double b = symplectic_form(u, j, v);
    return v - a * u - b * s;
}

} // namespace ptransit::detail
