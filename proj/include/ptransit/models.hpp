// ptransit models
// Planar CR3BP, bicircular (BCP) and elliptic (ER3BP) restricted three-body
// models in the mean rotating frame: Hamiltonian, vector field, Jacobian and
// the time-dependent placement of the attracting bodies.
#pragma once

#include <ptransit/core.hpp>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace ptransit {

/// Earth-Moon mass parameter used by the perturbed models.
inline constexpr double kEarthMoonMu = 0.012150582;

struct Cr3bpParams {
    double mu = 0.01215;
};

struct BcpParams {
    double mu = kEarthMoonMu;
    double mu0 = 328900.54;             ///< perturber mass
    double a0 = 388.81114;              ///< perturber distance from the barycenter
    double omega_m0 = 0.925195985520347; ///< perturber angular rate in the rotating frame
    double theta_m0_0 = 0.0;            ///< perturber angle at t = 0
};

struct Er3bpParams {
    double mu = kEarthMoonMu;
    double e = 0.0549006; ///< eccentricity of the primaries' relative orbit
    double phi0 = 0.0;    ///< true anomaly at t = 0
};

enum class ModelKind { Cr3bp, Bcp, Er3bp };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
    case ModelKind::Cr3bp: return "cr3bp";
    case ModelKind::Bcp: return "bcp";
    case ModelKind::Er3bp: return "er3bp";
    }
    return "unknown";
}

inline void validate(const Cr3bpParams &p) {
    require(std::isfinite(p.mu) && p.mu > 0.0 && p.mu < 0.5, "mu must lie in (0, 0.5)");
}

inline void validate(const BcpParams &p) {
    validate(Cr3bpParams{p.mu});
    require(std::isfinite(p.mu0) && p.mu0 >= 0.0, "mu0 must be >= 0");
    require(std::isfinite(p.a0) && p.a0 > 1.0, "a0 must be > 1");
    require(std::isfinite(p.omega_m0) && p.omega_m0 != 0.0, "omega_m0 must be nonzero");
    require(std::isfinite(p.theta_m0_0), "theta_m0_0 must be finite");
}

inline void validate(const Er3bpParams &p) {
    validate(Cr3bpParams{p.mu});
    require(std::isfinite(p.e) && p.e >= 0.0 && p.e < 1.0, "e must lie in [0, 1)");
    require(std::isfinite(p.phi0), "phi0 must be finite");
}

/// One of the three dynamical models plus the collision radius used to guard
/// the singularities at the attracting bodies.
class Model {
public:
    using Params = std::variant<Cr3bpParams, BcpParams, Er3bpParams>;

    Model() : Model(Cr3bpParams{}) {}
    Model(Cr3bpParams p) : params_(p) { validate(p); }
    Model(BcpParams p) : params_(p) { validate(p); }
    Model(Er3bpParams p) : params_(p) { validate(p); }

    const Params &params() const { return params_; }

    ModelKind kind() const { return static_cast<ModelKind>(params_.index()); }

    double mu() const {
        return std::visit([](const auto &p) { return p.mu; }, params_);
    }

    bool is_periodic() const { return kind() != ModelKind::Cr3bp; }

    /// Angular frequency of the perturbation (phase = frequency * t).
    double frequency() const {
        switch (kind()) {
        case ModelKind::Bcp: return std::abs(std::get<BcpParams>(params_).omega_m0);
        case ModelKind::Er3bp: return 1.0;
        default: throw ValidationError("the CR3BP is autonomous and has no perturbation period");
        }
    }

    /// Minimal period T of the perturbation.
    double period() const { return kTwoPi / frequency(); }

    double collision_radius() const { return collision_radius_; }

    Model with_collision_radius(double r) const {
        require(std::isfinite(r) && r > 0.0, "collision radius must be positive");
        Model m = *this;
        m.collision_radius_ = r;
        return m;
    }

    /// CR3BP with the same mass parameter; the unperturbed reference.
    Model unperturbed() const { return Model(Cr3bpParams{mu()}); }

    template <typename P> const P *get_if() const { return std::get_if<P>(&params_); }

private:
    Params params_;
    double collision_radius_ = 1e-6;
};

// ---------------------------------------------------------------------------
// Time-dependent geometry
// ---------------------------------------------------------------------------

/// Perturber angle of the bicircular model.
inline double perturber_angle(const BcpParams &p, double t) { return -p.omega_m0 * t + p.theta_m0_0; }

namespace detail {

inline double wrap_pi(double a) { return std::remainder(a, kTwoPi); }

/// Eccentric anomaly for a mean anomaly in [-pi, pi].
inline double solve_kepler(double mean, double e) {
    double ecc = e < 0.8 ? mean : (mean < 0.0 ? -std::numbers::pi : std::numbers::pi);
    for (int it = 0; it < 60; ++it) {
        const double f = ecc - e * std::sin(ecc) - mean;
        const double step = f / (1.0 - e * std::cos(ecc));
        ecc -= step;
        if (std::abs(step) < 1e-14) break;
    }
    return ecc;
}

inline double true_from_eccentric(double ecc, double e) {
    return 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(0.5 * ecc), std::sqrt(1.0 - e) * std::cos(0.5 * ecc));
}

inline double mean_from_true(double phi, double e) {
    const double ecc =
        2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(0.5 * phi), std::sqrt(1.0 + e) * std::cos(0.5 * phi));
    return ecc - e * std::sin(ecc);
}

struct AnomalyPair {
    double mean;      ///< unwrapped mean anomaly M0 + t
    double true_anom; ///< unwrapped true anomaly
    double offset;    ///< true minus mean anomaly, computed on a common branch
};

inline AnomalyPair anomalies(const Er3bpParams &p, double t) {
    if (p.e == 0.0) return {p.phi0 + t, p.phi0 + t, 0.0};
    const double phi0_w = wrap_pi(p.phi0);
    const double m0 = mean_from_true(phi0_w, p.e) + (p.phi0 - phi0_w);
    const double mean = m0 + t;
    const double mean_w = wrap_pi(mean);
    const double phi_w = true_from_eccentric(solve_kepler(mean_w, p.e), p.e);
    const double offset = phi_w - mean_w;
    return {mean, mean + offset, offset};
}

} // namespace detail

/// True anomaly of the primaries at time t, found from Kepler's equation.
/// phi(0) = phi0 and phi advances by 2 pi per unit-frequency period.
inline double true_anomaly(const Er3bpParams &p, double t) { return detail::anomalies(p, t).true_anom; }

/// Right-hand side of the true-anomaly differential equation.
inline double true_anomaly_rate(const Er3bpParams &p, double phi) {
    const double k = 1.0 + p.e * std::cos(phi);
    return k * k / std::pow(1.0 - p.e * p.e, 1.5);
}

struct PointMass {
    double gm = 0.0;
    Eigen::Vector2d pos = Eigen::Vector2d::Zero();
};

/// Attracting bodies at one instant plus the indirect (linear) potential term.
struct Configuration {
    std::array<PointMass, 3> bodies{};
    int count = 0;
    Eigen::Vector2d linear = Eigen::Vector2d::Zero();
};

inline Configuration configuration(const Model &model, double t) {
    Configuration c;
    const double mu = model.mu();
    switch (model.kind()) {
    case ModelKind::Cr3bp:
        c.bodies[0] = {1.0 - mu, {-mu, 0.0}};
        c.bodies[1] = {mu, {1.0 - mu, 0.0}};
        c.count = 2;
        break;
    case ModelKind::Bcp: {
        const auto &p = *model.get_if<BcpParams>();
        c.bodies[0] = {1.0 - mu, {-mu, 0.0}};
        c.bodies[1] = {mu, {1.0 - mu, 0.0}};
        c.count = 2;
        if (p.mu0 != 0.0) {
            const double th = perturber_angle(p, t);
            const Eigen::Vector2d dir(std::cos(th), std::sin(th));
            c.bodies[2] = {p.mu0, p.a0 * dir};
            c.count = 3;
            c.linear = (p.mu0 / (p.a0 * p.a0)) * dir;
        }
        break;
    }
    case ModelKind::Er3bp: {
        const auto &p = *model.get_if<Er3bpParams>();
        const auto an = detail::anomalies(p, t);
        const double rho = 1.0 / (1.0 + p.e * std::cos(an.true_anom));
        const Eigen::Vector2d dir(std::cos(an.offset), std::sin(an.offset));
        c.bodies[0] = {1.0 - mu, -mu * rho * dir};
        c.bodies[1] = {mu, (1.0 - mu) * rho * dir};
        c.count = 2;
        break;
    }
    }
    return c;
}

/// Position of the primaries (m1, m2) in the rotating frame at time t.
inline std::array<Eigen::Vector2d, 2> primary_positions(const Model &model, double t) {
    const auto c = configuration(model, t);
    return {c.bodies[0].pos, c.bodies[1].pos};
}

// ---------------------------------------------------------------------------
// Potential, Hamiltonian, vector field, Jacobian
// ---------------------------------------------------------------------------

struct Potential {
    double value = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

/// V(x, y, t) with H = |p|^2 / 2 - x py + y px + V.
inline Potential potential(const Model &model, double x, double y, double t, bool with_hessian = false) {
    const Configuration c = configuration(model, t);
    Potential v;
    const double rc = model.collision_radius();
    for (int k = 0; k < c.count; ++k) {
        const auto &b = c.bodies[k];
        const double dx = x - b.pos.x();
        const double dy = y - b.pos.y();
        const double r2 = dx * dx + dy * dy;
        const double r = std::sqrt(r2);
        if (!(r >= rc)) throw SingularityError("state within collision radius of body " + std::to_string(k));
        const double ir3 = 1.0 / (r2 * r);
        v.value -= b.gm / r;
        v.grad.x() += b.gm * dx * ir3;
        v.grad.y() += b.gm * dy * ir3;
        if (with_hessian) {
            const double ir5 = ir3 / r2;
            v.hess(0, 0) += b.gm * (ir3 - 3.0 * dx * dx * ir5);
            v.hess(1, 1) += b.gm * (ir3 - 3.0 * dy * dy * ir5);
            v.hess(0, 1) -= 3.0 * b.gm * dx * dy * ir5;
        }
    }
    v.value += c.linear.x() * x + c.linear.y() * y;
    v.grad += c.linear;
    v.hess(1, 0) = v.hess(0, 1);
    return v;
}

inline void check_state(const PhaseState &s) {
    if (!s.allFinite()) throw ValidationError("phase state has non-finite components");
}

inline double hamiltonian(const Model &model, const PhaseState &s, double t = 0.0) {
    check_state(s);
    const Potential v = potential(model, s[0], s[1], t);
    return 0.5 * (s[2] * s[2] + s[3] * s[3]) - s[0] * s[3] + s[1] * s[2] + v.value;
}

/// Hamilton's equations: (dx, dy, dpx, dpy) = J grad H.
inline Vec4 vector_field(const Model &model, const PhaseState &s, double t = 0.0) {
    const Potential v = potential(model, s[0], s[1], t);
    return {s[2] + s[1], s[3] - s[0], s[3] - v.grad.x(), -s[2] - v.grad.y()};
}

inline Mat4 jacobian(const Model &model, const PhaseState &s, double t = 0.0) {
    const Potential v = potential(model, s[0], s[1], t, true);
    Mat4 a;
    // clang-format off
    a <<  0.0,          1.0,          1.0, 0.0,
         -1.0,          0.0,          0.0, 1.0,
         -v.hess(0, 0), -v.hess(0, 1), 0.0, 1.0,
         -v.hess(1, 0), -v.hess(1, 1), -1.0, 0.0;
    // clang-format on
    return a;
}

} // namespace ptransit
