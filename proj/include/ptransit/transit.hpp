// ptransit transit
// Transit and non-transit initial conditions in the saddle-center coordinates
// of a Lagrange periodic orbit, their lift to phase space, and verification
// by nonlinear integration.
#pragma once

#include <ptransit/symmap.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace ptransit {

/// Map-frame coordinates: (q1, p1) saddle, (q2, p2) center.
struct LocalState {
    double q1 = 0.0;
    double p1 = 0.0;
    double q2 = 0.0;
    double p2 = 0.0;

    Vec4 vec() const { return {q1, p1, q2, p2}; }
    static LocalState from(const Vec4 &v) { return {v(0), v(1), v(2), v(3)}; }
};

enum class LocalClass { Transit, NonTransit, Asymptotic, Center };

inline std::string_view to_string(LocalClass c) {
    switch (c) {
    case LocalClass::Transit: return "transit";
    case LocalClass::NonTransit: return "nontransit";
    case LocalClass::Asymptotic: return "asymptotic";
    case LocalClass::Center: return "center";
    }
    return "?";
}

/// Orbit class from the sign of q1 p1.
inline LocalClass classify_local(const LocalState &s) {
    const double prod = s.q1 * s.p1;
    if (prod > 0.0) return LocalClass::Transit;
    if (prod < 0.0) return LocalClass::NonTransit;
    if (s.q1 == 0.0 && s.p1 == 0.0) return LocalClass::Center;
    return LocalClass::Asymptotic;
}

inline double local_energy(const EffectiveHamiltonian &eh, const LocalState &s) { return eh(s.vec()); }

/// n1 is the line p1 - q1 = +c, n2 the line p1 - q1 = -c.
enum class BoundarySide { N1, N2 };

inline std::string_view to_string(BoundarySide s) { return s == BoundarySide::N1 ? "n1" : "n2"; }

struct BoundarySet {
    BoundarySide side = BoundarySide::N1;
    double energy = 0.0;
    double offset = 0.0;
    std::vector<LocalState> transit;
    std::vector<LocalState> nontransit;
    LocalState asymptotic;
};

namespace detail {

/// Saddle coordinate s of the transit endpoint on n1: s (s + c) = h / lambda.
inline double transit_extent(const EffectiveHamiltonian &eh, double h, double c) {
    const double k = h / eh.lambda_tilde;
    return 2.0 * k / (c + std::sqrt(c * c + 4.0 * k));
}

/// Point of n1 (q1 = s, p1 = s + c) or its mirror on n2, with the residual
/// center energy placed at `angle` on its circle.
inline LocalState boundary_point(const EffectiveHamiltonian &eh, double h, double c, double s, double angle,
                                 BoundarySide side) {
    const double q1 = s;
    const double p1 = s + c;
    const double rest = h - eh.lambda_tilde * q1 * p1;
    const double r = rest > 0.0 ? std::sqrt(2.0 * rest / eh.nu_tilde) : 0.0;
    const double sign = side == BoundarySide::N1 ? 1.0 : -1.0;
    return {sign * q1, sign * p1, r * std::cos(angle), r * std::sin(angle)};
}

inline void check_boundary_inputs(const EffectiveHamiltonian &eh, double h, double c) {
    require(h > 0.0 && std::isfinite(h), "energy h must be positive");
    require(c > 0.0 && std::isfinite(c), "offset c must be positive");
    require(eh.lambda_tilde > 0.0 && eh.nu_tilde > 0.0, "effective rates must be positive");
}

} // namespace detail

/// Samples of one bounding line on the energy surface H2 = h. Transit samples
/// run over the entering sub-interval with q1 p1 in (0, h/lambda]; the last
/// one sits where the center circle shrinks to a point. Non-transit samples
/// cover the entering part with q1 p1 < 0.
inline BoundarySet boundary_set(const EffectiveHamiltonian &eh, double h, double c, int n,
                                BoundarySide side = BoundarySide::N1, double center_angle = 0.0) {
    detail::check_boundary_inputs(eh, h, c);
    require(n >= 1, "sample count must be >= 1");
    BoundarySet set;
    set.side = side;
    set.energy = h;
    set.offset = c;
    const double s_max = detail::transit_extent(eh, h, c);
    set.transit.reserve(n);
    set.nontransit.reserve(n);
    for (int k = 0; k < n; ++k) {
        const double s = s_max * double(k + 1) / n;
        set.transit.push_back(detail::boundary_point(eh, h, c, s, center_angle, side));
    }
    for (int k = 0; k < n; ++k) {
        const double s = -0.5 * c * (double(k) + 0.5) / n;
        set.nontransit.push_back(detail::boundary_point(eh, h, c, s, center_angle, side));
    }
    set.asymptotic = detail::boundary_point(eh, h, c, 0.0, center_angle, side);
    return set;
}

/// Full center-circle sweep of a boundary set (n_angle points per saddle sample).
inline std::vector<LocalState> sweep_circle(const std::vector<LocalState> &samples, int n_angle) {
    require(n_angle >= 1, "angle count must be >= 1");
    std::vector<LocalState> out;
    out.reserve(samples.size() * n_angle);
    for (const auto &p : samples) {
        const double r = std::hypot(p.q2, p.p2);
        for (int j = 0; j < n_angle; ++j) {
            const double a = kTwoPi * j / n_angle;
            out.push_back({p.q1, p.p1, r * std::cos(a), r * std::sin(a)});
        }
    }
    return out;
}

/// Saddle-center frame transported to phase theta: x_bar(theta) and
/// C_theta = Phi(t_theta, t_orbit) C.
struct PhaseFrame {
    double theta = 0.0;
    double time = 0.0;
    PhaseState x_bar = PhaseState::Zero();
    Mat4 c = Mat4::Identity();
    Mat4 c_inv = Mat4::Identity();
};

inline PhaseFrame phase_frame(const MapEigenbasis &basis, const PeriodicOrbit &orbit, double theta,
                              const IntegratorSettings &cfg = {}) {
    PhaseFrame f;
    f.theta = theta;
    const double dtheta = theta - orbit.theta0 - kTwoPi * std::floor((theta - orbit.theta0) / kTwoPi);
    const double t0 = orbit.t0();
    f.time = t0 + dtheta / orbit.model.frequency();
    if (dtheta == 0.0) {
        f.x_bar = orbit.x_bar;
        f.c = basis.c;
    } else {
        const StmResult r = flow_with_stm(orbit.model, orbit.x_bar, t0, f.time, cfg);
        f.x_bar = r.final_state;
        f.c = r.stm * basis.c;
        // The flow stretches u and shrinks s; restore the unit-balanced
        // scaling and the sign and rotation conventions of the base frame.
        const Mat4 j = physical_j();
        Vec4 u = f.c.col(0).normalized(), s = f.c.col(1).normalized();
        Vec4 c3 = f.c.col(2), c4 = f.c.col(3);
        detail::normalize_saddle_pair(u, s, j);
        detail::normalize_center_pair(c3, c4, j);
        f.c << u, s, c3, c4;
    }
    f.c_inv = f.c.inverse();
    return f;
}

/// Linear-validity bound on |s| used for warnings.
inline constexpr double kLinearBound = 1e-2;

inline bool exceeds_linear_bound(const LocalState &s, double bound = kLinearBound) { return s.vec().norm() > bound; }

inline PhaseState to_physical(const PhaseFrame &f, const LocalState &s) { return f.x_bar + f.c * s.vec(); }

inline LocalState to_local(const PhaseFrame &f, const PhaseState &x) {
    return LocalState::from(f.c_inv * (x - f.x_bar));
}

inline PhaseState to_physical(const MapEigenbasis &basis, const PeriodicOrbit &orbit, const LocalState &s,
                              double theta, const IntegratorSettings &cfg = {}) {
    return to_physical(phase_frame(basis, orbit, theta, cfg), s);
}

// ---------------------------------------------------------------------------
// Nonlinear verification
// ---------------------------------------------------------------------------

/// Side of the detection window: Left is x < x_L1 - d (Earth), Right is x > x_L1 + d (Moon).
enum class Realm { None, Left, Right };

inline std::string_view to_string(Realm r) {
    switch (r) {
    case Realm::Left: return "earth";
    case Realm::Right: return "moon";
    case Realm::None: return "none";
    }
    return "?";
}

enum class TransitClass { Transit, NonTransit, Bounded, Undecided };

inline std::string_view to_string(TransitClass c) {
    switch (c) {
    case TransitClass::Transit: return "transit";
    case TransitClass::NonTransit: return "nontransit";
    case TransitClass::Bounded: return "bounded";
    case TransitClass::Undecided: return "undecided";
    }
    return "?";
}

struct TransitWindow {
    double x_center = 0.0;     ///< x of the CR3BP L1 point
    double half_width = 0.15;  ///< d
    double max_time = 0.0;     ///< per direction; 0 means six model periods
    bool backward = true;      ///< also integrate backwards to find the entry side
    bool keep_trajectory = true;

    static TransitWindow around_l1(const Model &model) {
        return {lagrange_points(model.mu()).l1, 0.15, 0.0, true, true};
    }
};

struct TransitOutcome {
    TransitClass classification = TransitClass::Undecided;
    Realm entry_side = Realm::None;
    Realm exit_side = Realm::None;
    double exit_time = 0.0;
    double entry_time = 0.0;
    Trajectory trajectory;
    std::string note;
};

namespace detail {

struct WindowExit {
    Realm side = Realm::None;
    double time = 0.0;
};

inline WindowExit run_to_window_exit(const Model &model, const PhaseState &ic, double t0, double t1,
                                     const TransitWindow &w, const IntegratorSettings &cfg, Trajectory *sink) {
    WindowExit out;
    Vec4 y = ic;
    double h = 0.0;
    IntegratorSettings c = cfg;
    c.max_time = std::max(cfg.max_time, std::abs(t1 - t0));
    detail::dopri5<4>([&](double t, const Vec4 &s) { return vector_field(model, s, t); }, y, t0, t1, c,
                      [&](double t, const Vec4 &s) {
                          if (sink) {
                              sink->times.push_back(t);
                              sink->states.push_back(s);
                          }
                          const double dx = s(0) - w.x_center;
                          if (std::abs(dx) > w.half_width) {
                              out.side = dx < 0.0 ? Realm::Left : Realm::Right;
                              out.time = t;
                              return false;
                          }
                          return true;
                      },
                      h);
    return out;
}

} // namespace detail

/// Integrates ic from phase theta0 forwards (and backwards) until it leaves
/// the window |x - x_L1| <= d. Differing exit sides mean transit.
inline TransitOutcome verify_transit(const Model &model, const PhaseState &ic, double theta0,
                                     const TransitWindow &window, const IntegratorSettings &cfg = {}) {
    cfg.validate();
    check_state(ic);
    require(window.half_width > 0.0, "window half-width must be positive");
    const double span = window.max_time > 0.0 ? window.max_time : 6.0 * model.period();
    const double t0 = model.is_periodic() ? phase_time(model, theta0) : 0.0;

    TransitOutcome out;
    out.trajectory.model = model;
    Trajectory back{model, {}, {}}, fwd{model, {t0}, {ic}};
    try {
        const auto f = detail::run_to_window_exit(model, ic, t0, t0 + span, window, cfg,
                                                  window.keep_trajectory ? &fwd : nullptr);
        out.exit_side = f.side;
        out.exit_time = f.time;
        if (window.backward) {
            const auto b = detail::run_to_window_exit(model, ic, t0, t0 - span, window, cfg,
                                                      window.keep_trajectory ? &back : nullptr);
            out.entry_side = b.side;
            out.entry_time = b.time;
        } else {
            const double dx = ic(0) - window.x_center;
            out.entry_side = dx < 0.0 ? Realm::Left : Realm::Right;
        }
        if (out.exit_side == Realm::None || out.entry_side == Realm::None)
            out.classification = TransitClass::Bounded;
        else
            out.classification = out.exit_side != out.entry_side ? TransitClass::Transit : TransitClass::NonTransit;
    } catch (const NumericalError &e) {
        out.classification = TransitClass::Undecided;
        out.note = e.what();
    }
    if (window.keep_trajectory) {
        auto &tr = out.trajectory;
        tr.times.assign(back.times.rbegin(), back.times.rend());
        tr.states.assign(back.states.rbegin(), back.states.rend());
        tr.times.insert(tr.times.end(), fwd.times.begin(), fwd.times.end());
        tr.states.insert(tr.states.end(), fwd.states.begin(), fwd.states.end());
    }
    return out;
}

/// Expected nonlinear outcome for a local class (Asymptotic and Center have none).
inline std::optional<TransitClass> expected_outcome(LocalClass c) {
    if (c == LocalClass::Transit) return TransitClass::Transit;
    if (c == LocalClass::NonTransit) return TransitClass::NonTransit;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Transit cap and iteration in the linear model
// ---------------------------------------------------------------------------

struct CapSample {
    int saddle_index = 0;
    int angle_index = 0;
    LocalState local;
    PhaseState physical = PhaseState::Zero();
};

/// Transit cap on one bounding line: saddle coordinate over the transit
/// sub-interval times the full center circle, lifted through `frame`.
inline std::vector<CapSample> transit_cap(const PhaseFrame &frame, const EffectiveHamiltonian &eh, double h,
                                          double c, int n_saddle, int n_angle,
                                          BoundarySide side = BoundarySide::N1) {
    detail::check_boundary_inputs(eh, h, c);
    require(n_saddle >= 1 && n_angle >= 1, "cap grid must have at least one point per axis");
    const double s_max = detail::transit_extent(eh, h, c);
    std::vector<CapSample> cap;
    cap.reserve(std::size_t(n_saddle) * n_angle);
    for (int i = 0; i < n_saddle; ++i) {
        const double s = s_max * double(i + 1) / n_saddle;
        for (int j = 0; j < n_angle; ++j) {
            CapSample p;
            p.saddle_index = i;
            p.angle_index = j;
            p.local = detail::boundary_point(eh, h, c, s, kTwoPi * j / n_angle, side);
            p.physical = to_physical(frame, p.local);
            cap.push_back(p);
        }
    }
    return cap;
}

/// Lambda^k applied in map coordinates.
inline LocalState apply_normal_form(const LocalState &s, double sigma, double psi, int k) {
    const double g = std::pow(sigma, k);
    const double a = k * psi;
    const double ca = std::cos(a), sa = std::sin(a);
    return {s.q1 * g, s.p1 / g, ca * s.q2 + sa * s.p2, -sa * s.q2 + ca * s.p2};
}

struct IterateResult {
    LocalState state;
    /// The iterate lies beyond the bounding line opposite to the start.
    bool crossed_opposite = false;
};

/// Side of the equilibrium strip |p1 - q1| < c: +1 beyond n1, -1 beyond n2, 0 inside.
inline int strip_side(const LocalState &s, double c) {
    const double d = s.p1 - s.q1;
    if (d >= c) return 1;
    if (d <= -c) return -1;
    return 0;
}

inline IterateResult iterate_region(const LocalState &s, const NormalForm &nf, int k, double c) {
    IterateResult r;
    r.state = apply_normal_form(s, nf.sigma, nf.psi, k);
    const double d0 = s.p1 - s.q1;
    const int start = d0 > 0.0 ? 1 : (d0 < 0.0 ? -1 : 0);
    r.crossed_opposite = start != 0 && strip_side(r.state, c) == -start;
    return r;
}

/// Iterates needed for q1 = delta to exceed c under the saddle block.
inline int iterates_to_exceed(double delta, double c, double sigma) {
    require(delta > 0.0 && c > 0.0 && sigma > 1.0, "need delta, c > 0 and sigma > 1");
    return static_cast<int>(std::ceil(std::log(c / delta) / std::log(sigma)));
}

} // namespace ptransit
