// ptransit porbit
// Lagrange periodic orbits as fixed points of the stroboscopic map: Newton
// correction, natural-parameter continuation, and path sampling.
#pragma once

#include <ptransit/integrate.hpp>
#include <ptransit/lagrange.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ptransit {

/// Fixed point of P_theta0 together with the shooting nodes that represent it.
struct PeriodicOrbit {
    Model model;
    double theta0 = 0.0;
    PhaseState x_bar = PhaseState::Zero();
    double period = 0.0;
    /// Norm of the periodicity defect driven to zero by the corrector.
    double residual = 0.0;
    /// |P_theta0(x_bar) - x_bar| from one full-period propagation of x_bar.
    double map_residual = 0.0;
    /// Orbit states at t0 + k T / N, k = 0..N-1 (nodes.front() == x_bar).
    std::vector<PhaseState> nodes;
    int iterations = 0;
    std::vector<double> residual_history;
    std::vector<std::string> warnings;

    double t0() const { return theta0 / model.frequency(); }
};

struct CorrectorSettings {
    double tol = 1e-11;
    int max_iter = 20;
    /// Shooting segments per period; 1 is plain single shooting on P(x) - x.
    int segments = 16;
    IntegratorSettings integrator{};

    void validate() const {
        require(tol > 0.0, "corrector tolerance must be positive");
        require(max_iter >= 1, "max_iter must be >= 1");
        require(segments >= 1, "segments must be >= 1");
        integrator.validate();
    }
};

namespace detail {

struct ShootingSystem {
    Eigen::VectorXd defect;
    Eigen::MatrixXd jac;
};

inline ShootingSystem shooting_system(const Model &model, const std::vector<PhaseState> &nodes, double t0,
                                      double period, const IntegratorSettings &cfg) {
    const int n = static_cast<int>(nodes.size());
    ShootingSystem sys{Eigen::VectorXd::Zero(4 * n), Eigen::MatrixXd::Zero(4 * n, 4 * n)};
    for (int i = 0; i < n; ++i) {
        const double ta = t0 + period * double(i) / n;
        const double tb = i + 1 == n ? t0 + period : t0 + period * double(i + 1) / n;
        const StmResult r = flow_with_stm(model, nodes[i], ta, tb, cfg);
        const int next = (i + 1) % n;
        sys.defect.segment<4>(4 * i) = r.final_state - nodes[next];
        sys.jac.block<4, 4>(4 * i, 4 * i) += r.stm;
        sys.jac.block<4, 4>(4 * i, 4 * next) -= Mat4::Identity();
    }
    return sys;
}

} // namespace detail

/// Newton correction of a periodic orbit from an initial node set (one node
/// per shooting segment, nodes[0] at phase theta0).
inline PeriodicOrbit refine_fixed_point(const Model &model, std::vector<PhaseState> nodes, double theta0,
                                        const CorrectorSettings &settings = {}) {
    settings.validate();
    require(model.is_periodic(), "periodic-orbit correction requires a periodic model");
    require(!nodes.empty(), "at least one shooting node is required");
    for (const auto &x : nodes) check_state(x);

    PeriodicOrbit orbit;
    orbit.model = model;
    orbit.theta0 = theta0;
    orbit.period = model.period();
    const double t0 = phase_time(model, theta0);
    const int n = static_cast<int>(nodes.size());

    for (int k = 0;; ++k) {
        detail::ShootingSystem sys;
        try {
            sys = detail::shooting_system(model, nodes, t0, orbit.period, settings.integrator);
        } catch (const NumericalError &e) {
            throw ConvergenceError(std::string("periodic-orbit correction diverged: ") + e.what());
        }
        const double r = sys.defect.norm();
        orbit.residual_history.push_back(r);
        if (k == 1 && r > orbit.residual_history.front())
            orbit.warnings.push_back("residual grew on the first Newton step; guess may be outside the basin");
        if (r < settings.tol) {
            orbit.residual = r;
            orbit.iterations = k;
            break;
        }
        if (k >= settings.max_iter)
            throw ConvergenceError("periodic-orbit correction did not converge in " + std::to_string(k) +
                                   " iterations (residual " + std::to_string(r) + ")");
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.jac);
        if (lu.rank() < 4 * n || lu.rcond() < 1e-14)
            throw ConvergenceError("singular shooting Jacobian (M - I); the guess is near a resonance");
        const Eigen::VectorXd dx = lu.solve(sys.defect);
        for (int i = 0; i < n; ++i) nodes[i] -= dx.segment<4>(4 * i);
    }

    orbit.x_bar = nodes.front();
    orbit.nodes = std::move(nodes);
    try {
        orbit.map_residual =
            (propagate(model, orbit.x_bar, t0, t0 + orbit.period, settings.integrator) - orbit.x_bar).norm();
    } catch (const NumericalError &) {
        orbit.map_residual = std::numeric_limits<double>::infinity();
    }
    return orbit;
}

/// Newton correction from a single guess; every shooting node starts at it.
inline PeriodicOrbit refine_fixed_point(const Model &model, const PhaseState &guess, double theta0,
                                        const CorrectorSettings &settings = {}) {
    return refine_fixed_point(model, std::vector<PhaseState>(std::max(1, settings.segments), guess), theta0,
                              settings);
}

/// Monodromy matrix as the product of the segment STMs between consecutive
/// shooting nodes, so that no segment strays from the orbit. A single
/// full-period propagation drifts off by sigma times the node error.
inline Mat4 monodromy(const PeriodicOrbit &orbit, const IntegratorSettings &cfg = {}) {
    if (orbit.nodes.size() <= 1) return monodromy(orbit.model, orbit.x_bar, orbit.t0(), orbit.period, cfg);
    const int n = static_cast<int>(orbit.nodes.size());
    const double t0 = orbit.t0();
    Mat4 m = Mat4::Identity();
    for (int i = 0; i < n; ++i) {
        const double ta = t0 + orbit.period * double(i) / n;
        const double tb = i + 1 == n ? t0 + orbit.period : t0 + orbit.period * double(i + 1) / n;
        m = flow_with_stm(orbit.model, orbit.nodes[i], ta, tb, cfg).stm * m;
    }
    return m;
}

/// Inverse monodromy from backward integration of each segment, composed in
/// reverse order.
inline Mat4 inverse_monodromy(const PeriodicOrbit &orbit, const IntegratorSettings &cfg = {}) {
    if (orbit.nodes.size() <= 1)
        return inverse_monodromy(orbit.model, orbit.x_bar, orbit.t0(), orbit.period, cfg);
    const int n = static_cast<int>(orbit.nodes.size());
    const double t0 = orbit.t0();
    Mat4 m = Mat4::Identity();
    for (int i = n; i >= 1; --i) {
        const double tb = i == n ? t0 + orbit.period : t0 + orbit.period * double(i) / n;
        const double ta = t0 + orbit.period * double(i - 1) / n;
        const PhaseState &start = orbit.nodes[i % n];
        m = flow_with_stm(orbit.model, start, tb, ta, cfg).stm * m;
    }
    return m;
}

/// One period sampled uniformly in time (n_samples intervals). Each sample is
/// propagated from the nearest preceding shooting node.
inline Trajectory orbit_path(const PeriodicOrbit &orbit, int n_samples, const IntegratorSettings &cfg = {}) {
    require(n_samples >= 1, "sample count must be >= 1");
    const double t0 = orbit.t0();
    const int n_nodes = static_cast<int>(orbit.nodes.size());
    const std::vector<PhaseState> single{orbit.x_bar};
    const auto &nodes = n_nodes > 0 ? orbit.nodes : single;
    const int nn = static_cast<int>(nodes.size());
    Trajectory traj{orbit.model, {}, {}};
    traj.times.reserve(n_samples + 1);
    traj.states.reserve(n_samples + 1);
    for (int j = 0; j <= n_samples; ++j) {
        const double t = t0 + orbit.period * double(j) / n_samples;
        const int seg = std::min(nn - 1, static_cast<int>(std::floor(double(j) * nn / n_samples)));
        const double ts = t0 + orbit.period * double(seg) / nn;
        traj.times.push_back(t);
        traj.states.push_back(propagate(orbit.model, nodes[seg], ts, t, cfg));
    }
    return traj;
}

/// Crossings of x(t) through its mean over a closed path; a single loop
/// gives 2, a double loop 4.
inline int count_mean_crossings(const Trajectory &path) {
    const std::size_t n = path.size();
    if (n < 3) return 0;
    double mean = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) mean += path.states[i](0);
    mean /= double(n - 1);
    int crossings = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = path.states[i](0) - mean;
        const double b = path.states[i + 1](0) - mean;
        if ((a < 0.0) != (b < 0.0)) ++crossings;
    }
    return crossings;
}

/// Largest position-space distance of the orbit from the CR3BP L1 point.
inline double orbit_amplitude(const PeriodicOrbit &orbit, int n_samples = 256, const IntegratorSettings &cfg = {}) {
    const double xl1 = lagrange_points(orbit.model.mu()).l1;
    const Trajectory path = orbit_path(orbit, n_samples, cfg);
    double amp = 0.0;
    for (const auto &s : path.states) amp = std::max(amp, std::hypot(s(0) - xl1, s(1)));
    return amp;
}

struct ContinuationMember {
    double eps = 0.0;
    PeriodicOrbit orbit;
};

struct ContinuationFamily {
    std::string parameter_name;
    std::vector<ContinuationMember> samples;
    /// Set when the sweep stopped early.
    std::optional<std::string> failure;
    std::optional<double> failed_eps;

    bool complete() const { return !failure.has_value(); }
};

/// Natural-parameter continuation over eps_schedule. Each converged orbit
/// seeds the next; a failed step is retried with up to six halvings.
inline ContinuationFamily continue_family(const std::function<Model(double)> &model_factory,
                                          const PhaseState &guess0, const std::vector<double> &eps_schedule,
                                          double theta0 = 0.0, const CorrectorSettings &settings = {},
                                          std::string parameter_name = "eps") {
    require(!eps_schedule.empty(), "empty continuation schedule");
    for (std::size_t i = 1; i < eps_schedule.size(); ++i)
        require(eps_schedule[i] > eps_schedule[i - 1], "continuation schedule must be strictly increasing");

    ContinuationFamily fam;
    fam.parameter_name = std::move(parameter_name);
    std::vector<PhaseState> seed(std::max(1, settings.segments), guess0);
    double last_eps = eps_schedule.front();
    bool have_last = false;

    for (double target : eps_schedule) {
        double from = have_last ? last_eps : target;
        double step = target - from;
        int halvings = 0;
        std::vector<PhaseState> current = seed;
        std::optional<PeriodicOrbit> reached;
        double at = from;
        while (true) {
            const double eps = have_last ? std::min(target, at + step) : target;
            try {
                PeriodicOrbit po = refine_fixed_point(model_factory(eps), current, theta0, settings);
                current = po.nodes;
                at = eps;
                if (eps >= target) {
                    reached = std::move(po);
                    break;
                }
            } catch (const Error &e) {
                if (!have_last || ++halvings > 6) {
                    fam.failure = e.what();
                    fam.failed_eps = eps;
                    return fam;
                }
                step *= 0.5;
            }
        }
        fam.samples.push_back({target, *reached});
        seed = reached->nodes;
        last_eps = target;
        have_last = true;
    }
    return fam;
}

} // namespace ptransit
