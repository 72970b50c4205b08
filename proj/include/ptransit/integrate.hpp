// ptransit integrate
// Adaptive Dormand-Prince 5(4) propagation of phase states and of the
// 20-dimensional state + variational system; stroboscopic maps and
// monodromy matrices.
#pragma once

#include <ptransit/models.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace ptransit {

struct IntegratorSettings {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double max_time = 1e4; ///< longest admissible integration span
    long max_steps = 20'000'000;

    void validate() const {
        require(rel_tol > 0.0 && std::isfinite(rel_tol), "rel_tol must be positive");
        require(abs_tol > 0.0 && std::isfinite(abs_tol), "abs_tol must be positive");
        require(max_step > 0.0, "max_step must be positive");
        require(max_time > 0.0, "max_time must be positive");
        require(max_steps > 0, "max_steps must be positive");
    }
};

/// Sampled solution of the flow map, ordered in the direction of integration.
struct Trajectory {
    Model model;
    std::vector<double> times;
    std::vector<PhaseState> states;

    std::size_t size() const { return times.size(); }
    const PhaseState &front() const { return states.front(); }
    const PhaseState &back() const { return states.back(); }
};

/// Final state and state transition matrix Phi(t1, t0).
struct StmResult {
    PhaseState final_state;
    Mat4 stm;
};

namespace detail {

template <int N> using VecN = Eigen::Matrix<double, N, 1>;

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    // b - b_hat
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

/// Integrates y' = f(t, y) from t0 towards t1, calling observer(t, y) after
/// every accepted step. The observer returns false to stop early. Returns the
/// time reached. `h` carries the step size between calls (0 = choose).
template <int N, typename Rhs, typename Observer>
double dopri5(Rhs &&f, VecN<N> &y, double t0, double t1, const IntegratorSettings &cfg, Observer &&observer,
              double &h) {
    using V = VecN<N>;
    using T = Dopri5;
    if (t1 == t0) return t0;
    if (std::abs(t1 - t0) > cfg.max_time) throw NumericalError("integration span exceeds max_time");
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    const double hmax = std::min(cfg.max_step, span);

    auto scale = [&](const V &a, const V &b) {
        return (cfg.abs_tol + cfg.rel_tol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix().eval();
    };

    double t = t0;
    V k1 = f(t, y);
    if (!(h > 0.0)) {
        const V sc = scale(y, y);
        const double d0 = (y.array() / sc.array()).matrix().norm() / std::sqrt(double(N));
        const double d1 = (k1.array() / sc.array()).matrix().norm() / std::sqrt(double(N));
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min(h, hmax);
    }
    h = std::min(std::abs(h), hmax);

    constexpr double beta = 0.04;
    constexpr double alpha = 0.2 - 0.75 * beta;
    constexpr double safety = 0.9;
    double err_old = 1e-4;
    long steps = 0;
    bool last_rejected = false;

    while (dir * (t1 - t) > 0.0) {
        if (++steps > cfg.max_steps) throw NumericalError("maximum number of integration steps exceeded");
        bool final_step = false;
        if (h >= std::abs(t1 - t)) {
            h = std::abs(t1 - t);
            final_step = true;
        }
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw NumericalError("step size underflow at t = " + std::to_string(t));
        const double hs = dir * h;

        const V k2 = f(t + T::c2 * hs, (y + hs * (T::a21 * k1)).eval());
        const V k3 = f(t + T::c3 * hs, (y + hs * (T::a31 * k1 + T::a32 * k2)).eval());
        const V k4 = f(t + T::c4 * hs, (y + hs * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3)).eval());
        const V k5 =
            f(t + T::c5 * hs, (y + hs * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4)).eval());
        const V k6 = f(t + hs, (y + hs * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5))
                                   .eval());
        const V y_new = y + hs * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
        const double t_new = final_step ? t1 : t + hs;
        const V k7 = f(t_new, y_new);
        const V err_vec = hs * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
        const V sc = scale(y, y_new);
        const double err = (err_vec.array() / sc.array()).matrix().norm() / std::sqrt(double(N));
        if (!std::isfinite(err)) throw NumericalError("non-finite state during integration");

        const double fac11 = std::pow(err, alpha);
        if (err <= 1.0) {
            double fac = fac11 / std::pow(err_old, beta);
            fac = std::clamp(fac / safety, 0.2, 10.0);
            double h_new = h / fac;
            if (last_rejected) h_new = std::min(h_new, h);
            err_old = std::max(err, 1e-4);
            y = y_new;
            k1 = k7;
            t = t_new;
            last_rejected = false;
            if (!final_step) h = std::min(h_new, hmax);
            if (!observer(t, y)) return t;
        } else {
            h = h / std::min(10.0, fac11 / safety);
            last_rejected = true;
        }
    }
    return t;
}

template <int N, typename Rhs>
double dopri5(Rhs &&f, VecN<N> &y, double t0, double t1, const IntegratorSettings &cfg) {
    double h = 0.0;
    return dopri5<N>(std::forward<Rhs>(f), y, t0, t1, cfg, [](double, const VecN<N> &) { return true; }, h);
}

using Vec20 = VecN<20>;

inline Vec20 stm_rhs(const Model &model, double t, const Vec20 &z) {
    const PhaseState s = z.head<4>();
    Vec20 dz;
    dz.head<4>() = vector_field(model, s, t);
    const Mat4 a = jacobian(model, s, t);
    Eigen::Map<const Mat4> phi(z.data() + 4);
    Eigen::Map<Mat4> dphi(dz.data() + 4);
    dphi = a * phi;
    return dz;
}

} // namespace detail

/// Flow map phi(t1, t0; s0); samples at every accepted step, ending exactly at t1.
inline Trajectory flow(const Model &model, const PhaseState &s0, double t0, double t1,
                       const IntegratorSettings &cfg = {}) {
    cfg.validate();
    check_state(s0);
    Trajectory traj{model, {t0}, {s0}};
    Vec4 y = s0;
    double h = 0.0;
    detail::dopri5<4>([&](double t, const Vec4 &s) { return vector_field(model, s, t); }, y, t0, t1, cfg,
                      [&](double t, const Vec4 &s) {
                          traj.times.push_back(t);
                          traj.states.push_back(s);
                          return true;
                      },
                      h);
    return traj;
}

/// Final state of the flow without storing intermediate samples.
inline PhaseState propagate(const Model &model, const PhaseState &s0, double t0, double t1,
                            const IntegratorSettings &cfg = {}) {
    cfg.validate();
    check_state(s0);
    Vec4 y = s0;
    detail::dopri5<4>([&](double t, const Vec4 &s) { return vector_field(model, s, t); }, y, t0, t1, cfg);
    return y;
}

/// Flow sampled on a uniform time grid of n + 1 points from t0 to t1.
inline Trajectory flow_uniform(const Model &model, const PhaseState &s0, double t0, double t1, int n,
                               const IntegratorSettings &cfg = {}) {
    cfg.validate();
    check_state(s0);
    require(n >= 1, "sample count must be >= 1");
    Trajectory traj{model, {t0}, {s0}};
    Vec4 y = s0;
    double h = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double ta = t0 + (t1 - t0) * double(k - 1) / n;
        const double tb = k == n ? t1 : t0 + (t1 - t0) * double(k) / n;
        detail::dopri5<4>([&](double t, const Vec4 &s) { return vector_field(model, s, t); }, y, ta, tb, cfg,
                          [](double, const Vec4 &) { return true; }, h);
        traj.times.push_back(tb);
        traj.states.push_back(y);
    }
    return traj;
}

/// Co-integrates the state and the variational equations Phi' = DF Phi.
inline StmResult flow_with_stm(const Model &model, const PhaseState &s0, double t0, double t1,
                               const IntegratorSettings &cfg = {}) {
    cfg.validate();
    check_state(s0);
    detail::Vec20 z;
    z.head<4>() = s0;
    Eigen::Map<Mat4>(z.data() + 4).setIdentity();
    detail::dopri5<20>([&](double t, const detail::Vec20 &v) { return detail::stm_rhs(model, t, v); }, z, t0, t1,
                       cfg);
    return {z.head<4>(), Eigen::Map<const Mat4>(z.data() + 4)};
}

/// Time at which the perturbation has phase theta0.
inline double phase_time(const Model &model, double theta0) { return theta0 / model.frequency(); }

/// n-fold stroboscopic map P_theta0^n (negative n integrates backwards).
inline PhaseState stroboscopic_map(const Model &model, const PhaseState &s0, double theta0, int n,
                                   const IntegratorSettings &cfg = {}) {
    require(model.is_periodic(), "stroboscopic map requires a periodic model");
    const double t0 = phase_time(model, theta0);
    if (n == 0) return s0;
    return propagate(model, s0, t0, t0 + n * model.period(), cfg);
}

/// Phi(t0 + period, t0) along the trajectory through x at t0.
inline Mat4 monodromy(const Model &model, const PhaseState &x, double t0, double period,
                      const IntegratorSettings &cfg = {}) {
    return flow_with_stm(model, x, t0, t0 + period, cfg).stm;
}

/// Phi(t0 - period, t0): the inverse monodromy, integrated backwards in time.
inline Mat4 inverse_monodromy(const Model &model, const PhaseState &x, double t0, double period,
                              const IntegratorSettings &cfg = {}) {
    return flow_with_stm(model, x, t0, t0 - period, cfg).stm;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are
/// rethrown after all workers finish.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)> &fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace ptransit
