// ptransit cli
// Run configuration and the command implementations behind the ptransit
// executable. Each command returns a RunReport; files are written only when
// an output directory is given.
#pragma once

#include <ptransit/io.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ptransit::cli {

using io::json;

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<double> rel_tol;
    std::optional<double> abs_tol;
    unsigned threads = 0; ///< 0 = hardware concurrency
};

struct TransitSpec {
    double h = 0.0;
    double c = 0.0;
    std::vector<BoundarySide> sides{BoundarySide::N1, BoundarySide::N2};
    int samples = 40;
    std::vector<double> thetas{0.0};
    double center_angle = 0.0;
    int angles = 1; ///< > 1 sweeps the full center circle
    double half_width = 0.15;
    double max_periods = 6.0;
    bool trajectories = true;
};

struct CapSpec {
    double h = 0.0;
    double c = 0.0;
    int n_saddle = 20;
    int n_angle = 16;
    BoundarySide side = BoundarySide::N1;
    bool nonlinear_images = false;
};

struct ContinuationSpec {
    std::string parameter; ///< "e_scale" (ER3BP) or "mu0_scale" (BCP)
    double from = 0.0;
    double to = 1.0;
    double step = 0.05;
    bool paths = true;
};

struct RunConfig {
    json raw;
    Model model;
    std::optional<PhaseState> guess;
    double theta0 = 0.0;
    CorrectorSettings corrector;
    int path_samples = 512;
    int stagnation_samples = 0;
    std::optional<TransitSpec> transit;
    std::optional<CapSpec> cap;
    std::optional<ContinuationSpec> continuation;
};

/// Reference L1 periodic-orbit initial conditions at phase 0.
inline std::optional<PhaseState> default_guess(const Model &m) {
    switch (m.kind()) {
    case ModelKind::Bcp: return PhaseState(0.837595408485656, 0.0, 0.0, 0.827678389393936);
    case ModelKind::Er3bp: return PhaseState(0.792718947200736, 0.0, 0.000001145970495, 0.886145419995798);
    default: return std::nullopt;
    }
}

/// Demonstration (h, c) pairs for the saddle-center boundary.
inline std::pair<double, double> default_energy_offset(const Model &m) {
    return m.kind() == ModelKind::Er3bp ? std::pair{1e-8, 4e-5} : std::pair{1e-6, 1e-4};
}

namespace detail {

inline BoundarySide side_from(const std::string &s) {
    if (s == "n1") return BoundarySide::N1;
    if (s == "n2") return BoundarySide::N2;
    throw ValidationError("side must be 'n1', 'n2' or 'both'");
}

inline std::vector<BoundarySide> sides_from(const std::string &s) {
    if (s == "both") return {BoundarySide::N1, BoundarySide::N2};
    return {side_from(s)};
}

inline void positive(double v, const std::string &what) {
    require(v > 0.0 && std::isfinite(v), what + " must be positive");
}

} // namespace detail

inline RunConfig parse_config(const json &j, const CommonOptions &opts = {}) {
    RunConfig cfg;
    cfg.raw = j;
    io::ObjectReader r(j, "config");
    cfg.model = io::model_from_json(r.sub("model"));
    if (r.has("guess"))
        cfg.guess = io::state_from_json(r.sub("guess"), "guess");
    else
        cfg.guess = default_guess(cfg.model);
    cfg.theta0 = r.get("theta0", 0.0);
    cfg.path_samples = r.get("path_samples", cfg.path_samples);
    require(cfg.path_samples >= 2, "path_samples must be >= 2");
    cfg.stagnation_samples = r.get("stagnation_samples", 0);
    require(cfg.stagnation_samples >= 0, "stagnation_samples must be >= 0");

    if (r.has("integrator")) {
        io::ObjectReader s(r.sub("integrator"), "integrator");
        auto &g = cfg.corrector.integrator;
        g.rel_tol = s.get("rel_tol", g.rel_tol);
        g.abs_tol = s.get("abs_tol", g.abs_tol);
        g.max_step = s.get("max_step", g.max_step);
        g.max_time = s.get("max_time", g.max_time);
        s.finish();
    }
    if (opts.rel_tol) cfg.corrector.integrator.rel_tol = *opts.rel_tol;
    if (opts.abs_tol) cfg.corrector.integrator.abs_tol = *opts.abs_tol;
    if (r.has("corrector")) {
        io::ObjectReader s(r.sub("corrector"), "corrector");
        cfg.corrector.tol = s.get("tol", cfg.corrector.tol);
        cfg.corrector.max_iter = s.get("max_iter", cfg.corrector.max_iter);
        cfg.corrector.segments = s.get("segments", cfg.corrector.segments);
        s.finish();
    }
    cfg.corrector.validate();

    const auto [h0, c0] = default_energy_offset(cfg.model);
    if (r.has("transit")) {
        io::ObjectReader s(r.sub("transit"), "transit");
        TransitSpec t;
        t.h = s.get("h", h0);
        t.c = s.get("c", c0);
        t.sides = detail::sides_from(s.get<std::string>("side", "both"));
        t.samples = s.get("samples", t.samples);
        t.thetas = s.get("thetas", t.thetas);
        t.center_angle = s.get("center_angle", t.center_angle);
        t.angles = s.get("angles", t.angles);
        t.half_width = s.get("half_width", t.half_width);
        t.max_periods = s.get("max_periods", t.max_periods);
        t.trajectories = s.get("trajectories", t.trajectories);
        s.finish();
        detail::positive(t.h, "transit.h");
        detail::positive(t.c, "transit.c");
        detail::positive(t.half_width, "transit.half_width");
        detail::positive(t.max_periods, "transit.max_periods");
        require(t.samples >= 1 && t.angles >= 1, "transit sample counts must be >= 1");
        require(!t.thetas.empty(), "transit.thetas must not be empty");
        cfg.transit = t;
    }
    if (r.has("cap")) {
        io::ObjectReader s(r.sub("cap"), "cap");
        CapSpec c;
        c.h = s.get("h", h0);
        c.c = s.get("c", c0);
        c.n_saddle = s.get("n_saddle", c.n_saddle);
        c.n_angle = s.get("n_angle", c.n_angle);
        c.side = detail::side_from(s.get<std::string>("side", "n1"));
        const auto images = s.get<std::string>("images", "linear");
        require(images == "linear" || images == "nonlinear", "cap.images must be 'linear' or 'nonlinear'");
        c.nonlinear_images = images == "nonlinear";
        s.finish();
        detail::positive(c.h, "cap.h");
        detail::positive(c.c, "cap.c");
        require(c.n_saddle >= 1 && c.n_angle >= 1, "cap grid must be at least 1 x 1");
        cfg.cap = c;
    }
    if (r.has("continuation")) {
        io::ObjectReader s(r.sub("continuation"), "continuation");
        ContinuationSpec c;
        c.parameter = s.require<std::string>("parameter");
        c.from = s.get("from", c.from);
        c.to = s.get("to", c.to);
        c.step = s.get("step", c.step);
        c.paths = s.get("paths", c.paths);
        s.finish();
        require(c.parameter == "e_scale" || c.parameter == "mu0_scale",
                "continuation.parameter must be 'e_scale' or 'mu0_scale'");
        require(c.parameter != "e_scale" || cfg.model.kind() == ModelKind::Er3bp, "e_scale needs an er3bp model");
        require(c.parameter != "mu0_scale" || cfg.model.kind() == ModelKind::Bcp, "mu0_scale needs a bcp model");
        detail::positive(c.step, "continuation.step");
        require(c.to > c.from, "continuation.to must exceed continuation.from");
        cfg.continuation = c;
    }
    r.finish();
    return cfg;
}

inline RunConfig load_config(const CommonOptions &opts) {
    require(!opts.config_path.empty(), "--config is required");
    std::ifstream f(opts.config_path);
    if (!f) throw ValidationError("cannot read config '" + opts.config_path + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error &e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j, opts);
}

/// Mutable state shared by the stages of one command; `stage` labels errors.
struct RunContext {
    CommonOptions opts;
    std::string stage;
    std::vector<std::string> warnings;

    bool writes() const { return !opts.out_dir.empty(); }

    std::string path(const std::string &name) const {
        const auto p = std::filesystem::path(opts.out_dir) / name;
        std::filesystem::create_directories(p.parent_path());
        return p.string();
    }
};

struct RunReport {
    std::string command;
    json inputs;
    json outputs;
    double wall_time = 0.0;
    std::vector<std::string> warnings;

    /// Deterministic part (no timing) written next to the outputs.
    json record() const {
        return {{"command", command}, {"inputs", inputs}, {"outputs", outputs}, {"warnings", warnings}};
    }

    json to_json() const {
        json j = record();
        j["wall_time"] = wall_time;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct Analysis {
    PeriodicOrbit orbit;
    Mat4 m = Mat4::Identity();
    NormalForm nf;
    MapEigenbasis basis;
    EffectiveHamiltonian eh;
    json summary;
};

inline PeriodicOrbit find_orbit(const RunConfig &cfg, RunContext &ctx) {
    ctx.stage = "find-po";
    require(cfg.model.is_periodic(), "find-po needs a bcp or er3bp model");
    require(cfg.guess.has_value(), "no initial guess given");
    PeriodicOrbit po = refine_fixed_point(cfg.model, *cfg.guess, cfg.theta0, cfg.corrector);
    for (const auto &w : po.warnings) ctx.warnings.push_back("find-po: " + w);
    return po;
}

inline Analysis analyze(const RunConfig &cfg, RunContext &ctx) {
    Analysis a;
    a.orbit = find_orbit(cfg, ctx);
    ctx.stage = "monodromy";
    const auto &icfg = cfg.corrector.integrator;
    a.m = monodromy(a.orbit, icfg);
    ctx.stage = "normal-form";
    a.nf = normal_form(a.m, a.orbit.period);
    a.basis = symplectic_eigenbasis(a.m, a.nf);
    a.basis.orbit_ref = a.orbit;
    a.eh = effective_hamiltonian(a.nf, a.orbit.period);
    const auto res = eigenbasis_residuals(a.m, a.nf, a.basis);
    const auto spec = spectrum(a.m, inverse_monodromy(a.orbit, icfg));
    a.summary = {{"sigma", a.nf.sigma},
                 {"psi", a.nf.psi},
                 {"psi_basis", a.basis.psi_basis},
                 {"lambda_tilde", a.eh.lambda_tilde},
                 {"nu_tilde", a.eh.nu_tilde},
                 {"period", a.orbit.period},
                 {"C", io::mat_json(a.basis.c)},
                 {"monodromy", io::mat_json(a.m)},
                 {"residuals",
                  {{"monodromy_symplectic", symplectic_defect(a.m)},
                   {"basis_symplectic", res.symplectic},
                   {"similarity", res.similarity},
                   {"generator_flow", verify_proposition_1(a.eh, a.nf)},
                   {"reciprocity", spec.reciprocity},
                   {"orbit_residual", a.orbit.residual},
                   {"map_residual", a.orbit.map_residual}}}};
    return a;
}

inline json run_transit(const RunConfig &cfg, const Analysis &a, RunContext &ctx) {
    ctx.stage = "transit-demo";
    const TransitSpec t = cfg.transit.value_or(TransitSpec{default_energy_offset(cfg.model).first,
                                                           default_energy_offset(cfg.model).second});
    const auto &icfg = cfg.corrector.integrator;
    TransitWindow win = TransitWindow::around_l1(cfg.model);
    win.half_width = t.half_width;
    win.max_time = t.max_periods * cfg.model.period();
    win.keep_trajectory = t.trajectories && ctx.writes();

    struct Job {
        std::size_t theta_index;
        BoundarySide side;
        bool transit_segment;
        int index;
        LocalState local;
    };
    std::vector<Job> jobs;
    std::vector<PhaseFrame> frames;
    for (std::size_t ti = 0; ti < t.thetas.size(); ++ti) {
        frames.push_back(phase_frame(a.basis, a.orbit, t.thetas[ti], icfg));
        for (auto side : t.sides) {
            const auto set = boundary_set(a.eh, t.h, t.c, t.samples, side, t.center_angle);
            const auto tr = t.angles > 1 ? sweep_circle(set.transit, t.angles) : set.transit;
            const auto nt = t.angles > 1 ? sweep_circle(set.nontransit, t.angles) : set.nontransit;
            for (std::size_t k = 0; k < tr.size(); ++k) jobs.push_back({ti, side, true, int(k), tr[k]});
            for (std::size_t k = 0; k < nt.size(); ++k) jobs.push_back({ti, side, false, int(k), nt[k]});
        }
    }
    std::vector<TransitOutcome> outcomes(jobs.size());
    bool linear_warned = false;
    for (const auto &j : jobs) linear_warned = linear_warned || exceeds_linear_bound(j.local);
    if (linear_warned) ctx.warnings.push_back("transit-demo: boundary samples exceed the linear-validity bound");
    parallel_for(jobs.size(), ctx.opts.threads, [&](std::size_t i) {
        const auto &j = jobs[i];
        const double theta = t.thetas[j.theta_index];
        outcomes[i] = verify_transit(cfg.model, to_physical(frames[j.theta_index], j.local), theta, win, icfg);
    });

    int n_transit = 0, n_nontransit = 0, n_bounded = 0, n_undecided = 0;
    json mismatches = json::array();
    json per_phase = json::array();
    for (std::size_t ti = 0; ti < t.thetas.size(); ++ti)
        per_phase.push_back({{"theta", t.thetas[ti]}, {"samples", 0}, {"mismatches", 0}});
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto &j = jobs[i];
        const auto &o = outcomes[i];
        switch (o.classification) {
        case TransitClass::Transit: ++n_transit; break;
        case TransitClass::NonTransit: ++n_nontransit; break;
        case TransitClass::Bounded: ++n_bounded; break;
        case TransitClass::Undecided: ++n_undecided; break;
        }
        auto &ph = per_phase[j.theta_index];
        ph["samples"] = ph["samples"].get<int>() + 1;
        const auto expected = expected_outcome(classify_local(j.local));
        if (expected != o.classification) {
            ph["mismatches"] = ph["mismatches"].get<int>() + 1;
            mismatches.push_back({{"theta", t.thetas[j.theta_index]},
                                  {"side", std::string(to_string(j.side))},
                                  {"segment", j.transit_segment ? "transit" : "nontransit"},
                                  {"index", j.index},
                                  {"q1", j.local.q1},
                                  {"p1", j.local.p1},
                                  {"expected", expected ? std::string(to_string(*expected)) : "none"},
                                  {"got", std::string(to_string(o.classification))},
                                  {"entry", std::string(to_string(o.entry_side))},
                                  {"exit", std::string(to_string(o.exit_side))}});
        }
        if (win.keep_trajectory) {
            std::ostringstream name;
            name << "transit/theta" << j.theta_index << '_' << to_string(j.side) << '_'
                 << (j.transit_segment ? "T" : "NT") << '_' << j.index << ".csv";
            io::write_trajectory_csv(ctx.path(name.str()), o.trajectory);
        }
    }
    json summary = {{"h", t.h},
                    {"c", t.c},
                    {"samples_per_segment", t.samples * t.angles},
                    {"n_transit", n_transit},
                    {"n_nontransit", n_nontransit},
                    {"n_bounded", n_bounded},
                    {"n_undecided", n_undecided},
                    {"per_phase", per_phase},
                    {"mismatches", mismatches}};
    if (ctx.writes()) io::write_json(ctx.path("transit_summary.json"), summary);
    return summary;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

template <typename Body> RunReport timed(const std::string &name, const json &inputs, RunContext &ctx, Body &&body) {
    const auto start = std::chrono::steady_clock::now();
    RunReport rep;
    rep.command = name;
    rep.inputs = inputs;
    rep.outputs = body();
    rep.warnings = ctx.warnings;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ctx.writes()) io::write_json(ctx.path("report.json"), rep.record());
    return rep;
}

} // namespace detail

inline RunReport cmd_lagrange(const RunConfig &cfg, RunContext &ctx) {
    return detail::timed("lagrange", cfg.raw, ctx, [&] {
        ctx.stage = "lagrange";
        require(cfg.model.kind() == ModelKind::Cr3bp, "lagrange needs a cr3bp model");
        const double mu = cfg.model.mu();
        const auto p = lagrange_points(mu);
        const auto e = energy_thresholds(mu);
        const auto s1 = linearize_collinear(mu, CollinearPoint::L1);
        const auto s2 = linearize_collinear(mu, CollinearPoint::L2);
        json out = {{"mu", mu},
                    {"points",
                     {{"L1", {p.l1, 0.0}},
                      {"L2", {p.l2, 0.0}},
                      {"L3", {p.l3, 0.0}},
                      {"L4", {p.l4.x(), p.l4.y()}},
                      {"L5", {p.l5.x(), p.l5.y()}}}},
                    {"thresholds", {{"E1", e.e1}, {"E2", e.e2}, {"E3", e.e3}, {"E4", e.e4}}},
                    {"L1", {{"lambda", s1.lambda}, {"nu", s1.nu}, {"basis", io::mat_json(s1.basis)}}},
                    {"L2", {{"lambda", s2.lambda}, {"nu", s2.nu}, {"basis", io::mat_json(s2.basis)}}},
                    {"triangular_linearly_stable", triangular_linearly_stable(mu)}};
        if (ctx.writes()) io::write_json(ctx.path("lagrange.json"), out);
        return out;
    });
}

inline RunReport cmd_find_po(const RunConfig &cfg, RunContext &ctx) {
    return detail::timed("find-po", cfg.raw, ctx, [&] {
        const PeriodicOrbit po = find_orbit(cfg, ctx);
        const auto &icfg = cfg.corrector.integrator;
        ctx.stage = "orbit-path";
        const Trajectory path = orbit_path(po, cfg.path_samples, icfg);
        json out = io::orbit_to_json(po);
        out["mean_crossings"] = count_mean_crossings(path);
        out["amplitude"] = orbit_amplitude(po, cfg.path_samples, icfg);
        if (ctx.writes()) {
            io::write_json(ctx.path("orbit.json"), out);
            io::write_trajectory_csv(ctx.path("orbit_path.csv"), path);
        }
        if (cfg.stagnation_samples > 0) {
            ctx.stage = "stagnation-path";
            Trajectory zeros{cfg.model, {}, {}};
            PhaseState z = equilibrium_state(lagrange_points(cfg.model.mu()).l1);
            for (int k = 0; k <= cfg.stagnation_samples; ++k) {
                const double t = po.t0() + po.period * double(k) / cfg.stagnation_samples;
                z = instantaneous_zero(cfg.model, t, z);
                zeros.times.push_back(t);
                zeros.states.push_back(z);
            }
            if (ctx.writes()) io::write_trajectory_csv(ctx.path("stagnation_path.csv"), zeros);
            out["stagnation_samples"] = cfg.stagnation_samples;
        }
        return out;
    });
}

inline RunReport cmd_continue(const RunConfig &cfg, RunContext &ctx, std::ostream *lines = nullptr) {
    return detail::timed("continue", cfg.raw, ctx, [&] {
        ctx.stage = "continue";
        require(cfg.continuation.has_value(), "config has no continuation block");
        const auto &c = *cfg.continuation;
        const auto &icfg = cfg.corrector.integrator;
        std::vector<double> schedule;
        const int n = static_cast<int>(std::ceil((c.to - c.from) / c.step - 1e-9));
        const bool even = std::abs(n * c.step - (c.to - c.from)) < 1e-12;
        for (int k = 0; k <= n; ++k)
            schedule.push_back(k == n ? c.to : (even ? c.from + (c.to - c.from) * k / n : c.from + k * c.step));

        std::function<Model(double)> factory;
        if (const auto *p = cfg.model.get_if<Er3bpParams>()) {
            factory = [p = *p](double eps) {
                Er3bpParams q = p;
                q.e = p.e * eps;
                return Model(q);
            };
        } else if (const auto *p = cfg.model.get_if<BcpParams>()) {
            factory = [p = *p](double eps) {
                BcpParams q = p;
                q.mu0 = p.mu0 * eps;
                return Model(q);
            };
        }
        const PhaseState seed = c.from == 0.0 ? equilibrium_state(lagrange_points(cfg.model.mu()).l1)
                                              : cfg.guess.value_or(equilibrium_state(
                                                    lagrange_points(cfg.model.mu()).l1));
        const auto fam = continue_family(factory, seed, schedule, cfg.theta0, cfg.corrector, c.parameter);

        std::ostringstream jsonl;
        json members = json::array();
        for (std::size_t k = 0; k < fam.samples.size(); ++k) {
            const auto &m = fam.samples[k];
            json line = {{"eps", m.eps},
                         {"x_bar", io::vec_json(m.orbit.x_bar)},
                         {"residual", m.orbit.residual},
                         {"iterations", m.orbit.iterations},
                         {"amplitude", orbit_amplitude(m.orbit, cfg.path_samples, icfg)}};
            jsonl << line.dump() << '\n';
            members.push_back(line);
            if (ctx.writes() && c.paths) {
                std::ostringstream name;
                name << "family/member_" << k << ".csv";
                io::write_trajectory_csv(ctx.path(name.str()), orbit_path(m.orbit, cfg.path_samples, icfg));
            }
        }
        if (lines) *lines << jsonl.str();
        if (ctx.writes()) {
            auto f = io::open_output(ctx.path("family.jsonl"));
            f << jsonl.str();
        }
        json out = {{"parameter", fam.parameter_name}, {"members", members}, {"complete", fam.complete()}};
        if (!fam.complete()) {
            out["failure"] = *fam.failure;
            out["failed_eps"] = *fam.failed_eps;
            throw ConvergenceError("continuation stopped at eps = " + std::to_string(*fam.failed_eps) + ": " +
                                   *fam.failure);
        }
        return out;
    });
}

inline RunReport cmd_monodromy(const RunConfig &cfg, RunContext &ctx) {
    return detail::timed("monodromy", cfg.raw, ctx, [&] {
        const Analysis a = analyze(cfg, ctx);
        if (ctx.writes()) io::write_json(ctx.path("monodromy.json"), a.summary);
        return a.summary;
    });
}

inline RunReport cmd_transit_demo(const RunConfig &cfg, RunContext &ctx) {
    return detail::timed("transit-demo", cfg.raw, ctx, [&] {
        const Analysis a = analyze(cfg, ctx);
        return run_transit(cfg, a, ctx);
    });
}

inline RunReport cmd_cap_map(const RunConfig &cfg, RunContext &ctx) {
    return detail::timed("cap-map", cfg.raw, ctx, [&] {
        const Analysis a = analyze(cfg, ctx);
        ctx.stage = "cap-map";
        const auto [h0, c0] = default_energy_offset(cfg.model);
        const CapSpec spec = cfg.cap.value_or(CapSpec{h0, c0});
        const auto &icfg = cfg.corrector.integrator;
        const PhaseFrame frame = phase_frame(a.basis, a.orbit, cfg.theta0, icfg);
        const auto cap = transit_cap(frame, a.eh, spec.h, spec.c, spec.n_saddle, spec.n_angle, spec.side);

        std::vector<io::CapRow> rows(cap.size() * 3);
        int n_transit = 0, n_images = 0, n_failed = 0;
        double drift = 0.0;
        const double psi = a.basis.psi_basis;
        for (std::size_t i = 0; i < cap.size(); ++i) rows[3 * i] = {cap[i].local, cap[i].physical, 0};
        parallel_for(cap.size(), ctx.opts.threads, [&](std::size_t i) {
            for (int k : {1, -1}) {
                auto &row = rows[3 * i + (k > 0 ? 1 : 2)];
                row.iteration = k;
                if (spec.nonlinear_images) {
                    const double t0 = frame.time;
                    try {
                        row.physical = propagate(cfg.model, cap[i].physical, t0, t0 + k * a.orbit.period, icfg);
                        row.local = to_local(frame, row.physical);
                    } catch (const NumericalError &) {
                        row.physical.setConstant(std::numeric_limits<double>::quiet_NaN());
                        row.local = {NAN, NAN, NAN, NAN};
                    }
                } else {
                    row.local = apply_normal_form(cap[i].local, a.nf.sigma, psi, k);
                    row.physical = to_physical(frame, row.local);
                }
            }
        });
        for (std::size_t i = 0; i < cap.size(); ++i) {
            for (int r = 1; r <= 2; ++r) {
                const auto &row = rows[3 * i + r];
                if (!row.physical.allFinite()) {
                    ++n_failed;
                    continue;
                }
                ++n_images;
                if (classify_local(row.local) == LocalClass::Transit) ++n_transit;
                if (!spec.nonlinear_images)
                    drift = std::max(drift, std::abs(local_energy(a.eh, row.local) - spec.h) / spec.h);
            }
        }
        if (ctx.writes()) {
            auto f = io::open_output(ctx.path("cap_map.csv"));
            io::write_cap_csv(f, rows);
        }
        json out = {{"h", spec.h},
                    {"c", spec.c},
                    {"grid", {spec.n_saddle, spec.n_angle}},
                    {"images", spec.nonlinear_images ? "nonlinear" : "linear"},
                    {"n_cap", cap.size()},
                    {"n_images", n_images},
                    {"n_failed", n_failed},
                    {"n_transit_images", n_transit}};
        if (!spec.nonlinear_images) out["max_relative_energy_drift"] = drift;
        return out;
    });
}

inline RunReport cmd_pipeline(const RunConfig &cfg, RunContext &ctx) {
    return detail::timed("pipeline", cfg.raw, ctx, [&] {
        const Analysis a = analyze(cfg, ctx);
        const auto &icfg = cfg.corrector.integrator;
        json orbit = io::orbit_to_json(a.orbit);
        ctx.stage = "orbit-path";
        const Trajectory path = orbit_path(a.orbit, cfg.path_samples, icfg);
        orbit["mean_crossings"] = count_mean_crossings(path);
        if (ctx.writes()) {
            io::write_json(ctx.path("orbit.json"), orbit);
            io::write_json(ctx.path("normal_form.json"), a.summary);
            io::write_trajectory_csv(ctx.path("orbit_path.csv"), path);
        }
        const json transit = run_transit(cfg, a, ctx);
        return json{{"orbit", orbit}, {"normal_form", a.summary}, {"transit", transit}};
    });
}

} // namespace ptransit::cli
