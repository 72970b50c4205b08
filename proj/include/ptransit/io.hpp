// ptransit io
// JSON model records, result serialization, and CSV export.
#pragma once

#include <ptransit/transit.hpp>

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <set>
#include <string>

namespace ptransit::io {

using nlohmann::json;

/// Reads an object while tracking which keys were consumed, so that
/// leftovers can be rejected.
class ObjectReader {
public:
    ObjectReader(const json &j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ValidationError(where_ + ": expected a JSON object");
    }

    bool has(const std::string &key) const { return j_.contains(key); }

    template <typename T> T get(const std::string &key, const T &fallback) {
        used_.insert(key);
        if (!j_.contains(key)) return fallback;
        return convert<T>(key);
    }

    template <typename T> T require(const std::string &key) {
        used_.insert(key);
        if (!j_.contains(key)) throw ValidationError(where_ + ": missing key '" + key + "'");
        return convert<T>(key);
    }

    const json &sub(const std::string &key) {
        used_.insert(key);
        return j_.at(key);
    }

    /// Throws on any key that was never read.
    void finish() const {
        for (const auto &[key, _] : j_.items())
            if (!used_.count(key)) throw ValidationError(where_ + ": unknown key '" + key + "'");
    }

private:
    template <typename T> T convert(const std::string &key) const {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception &) {
            throw ValidationError(where_ + ": key '" + key + "' has the wrong type");
        }
    }

    const json &j_;
    std::string where_;
    std::set<std::string> used_;
};

inline Model model_from_json(const json &j) {
    ObjectReader r(j, "model");
    const auto kind = r.require<std::string>("model");
    Model m;
    if (kind == "cr3bp") {
        Cr3bpParams p;
        p.mu = r.get("mu", p.mu);
        m = Model(p);
    } else if (kind == "bcp") {
        BcpParams p;
        p.mu = r.get("mu", p.mu);
        p.mu0 = r.get("mu0", p.mu0);
        p.a0 = r.get("a0", p.a0);
        p.omega_m0 = r.get("omega_m0", p.omega_m0);
        p.theta_m0_0 = r.get("theta_m0_0", p.theta_m0_0);
        m = Model(p);
    } else if (kind == "er3bp") {
        Er3bpParams p;
        p.mu = r.get("mu", p.mu);
        p.e = r.get("e", p.e);
        p.phi0 = r.get("phi0", p.phi0);
        m = Model(p);
    } else {
        throw ValidationError("model: unknown model kind '" + kind + "'");
    }
    if (r.has("collision_radius")) m = m.with_collision_radius(r.get("collision_radius", 0.0));
    r.finish();
    return m;
}

inline json model_to_json(const Model &m) {
    json j;
    j["model"] = std::string(to_string(m.kind()));
    j["mu"] = m.mu();
    if (const auto *p = m.get_if<BcpParams>()) {
        j["mu0"] = p->mu0;
        j["a0"] = p->a0;
        j["omega_m0"] = p->omega_m0;
        j["theta_m0_0"] = p->theta_m0_0;
    } else if (const auto *p = m.get_if<Er3bpParams>()) {
        j["e"] = p->e;
        j["phi0"] = p->phi0;
    }
    return j;
}

inline json vec_json(const Vec4 &v) { return json::array({v(0), v(1), v(2), v(3)}); }

/// Row-major flattening.
inline json mat_json(const Mat4 &m) {
    json a = json::array();
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) a.push_back(m(i, k));
    return a;
}

inline PhaseState state_from_json(const json &j, const std::string &where) {
    if (!j.is_array() || j.size() != 4) throw ValidationError(where + ": expected an array of 4 numbers");
    PhaseState s;
    for (int i = 0; i < 4; ++i) {
        if (!j[i].is_number()) throw ValidationError(where + ": expected an array of 4 numbers");
        s(i) = j[i].get<double>();
    }
    check_state(s);
    return s;
}

inline json stm_to_json(const StmResult &r) {
    return {{"final_state", vec_json(r.final_state)}, {"stm", mat_json(r.stm)}};
}

inline json orbit_to_json(const PeriodicOrbit &o) {
    json nodes = json::array();
    for (const auto &n : o.nodes) nodes.push_back(vec_json(n));
    return {{"model", model_to_json(o.model)},
            {"x_bar", vec_json(o.x_bar)},
            {"theta0", o.theta0},
            {"period", o.period},
            {"residual", o.residual},
            {"map_residual", o.map_residual},
            {"iterations", o.iterations},
            {"residual_history", o.residual_history},
            {"nodes", nodes},
            {"warnings", o.warnings}};
}

inline json normal_form_to_json(const NormalForm &nf) {
    return {{"sigma", nf.sigma}, {"psi", nf.psi}, {"lambda_matrix", mat_json(nf.lambda_matrix)}};
}

inline void write_trajectory_csv(std::ostream &os, const Trajectory &tr) {
    os << "t,x,y,px,py\n";
    os.precision(17);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto &s = tr.states[i];
        os << tr.times[i] << ',' << s(0) << ',' << s(1) << ',' << s(2) << ',' << s(3) << '\n';
    }
}

inline std::ofstream open_output(const std::string &path) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open output file '" + path + "'");
    return f;
}

inline void write_trajectory_csv(const std::string &path, const Trajectory &tr) {
    auto f = open_output(path);
    write_trajectory_csv(f, tr);
}

inline void write_json(const std::string &path, const json &j) {
    auto f = open_output(path);
    f << j.dump(2) << '\n';
}

struct CapRow {
    LocalState local;
    PhaseState physical;
    int iteration = 0;
};

inline void write_cap_csv(std::ostream &os, const std::vector<CapRow> &rows) {
    os << "q1,p1,q2,p2,x,y,px,py,iteration\n";
    os.precision(17);
    for (const auto &r : rows) {
        os << r.local.q1 << ',' << r.local.p1 << ',' << r.local.q2 << ',' << r.local.p2 << ',' << r.physical(0)
           << ',' << r.physical(1) << ',' << r.physical(2) << ',' << r.physical(3) << ',' << r.iteration << '\n';
    }
}

} // namespace ptransit::io
