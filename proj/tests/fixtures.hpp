// Shared, lazily computed periodic orbits and their reductions.
#pragma once

#include <ptransit/ptransit.hpp>

namespace fixtures {

using namespace ptransit;

/// Reference phase-0 initial conditions of the L1 Lagrange periodic orbits.
inline const PhaseState kBcpReference{0.837595408485656, 0.0, 0.0, 0.827678389393936};
inline const PhaseState kEr3bpReference{0.792718947200736, 0.0, 0.000001145970495, 0.886145419995798};

struct Reduced {
    PeriodicOrbit orbit;
    Mat4 m;
    Mat4 m_inv;
    NormalForm nf;
    MapEigenbasis basis;
    EffectiveHamiltonian eh;
};

inline Reduced reduce(const Model &model, const PhaseState &guess) {
    Reduced r;
    r.orbit = refine_fixed_point(model, guess, 0.0);
    r.m = monodromy(r.orbit);
    r.m_inv = inverse_monodromy(r.orbit);
    r.nf = normal_form(r.m, r.orbit.period);
    r.basis = symplectic_eigenbasis(r.m, r.nf);
    r.basis.orbit_ref = r.orbit;
    r.eh = effective_hamiltonian(r.nf, r.orbit.period);
    return r;
}

inline const Reduced &bcp() {
    static const Reduced r = reduce(Model(BcpParams{}), kBcpReference);
    return r;
}

inline const Reduced &er3bp() {
    static const Reduced r = reduce(Model(Er3bpParams{}), kEr3bpReference);
    return r;
}

} // namespace fixtures
