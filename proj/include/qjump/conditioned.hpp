#pragma once

// Average atomic state conditioned on a filtered photon detection, from
// steady-state resolvent solves in the Bloch representation, together with a
// brute-force cross check against the full joint Liouvillian.

#include "qjump/spectral.hpp"

namespace qjump {

struct ConditionedResult {
    BlochVector rho2;      // unnormalized: p is the trace weight Tr[a W a^+]
    StateMatrix rho_a;     // normalized conditioned atomic state
    double epsilon_app;    // (x2 + p2)/(2 p2)
    bool regime_ok;        // gamma << Gamma << Omega
};

// Chain: rho0 (stationary Bloch) -> rho1 via (L - i w_a - Gamma)^-1 ->
// rho2 via (L - 2 Gamma)^-1.
ConditionedResult conditioned_state(const AtomParams& atom, const FilterConfig& filter);

// Tr_cav[a W_ss a^+] from the full one-filter joint Liouvillian null space,
// unnormalized, for cross validation.
ComplexMatrix conditioned_rho2_bruteforce(const AtomParams& atom, const FilterConfig& filter);

struct NarrowCavityResult {
    double lorentzian_weight;  // (3g/4)^2 / (Delta^2 + (3g/4)^2)
    double x_component;        // normalized x of the conditioned state, ~ -4 Gamma/gamma
    bool regime_ok;            // Gamma << gamma << Omega
};

// Conditioned state with the cavity detuned to Omega + Delta in the
// narrow-cavity regime.
NarrowCavityResult narrow_cavity_limit(const AtomParams& atom, double Gamma, double Delta);

}  // namespace qjump
