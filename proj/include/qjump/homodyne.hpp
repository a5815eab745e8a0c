#pragma once

// Homodyne unravelings of the resonance-fluorescence master equation: the
// mu-parameterized measurement family, the adaptive two-state scheme with its
// fixed points and transient contraction, and the nonlinear orthogonal-jump
// scheme.

#include "qjump/engine.hpp"

namespace qjump {

struct HomodyneAmplitude {
    Complex mu;  // local-oscillator amplitude, units of sqrt(photon flux)/sqrt(gamma)
};

struct FixedPointPair {
    ComplexVector stable, unstable;  // normalized, <g| amplitude real positive
    Complex stable_eigenvalue, unstable_eigenvalue;
    bool marginal = false;  // Re[mu] = 0: equal decay rates, no stable/unstable split
};

// G = -i(W/2)sx - (g/2)s^+s - mu* g s - g|mu|^2/2, J = sqrt(g)(s + mu).
// mu = 0 recovers direct detection.
MeasurementOpSet build_homodyne_set(const AtomParams& atom, Complex mu);

// Both eigenstates of the smooth generator, classified stable/unstable by the
// real part of the eigenvalue.
FixedPointPair fixed_points(const AtomParams& atom, Complex mu);

// Solves the two-state consistency condition: (s + mu) maps the stable state
// of G_mu onto the stable state of G_{-mu}. Verifies uniqueness on
// Re mu in [0.05, 2], Im mu in [-1, 1]; returns (mu_plus, mu_minus) = (1/2, -1/2).
std::pair<Complex, Complex> solve_two_state_mu(const AtomParams& atom);

// Two operator variants (mu = +1/2 and -1/2); every detection flips the sign.
MeasurementOpSet build_two_state_set(const AtomParams& atom);

// Adaptive two-state run started in the mu=+1/2 stable state.
QuantumTrajectory simulate_two_state(const AtomParams& atom, double duration, std::uint64_t seed,
                                     EngineConfig cfg = {}, TrajectoryObserver* obs = nullptr);

// Expected squared overlap of the post-jump state with the new unstable state
// for an atom prepared as p|psi_s^+> + q|psi_u^+>, averaged over the jump
// time. Strong driving gives |q|^2/5.
double two_state_stability(const AtomParams& atom, Complex p, Complex q);

// State-dependent set with mu(t) = -<sigma>: jumps land orthogonal to the
// pre-jump state.
MeasurementOpSet build_orthogonal_set(const AtomParams& atom);

// fixed states theta_+/- of the orthogonal-jump flow (requires W > g)
std::pair<ComplexVector, ComplexVector> orthogonal_fixed_states(const AtomParams& atom);

// eigenvalues of the flow linearized about either fixed state:
// -g/4 +/- sqrt((g/4)^2 + g^2 - W^2)
std::pair<Complex, Complex> orthogonal_linearized_eigenvalues(const AtomParams& atom);

// Orthogonal-jump run started in theta_+; cfg.dt_max defaults to 1e-3/W.
QuantumTrajectory simulate_orthogonal(const AtomParams& atom, double duration, std::uint64_t seed,
                                      EngineConfig cfg = {}, TrajectoryObserver* obs = nullptr);

}  // namespace qjump
