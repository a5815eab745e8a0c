#pragma once

// Spectral detection through one or two cascaded filter cavities on truncated
// Fock spaces: joint measurement-operator sets, the eigenstate recurrences of
// the no-jump generator, detection algebra, and the closed-form error budget
// with its optimal-linewidth scaling.

#include <map>

#include "qjump/engine.hpp"

namespace qjump {

struct FilterConfig {
    double hwhm = 1.0;      // intensity decay rate per mirror; linewidth = 2*hwhm
    double detuning = 0.0;  // relative to the atom
    std::size_t n_max = 3;  // Fock truncation per cavity
};
void validate(const FilterConfig& f);

struct CascadeSystem {
    AtomParams atom;
    std::vector<FilterConfig> filters;
    std::size_t dim = 0;
    MeasurementOpSet set;  // rejected + passed_a (+ passed_b)
    ComplexMatrix sigma_op, a_op, b_op;  // lifted to the joint space
};

CascadeSystem build_one_filter(const AtomParams& atom, const FilterConfig& filter);
// default convention: fa tuned to +Omega, fb to -Omega
CascadeSystem build_two_filter(const AtomParams& atom, const FilterConfig& fa,
                               const FilterConfig& fb);

// Atomic eigenbasis of the bare no-jump generator: |h> = mu|g> + nu|e>,
// |l> = nu|g> - mu|e>, with the exact eigenvalues lambda_h, lambda_l and the
// sigma matrix elements p, q entering the recurrences.
struct HlBasis {
    Complex mu, nu;
    Complex p, q;
    Complex lambda_h, lambda_l;
    ComplexVector ket_h, ket_l;  // (e,g) ordering
};
HlBasis hl_basis(const AtomParams& atom);

struct RecurrenceEigenstate {
    std::size_t n = 0, m = 0;
    int branch = +1;  // +1 -> h-seeded, -1 -> l-seeded
    Complex eigenvalue;
    ComplexVector assembled;    // normalized joint-space eigenvector
    std::vector<Complex> h, l;  // raw coefficients; one filter: [j], two: [j*(n_max+1)+k]
    double truncation_weight = 0;  // squared norm of the first dropped Fock ring
};

RecurrenceEigenstate solve_recurrence_one(const CascadeSystem& sys, std::size_t n, int branch);
RecurrenceEigenstate solve_recurrence_two(const CascadeSystem& sys, std::size_t n, std::size_t m,
                                          int branch);

struct JumpAction {
    double overlap_plus = 0;   // |<S00+|post>|^2
    double overlap_minus = 0;  // |<S00-|post>|^2
    double rate = 0;           // <J^+J> per unit time
};
std::map<ChannelLabel, JumpAction> jump_action_table(const CascadeSystem& sys,
                                                     const RecurrenceEigenstate& state);

struct ErrorBudget {
    double wrong = 0;      // Gamma^2/Omega^2
    double transient = 0;  // gamma/(8 Gamma)
    double forbidden = 0;  // Gamma^2/(2 Omega^2) + gamma/(32 Gamma)
    double entangled = 0;  // gamma/(4 Gamma)
    double total = 0;      // alpha Gamma^2/Omega^2 + beta gamma/(4 Gamma)
    double alpha = 1.0, beta = 1.0;
    bool regime_ok = true;  // Omega >> Gamma >> gamma
};
ErrorBudget error_budget(const AtomParams& atom, double Gamma, double alpha = 1.0,
                         double beta = 1.0);

// two-term perturbative result 5 Gamma^2/(4 Omega^2) + gamma/(8 Gamma)
double epsilon_app_perturbative(const AtomParams& atom, double Gamma);

// Gamma from 2*Gamma = Omega^(2/3) gamma^(1/3)
double optimal_linewidth(const AtomParams& atom);

// least-squares (alpha, beta) of measured errors against the budget form over
// a Gamma grid
std::pair<double, double> fit_error_budget(const AtomParams& atom,
                                           const std::vector<double>& gammas,
                                           const std::vector<double>& errors);

// Liouvillian L(W) = G W + W G^+ + sum_c J_c W J_c^+ as a superoperator on
// column-major vec(W), and the joint stationary state.
ComplexMatrix liouvillian_superop(const ComplexMatrix& g, const std::vector<ComplexMatrix>& jumps);
ComplexMatrix steady_state_joint(const CascadeSystem& sys);

}  // namespace qjump
