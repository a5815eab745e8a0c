#pragma once

// The driven, damped two-level atom: master equation in the interaction
// picture, Bloch representation, stationary state, diagonal eigenbasis.
//
// Basis ordering everywhere: index 0 = |e>, index 1 = |g>.
// sigma = |g><e| is the lowering operator, so with the standard Pauli
// matrices sigma = (sigma_x - i sigma_y)/2 and the ground state sits at
// Bloch z = -1.

#include "qjump/linalg.hpp"

namespace qjump {

struct AtomParams {
    double gamma = 1.0;  // spontaneous emission rate
    double omega = 0.0;  // Rabi frequency, same units
};
void validate(const AtomParams& p);

struct BlochVector {
    double p = 1.0;  // trace weight
    double x = 0.0, y = 0.0, z = 0.0;
};

struct StateMatrix {
    ComplexMatrix m;  // Hermitian, unit trace within tolerance
};

struct DiagonalEnsemble {
    ComplexVector state[2];  // orthonormal, ordered by descending weight
    double weight[2] = {0, 0};
    bool degenerate = false;  // |w1 - w2| below tolerance
};

// elementary operators, (e,g) ordering
ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();
ComplexMatrix lowering();  // sigma = |g><e|
ComplexVector ket_e();
ComplexVector ket_g();
ComplexVector dressed_plus();   // (|g> + |e>)/sqrt(2)
ComplexVector dressed_minus();  // (|g> - |e>)/sqrt(2)

ComplexMatrix bloch_to_matrix(const BlochVector& v);
BlochVector matrix_to_bloch(const ComplexMatrix& m);
BlochVector state_to_bloch(const ComplexVector& psi);
Complex expect_sigma(const ComplexVector& psi);  // <psi|sigma|psi>

bool is_physical(const StateMatrix& rho, double tol = 1e-10);

// Relaxation superoperator acting on (p, x, y, z)^T, returned as a 4x4
// real-valued matrix.
ComplexMatrix bloch_superoperator(const AtomParams& p);

// Stationary solution (1, 0, 2*W*g/(g^2+2W^2), -g^2/(g^2+2W^2)).
BlochVector stationary_bloch(const AtomParams& p);
StateMatrix stationary_state(const AtomParams& p);

// Eigendecomposition of a 2x2 state matrix. Global phase fixed so the <g|
// amplitude is real positive (falls back to <e| when the state is |e>).
DiagonalEnsemble tm_diagonalize(const StateMatrix& rho, double degeneracy_tol = 1e-12);

// rho(t) via the Bloch-representation matrix exponential.
StateMatrix propagate_master(const StateMatrix& rho0, const AtomParams& p, double t);

// trace distance of two qubit state matrices
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace qjump
