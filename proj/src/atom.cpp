#include "qjump/atom.hpp"

#include <cmath>

namespace qjump {

namespace {
const Complex I_(0.0, 1.0);
}

void validate(const AtomParams& p) {
    if (!(p.gamma > 0) || !(p.omega >= 0) || !std::isfinite(p.gamma) || !std::isfinite(p.omega))
        throw ConfigError("AtomParams: need gamma > 0 and omega >= 0");
}

ComplexMatrix pauli_x() {
    ComplexMatrix m(2, 2);
    m(0, 1) = 1;
    m(1, 0) = 1;
    return m;
}

ComplexMatrix pauli_y() {
    ComplexMatrix m(2, 2);
    m(0, 1) = -I_;
    m(1, 0) = I_;
    return m;
}

ComplexMatrix pauli_z() {
    ComplexMatrix m(2, 2);
    m(0, 0) = 1;
    m(1, 1) = -1;
    return m;
}

ComplexMatrix lowering() {
    ComplexMatrix m(2, 2);
    m(1, 0) = 1;  // |g><e|
    return m;
}

ComplexVector ket_e() { return {1.0, 0.0}; }
ComplexVector ket_g() { return {0.0, 1.0}; }
ComplexVector dressed_plus() { return {Complex(M_SQRT1_2), Complex(M_SQRT1_2)}; }
ComplexVector dressed_minus() { return {Complex(-M_SQRT1_2), Complex(M_SQRT1_2)}; }

ComplexMatrix bloch_to_matrix(const BlochVector& v) {
    ComplexMatrix m(2, 2);
    m(0, 0) = 0.5 * (v.p + v.z);
    m(0, 1) = 0.5 * Complex(v.x, -v.y);
    m(1, 0) = 0.5 * Complex(v.x, v.y);
    m(1, 1) = 0.5 * (v.p - v.z);
    return m;
}

BlochVector matrix_to_bloch(const ComplexMatrix& m) {
    BlochVector v;
    v.p = (m(0, 0) + m(1, 1)).real();
    v.x = (m(0, 1) + m(1, 0)).real();
    v.y = (I_ * (m(0, 1) - m(1, 0))).real();
    v.z = (m(0, 0) - m(1, 1)).real();
    return v;
}

BlochVector state_to_bloch(const ComplexVector& psi) {
    BlochVector v;
    Complex w = std::conj(psi[0]) * psi[1];  // conj(psi_e) psi_g
    v.p = norm2(psi);
    v.x = 2 * w.real();
    v.y = 2 * w.imag();
    v.z = std::norm(psi[0]) - std::norm(psi[1]);
    return v;
}

Complex expect_sigma(const ComplexVector& psi) { return std::conj(psi[1]) * psi[0]; }

bool is_physical(const StateMatrix& rho, double tol) {
    if (rho.m.rows() != rho.m.cols()) return false;
    if (!rho.m.is_hermitian(1e-12)) return false;
    if (std::abs(rho.m.trace() - Complex(1)) > 1e-12) return false;
    if (rho.m.rows() == 2) {
        BlochVector v = matrix_to_bloch(rho.m);
        double r2 = v.x * v.x + v.y * v.y + v.z * v.z;
        return r2 <= 1.0 + 100 * tol;
    }
    return true;
}

ComplexMatrix bloch_superoperator(const AtomParams& p) {
    validate(p);
    ComplexMatrix l(4, 4);
    l(1, 1) = -0.5 * p.gamma;
    l(2, 2) = -0.5 * p.gamma;
    l(2, 3) = -p.omega;
    l(3, 0) = -p.gamma;
    l(3, 2) = p.omega;
    l(3, 3) = -p.gamma;
    return l;
}

BlochVector stationary_bloch(const AtomParams& p) {
    validate(p);
    double d = p.gamma * p.gamma + 2 * p.omega * p.omega;
    return {1.0, 0.0, 2 * p.omega * p.gamma / d, -p.gamma * p.gamma / d};
}

StateMatrix stationary_state(const AtomParams& p) { return {bloch_to_matrix(stationary_bloch(p))}; }

namespace {

// global phase: make <g|phi> real positive; if the g amplitude vanishes,
// make <e|phi> real positive instead
void fix_phase(ComplexVector& v) {
    Complex ref = (std::abs(v[1]) > 1e-9) ? v[1] : v[0];
    Complex ph = std::abs(ref) > 0 ? std::conj(ref) / std::abs(ref) : Complex(1);
    v[0] *= ph;
    v[1] *= ph;
}

}  // namespace

DiagonalEnsemble tm_diagonalize(const StateMatrix& rho, double degeneracy_tol) {
    if (!is_physical(rho, 1e-8)) throw NumericalError("tm_diagonalize: unphysical state matrix");
    const Complex a = rho.m(0, 0), b = rho.m(0, 1), d = rho.m(1, 1);
    double half_tr = 0.5 * (a + d).real();
    double disc = std::sqrt(0.25 * std::pow((a - d).real(), 2) + std::norm(b));
    double w1 = half_tr + disc, w2 = half_tr - disc;

    DiagonalEnsemble ens;
    ens.weight[0] = w1;
    ens.weight[1] = w2;
    ens.degenerate = std::abs(w1 - w2) < degeneracy_tol;

    auto vec_for = [&](double lam) -> ComplexVector {
        // (rho - lam) v = 0; choose the better-conditioned formula
        ComplexVector v;
        if (std::abs(b) > 1e-15) {
            if (std::abs(a - Complex(lam)) >= std::abs(d - Complex(lam)))
                v = {-b / (a - Complex(lam)), Complex(1)};
            else
                v = {Complex(1), -std::conj(b) / (d - Complex(lam))};
        } else {
            v = (std::abs(a - Complex(lam)) < std::abs(d - Complex(lam))) ? ket_e() : ket_g();
        }
        normalize(v);
        fix_phase(v);
        return v;
    };

    ens.state[0] = vec_for(w1);
    if (ens.degenerate) {
        // rho = c*I: any orthonormal pair diagonalizes; take the complement
        ens.state[1] = {-std::conj(ens.state[0][1]), std::conj(ens.state[0][0])};
        fix_phase(ens.state[1]);
    } else {
        ens.state[1] = vec_for(w2);
    }
    if (ens.degenerate) {
        // weights tie: order deterministically by the phase-fixed e amplitude
        auto key = [](const ComplexVector& v) { return std::make_pair(v[0].real(), v[0].imag()); };
        if (key(ens.state[0]) < key(ens.state[1])) {
            std::swap(ens.state[0], ens.state[1]);
            std::swap(ens.weight[0], ens.weight[1]);
        }
    }
    return ens;
}

StateMatrix propagate_master(const StateMatrix& rho0, const AtomParams& p, double t) {
    if (t < 0) throw ConfigError("propagate_master: t >= 0 required");
    BlochVector v0 = matrix_to_bloch(rho0.m);
    ComplexMatrix l = bloch_superoperator(p);
    ComplexVector v = {v0.p, v0.x, v0.y, v0.z};
    // chunk long propagations to stay inside the expm overflow guard
    double lnorm = std::max(l.one_norm(), 1e-300);
    double chunk = 32.0 / lnorm;
    double done = 0;
    while (done < t) {
        double step = std::min(chunk, t - done);
        ComplexMatrix ls = l;
        ls *= Complex(step, 0);
        v = expm(ls).apply(v);
        done += step;
    }
    return {bloch_to_matrix({v[0].real(), v[1].real(), v[2].real(), v[3].real()})};
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix d = a;
    d -= b;
    // Hermitian 2x2: half the sum of |eigenvalues|
    BlochVector v = matrix_to_bloch(d);
    double r = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    double l1 = 0.5 * (v.p + r), l2 = 0.5 * (v.p - r);
    return 0.5 * (std::abs(l1) + std::abs(l2));
}

}  // namespace qjump
