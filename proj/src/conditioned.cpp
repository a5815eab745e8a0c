#include "qjump/conditioned.hpp"

#include <cmath>

namespace qjump {

namespace {
const Complex I_(0.0, 1.0);
}

ConditionedResult conditioned_state(const AtomParams& atom, const FilterConfig& filter) {
    validate(atom);
    if (!(filter.hwhm > 0)) throw ConfigError("conditioned_state: Gamma > 0 required");
    const double g = atom.gamma, G = filter.hwhm, wa = filter.detuning;
    const double cg = std::sqrt(G * g);

    BlochVector v0 = stationary_bloch(atom);
    ComplexMatrix l = bloch_superoperator(atom);

    // rho1 = (sqrt(G g)/2) (L - i w_a - G)^-1 (x0-iy0, p0+z0, -ip0-iz0, -x0+iy0)^T
    ComplexMatrix a1 = l;
    for (std::size_t i = 0; i < 4; ++i) a1(i, i) -= Complex(G, wa);
    ComplexVector b1 = {
        Complex(v0.x, -v0.y),
        Complex(v0.p + v0.z, 0),
        Complex(0, -(v0.p + v0.z)),
        Complex(-v0.x, v0.y),
    };
    for (auto& c : b1) c *= 0.5 * cg;
    ComplexVector r1 = solve_linear(a1, b1);

    // rho2 = sqrt(G g) (L - 2G)^-1 (x1r - y1i, p1r + z1r, -p1i - z1i, -x1r + y1i)^T
    ComplexMatrix a2 = l;
    for (std::size_t i = 0; i < 4; ++i) a2(i, i) -= Complex(2 * G, 0);
    const double p1r = r1[0].real(), p1i = r1[0].imag();
    const double x1r = r1[1].real();
    const double y1i = r1[2].imag();
    const double z1r = r1[3].real(), z1i = r1[3].imag();
    ComplexVector b2 = {
        Complex(x1r - y1i, 0),
        Complex(p1r + z1r, 0),
        Complex(-p1i - z1i, 0),
        Complex(-x1r + y1i, 0),
    };
    for (auto& c : b2) c *= cg;
    ComplexVector r2 = solve_linear(a2, b2);

    ConditionedResult out;
    out.rho2 = {r2[0].real(), r2[1].real(), r2[2].real(), r2[3].real()};
    const double p2 = out.rho2.p;
    if (std::abs(p2) < 1e-300) throw NumericalError("conditioned_state: vanishing trace weight");
    out.epsilon_app = (out.rho2.x + p2) / (2 * p2);
    out.rho_a = {bloch_to_matrix(
        {1.0, out.rho2.x / p2, out.rho2.y / p2, out.rho2.z / p2})};
    out.regime_ok = (G >= 4 * g) && (atom.omega >= 4 * G);
    return out;
}

ComplexMatrix conditioned_rho2_bruteforce(const AtomParams& atom, const FilterConfig& filter) {
    CascadeSystem sys = build_one_filter(atom, filter);
    ComplexMatrix w = steady_state_joint(sys);
    ComplexMatrix awa = sys.a_op * w * sys.a_op.adjoint();
    return partial_trace(awa, {2, filter.n_max + 1}, 0);
}

NarrowCavityResult narrow_cavity_limit(const AtomParams& atom, double Gamma, double Delta) {
    validate(atom);
    const double g = atom.gamma;
    FilterConfig f{Gamma, atom.omega + Delta, 3};
    ConditionedResult c = conditioned_state(atom, f);
    NarrowCavityResult out;
    const double hw = 0.75 * g;
    out.lorentzian_weight = hw * hw / (Delta * Delta + hw * hw);
    out.x_component = c.rho2.x / c.rho2.p;
    out.regime_ok = (g >= 4 * Gamma) && (atom.omega >= 10 * g);
    return out;
}

}  // namespace qjump
