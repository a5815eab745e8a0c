#include "qjump/homodyne.hpp"

#include <cmath>

namespace qjump {

namespace {

const Complex I_(0.0, 1.0);

void fix_phase_gfirst(ComplexVector& v) {
    Complex ref = (std::abs(v[1]) > 1e-9) ? v[1] : v[0];
    Complex ph = std::conj(ref) / std::abs(ref);
    v[0] *= ph;
    v[1] *= ph;
}

ComplexMatrix homodyne_smooth(const AtomParams& atom, Complex mu) {
    const double g = atom.gamma, W = atom.omega;
    ComplexMatrix m(2, 2);
    const Complex mi(0, -1);
    m(0, 0) = -0.5 * g - 0.5 * g * std::norm(mu);
    m(0, 1) = mi * (0.5 * W);
    m(1, 0) = mi * (0.5 * W) - std::conj(mu) * g;  // -mu* g sigma acts |e> -> |g>
    m(1, 1) = -0.5 * g * std::norm(mu);
    return m;
}

ComplexMatrix homodyne_jump(const AtomParams& atom, Complex mu) {
    ComplexMatrix j(2, 2);
    const double sg = std::sqrt(atom.gamma);
    j(0, 0) = sg * mu;
    j(1, 0) = sg;
    j(1, 1) = sg * mu;
    return j;
}

}  // namespace

MeasurementOpSet build_homodyne_set(const AtomParams& atom, Complex mu) {
    validate(atom);
    MeasurementOpSet set;
    set.variants.push_back({homodyne_smooth(atom, mu),
                            {{ChannelLabel::homodyne, homodyne_jump(atom, mu)}}});
    set.scheme_id = "homodyne";
    require_completeness(set);
    return set;
}

FixedPointPair fixed_points(const AtomParams& atom, Complex mu) {
    validate(atom);
    const double g = atom.gamma, W = atom.omega;
    const Complex r = Complex(W * W - 0.25 * g * g) - 2.0 * I_ * Complex(W * g) * std::conj(mu);
    const Complex root = std::sqrt(r);  // principal branch
    auto candidate = [&](Complex s) {
        // (sqrt(R) + i g/2)|g> + W|e>, eigenvalue -g(1+2|mu|^2)/4 - (i/2) sqrt(R)
        ComplexVector v = {Complex(W), s + 0.5 * I_ * Complex(g)};
        normalize(v);
        fix_phase_gfirst(v);
        Complex lam = Complex(-0.25 * g * (1.0 + 2.0 * std::norm(mu))) - 0.5 * I_ * s;
        return std::make_pair(v, lam);
    };
    auto [v1, l1] = candidate(root);
    auto [v2, l2] = candidate(-root);

    FixedPointPair fp;
    fp.marginal = std::abs(l1.real() - l2.real()) < 1e-10 * std::max(g, std::abs(l1.real()));
    bool first_stable = (l1.real() > l2.real()) || (fp.marginal && l1.imag() > l2.imag());
    if (first_stable) {
        fp.stable = v1;
        fp.stable_eigenvalue = l1;
        fp.unstable = v2;
        fp.unstable_eigenvalue = l2;
    } else {
        fp.stable = v2;
        fp.stable_eigenvalue = l2;
        fp.unstable = v1;
        fp.unstable_eigenvalue = l1;
    }

    // eigenvector residual check against the smooth generator
    ComplexMatrix gm = homodyne_smooth(atom, mu);
    for (const auto* v : {&fp.stable, &fp.unstable}) {
        Complex lam = (v == &fp.stable) ? fp.stable_eigenvalue : fp.unstable_eigenvalue;
        ComplexVector res = gm.apply(*v);
        axpy(res, -lam, *v);
        if (vec_norm(res) > 1e-10 * std::max(1.0, gm.frobenius_norm()))
            throw NumericalError("fixed_points: eigenvector residual too large");
    }
    return fp;
}

namespace {

// residual of the two-state condition: (sigma + mu) psi_s(mu) parallel to
// psi_s(-mu); normalized so |residual| ~ misalignment angle
Complex two_state_residual(const AtomParams& atom, Complex mu) {
    FixedPointPair fp = fixed_points(atom, mu);
    FixedPointPair fm = fixed_points(atom, -mu);
    ComplexVector post = homodyne_jump(atom, mu).apply(fp.stable);
    normalize(post);
    return post[0] * fm.stable[1] - post[1] * fm.stable[0];
}

}  // namespace

std::pair<Complex, Complex> solve_two_state_mu(const AtomParams& atom) {
    validate(atom);
    const double re_lo = 0.05, re_hi = 2.0, im_lo = -1.0, im_hi = 1.0;
    std::vector<Complex> roots;
    auto known = [&](Complex z) {
        for (Complex r : roots)
            if (std::abs(r - z) < 1e-6) return true;
        return false;
    };
    for (double a = re_lo; a <= re_hi + 1e-9; a += (re_hi - re_lo) / 7.0) {
        for (double b = im_lo; b <= im_hi + 1e-9; b += (im_hi - im_lo) / 4.0) {
            Complex mu(a, b);
            bool ok = true;
            for (int it = 0; it < 60; ++it) {
                Complex f0 = two_state_residual(atom, mu);
                if (std::abs(f0) < 1e-14) break;
                // 2x2 real Jacobian; the residual is not analytic in mu
                const double h = 1e-7 * std::max(1.0, std::abs(mu));
                Complex fa_ = two_state_residual(atom, mu + Complex(h, 0));
                Complex fb_ = two_state_residual(atom, mu + Complex(0, h));
                double j11 = (fa_.real() - f0.real()) / h, j12 = (fb_.real() - f0.real()) / h;
                double j21 = (fa_.imag() - f0.imag()) / h, j22 = (fb_.imag() - f0.imag()) / h;
                double det = j11 * j22 - j12 * j21;
                if (std::abs(det) < 1e-300) {
                    ok = false;
                    break;
                }
                double da = (j22 * f0.real() - j12 * f0.imag()) / det;
                double db = (-j21 * f0.real() + j11 * f0.imag()) / det;
                mu -= Complex(da, db);
                if (mu.real() < 0.01 || mu.real() > 3.0 || std::abs(mu.imag()) > 2.0) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            if (std::abs(two_state_residual(atom, mu)) > 1e-12) continue;
            if (mu.real() < re_lo - 1e-3 || mu.real() > re_hi + 1e-3) continue;
            if (!known(mu)) roots.push_back(mu);
        }
    }
    if (roots.empty()) throw NumericalError("solve_two_state_mu: no solution found in search box");
    if (roots.size() > 1)
        throw NumericalError("solve_two_state_mu: multiple solutions found in search box");
    return {roots[0], -roots[0]};
}

MeasurementOpSet build_two_state_set(const AtomParams& atom) {
    auto [mu_p, mu_m] = solve_two_state_mu(atom);
    MeasurementOpSet set;
    set.variants.push_back({homodyne_smooth(atom, mu_p),
                            {{ChannelLabel::homodyne, homodyne_jump(atom, mu_p)}}});
    set.variants.push_back({homodyne_smooth(atom, mu_m),
                            {{ChannelLabel::homodyne, homodyne_jump(atom, mu_m)}}});
    set.on_jump = [](int variant, int) { return 1 - variant; };
    set.scheme_id = "two-state";
    require_completeness(set);
    return set;
}

QuantumTrajectory simulate_two_state(const AtomParams& atom, double duration, std::uint64_t seed,
                                     EngineConfig cfg, TrajectoryObserver* obs) {
    MeasurementOpSet set = build_two_state_set(atom);
    FixedPointPair fp = fixed_points(atom, Complex(0.5, 0.0));
    return sample_trajectory(fp.stable, set, duration, seed, cfg, obs);
}

double two_state_stability(const AtomParams& atom, Complex p, Complex q) {
    validate(atom);
    if (std::abs(std::norm(p) + std::norm(q) - 1.0) > 1e-9)
        throw ConfigError("two_state_stability: |p|^2 + |q|^2 = 1 required");
    const Complex mu(0.5, 0.0);
    FixedPointPair fp = fixed_points(atom, mu);
    FixedPointPair fm = fixed_points(atom, -mu);
    ComplexMatrix j = homodyne_jump(atom, mu);
    const Complex a = dot(fm.unstable, j.apply(fp.stable));
    const Complex b = dot(fm.unstable, j.apply(fp.unstable));
    const Complex ls = fp.stable_eigenvalue, lu = fp.unstable_eigenvalue;
    // E = int_0^inf |p a e^{ls t} + q b e^{lu t}|^2 dt
    double term_s = std::norm(p * a) / (-2.0 * ls.real());
    double term_u = std::norm(q * b) / (-2.0 * lu.real());
    Complex cross = (p * a) * std::conj(q * b) / (-(ls + std::conj(lu)));
    return term_s + term_u + 2.0 * cross.real();
}

MeasurementOpSet build_orthogonal_set(const AtomParams& atom) {
    validate(atom);
    const double g = atom.gamma, W = atom.omega, sg = std::sqrt(atom.gamma);
    MeasurementOpSet set;
    set.state_dependent = true;
    set.factor_dims = {2};
    set.nonlinear_label = ChannelLabel::homodyne;
    set.scheme_id = "orthogonal";
    // rules accept unnormalized states: <sigma> carries a 1/|psi|^2
    set.smooth_rule = [g, W](const ComplexVector& y, ComplexMatrix& out) {
        const Complex s = std::conj(y[1]) * y[0] / norm2(y);
        const double s2 = std::norm(s);
        if (out.rows() != 2) out = ComplexMatrix(2, 2);
        out(0, 0) = Complex(-0.5 * g - 0.5 * g * s2, 0);
        out(0, 1) = Complex(0, -0.5 * W);
        out(1, 0) = Complex(0, -0.5 * W) + g * std::conj(s);
        out(1, 1) = Complex(-0.5 * g * s2, 0);
    };
    set.jump_rule = [sg](const ComplexVector& y, ComplexMatrix& out) {
        const Complex s = std::conj(y[1]) * y[0] / norm2(y);
        if (out.rows() != 2) out = ComplexMatrix(2, 2);
        out(0, 0) = -sg * s;
        out(0, 1) = 0;
        out(1, 0) = sg;
        out(1, 1) = -sg * s;
    };
    return set;
}

std::pair<ComplexVector, ComplexVector> orthogonal_fixed_states(const AtomParams& atom) {
    validate(atom);
    const double g = atom.gamma, W = atom.omega;
    if (!(W > g)) throw ConfigError("orthogonal_fixed_states: requires omega > gamma");
    const double w = std::sqrt(W * W - g * g);
    // sqrt(2) W theta_+/- = W|g> + (-i g +/- w)|e>
    ComplexVector tp = {Complex(w, -g) / (std::sqrt(2.0) * W), Complex(M_SQRT1_2)};
    ComplexVector tm = {Complex(-w, -g) / (std::sqrt(2.0) * W), Complex(M_SQRT1_2)};
    return {tp, tm};
}

std::pair<Complex, Complex> orthogonal_linearized_eigenvalues(const AtomParams& atom) {
    validate(atom);
    const double g = atom.gamma, W = atom.omega;
    const Complex disc = std::sqrt(Complex(g * g / 16.0 + g * g - W * W));
    return {Complex(-0.25 * g) + disc, Complex(-0.25 * g) - disc};
}

QuantumTrajectory simulate_orthogonal(const AtomParams& atom, double duration, std::uint64_t seed,
                                      EngineConfig cfg, TrajectoryObserver* obs) {
    MeasurementOpSet set = build_orthogonal_set(atom);
    if (cfg.dt_max <= 0) cfg.dt_max = 1e-3 / std::max(atom.omega, atom.gamma);
    auto [tp, tm] = orthogonal_fixed_states(atom);
    (void)tm;
    return sample_trajectory(tp, set, duration, seed, cfg, obs);
}

}  // namespace qjump
