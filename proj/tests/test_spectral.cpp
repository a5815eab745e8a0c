#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "qjump/spectral.hpp"

using namespace qjump;
using std::size_t;

namespace {

ComplexMatrix random_w(size_t d, std::mt19937_64& gen) {
    std::normal_distribution<double> n;
    ComplexMatrix m(d, d);
    for (size_t i = 0; i < d; ++i)
        for (size_t j = 0; j < d; ++j) m(i, j) = Complex(n(gen), n(gen));
    m = m * m.adjoint();
    m *= Complex(1.0 / m.trace().real());
    return m;
}

ComplexMatrix liouville_apply(const CascadeSystem& sys, const ComplexMatrix& w) {
    const ComplexMatrix& g = sys.set.variants[0].smooth;
    ComplexMatrix out = g * w + w * g.adjoint();
    for (const auto& ch : sys.set.variants[0].channels) out += ch.op * w * ch.op.adjoint();
    return out;
}

// right-hand side of the bare atom master equation
ComplexMatrix me2_apply(const AtomParams& p, const ComplexMatrix& rho) {
    ComplexMatrix sx = pauli_x(), sm = lowering();
    ComplexMatrix h = sx;
    h *= Complex(0, -0.5 * p.omega);  // -i(W/2) sx rho ... assembled below
    ComplexMatrix out = h * rho - rho * h;
    ComplexMatrix jump = sm * rho * sm.adjoint();
    jump *= Complex(p.gamma, 0);
    ComplexMatrix nn = sm.adjoint() * sm;
    ComplexMatrix anti = nn * rho + rho * nn;
    anti *= Complex(-0.5 * p.gamma, 0);
    return out + jump + anti;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    double worst = 0;
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
    return worst;
}

double eig_residual(const ComplexMatrix& g, const ComplexVector& v, Complex lam) {
    ComplexVector r = g.apply(v);
    axpy(r, -lam, v);
    return vec_norm(r);
}

}  // namespace

TEST_CASE("one filter: completeness and cascade unidirectionality") {
    AtomParams atom{1.0, 50.0};
    CascadeSystem sys = build_one_filter(atom, {8.0, 50.0, 3});
    CHECK(completeness_defect(sys.set.variants[0]) < 1e-12 * sys.set.variants[0].smooth.frobenius_norm());

    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 5; ++rep) {
        ComplexMatrix w = random_w(sys.dim, gen);
        ComplexMatrix lw = liouville_apply(sys, w);
        ComplexMatrix atom_lhs = partial_trace(lw, {2, 4}, 0);
        ComplexMatrix atom_rhs = me2_apply(atom, partial_trace(w, {2, 4}, 0));
        CHECK(max_abs_diff(atom_lhs, atom_rhs) < 1e-12 * sys.set.variants[0].smooth.frobenius_norm());
    }
}

TEST_CASE("two filters: completeness and cascade unidirectionality") {
    AtomParams atom{1.0, 50.0};
    CascadeSystem sys = build_two_filter(atom, {8.0, 50.0, 2}, {8.0, -50.0, 2});
    CHECK(completeness_defect(sys.set.variants[0]) < 1e-12 * sys.set.variants[0].smooth.frobenius_norm());

    std::mt19937_64 gen(4);
    for (int rep = 0; rep < 3; ++rep) {
        ComplexMatrix w = random_w(sys.dim, gen);
        ComplexMatrix lw = liouville_apply(sys, w);
        ComplexMatrix atom_lhs = partial_trace(lw, {2, 3, 3}, 0);
        ComplexMatrix atom_rhs = me2_apply(atom, partial_trace(w, {2, 3, 3}, 0));
        CHECK(max_abs_diff(atom_lhs, atom_rhs) <
              1e-12 * sys.set.variants[0].smooth.frobenius_norm());
    }
}

TEST_CASE("one filter, gamma -> 0: cavity decouples and relaxes to vacuum") {
    AtomParams atom{1e-9, 10.0};
    CascadeSystem sys = build_one_filter(atom, {2.0, 10.0, 2});
    ComplexMatrix w = steady_state_joint(sys);
    ComplexMatrix cav = partial_trace(w, {2, 3}, 1);
    CHECK(cav(0, 0).real() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(cav(1, 1)) < 1e-6);
}

TEST_CASE("one filter: generator eigenvalues contain the exact slow pair") {
    AtomParams atom{1.0, 50.0};
    CascadeSystem sys = build_one_filter(atom, {8.0, 50.0, 3});
    EigResult e = eig_general(sys.set.variants[0].smooth);
    HlBasis hl = hl_basis(atom);
    auto closest = [&](Complex target) {
        double best = 1e300;
        for (auto v : e.values) best = std::min(best, std::abs(v - target));
        return best;
    };
    CHECK(closest(hl.lambda_h) < 1e-6 * atom.omega);
    CHECK(closest(hl.lambda_l) < 1e-6 * atom.omega);
}

TEST_CASE("one-filter recurrence: boundary, closed form, residual") {
    AtomParams atom{1.0, 50.0};
    CascadeSystem sys = build_one_filter(atom, {8.0, 50.0, 3});

    RecurrenceEigenstate sp = solve_recurrence_one(sys, 0, +1);
    CHECK(sp.h[0] == Complex(1.0));
    CHECK(sp.l[0] == Complex(0.0));
    RecurrenceEigenstate sm = solve_recurrence_one(sys, 0, -1);
    CHECK(sm.h[0] == Complex(0.0));
    CHECK(sm.l[0] == Complex(1.0));

    // strong driving: l_01^+ -> -sqrt(g)/(2 sqrt(G)) within 3%
    double target = -0.5 / std::sqrt(8.0);
    CHECK(std::abs(sp.l[1] - Complex(target)) < 0.03 * std::abs(target));

    const ComplexMatrix& g = sys.set.variants[0].smooth;
    for (const auto& st : {sp, sm}) {
        CHECK(eig_residual(g, st.assembled, st.eigenvalue) < 1e-8 * g.frobenius_norm());
    }
    // eigenvalue structure: Re sigma_n^+- = -g/4 - n G
    for (size_t n = 0; n <= 3; ++n) {
        RecurrenceEigenstate s = solve_recurrence_one(sys, n, +1);
        CHECK(s.eigenvalue.real() == doctest::Approx(-0.25 - 8.0 * n).epsilon(1e-9));
        CHECK(eig_residual(g, s.assembled, s.eigenvalue) < 1e-8 * g.frobenius_norm());
    }
}

TEST_CASE("two-filter recurrence: boundary, closed forms at optimal linewidth, residual") {
    AtomParams atom{1.0, 200.0};
    double G = optimal_linewidth(atom);
    CHECK(2 * G == doctest::Approx(std::pow(200.0, 2.0 / 3.0)));
    CascadeSystem sys = build_two_filter(atom, {G, 200.0, 2}, {G, -200.0, 2});

    RecurrenceEigenstate sp = solve_recurrence_two(sys, 0, 0, +1);
    CHECK(sp.h[0] == Complex(1.0));
    CHECK(sp.l[0] == Complex(0.0));
    RecurrenceEigenstate smv = solve_recurrence_two(sys, 0, 0, -1);
    CHECK(smv.h[0] == Complex(0.0));
    CHECK(smv.l[0] == Complex(1.0));

    const ComplexMatrix& g = sys.set.variants[0].smooth;
    CHECK(eig_residual(g, sp.assembled, sp.eigenvalue) < 1e-7 * g.frobenius_norm());
    CHECK(eig_residual(g, smv.assembled, smv.eigenvalue) < 1e-7 * g.frobenius_norm());

    // dominant sideband coefficient of S+: <-,10|S+> = -sqrt(g)/(2 sqrt(G)) within 5%
    HlBasis hl = hl_basis(atom);
    // dressed-basis amplitude from the assembled (normalized) vector
    ComplexVector dminus = dressed_minus();
    const size_t nb = 3;
    Complex amp = 0;
    for (size_t a = 0; a < 2; ++a) amp += std::conj(dminus[a]) * sp.assembled[(a * 3 + 1) * nb + 0];
    double target = -0.5 / std::sqrt(G);
    CHECK(std::abs(amp - Complex(target)) < 0.05 * std::abs(target));

    // S-: <+,01|S-> = +sqrt(g)/(2 sqrt(G)) within 5%
    ComplexVector dplus = dressed_plus();
    Complex amp2 = 0;
    for (size_t a = 0; a < 2; ++a)
        amp2 += std::conj(dplus[a]) * smv.assembled[(a * 3 + 0) * nb + 1];
    CHECK(std::abs(amp2 - Complex(-target)) < 0.05 * std::abs(target));

    // subdominant closed-form terms carry O(g/W) omitted pieces; compare within that slack
    auto coef = [&](const RecurrenceEigenstate& s, const ComplexVector& datom, size_t j, size_t k) {
        Complex c = 0;
        for (size_t a = 0; a < 2; ++a) c += std::conj(datom[a]) * s.assembled[(a * 3 + j) * nb + k];
        return c;
    };
    const Complex i_(0, 1);
    double slack = 2.0 / atom.omega;  // 2 * (gamma/omega)
    CHECK(std::abs(coef(sp, dplus, 1, 0) - i_ * std::sqrt(G) / 400.0) < slack);
    CHECK(std::abs(coef(sp, dplus, 0, 1) + i_ * std::sqrt(G) / 400.0) < slack);
    CHECK(std::abs(coef(sp, dplus, 1, 1) + Complex(1.0 / (8 * G))) < slack);
    CHECK(std::abs(coef(smv, dminus, 1, 1) + Complex(1.0 / (8 * G))) < slack);

    // eigenvalue structure Re sigma_nm = -g/4 - (n+m) G
    for (size_t n = 0; n <= 1; ++n)
        for (size_t m = 0; m <= 1; ++m) {
            RecurrenceEigenstate s = solve_recurrence_two(sys, n, m, +1);
            CHECK(s.eigenvalue.real() == doctest::Approx(-0.25 - G * (n + m)).epsilon(1e-9));
            CHECK(eig_residual(g, s.assembled, s.eigenvalue) < 1e-7 * g.frobenius_norm());
        }
    (void)hl;
}

TEST_CASE("jump action table: allowed rates gamma/4, stay/swap pattern, forbidden suppression") {
    AtomParams atom{1.0, 200.0};
    double G = optimal_linewidth(atom);
    CascadeSystem sys = build_two_filter(atom, {G, 200.0, 2}, {G, -200.0, 2});
    RecurrenceEigenstate sp = solve_recurrence_two(sys, 0, 0, +1);
    auto table = jump_action_table(sys, sp);

    // passed-a from S+: rate gamma/4 within 10%, lands on S- (swap); the
    // dominance margin allows for the O(sqrt(g/G)) one-photon admixtures
    CHECK(table[ChannelLabel::passed_a].rate == doctest::Approx(0.25).epsilon(0.10));
    CHECK(table[ChannelLabel::passed_a].overlap_minus > 0.85);
    CHECK(table[ChannelLabel::passed_a].overlap_minus > 5 * table[ChannelLabel::passed_a].overlap_plus);
    // rejected from S+: stays on S+
    CHECK(table[ChannelLabel::rejected].rate == doctest::Approx(0.25).epsilon(0.10));
    CHECK(table[ChannelLabel::rejected].overlap_plus > 0.85);
    CHECK(table[ChannelLabel::rejected].overlap_plus > 5 * table[ChannelLabel::rejected].overlap_minus);
    // forbidden (b) rate: rate/(gamma/4) within a factor 2 of the budget term
    ErrorBudget eb = error_budget(atom, G);
    double ratio = table[ChannelLabel::passed_b].rate / 0.25;
    CHECK(ratio > 0.5 * eb.forbidden);
    CHECK(ratio < 2.0 * eb.forbidden);
}

TEST_CASE("error budget: closed-form terms and optimal linewidth") {
    AtomParams atom{1.0, 200.0};
    ErrorBudget b = error_budget(atom, 8.0);
    CHECK(b.entangled == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
    CHECK(b.wrong == doctest::Approx(64.0 / 40000.0).epsilon(1e-12));
    CHECK(b.transient == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
    CHECK(b.forbidden == doctest::Approx(32.0 / 40000.0 + 1.0 / 256.0).epsilon(1e-12));
    CHECK(b.regime_ok);

    // total at the optimal linewidth for W = 700: ~ (3/4)(g/W)^(2/3)
    AtomParams a700{1.0, 700.0};
    double gopt = optimal_linewidth(a700);
    ErrorBudget b700 = error_budget(a700, gopt);
    CHECK(b700.total == doctest::Approx(0.75 * std::pow(1.0 / 700.0, 2.0 / 3.0)).epsilon(1e-9));

    // d(total)/dGamma = 0 at 2 Gamma = W^(2/3) g^(1/3) for alpha = beta
    double h = 1e-5 * gopt;
    double up = error_budget(a700, gopt + h).total;
    double dn = error_budget(a700, gopt - h).total;
    CHECK(std::abs(up - dn) / (2 * h) < 1e-6);
    CHECK(up > b700.total);
    CHECK(dn > b700.total);
}

TEST_CASE("epsilon_app_perturbative: value and minimizer scaling") {
    AtomParams atom{1.0, 50.0};
    CHECK(epsilon_app_perturbative(atom, 8.0) ==
          doctest::Approx(1.25 * 64.0 / 2500.0 + 1.0 / 64.0).epsilon(1e-12));

    // the Gamma minimizing 5G^2/4W^2 + g/8G scales as W^(2/3) g^(1/3)
    for (double w : {100.0, 400.0, 1600.0}) {
        AtomParams a{1.0, w};
        double best_g = 0, best_v = 1e300;
        for (double G = 0.5; G < w; G *= 1.01) {
            double v = epsilon_app_perturbative(a, G);
            if (v < best_v) {
                best_v = v;
                best_g = G;
            }
        }
        // analytic minimizer of 5G^2/(4W^2) + g/(8G): G = (g W^2/20)^(1/3),
        // i.e. proportional to W^(2/3) g^(1/3)
        double expect = std::pow(w * w / 20.0, 1.0 / 3.0);
        CHECK(best_g == doctest::Approx(expect).epsilon(0.02));
    }
}

TEST_CASE("fit_error_budget recovers planted coefficients") {
    AtomParams atom{1.0, 300.0};
    std::vector<double> gs, errs;
    for (double G = 4; G <= 40; G += 4) {
        gs.push_back(G);
        errs.push_back(error_budget(atom, G, 1.3, 0.6).total);
    }
    auto [alpha, beta] = fit_error_budget(atom, gs, errs);
    CHECK(alpha == doctest::Approx(1.3).epsilon(1e-9));
    CHECK(beta == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("photon bookkeeping: total detection rate = gamma <s^+s>_ss") {
    AtomParams atom{1.0, 50.0};
    CascadeSystem sys = build_one_filter(atom, {8.0, 50.0, 3});
    RecurrenceEigenstate s0 = solve_recurrence_one(sys, 0, +1);
    double duration = 100000.0;
    QuantumTrajectory t = sample_trajectory(s0.assembled, sys.set, duration, 321, {});
    // stationary excited population W^2/(g^2 + 2W^2)
    double expect = atom.gamma * atom.omega * atom.omega /
                    (atom.gamma * atom.gamma + 2 * atom.omega * atom.omega);
    CHECK(t.events.size() / duration == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("recurrence: degenerate denominator is reported") {
    // zero detuning, Gamma tuned so lambda_l + j lambda_a hits sigma_0^+ (j=1):
    // lambda_h - lambda_l = -i sqrt(W^2 - g^2/4) is imaginary; with w_a = 0 a
    // real Gamma cannot make the denominator vanish, so force it via w_a
    AtomParams atom{1.0, 10.0};
    double root = std::sqrt(atom.omega * atom.omega - 0.25);
    // lambda_l - lambda_h = +i root; with w_a = +root and G -> 0 the
    // l-denominator at j = 1 vanishes: lambda_l + lambda_a - sigma_0^+ = -G
    CascadeSystem sys = build_one_filter(atom, {1e-14, root, 2});
    CHECK_THROWS_AS(solve_recurrence_one(sys, 0, +1), NumericalError);
}
