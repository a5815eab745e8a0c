#include "qjump/spectral.hpp"

#include <cmath>

namespace qjump {

namespace {

const Complex I_(0.0, 1.0);

ComplexMatrix destroy(std::size_t dim) {
    ComplexMatrix a(dim, dim);
    for (std::size_t j = 1; j < dim; ++j) a(j - 1, j) = std::sqrt(static_cast<double>(j));
    return a;
}

ComplexMatrix number_op(const ComplexMatrix& a) { return a.adjoint() * a; }

}  // namespace

void validate(const FilterConfig& f) {
    if (!(f.hwhm > 0)) throw ConfigError("FilterConfig: hwhm > 0 required");
    if (f.n_max < 1) throw ConfigError("FilterConfig: n_max >= 1 required");
}

CascadeSystem build_one_filter(const AtomParams& atom, const FilterConfig& filter) {
    validate(atom);
    validate(filter);
    const std::size_t na = filter.n_max + 1;
    const double g = atom.gamma, W = atom.omega, G = filter.hwhm;

    CascadeSystem sys;
    sys.atom = atom;
    sys.filters = {filter};
    sys.dim = 2 * na;
    sys.sigma_op = kron(lowering(), ComplexMatrix::identity(na));
    sys.a_op = kron(ComplexMatrix::identity(2), destroy(na));

    ComplexMatrix sx = kron(pauli_x(), ComplexMatrix::identity(na));
    ComplexMatrix num_a = number_op(sys.a_op);

    // G0 = -i(w_a a^+a + W/2 sx) - (g/2 s^+s + G a^+a + sqrt(gG) a^+ s)
    ComplexMatrix g0 = (-I_ * Complex(filter.detuning)) * num_a;
    g0 += (-I_ * Complex(0.5 * W)) * sx;
    g0 += Complex(-0.5 * g) * (sys.sigma_op.adjoint() * sys.sigma_op);
    g0 += Complex(-G) * num_a;
    g0 += Complex(-std::sqrt(g * G)) * (sys.a_op.adjoint() * sys.sigma_op);

    ComplexMatrix j1 = Complex(std::sqrt(g)) * sys.sigma_op + Complex(std::sqrt(G)) * sys.a_op;
    ComplexMatrix ja = Complex(std::sqrt(G)) * sys.a_op;

    sys.set.variants.push_back(
        {g0, {{ChannelLabel::rejected, j1}, {ChannelLabel::passed_a, ja}}});
    sys.set.factor_dims = {2, na};
    sys.set.scheme_id = "spectral-1";
    require_completeness(sys.set);
    return sys;
}

CascadeSystem build_two_filter(const AtomParams& atom, const FilterConfig& fa,
                               const FilterConfig& fb) {
    validate(atom);
    validate(fa);
    validate(fb);
    const std::size_t na = fa.n_max + 1, nb = fb.n_max + 1;
    const double g = atom.gamma, W = atom.omega;
    const double Ga = fa.hwhm, Gb = fb.hwhm;

    CascadeSystem sys;
    sys.atom = atom;
    sys.filters = {fa, fb};
    sys.dim = 2 * na * nb;
    ComplexMatrix ia = ComplexMatrix::identity(na), ib = ComplexMatrix::identity(nb);
    sys.sigma_op = kron(kron(lowering(), ia), ib);
    sys.a_op = kron(kron(ComplexMatrix::identity(2), destroy(na)), ib);
    sys.b_op = kron(kron(ComplexMatrix::identity(2), ia), destroy(nb));

    ComplexMatrix sx = kron(kron(pauli_x(), ia), ib);
    ComplexMatrix num_a = number_op(sys.a_op), num_b = number_op(sys.b_op);

    // G0 = -i(w_a a^+a + w_b b^+b + W/2 sx)
    //      - (g/2 s^+s + Ga a^+a + Gb b^+b + sqrt(g Ga) a^+s + Gab b^+a + sqrt(g Gb) b^+s)
    ComplexMatrix g0 = (-I_ * Complex(fa.detuning)) * num_a;
    g0 += (-I_ * Complex(fb.detuning)) * num_b;
    g0 += (-I_ * Complex(0.5 * W)) * sx;
    g0 += Complex(-0.5 * g) * (sys.sigma_op.adjoint() * sys.sigma_op);
    g0 += Complex(-Ga) * num_a;
    g0 += Complex(-Gb) * num_b;
    g0 += Complex(-std::sqrt(g * Ga)) * (sys.a_op.adjoint() * sys.sigma_op);
    g0 += Complex(-std::sqrt(Ga * Gb)) * (sys.b_op.adjoint() * sys.a_op);
    g0 += Complex(-std::sqrt(g * Gb)) * (sys.b_op.adjoint() * sys.sigma_op);

    ComplexMatrix j1 = Complex(std::sqrt(g)) * sys.sigma_op;
    j1 += Complex(std::sqrt(Ga)) * sys.a_op;
    j1 += Complex(std::sqrt(Gb)) * sys.b_op;
    ComplexMatrix ja = Complex(std::sqrt(Ga)) * sys.a_op;
    ComplexMatrix jb = Complex(std::sqrt(Gb)) * sys.b_op;

    sys.set.variants.push_back({g0,
                                {{ChannelLabel::rejected, j1},
                                 {ChannelLabel::passed_a, ja},
                                 {ChannelLabel::passed_b, jb}}});
    sys.set.factor_dims = {2, na, nb};
    sys.set.scheme_id = "spectral-2";
    require_completeness(sys.set);
    return sys;
}

HlBasis hl_basis(const AtomParams& atom) {
    validate(atom);
    const double g = atom.gamma, W = atom.omega;
    HlBasis hl;
    Complex root = std::sqrt(Complex(W * W - 0.25 * g * g));
    hl.lambda_h = Complex(-0.25 * g) - 0.5 * I_ * root;
    hl.lambda_l = Complex(-0.25 * g) + 0.5 * I_ * root;
    Complex ratio = std::sqrt(Complex(1.0 - 0.25 * g * g / (W * W))) - I_ * Complex(0.5 * g / W);
    hl.mu = Complex(1.0 / std::sqrt(1.0 + std::norm(ratio)));
    hl.nu = hl.mu * ratio;
    Complex denom = hl.mu * hl.mu + hl.nu * hl.nu;
    hl.p = hl.nu * hl.nu / denom;
    hl.q = hl.mu * hl.nu / denom;
    hl.ket_h = {hl.nu, hl.mu};   // nu|e> + mu|g>
    hl.ket_l = {-hl.mu, hl.nu};  // nu|g> - mu|e>
    return hl;
}

namespace {

Complex branch_lambda(const HlBasis& hl, int branch) {
    return branch > 0 ? hl.lambda_h : hl.lambda_l;
}

void check_denominator(Complex d, double scale) {
    if (std::abs(d) < 1e-12 * scale)
        throw NumericalError("recurrence: degenerate (resonant) denominator");
}

}  // namespace

RecurrenceEigenstate solve_recurrence_one(const CascadeSystem& sys, std::size_t n, int branch) {
    if (sys.filters.size() != 1) throw ConfigError("solve_recurrence_one: one-filter system required");
    const FilterConfig& f = sys.filters[0];
    if (n > f.n_max) throw ConfigError("solve_recurrence_one: n exceeds truncation");
    const double g = sys.atom.gamma, W = sys.atom.omega, G = f.hwhm;
    const std::size_t na = f.n_max + 1;
    HlBasis hl = hl_basis(sys.atom);
    const Complex lam_a = Complex(-G) - I_ * Complex(f.detuning);
    const double scale = std::max({W, G, g});

    RecurrenceEigenstate st;
    st.n = n;
    st.branch = branch;
    st.eigenvalue = branch_lambda(hl, branch) + Complex(static_cast<double>(n)) * lam_a;
    st.h.assign(na, Complex(0));
    st.l.assign(na, Complex(0));
    st.h[n] = branch > 0 ? 1.0 : 0.0;
    st.l[n] = branch > 0 ? 0.0 : 1.0;

    auto step = [&](std::size_t j, const Complex& hprev, const Complex& lprev, Complex& hj,
                    Complex& lj) {
        Complex dh = hl.lambda_h + Complex(static_cast<double>(j)) * lam_a - st.eigenvalue;
        Complex dl = hl.lambda_l + Complex(static_cast<double>(j)) * lam_a - st.eigenvalue;
        check_denominator(dh, scale);
        check_denominator(dl, scale);
        Complex c = std::sqrt(g * G * static_cast<double>(j));
        hj = c / dh * (hl.q * hprev + (hl.p - 1.0) * lprev);
        lj = c / dl * (hl.p * hprev - hl.q * lprev);
    };

    for (std::size_t j = n + 1; j < na; ++j) step(j, st.h[j - 1], st.l[j - 1], st.h[j], st.l[j]);

    // first dropped ring, for the truncation log
    {
        Complex hd, ld;
        step(na, st.h[na - 1], st.l[na - 1], hd, ld);
        st.truncation_weight = std::norm(hd) + std::norm(ld);
    }

    st.assembled.assign(sys.dim, Complex(0));
    for (std::size_t j = 0; j < na; ++j) {
        // atom index 0 = e, 1 = g; joint index atom*na + j
        st.assembled[0 * na + j] += st.h[j] * hl.ket_h[0] + st.l[j] * hl.ket_l[0];
        st.assembled[1 * na + j] += st.h[j] * hl.ket_h[1] + st.l[j] * hl.ket_l[1];
    }
    normalize(st.assembled);
    return st;
}

RecurrenceEigenstate solve_recurrence_two(const CascadeSystem& sys, std::size_t n, std::size_t m,
                                          int branch) {
    if (sys.filters.size() != 2) throw ConfigError("solve_recurrence_two: two-filter system required");
    const FilterConfig& fa = sys.filters[0];
    const FilterConfig& fb = sys.filters[1];
    if (n > fa.n_max || m > fb.n_max) throw ConfigError("solve_recurrence_two: (n,m) exceeds truncation");
    const double g = sys.atom.gamma, W = sys.atom.omega, G = fa.hwhm;
    const std::size_t na = fa.n_max + 1, nb = fb.n_max + 1;
    HlBasis hl = hl_basis(sys.atom);
    const Complex lam_a = Complex(-fa.hwhm) - I_ * Complex(fa.detuning);
    const Complex lam_b = Complex(-fb.hwhm) - I_ * Complex(fb.detuning);
    const double scale = std::max({W, G, g});

    RecurrenceEigenstate st;
    st.n = n;
    st.m = m;
    st.branch = branch;
    st.eigenvalue = branch_lambda(hl, branch) + Complex(static_cast<double>(n)) * lam_a +
                    Complex(static_cast<double>(m)) * lam_b;

    // The kept lattice treats coefficients beyond the truncation as zero, so
    // the assembled vector is an exact eigenvector of the truncated
    // generator. A one-ring extension is computed afterwards purely to log
    // the dropped weight.
    const std::size_t ja = na + 1, jb = nb + 1;
    std::vector<Complex> hh(ja * jb, Complex(0)), ll(ja * jb, Complex(0));
    auto at = [&](std::vector<Complex>& v, std::size_t j, std::size_t k) -> Complex& {
        return v[j * jb + k];
    };
    at(hh, n, m) = branch > 0 ? 1.0 : 0.0;
    at(ll, n, m) = branch > 0 ? 0.0 : 1.0;

    auto recurrence_at = [&](std::size_t j, std::size_t k, std::size_t drop_from_j) {
        Complex diag = Complex(static_cast<double>(j)) * lam_a +
                       Complex(static_cast<double>(k)) * lam_b - st.eigenvalue;
        Complex dh = hl.lambda_h + diag;
        Complex dl = hl.lambda_l + diag;
        check_denominator(dh, scale);
        check_denominator(dl, scale);
        Complex sh = 0, sl = 0;
        if (j > 0) {
            Complex c = std::sqrt(g * G * static_cast<double>(j));
            sh += c * (hl.q * at(hh, j - 1, k) + (hl.p - 1.0) * at(ll, j - 1, k));
            sl += c * (hl.p * at(hh, j - 1, k) - hl.q * at(ll, j - 1, k));
        }
        if (k > 0) {
            Complex c = std::sqrt(g * fb.hwhm * static_cast<double>(k));
            sh += c * (hl.q * at(hh, j, k - 1) + (hl.p - 1.0) * at(ll, j, k - 1));
            sl += c * (hl.p * at(hh, j, k - 1) - hl.q * at(ll, j, k - 1));
            if (j + 1 < drop_from_j) {
                Complex c2 = std::sqrt(fa.hwhm * fb.hwhm) *
                             std::sqrt(static_cast<double>(k) * static_cast<double>(j + 1));
                sh += c2 * at(hh, j + 1, k - 1);
                sl += c2 * at(ll, j + 1, k - 1);
            }
        }
        at(hh, j, k) = sh / dh;
        at(ll, j, k) = sl / dl;
    };

    // sweep: k from m upward; j from max(n-(k-m), 0) upward (j > n when k = m)
    for (std::size_t k = m; k < nb; ++k) {
        std::size_t j0;
        if (k == m)
            j0 = n + 1;
        else
            j0 = (n + m > k) ? (n + m - k) : 0;
        for (std::size_t j = j0; j < na; ++j) recurrence_at(j, k, na);
    }

    st.h.assign(na * nb, Complex(0));
    st.l.assign(na * nb, Complex(0));
    for (std::size_t j = 0; j < na; ++j)
        for (std::size_t k = 0; k < nb; ++k) {
            st.h[j * nb + k] = at(hh, j, k);
            st.l[j * nb + k] = at(ll, j, k);
        }

    // dropped-ring estimate from the kept values
    double dropped = 0;
    for (std::size_t k = m; k < jb; ++k) {
        std::size_t j0 = (k == m) ? std::max<std::size_t>(n + 1, na)
                                  : ((n + m > k) ? (n + m - k) : 0);
        for (std::size_t j = j0; j < ja; ++j) {
            if (j < na && k < nb) continue;
            recurrence_at(j, k, ja);
            dropped += std::norm(at(hh, j, k)) + std::norm(at(ll, j, k));
        }
    }
    st.truncation_weight = dropped;

    st.assembled.assign(sys.dim, Complex(0));
    for (std::size_t j = 0; j < na; ++j)
        for (std::size_t k = 0; k < nb; ++k) {
            Complex hc = st.h[j * nb + k], lc = st.l[j * nb + k];
            st.assembled[(0 * na + j) * nb + k] = hc * hl.ket_h[0] + lc * hl.ket_l[0];
            st.assembled[(1 * na + j) * nb + k] = hc * hl.ket_h[1] + lc * hl.ket_l[1];
        }
    normalize(st.assembled);
    return st;
}

std::map<ChannelLabel, JumpAction> jump_action_table(const CascadeSystem& sys,
                                                     const RecurrenceEigenstate& state) {
    RecurrenceEigenstate sp, sm;
    if (sys.filters.size() == 1) {
        sp = solve_recurrence_one(sys, 0, +1);
        sm = solve_recurrence_one(sys, 0, -1);
    } else {
        sp = solve_recurrence_two(sys, 0, 0, +1);
        sm = solve_recurrence_two(sys, 0, 0, -1);
    }
    std::map<ChannelLabel, JumpAction> table;
    ComplexVector post;
    for (const auto& ch : sys.set.variants[0].channels) {
        ch.op.apply(state.assembled, post);
        JumpAction act;
        act.rate = norm2(post);
        if (act.rate > 1e-300) {
            normalize(post);
            act.overlap_plus = std::norm(dot(sp.assembled, post));
            act.overlap_minus = std::norm(dot(sm.assembled, post));
        }
        table[ch.label] = act;
    }
    return table;
}

ErrorBudget error_budget(const AtomParams& atom, double Gamma, double alpha, double beta) {
    validate(atom);
    if (!(Gamma > 0)) throw ConfigError("error_budget: Gamma > 0 required");
    const double g = atom.gamma, W = atom.omega;
    ErrorBudget b;
    b.wrong = Gamma * Gamma / (W * W);
    b.transient = g / (8 * Gamma);
    b.forbidden = Gamma * Gamma / (2 * W * W) + g / (32 * Gamma);
    b.entangled = g / (4 * Gamma);
    b.alpha = alpha;
    b.beta = beta;
    b.total = alpha * Gamma * Gamma / (W * W) + beta * g / (4 * Gamma);
    b.regime_ok = (W >= 4 * Gamma) && (Gamma >= 4 * g);
    return b;
}

double epsilon_app_perturbative(const AtomParams& atom, double Gamma) {
    validate(atom);
    const double g = atom.gamma, W = atom.omega;
    return 1.25 * Gamma * Gamma / (W * W) + g / (8 * Gamma);
}

double optimal_linewidth(const AtomParams& atom) {
    validate(atom);
    return 0.5 * std::pow(atom.omega, 2.0 / 3.0) * std::pow(atom.gamma, 1.0 / 3.0);
}

std::pair<double, double> fit_error_budget(const AtomParams& atom,
                                           const std::vector<double>& gammas,
                                           const std::vector<double>& errors) {
    if (gammas.size() != errors.size() || gammas.size() < 2)
        throw ConfigError("fit_error_budget: need >= 2 (Gamma, error) pairs");
    const double g = atom.gamma, W = atom.omega;
    // least squares for err = alpha*x + beta*y, x = Gamma^2/W^2, y = g/(4 Gamma)
    double sxx = 0, sxy = 0, syy = 0, sxe = 0, sye = 0;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        double x = gammas[i] * gammas[i] / (W * W);
        double y = g / (4 * gammas[i]);
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxe += x * errors[i];
        sye += y * errors[i];
    }
    double det = sxx * syy - sxy * sxy;
    if (std::abs(det) < 1e-300) throw NumericalError("fit_error_budget: degenerate design");
    return {(syy * sxe - sxy * sye) / det, (sxx * sye - sxy * sxe) / det};
}

ComplexMatrix liouvillian_superop(const ComplexMatrix& g, const std::vector<ComplexMatrix>& jumps) {
    const std::size_t d = g.rows();
    ComplexMatrix eye = ComplexMatrix::identity(d);
    // column-major vec: vec(A X B) = (B^T kron A) vec(X)
    ComplexMatrix l = kron(eye, g);          // G W
    l += kron(g.conjugate(), eye);           // W G^+
    for (const auto& j : jumps) l += kron(j.conjugate(), j);  // J W J^+
    return l;
}

ComplexMatrix steady_state_joint(const CascadeSystem& sys) {
    const std::size_t d = sys.dim;
    std::vector<ComplexMatrix> jumps;
    for (const auto& ch : sys.set.variants[0].channels) jumps.push_back(ch.op);
    ComplexMatrix l = liouvillian_superop(sys.set.variants[0].smooth, jumps);
    const double lnorm = std::max(l.frobenius_norm(), 1e-300);

    // replace one equation with the trace constraint; verify the residual and
    // try another row if the replaced one was not redundant
    LinalgConfig cfg;
    cfg.cond_limit = 1e14;
    for (std::size_t attempt = 0; attempt < 3; ++attempt) {
        ComplexMatrix sysm = l;
        std::size_t row = attempt * (d + 1);  // rows 0, d+1, ... (diagonal slots)
        for (std::size_t c = 0; c < d * d; ++c) sysm(row, c) = 0;
        for (std::size_t i = 0; i < d; ++i) sysm(row, i * d + i) = 1.0;  // Tr W = 1
        ComplexVector rhs(d * d, Complex(0));
        rhs[row] = 1.0;
        ComplexVector w;
        try {
            w = solve_linear(sysm, rhs, cfg);
        } catch (const NumericalError&) {
            continue;
        }
        ComplexVector resid = l.apply(w);
        if (vec_norm(resid) > 1e-8 * lnorm * vec_norm(w)) continue;
        ComplexMatrix wm(d, d);
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t i = 0; i < d; ++i) wm(i, j) = w[j * d + i];
        // hermitize against roundoff
        ComplexMatrix wh = wm.adjoint();
        wm += wh;
        wm *= Complex(0.5);
        return wm;
    }
    throw NumericalError("steady_state_joint: could not isolate the stationary state");
}

}  // namespace qjump
