#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "qjump/classical.hpp"

using namespace qjump;
using std::size_t;

namespace {

ComplexMatrix scaled_lowering(double gamma) {
    ComplexMatrix c = lowering();
    c *= Complex(std::sqrt(gamma), 0);
    return c;
}

DiagonalEnsemble first_order_tm_states() {
    // (|g> -+ i|e>)/sqrt(2), weights irrelevant for rate checks
    DiagonalEnsemble e;
    e.state[0] = {Complex(0, -M_SQRT1_2), Complex(M_SQRT1_2)};
    e.state[1] = {Complex(0, M_SQRT1_2), Complex(M_SQRT1_2)};
    e.weight[0] = 0.51;
    e.weight[1] = 0.49;
    return e;
}

// random 2x2 unitary from two complex gaussians via Gram-Schmidt
ComplexMatrix random_unitary(std::mt19937_64& gen) {
    std::normal_distribution<double> d;
    ComplexVector a = {Complex(d(gen), d(gen)), Complex(d(gen), d(gen))};
    normalize(a);
    ComplexVector b = {-std::conj(a[1]), std::conj(a[0])};
    double ph = d(gen);
    ComplexMatrix u(2, 2);
    u(0, 0) = a[0];
    u(1, 0) = a[1];
    u(0, 1) = b[0] * std::exp(Complex(0, ph));
    u(1, 1) = b[1] * std::exp(Complex(0, ph));
    return u;
}

// Kolmogorov-Smirnov p-value against Exp(rate)
double ks_p_exponential(std::vector<double> samples, double rate) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0;
    for (size_t i = 0; i < samples.size(); ++i) {
        double f = 1.0 - std::exp(-rate * samples[i]);
        d = std::max(d, std::abs(f - (i + 1) / n));
        d = std::max(d, std::abs(f - i / n));
    }
    double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace

TEST_CASE("tm_rates: all four rates gamma/4 on the eigenstate-jump pair") {
    double g = 1.7;
    JumpRateMatrix r = tm_rates(first_order_tm_states(), {scaled_lowering(g)});
    for (size_t mu = 0; mu < 2; ++mu)
        for (size_t nu = 0; nu < 2; ++nu) CHECK(r.rate(mu, nu) == doctest::Approx(g / 4).epsilon(1e-12));
}

TEST_CASE("tm_rates: bare decay basis has only R_{g<-e}") {
    DiagonalEnsemble e;
    e.state[0] = ket_g();
    e.state[1] = ket_e();
    e.weight[0] = 1;
    e.weight[1] = 0;
    double g = 2.3;
    JumpRateMatrix r = tm_rates(e, {scaled_lowering(g)});
    CHECK(r.rate(0, 1) == doctest::Approx(g).epsilon(1e-12));
    CHECK(r.rate(0, 0) == doctest::Approx(0.0));
    CHECK(r.rate(1, 0) == doctest::Approx(0.0));
    CHECK(r.rate(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("tm_rates invariant under unitary rearrangement of the operator list") {
    std::mt19937_64 gen(97);
    std::normal_distribution<double> d;
    DiagonalEnsemble ens = tm_diagonalize(stationary_state({1.0, 3.0}));
    // two random operators
    ComplexMatrix c1(2, 2), c2(2, 2);
    for (size_t i = 0; i < 2; ++i)
        for (size_t j = 0; j < 2; ++j) {
            c1(i, j) = Complex(d(gen), d(gen));
            c2(i, j) = Complex(d(gen), d(gen));
        }
    JumpRateMatrix base = tm_rates(ens, {c1, c2});
    for (int rep = 0; rep < 100; ++rep) {
        ComplexMatrix u = random_unitary(gen);
        ComplexMatrix c1p = u(0, 0) * c1 + u(0, 1) * c2;
        ComplexMatrix c2p = u(1, 0) * c1 + u(1, 1) * c2;
        JumpRateMatrix mixed = tm_rates(ens, {c1p, c2p});
        for (size_t mu = 0; mu < 2; ++mu)
            for (size_t nu = 0; nu < 2; ++nu)
                CHECK(std::abs(mixed.rate(mu, nu) - base.rate(mu, nu)) < 1e-12);
    }
}

TEST_CASE("tm_rates_shifted: lambda = 0 is a no-op, lambda = 1/2 changes the rates") {
    DiagonalEnsemble ens = first_order_tm_states();
    double g = 1.0;
    JumpRateMatrix base = tm_rates(ens, {scaled_lowering(g)});
    JumpRateMatrix zero = tm_rates_shifted(ens, {scaled_lowering(g)}, {Complex(0)});
    for (size_t mu = 0; mu < 2; ++mu)
        for (size_t nu = 0; nu < 2; ++nu)
            CHECK(zero.rate(mu, nu) == doctest::Approx(base.rate(mu, nu)));

    // c -> sqrt(g)(s + 1/2): <phi1|(s + 1/2)|phi1> = (1 - i)/2, rate g/2
    JumpRateMatrix sh = tm_rates_shifted(ens, {scaled_lowering(g)},
                                         {Complex(0.5 * std::sqrt(g), 0)});
    CHECK(sh.rate(0, 0) == doctest::Approx(g / 2).epsilon(1e-12));
    CHECK(std::abs(sh.rate(0, 0) - g / 4) > 0.2 * g);
}

TEST_CASE("tm_rates_shifted: traceless shift of a traceless operator is a no-op") {
    DiagonalEnsemble ens = first_order_tm_states();
    ComplexMatrix c = scaled_lowering(1.0);
    ComplexVector shift = {-c.trace() / 2.0};  // zero: sigma is traceless
    JumpRateMatrix a = tm_rates(ens, {c});
    JumpRateMatrix b = tm_rates_shifted(ens, {c}, shift);
    for (size_t mu = 0; mu < 2; ++mu)
        for (size_t nu = 0; nu < 2; ++nu) CHECK(a.rate(mu, nu) == doctest::Approx(b.rate(mu, nu)));
}

TEST_CASE("simulate_tm: zero duration and event rates") {
    AtomParams p{1.0, 50.0};
    CHECK(simulate_tm(p, 0.0, 5).events.empty());

    // long run: total rate g/2 within 1%, central:sideband 2:1 within 2%
    double duration = 250000.0;
    ClassicalTrajectory t = simulate_tm(p, duration, 12345);
    CHECK(t.events.size() > 100000);
    double total_rate = t.events.size() / duration;
    CHECK(total_rate == doctest::Approx(0.5).epsilon(0.01));
    // central : each sideband = 2 : 1 (the central peak carries half the photons)
    size_t central = 0, upper = 0, lower = 0;
    for (const auto& ev : t.events) {
        if (ev.channel == ChannelLabel::central)
            ++central;
        else if (ev.channel == ChannelLabel::upper_sideband)
            ++upper;
        else
            ++lower;
    }
    CHECK(double(central) / upper == doctest::Approx(2.0).epsilon(0.02));
    CHECK(double(central) / lower == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("simulate_tm: occupation matches the chain's own stationary distribution") {
    AtomParams p{1.0, 50.0};
    double duration = 100000.0;
    ClassicalTrajectory t = simulate_tm(p, duration, 777);
    double tin[2] = {0, 0};
    int s = t.initial_state;
    double last = 0;
    for (const auto& ev : t.events) {
        tin[s] += ev.time - last;
        last = ev.time;
        s = ev.new_state;
    }
    tin[s] += duration - last;
    // first-order rates are symmetric, so the chain predicts 50/50
    CHECK(tin[0] / duration == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("simulate_dressed: strict sideband alternation, per-transition rates gamma/4") {
    AtomParams p{1.0, 50.0};
    CHECK(simulate_dressed(p, 0.0, 3).events.empty());

    double duration = 400000.0;
    ClassicalTrajectory t = simulate_dressed(p, duration, 99);
    CHECK(t.events.size() > 100000);

    int last_side = -1;
    double tin[2] = {0, 0};
    size_t moves[2][2] = {{0, 0}, {0, 0}};
    int s = t.initial_state;
    double last = 0;
    for (const auto& ev : t.events) {
        if (ev.channel != ChannelLabel::central) {
            int which = ev.channel == ChannelLabel::upper_sideband ? 0 : 1;
            CHECK(which != last_side);  // strict alternation
            last_side = which;
        }
        tin[s] += ev.time - last;
        ++moves[ev.new_state][s];
        last = ev.time;
        s = ev.new_state;
    }
    tin[s] += duration - last;
    for (int src = 0; src < 2; ++src)
        for (int dst = 0; dst < 2; ++dst)
            CHECK(moves[dst][src] / tin[src] == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("simulate_dressed: gamma -> 0 gives no events") {
    // gamma must stay positive; a tiny rate over a finite window gives none
    AtomParams p{1e-12, 50.0};
    ClassicalTrajectory t = simulate_dressed(p, 10.0, 4);
    CHECK(t.events.empty());
}

TEST_CASE("simulate_dressed: inter-sideband waiting times are Exp(gamma/4)") {
    AtomParams p{1.0, 50.0};
    ClassicalTrajectory t = simulate_dressed(p, 90000.0, 2024);
    std::vector<double> waits;
    double last_side_t = -1;
    for (const auto& ev : t.events) {
        if (ev.channel == ChannelLabel::central) continue;
        if (last_side_t >= 0) waits.push_back(ev.time - last_side_t);
        last_side_t = ev.time;
        if (waits.size() >= 10000) break;
    }
    REQUIRE(waits.size() >= 10000);
    double mean = 0;
    for (double w : waits) mean += w;
    mean /= waits.size();
    CHECK(mean == doctest::Approx(4.0).epsilon(0.05));
    CHECK(ks_p_exponential(waits, 0.25) > 0.01);
}

TEST_CASE("trajectories are reproducible from the seed") {
    AtomParams p{1.0, 50.0};
    ClassicalTrajectory a = simulate_tm(p, 100.0, 42);
    ClassicalTrajectory b = simulate_tm(p, 100.0, 42);
    REQUIRE(a.events.size() == b.events.size());
    for (size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].time == b.events[i].time);
        CHECK(a.events[i].channel == b.events[i].channel);
    }
    ClassicalTrajectory c = simulate_tm(p, 100.0, 43);
    CHECK(a.events.size() != c.events.size());
}
