#include "qjump/classical.hpp"

#include "qjump/rng.hpp"

namespace qjump {

const char* to_string(ChannelLabel c) {
    switch (c) {
        case ChannelLabel::central: return "central";
        case ChannelLabel::upper_sideband: return "upper";
        case ChannelLabel::lower_sideband: return "lower";
        case ChannelLabel::rejected: return "1";
        case ChannelLabel::passed_a: return "a";
        case ChannelLabel::passed_b: return "b";
        case ChannelLabel::homodyne: return "homodyne";
    }
    return "?";
}

JumpRateMatrix tm_rates(const DiagonalEnsemble& ens,
                        const std::vector<ComplexMatrix>& lindblad_ops) {
    JumpRateMatrix r(2);
    ComplexVector tmp;
    for (std::size_t mu = 0; mu < 2; ++mu)
        for (std::size_t nu = 0; nu < 2; ++nu) {
            double s = 0;
            for (const auto& c : lindblad_ops) {
                c.apply(ens.state[nu], tmp);
                s += std::norm(dot(ens.state[mu], tmp));
            }
            r.rate(mu, nu) = s;
        }
    return r;
}

JumpRateMatrix tm_rates_shifted(const DiagonalEnsemble& ens,
                                const std::vector<ComplexMatrix>& lindblad_ops,
                                const ComplexVector& shifts) {
    if (shifts.size() != lindblad_ops.size())
        throw ConfigError("tm_rates_shifted: one shift per operator required");
    std::vector<ComplexMatrix> shifted = lindblad_ops;
    for (std::size_t j = 0; j < shifted.size(); ++j) {
        ComplexMatrix eye = ComplexMatrix::identity(shifted[j].rows());
        eye *= shifts[j];
        shifted[j] += eye;
    }
    return tm_rates(ens, shifted);
}

namespace {

// Gillespie sampling of a two-state chain with per-(target,source) channel
// labels. Rates constant in time (stationary regime).
ClassicalTrajectory run_chain(const JumpRateMatrix& r, ChannelLabel label[2][2], int initial,
                              double duration, std::uint64_t seed) {
    ClassicalTrajectory traj;
    traj.initial_state = initial;
    traj.seed = seed;
    Rng rng(seed);
    int s = initial;
    double t = 0;
    while (true) {
        double exit_rate = r.rate(0, s) + r.rate(1, s);
        if (exit_rate <= 0) break;
        t += rng.exponential(exit_rate);
        if (t >= duration) break;
        int target = (rng.uniform() * exit_rate <= r.rate(0, s)) ? 0 : 1;
        traj.events.push_back({t, label[target][s], target});
        s = target;
    }
    return traj;
}

}  // namespace

ClassicalTrajectory simulate_tm(const AtomParams& p, double duration, std::uint64_t seed) {
    validate(p);
    DiagonalEnsemble ens = tm_diagonalize(stationary_state(p));
    ComplexMatrix c = lowering();
    c *= Complex(std::sqrt(p.gamma), 0);
    JumpRateMatrix r = tm_rates(ens, {c});
    // state 0 carries the larger weight; mirror the dressed sideband order
    ChannelLabel label[2][2] = {
        {ChannelLabel::central, ChannelLabel::lower_sideband},
        {ChannelLabel::upper_sideband, ChannelLabel::central},
    };
    return run_chain(r, label, 0, duration, seed);
}

ClassicalTrajectory simulate_dressed(const AtomParams& p, double duration, std::uint64_t seed) {
    validate(p);
    JumpRateMatrix r(2);
    r.rate(0, 0) = r.rate(1, 0) = r.rate(0, 1) = r.rate(1, 1) = 0.25 * p.gamma;
    ChannelLabel label[2][2] = {
        {ChannelLabel::central, ChannelLabel::lower_sideband},
        {ChannelLabel::upper_sideband, ChannelLabel::central},
    };
    return run_chain(r, label, 0, duration, seed);
}

}  // namespace qjump
