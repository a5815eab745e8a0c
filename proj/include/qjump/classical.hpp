#pragma once

// Classical jump-process baselines: the eigenstate-jump model built from the
// diagonal ensemble, and the two-state dressed model with its strictly
// alternating sidebands. Both are continuous-time Markov chains sampled by
// exponential waiting times; the stationary regime keeps all rates constant.

#include <cstdint>
#include <vector>

#include "qjump/atom.hpp"

namespace qjump {

enum class ChannelLabel {
    central,
    upper_sideband,
    lower_sideband,
    rejected,
    passed_a,
    passed_b,
    homodyne,
};
const char* to_string(ChannelLabel c);

struct JumpRateMatrix {
    std::size_t n = 0;
    std::vector<double> r;  // r[target * n + source]
    explicit JumpRateMatrix(std::size_t n_ = 0) : n(n_), r(n_ * n_, 0.0) {}
    double& rate(std::size_t target, std::size_t source) { return r[target * n + source]; }
    double rate(std::size_t target, std::size_t source) const { return r[target * n + source]; }
};

struct ClassicalEvent {
    double time;
    ChannelLabel channel;
    int new_state;
};

struct ClassicalTrajectory {
    std::vector<ClassicalEvent> events;
    int initial_state = 0;
    std::uint64_t seed = 0;
};

// R[mu][nu] = sum_j |<phi_mu| c_j |phi_nu>|^2
JumpRateMatrix tm_rates(const DiagonalEnsemble& ens, const std::vector<ComplexMatrix>& lindblad_ops);

// same with c_j -> c_j + lambda_j (the rates are not invariant under this)
JumpRateMatrix tm_rates_shifted(const DiagonalEnsemble& ens,
                                const std::vector<ComplexMatrix>& lindblad_ops,
                                const ComplexVector& shifts);

// Stationary eigenstate-jump trajectory. Self-jumps emit central-channel
// events; flips emit sidebands (flip out of the heavier state -> upper,
// mirroring the dressed-state convention).
ClassicalTrajectory simulate_tm(const AtomParams& p, double duration, std::uint64_t seed);

// Dressed two-state chain: state 0 = |+>, 1 = |->. From |+>: central (stay)
// and upper sideband (flip), each at gamma/4; from |->: central and lower.
ClassicalTrajectory simulate_dressed(const AtomParams& p, double duration, std::uint64_t seed);

}  // namespace qjump
