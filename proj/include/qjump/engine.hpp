#pragma once

// Generic pure-state jump-trajectory engine. A measurement-operator set is a
// smooth (no-jump) generator G with Omega_0(dt) = 1 + G dt plus labeled jump
// channels, obeying the first-order completeness identity
//   G + G^+ + sum_c J_c^+ J_c = 0.
// Between detections the unnormalized state evolves as exp(G t) psi and its
// squared norm is the survival probability, so jump times are sampled by
// tracking that norm against a uniform draw (waiting-time algorithm) and
// bisecting; this removes the O(dt) bias of Bernoulli stepping.
//
// Adaptive schemes are supported two ways: a list of operator variants with a
// variant-switch rule applied at each jump (two-state homodyne), and fully
// state-dependent generator/jump rules integrated by substepping (orthogonal
// jumps).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qjump/atom.hpp"
#include "qjump/classical.hpp"
#include "qjump/rng.hpp"

namespace qjump {

struct EngineConfig {
    double dt_max = 0;               // substep bound for state-dependent generators
    double jump_tol = 1e-12;         // bisection tolerance on survival probability
    double snapshot_interval = 0;    // 0 = no snapshots
    double fock_guard = 1e-4;        // max top-Fock-level population before abort
    double completeness_tol = 1e-10;
};

struct JumpChannel {
    ChannelLabel label;
    ComplexMatrix op;
};

struct OpVariant {
    ComplexMatrix smooth;  // G
    std::vector<JumpChannel> channels;
};

struct MeasurementOpSet {
    // linear sets: one or more variants; adaptive schemes switch at jumps
    std::vector<OpVariant> variants;
    int initial_variant = 0;
    std::function<int(int variant, int channel)> on_jump;  // null -> keep variant

    // state-dependent (nonlinear) sets: single jump channel
    bool state_dependent = false;
    std::function<void(const ComplexVector&, ComplexMatrix&)> smooth_rule;
    std::function<void(const ComplexVector&, ComplexMatrix&)> jump_rule;
    ChannelLabel nonlinear_label = ChannelLabel::homodyne;

    std::vector<std::size_t> factor_dims;  // tensor factors, atom first; empty -> single factor
    std::string scheme_id;

    std::size_t dim() const;
};

// max completeness defect ||G + G^+ + sum J^+J|| over variants (linear sets)
double completeness_defect(const OpVariant& v);
double completeness_defect(const MeasurementOpSet& set, const ComplexVector& state);
void require_completeness(const MeasurementOpSet& set, double tol = 1e-10);

struct JumpEvent {
    double time;
    ChannelLabel channel;
    int channel_index;
    ComplexVector pre_state;   // normalized, immediately before the jump
    ComplexVector post_state;  // normalized
};

struct StateSnapshot {
    double time;
    ComplexVector state;  // normalized
};

struct QuantumTrajectory {
    std::vector<JumpEvent> events;
    std::vector<StateSnapshot> snapshots;
    ComplexVector final_state;
    std::uint64_t seed = 0;
    std::string scheme_id;
};

// Streaming observer; when snapshot_sink is set snapshots are not stored in
// the trajectory record.
struct TrajectoryObserver {
    std::function<void(double, const ComplexVector&)> snapshot_sink;
    std::function<void(const JumpEvent&)> event_sink;
    bool keep_events = true;
};

// G = -i(W/2) sx - (g/2) s^+s with the single channel J = sqrt(g) s.
MeasurementOpSet build_direct_detection(const AtomParams& p);

// exp(t G) psi for the active variant plus the survival probability
std::pair<ComplexVector, double> evolve_no_jump(const ComplexVector& state,
                                                const MeasurementOpSet& set, double t);

QuantumTrajectory sample_trajectory(const ComplexVector& initial, const MeasurementOpSet& set,
                                    double duration, std::uint64_t seed, const EngineConfig& cfg,
                                    TrajectoryObserver* obs = nullptr);

// Runs `count` trajectories with per-index derived seeds on `workers` threads
// (0 = hardware concurrency). fn must be thread-safe across distinct indices.
void for_each_trajectory(std::size_t count, unsigned workers,
                         const std::function<void(std::size_t, std::uint64_t)>& fn,
                         std::uint64_t master_seed);

}  // namespace qjump
