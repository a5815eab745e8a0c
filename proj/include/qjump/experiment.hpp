#pragma once

// Experiment orchestration: configuration and presets, ensemble runs with
// per-trajectory worker parallelism, CSV/JSON serialization, dressed-state
// tracking statistics, scaling-law regression, and Bloch-locus emission.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "qjump/conditioned.hpp"
#include "qjump/homodyne.hpp"
#include "qjump/spectral.hpp"

namespace qjump {

inline constexpr const char* kVersion = "qjump 0.1.0";
inline constexpr const char* kCsvSchema = "qjump.trajectory.v1";

enum class Scheme { tm, dressed, direct, spectral1, spectral2, two_state, orthogonal, conditioned };
Scheme scheme_from_string(const std::string& s);
const char* to_string(Scheme s);

struct ExperimentConfig {
    Scheme scheme = Scheme::direct;
    AtomParams atom{1.0, 50.0};
    std::vector<FilterConfig> filters;
    double duration = 100.0;
    std::size_t trajectories = 1;
    std::uint64_t master_seed = 0;
    bool seed_set = false;  // wall-clock seeding is not allowed; a seed is mandatory
    double snapshot_interval = 0.1;
    double burn_in = 0.0;
    unsigned workers = 0;  // 0 = all available
    double fock_guard = 1e-4;
    double dt_max = 0;
    std::string out_prefix;
    std::string preset;
};

// key = value text config; '#' comments; CLI flags override file keys
ExperimentConfig parse_config_file(const std::string& path);
void apply_preset(ExperimentConfig& cfg, const std::string& name);
void validate(const ExperimentConfig& cfg);

struct ChannelStats {
    std::size_t events = 0;
    double rate = 0;
};

struct ExperimentResult {
    std::map<std::string, ChannelStats> channels;
    double observed_time = 0;
    double mean_dressed_error = 0, dressed_error_se = 0;
    std::size_t error_samples = 0;
    std::size_t sideband_events = 0, alternation_violations = 0;
    double early_error = 0, late_error = 0;  // first/last third of each trajectory
    nlohmann::json extra;
    nlohmann::json summary;  // full JSON summary as written to disk
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct McEstimate {
    double mean = 0, se = 0;
    std::size_t samples = 0;
};

// mean probability of not being in the nearest dressed state
McEstimate measure_error_orthogonal(const AtomParams& atom, std::size_t trajectories,
                                    double duration, double burn_in, std::uint64_t seed,
                                    unsigned workers);
McEstimate measure_error_two_state(const AtomParams& atom, std::size_t trajectories,
                                   double duration, double burn_in, std::uint64_t seed,
                                   unsigned workers);
// mean probability of not being in the newly predicted dressed state
// immediately after a sideband detection (the conditioned-state quantity the
// closed-form budget describes); also reports the sideband non-alternation
// fraction when requested
McEstimate measure_error_spectral2(const AtomParams& atom, double Gamma, std::size_t n_max,
                                   std::size_t trajectories, double duration, double burn_in,
                                   std::uint64_t seed, unsigned workers, double fock_guard,
                                   double* violation_fraction = nullptr);

// fraction of trials, prepared in S00+, whose first sideband detection is the
// forbidden one (cavity b) -- the epsilon_forbidden statistic
McEstimate measure_forbidden_fraction(const AtomParams& atom, double Gamma, std::size_t n_max,
                                      std::size_t trials, std::uint64_t seed, unsigned workers);

struct PowerFit {
    double exponent = 0, exponent_se = 0;
    double coefficient = 0, coefficient_se = 0;
    double chi2_dof = 0;
};
// weighted least squares of ln(err) = ln(c) + s ln(x)
PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& err,
                       const std::vector<double>& se);

struct ScalingPoint {
    double omega_over_gamma = 0;
    double error = 0, se = 0;
};
struct ScalingReport {
    Scheme scheme = Scheme::orthogonal;
    std::vector<ScalingPoint> points;
    PowerFit fit;
    std::string form;
    nlohmann::json extra;
};
// schemes: orthogonal (x = gamma/2W), two_state (x = gamma/2W, analytic
// overlay), spectral2 (x = gamma/W, Gamma from the optimal-linewidth law)
ScalingReport run_scaling(Scheme scheme, const std::vector<double>& omega_over_gamma,
                          std::size_t trajectories, double duration, std::uint64_t seed,
                          unsigned workers);
nlohmann::json scaling_to_json(const ScalingReport& rep);

void emit_bloch_locus(std::ostream& os);

}  // namespace qjump
