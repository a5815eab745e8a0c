// Command-line front end: experiment runs, scaling sweeps, Bloch-locus data,
// and the conditioned-state calculation. Exit codes: 0 success, 2 config
// error, 3 numerical abort.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "qjump/experiment.hpp"

using namespace qjump;

namespace {

struct CommonFlags {
    std::string config_file, preset, scheme, out;
    double gamma = -1, omega = -1, duration = -1, snapshot = -1, burn_in = -1;
    double Gamma = -1, omega_a = std::numeric_limits<double>::quiet_NaN();
    double omega_b = std::numeric_limits<double>::quiet_NaN();
    std::int64_t trajectories = -1, n_max = -1, workers = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "key = value config file");
    cmd->add_option("--preset", f.preset, "preset name (fig2, fig4, fig7)");
    cmd->add_option("--scheme", f.scheme,
                    "tm|dressed|direct|spectral-1|spectral-2|two-state|orthogonal|conditioned");
    cmd->add_option("--gamma", f.gamma, "spontaneous emission rate");
    cmd->add_option("--omega", f.omega, "Rabi frequency");
    cmd->add_option("--Gamma", f.Gamma, "filter half width");
    cmd->add_option("--omega-a", f.omega_a, "filter a detuning");
    cmd->add_option("--omega-b", f.omega_b, "filter b detuning");
    cmd->add_option("--n-max", f.n_max, "Fock truncation per cavity");
    cmd->add_option("--duration", f.duration, "trajectory duration (units of 1/gamma)");
    cmd->add_option("--trajectories", f.trajectories, "trajectory count");
    cmd->add_option("--snapshot-interval", f.snapshot, "state sampling interval");
    cmd->add_option("--burn-in", f.burn_in, "statistics burn-in time");
    cmd->add_option("--workers", f.workers, "worker threads (0 = all)");
    cmd->add_option("--seed", f.seed, "master seed (required, no wall-clock seeding)")
        ->each([&f](const std::string&) { f.seed_set = true; });
    cmd->add_option("--out", f.out, "output path prefix");
}

ExperimentConfig build_config(const CommonFlags& f) {
    ExperimentConfig cfg;
    if (!f.config_file.empty()) cfg = parse_config_file(f.config_file);
    if (!f.preset.empty()) apply_preset(cfg, f.preset);
    if (!f.scheme.empty()) cfg.scheme = scheme_from_string(f.scheme);
    if (f.gamma > 0) cfg.atom.gamma = f.gamma;
    if (f.omega >= 0) cfg.atom.omega = f.omega;
    if (f.duration > 0) cfg.duration = f.duration;
    if (f.snapshot > 0) cfg.snapshot_interval = f.snapshot;
    if (f.burn_in >= 0) cfg.burn_in = f.burn_in;
    if (f.trajectories >= 0) cfg.trajectories = static_cast<std::size_t>(f.trajectories);
    if (f.workers >= 0) cfg.workers = static_cast<unsigned>(f.workers);
    if (f.seed_set) {
        cfg.master_seed = f.seed;
        cfg.seed_set = true;
    }
    if (!f.out.empty()) cfg.out_prefix = f.out;
    if (f.Gamma > 0) {
        FilterConfig fa;
        fa.hwhm = f.Gamma;
        fa.detuning = std::isnan(f.omega_a) ? cfg.atom.omega : f.omega_a;
        if (f.n_max > 0) fa.n_max = static_cast<std::size_t>(f.n_max);
        cfg.filters = {fa};
        if (cfg.scheme == Scheme::spectral2) {
            FilterConfig fb = fa;
            fb.detuning = std::isnan(f.omega_b) ? -fa.detuning : f.omega_b;
            cfg.filters.push_back(fb);
        }
    } else if (f.n_max > 0) {
        for (auto& fl : cfg.filters) fl.n_max = static_cast<std::size_t>(f.n_max);
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic quantum-trajectory simulator for a driven two-level atom"};
    app.require_subcommand(1);

    CommonFlags rf;
    CLI::App* run = app.add_subcommand("run", "run one experiment, write CSV + JSON summary");
    add_common(run, rf);

    CommonFlags sf;
    std::vector<double> omegas;
    CLI::App* scaling = app.add_subcommand("scaling", "error-vs-omega sweep with log-log fit");
    add_common(scaling, sf);
    scaling->add_option("--omegas", omegas, "omega/gamma list (>= 4 points)");

    std::string locus_out;
    CLI::App* locus = app.add_subcommand("locus", "emit the Bloch-sphere locus CSV");
    locus->add_option("--out", locus_out, "output CSV path (default stdout)");

    CommonFlags cf;
    CLI::App* cond = app.add_subcommand("conditioned", "conditioned-state calculation (JSON)");
    add_common(cond, cf);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            ExperimentConfig cfg = build_config(rf);
            ExperimentResult res = run_experiment(cfg);
            std::cout << res.summary.dump(2) << std::endl;
        } else if (scaling->parsed()) {
            if (sf.preset == "fig8") {
                // error-vs-omega sweep for the orthogonal scheme
                sf.preset.clear();
                if (sf.scheme.empty()) sf.scheme = "orthogonal";
                if (omegas.empty()) omegas = {5, 10, 20, 40, 80};
            }
            ExperimentConfig cfg = build_config(sf);
            if (omegas.empty()) omegas = {5, 10, 20, 40, 80};
            if (!cfg.seed_set) throw ConfigError("a master seed is required");
            std::size_t traj = cfg.trajectories > 1 ? cfg.trajectories : 200;
            double duration = cfg.duration;
            Scheme scheme = sf.scheme.empty() ? Scheme::orthogonal : cfg.scheme;
            ScalingReport rep =
                run_scaling(scheme, omegas, traj, duration, cfg.master_seed, cfg.workers);
            nlohmann::json j = scaling_to_json(rep);
            if (!cfg.out_prefix.empty()) {
                std::ofstream out(cfg.out_prefix + ".json");
                out << j.dump(2) << "\n";
            }
            std::cout << j.dump(2) << std::endl;
        } else if (locus->parsed()) {
            if (locus_out.empty()) {
                emit_bloch_locus(std::cout);
            } else {
                std::ofstream out(locus_out);
                if (!out) throw ConfigError("cannot write " + locus_out);
                emit_bloch_locus(out);
            }
        } else if (cond->parsed()) {
            ExperimentConfig cfg = build_config(cf);
            cfg.scheme = Scheme::conditioned;
            if (cfg.filters.empty()) throw ConfigError("conditioned: --Gamma required");
            if (!cfg.seed_set) {
                cfg.seed_set = true;  // deterministic calculation, no sampling
                cfg.master_seed = 0;
            }
            ExperimentResult res = run_experiment(cfg);
            std::cout << res.summary.dump(2) << std::endl;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << std::endl;
        return 3;
    }
    return 0;
}
