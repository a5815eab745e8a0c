#include "qjump/engine.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace qjump {

std::size_t MeasurementOpSet::dim() const {
    if (state_dependent) {
        if (!factor_dims.empty()) {
            std::size_t d = 1;
            for (auto f : factor_dims) d *= f;
            return d;
        }
        return 2;
    }
    return variants.empty() ? 0 : variants.front().smooth.rows();
}

double completeness_defect(const OpVariant& v) {
    ComplexMatrix s = v.smooth + v.smooth.adjoint();
    for (const auto& ch : v.channels) s += ch.op.adjoint() * ch.op;
    return s.frobenius_norm();
}

double completeness_defect(const MeasurementOpSet& set, const ComplexVector& state) {
    if (!set.state_dependent) {
        double worst = 0;
        for (const auto& v : set.variants) worst = std::max(worst, completeness_defect(v));
        return worst;
    }
    const std::size_t n = state.size();
    ComplexMatrix g(n, n), j(n, n);
    set.smooth_rule(state, g);
    set.jump_rule(state, j);
    ComplexMatrix s = g + g.adjoint() + j.adjoint() * j;
    return s.frobenius_norm();
}

void require_completeness(const MeasurementOpSet& set, double tol) {
    if (set.state_dependent) return;  // checked per queried state during runs
    for (const auto& v : set.variants) {
        double scale = std::max(1.0, v.smooth.frobenius_norm());
        if (completeness_defect(v) > tol * scale)
            throw NumericalError("measurement set violates first-order completeness");
    }
}

MeasurementOpSet build_direct_detection(const AtomParams& p) {
    validate(p);
    const Complex mi(0, -1);
    ComplexMatrix g(2, 2);
    g(0, 0) = -0.5 * p.gamma;          // -(g/2) s^+s on |e>
    g(0, 1) = mi * (0.5 * p.omega);    // -i(W/2) sx
    g(1, 0) = mi * (0.5 * p.omega);
    ComplexMatrix j = lowering();
    j *= Complex(std::sqrt(p.gamma), 0);
    MeasurementOpSet set;
    set.variants.push_back({g, {{ChannelLabel::homodyne, j}}});
    set.scheme_id = "direct";
    require_completeness(set);
    return set;
}

// ---------------------------------------------------------------------------
// fixed-generator propagation through the eigendecomposition of G

namespace {

class Propagator {
public:
    explicit Propagator(const ComplexMatrix& g) : g_(g) {
        const std::size_t n = g.rows();
        try {
            EigResult e = eig_general(g);
            double scale = std::max(g.frobenius_norm(), 1e-300);
            if (!e.defective && e.max_residual <= 1e-8 * scale) {
                ComplexMatrix vinv = invert(e.vectors);
                double cond = e.vectors.one_norm() * vinv.one_norm();
                if (cond < 1e8) {
                    evals_ = e.values;
                    v_ = e.vectors;
                    vinv_ = vinv;
                    use_eig_ = true;
                }
            }
        } catch (const NumericalError&) {
            use_eig_ = false;
        }
        if (!use_eig_) {
            // slow fallback; chunked exponentials stay inside the expm guard
            chunk_ = 16.0 / std::max(g.one_norm(), 1e-300);
        }
        (void)n;
    }

    // out = exp(G t) psi
    void apply(const ComplexVector& psi, double t, ComplexVector& out) const {
        if (use_eig_) {
            vinv_.apply(psi, tmp_);
            for (std::size_t i = 0; i < tmp_.size(); ++i) tmp_[i] *= std::exp(evals_[i] * t);
            v_.apply(tmp_, out);
            return;
        }
        out = psi;
        double remaining = t;
        while (remaining > 0) {
            double step = std::min(remaining, chunk_);
            ComplexMatrix gt = g_;
            gt *= Complex(step, 0);
            ComplexVector next = expm(gt).apply(out);
            out.swap(next);
            remaining -= step;
        }
    }

private:
    ComplexMatrix g_;
    bool use_eig_ = false;
    ComplexVector evals_;
    ComplexMatrix v_, vinv_;
    double chunk_ = 0;
    mutable ComplexVector tmp_;
};

double top_fock_population(const ComplexVector& psi, const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) return 0.0;
    std::vector<std::size_t> stride(dims.size(), 1);
    for (std::size_t f = dims.size(); f-- > 1;) stride[f - 1] = stride[f] * dims[f];
    double n2 = norm2(psi);
    double pop = 0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        for (std::size_t f = 1; f < dims.size(); ++f) {
            std::size_t coord = (i / stride[f]) % dims[f];
            if (coord == dims[f] - 1) {
                pop += std::norm(psi[i]);
                break;
            }
        }
    }
    return pop / n2;
}

void check_fock_guard(const ComplexVector& psi, const MeasurementOpSet& set,
                      const EngineConfig& cfg) {
    if (set.factor_dims.size() < 2) return;
    double pop = top_fock_population(psi, set.factor_dims);
    if (pop > cfg.fock_guard)
        throw NumericalError("fock truncation guard breached: top-level population " +
                             std::to_string(pop) + " > " + std::to_string(cfg.fock_guard));
}

struct SnapshotCursor {
    double interval;
    double next = 0;
    std::size_t k = 0;
    explicit SnapshotCursor(double iv) : interval(iv), next(iv > 0 ? iv : -1) {}
    bool active() const { return interval > 0; }
    void advance() {
        ++k;
        next = interval * static_cast<double>(k + 1);
    }
};

void record_snapshot(QuantumTrajectory& traj, TrajectoryObserver* obs, double t,
                     const ComplexVector& state) {
    if (obs && obs->snapshot_sink) {
        obs->snapshot_sink(t, state);
    } else {
        traj.snapshots.push_back({t, state});
    }
}

void record_event(QuantumTrajectory& traj, TrajectoryObserver* obs, JumpEvent ev) {
    if (obs && obs->event_sink) obs->event_sink(ev);
    if (!obs || obs->keep_events) traj.events.push_back(std::move(ev));
}

// ---------------------------------------------------------------------------
// linear (piecewise-fixed generator) path

QuantumTrajectory sample_linear(const ComplexVector& initial, const MeasurementOpSet& set,
                                double duration, std::uint64_t seed, const EngineConfig& cfg,
                                TrajectoryObserver* obs) {
    require_completeness(set, cfg.completeness_tol);
    QuantumTrajectory traj;
    traj.seed = seed;
    traj.scheme_id = set.scheme_id;

    std::vector<Propagator> props;
    props.reserve(set.variants.size());
    for (const auto& v : set.variants) props.emplace_back(v.smooth);

    Rng rng(seed);
    int variant = set.initial_variant;
    ComplexVector psi = normalized(initial);
    double t_anchor = 0;
    SnapshotCursor snap(cfg.snapshot_interval);
    ComplexVector work, jpsi;
    std::vector<double> weights;

    auto survival = [&](double dt) {
        props[variant].apply(psi, dt, work);
        return norm2(work);
    };

    double u = std::min(rng.uniform(), 1.0 - 1e-16);
    while (t_anchor < duration) {
        double remaining = duration - t_anchor;
        double n_end = survival(remaining);
        double t_jump = -1;
        if (n_end <= u) {
            // bisect the monotone survival for the jump time
            double lo = 0, hi = remaining;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                double n_mid = survival(mid);
                if (n_mid > u)
                    lo = mid;
                else
                    hi = mid;
                if (hi - lo < 1e-15 * std::max(1.0, remaining) && std::abs(n_mid - u) < cfg.jump_tol)
                    break;
                if (std::abs(n_mid - u) < cfg.jump_tol && hi - lo < 1e-9 * std::max(1.0, remaining))
                    break;
            }
            t_jump = 0.5 * (lo + hi);
        }

        // snapshots strictly before the jump (or up to the duration)
        double horizon = (t_jump >= 0) ? t_anchor + t_jump : duration;
        while (snap.active() && snap.next <= horizon + 1e-12 * std::max(1.0, snap.interval)) {
            if (snap.next > duration + 1e-12) break;
            props[variant].apply(psi, snap.next - t_anchor, work);
            ComplexVector s = normalized(work);
            check_fock_guard(s, set, cfg);
            record_snapshot(traj, obs, snap.next, s);
            snap.advance();
        }

        if (t_jump < 0) {
            props[variant].apply(psi, remaining, work);
            traj.final_state = normalized(work);
            check_fock_guard(traj.final_state, set, cfg);
            return traj;
        }

        props[variant].apply(psi, t_jump, work);
        if (norm2(work) < 1e-300) throw NumericalError("sample_trajectory: norm underflow");
        ComplexVector at_jump = normalized(work);
        check_fock_guard(at_jump, set, cfg);

        const auto& channels = set.variants[variant].channels;
        weights.assign(channels.size(), 0.0);
        double total = 0;
        for (std::size_t c = 0; c < channels.size(); ++c) {
            channels[c].op.apply(at_jump, jpsi);
            weights[c] = norm2(jpsi);
            total += weights[c];
        }
        if (total < 1e-280) throw NumericalError("sample_trajectory: zero jump weight at jump time");
        std::size_t c = rng.categorical(weights);
        channels[c].op.apply(at_jump, jpsi);
        normalize(jpsi);

        t_anchor += t_jump;
        psi = jpsi;
        record_event(traj, obs, {t_anchor, channels[c].label, static_cast<int>(c), at_jump, psi});
        if (set.on_jump) variant = set.on_jump(variant, static_cast<int>(c));
        u = std::min(rng.uniform(), 1.0 - 1e-16);
    }
    traj.final_state = psi;
    return traj;
}

// ---------------------------------------------------------------------------
// state-dependent path: RK4 substeps on the unnormalized state, with the
// generator re-evaluated from the running state at every stage

struct NonlinearStepper {
    const MeasurementOpSet& set;
    std::size_t n;
    ComplexMatrix g;
    ComplexVector k1, k2, k3, k4, tmp;

    explicit NonlinearStepper(const MeasurementOpSet& s) : set(s), n(s.dim()), g(s.dim(), s.dim()) {}

    void deriv(const ComplexVector& y, ComplexVector& out) {
        set.smooth_rule(y, g);
        g.apply(y, out);
    }

    // single RK4 step of size h: y <- y + h/6 (k1 + 2k2 + 2k3 + k4)
    void step(const ComplexVector& y, double h, ComplexVector& out) {
        deriv(y, k1);
        tmp = y;
        axpy(tmp, 0.5 * h, k1);
        deriv(tmp, k2);
        tmp = y;
        axpy(tmp, 0.5 * h, k2);
        deriv(tmp, k3);
        tmp = y;
        axpy(tmp, h, k3);
        deriv(tmp, k4);
        out = y;
        axpy(out, h / 6.0, k1);
        axpy(out, h / 3.0, k2);
        axpy(out, h / 3.0, k3);
        axpy(out, h / 6.0, k4);
    }
};

QuantumTrajectory sample_nonlinear(const ComplexVector& initial, const MeasurementOpSet& set,
                                   double duration, std::uint64_t seed, const EngineConfig& cfg,
                                   TrajectoryObserver* obs) {
    if (cfg.dt_max <= 0) throw ConfigError("state-dependent set requires cfg.dt_max > 0");
    QuantumTrajectory traj;
    traj.seed = seed;
    traj.scheme_id = set.scheme_id;

    Rng rng(seed);
    NonlinearStepper stepper(set);
    ComplexVector y = normalized(initial);  // unnormalized since last jump
    ComplexVector ynext, jpsi;
    ComplexMatrix jop(set.dim(), set.dim());
    double t = 0;
    SnapshotCursor snap(cfg.snapshot_interval);
    double u = std::min(rng.uniform(), 1.0 - 1e-16);

    auto check_state = [&](const ComplexVector& s) {
        double defect = completeness_defect(set, s);
        if (defect > cfg.completeness_tol * 10)
            throw NumericalError("state-dependent set violates completeness at queried state");
    };
    check_state(y);

    while (t < duration - 1e-15 * std::max(1.0, duration)) {
        double step = std::min(cfg.dt_max, duration - t);
        if (snap.active() && snap.next > t && snap.next - t < step) step = snap.next - t;

        stepper.step(y, step, ynext);
        if (norm2(ynext) <= u) {
            // jump inside this step: bisect the partial step size
            double lo = 0, hi = step;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                stepper.step(y, mid, ynext);
                double nm = norm2(ynext);
                if (nm > u)
                    lo = mid;
                else
                    hi = mid;
                if (std::abs(nm - u) < cfg.jump_tol && (hi - lo) < 1e-12 * std::max(1.0, step)) break;
            }
            double dt_jump = 0.5 * (lo + hi);
            stepper.step(y, dt_jump, ynext);
            if (norm2(ynext) < 1e-300) throw NumericalError("sample_trajectory: norm underflow");
            ComplexVector at_jump = normalized(ynext);
            check_state(at_jump);
            set.jump_rule(at_jump, jop);
            jop.apply(at_jump, jpsi);
            if (norm2(jpsi) < 1e-280)
                throw NumericalError("sample_trajectory: zero jump weight at jump time");
            normalize(jpsi);
            t += dt_jump;
            y = jpsi;
            record_event(traj, obs, {t, set.nonlinear_label, 0, at_jump, y});
            u = std::min(rng.uniform(), 1.0 - 1e-16);
            continue;
        }

        t += step;
        y.swap(ynext);
        if (snap.active() && t >= snap.next - 1e-12 * std::max(1.0, snap.interval) &&
            snap.next <= duration + 1e-12) {
            ComplexVector s = normalized(y);
            check_state(s);
            record_snapshot(traj, obs, snap.next, s);
            snap.advance();
        }
    }
    traj.final_state = normalized(y);
    return traj;
}

}  // namespace

std::pair<ComplexVector, double> evolve_no_jump(const ComplexVector& state,
                                                const MeasurementOpSet& set, double t) {
    if (std::abs(norm2(state) - 1.0) > 1e-9)
        throw ConfigError("evolve_no_jump: unit-norm input required");
    ComplexVector out;
    if (!set.state_dependent) {
        Propagator prop(set.variants[set.initial_variant].smooth);
        prop.apply(state, t, out);
    } else {
        NonlinearStepper stepper(set);
        ComplexVector y = state, ynext;
        double scale = 1.0;
        {
            ComplexMatrix g(set.dim(), set.dim());
            set.smooth_rule(state, g);
            scale = std::max(1.0, g.frobenius_norm());
        }
        double dt = 1e-3 / scale;
        double done = 0;
        while (done < t) {
            double h = std::min(dt, t - done);
            stepper.step(y, h, ynext);
            y.swap(ynext);
            done += h;
        }
        out = y;
    }
    double survival = norm2(out);
    if (survival < 1e-30) throw NumericalError("evolve_no_jump: norm underflow");
    return {out, survival};
}

QuantumTrajectory sample_trajectory(const ComplexVector& initial, const MeasurementOpSet& set,
                                    double duration, std::uint64_t seed, const EngineConfig& cfg,
                                    TrajectoryObserver* obs) {
    if (duration < 0) throw ConfigError("sample_trajectory: duration >= 0 required");
    if (set.state_dependent) return sample_nonlinear(initial, set, duration, seed, cfg, obs);
    return sample_linear(initial, set, duration, seed, cfg, obs);
}

void for_each_trajectory(std::size_t count, unsigned workers,
                         const std::function<void(std::size_t, std::uint64_t)>& fn,
                         std::uint64_t master_seed) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i, substream_seed(master_seed, i));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mtx;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i, substream_seed(master_seed, i));
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mtx);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace qjump
