#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qtrack/bloch.hpp"
#include "qtrack/discrete.hpp"
#include "qtrack/error.hpp"
#include "qtrack/hybrid.hpp"
#include "qtrack/music.hpp"
#include "qtrack/periodogram.hpp"
#include "qtrack/quinn_fernandes.hpp"
#include "qtrack/rng.hpp"
#include "qtrack/sme.hpp"
#include "qtrack/harness/config.hpp"
#include "qtrack/harness/parallel.hpp"
#include "qtrack/harness/results.hpp"
#include "qtrack/harness/tracking.hpp"

// Monte-Carlo experiment drivers. Realization i always uses
// RngStream(seed, i), so every (k, sigma) cell sees the same noise streams
// and results do not depend on scheduling.

namespace qtrack::harness {

namespace detail {

inline BlochState initial_state(const ExperimentConfig& cfg, RngStream& rng) {
    return cfg.init_state == "random" ? random_pure_state(rng) : kSpinUp;
}

inline std::size_t cycles_to_steps(double cycles, std::size_t per_cycle) {
    return static_cast<std::size_t>(std::llround(cycles * static_cast<double>(per_cycle)));
}

/// Checkpoints within (0, cycles], always including the final time.
inline std::vector<double> effective_checkpoints(const ExperimentConfig& cfg) {
    std::vector<double> out;
    for (double c : cfg.checkpoints)
        if (c > 0.0 && c <= cfg.cycles + 1e-9) out.push_back(c);
    if (out.empty() || std::abs(out.back() - cfg.cycles) > 1e-9) out.push_back(cfg.cycles);
    return out;
}

} // namespace detail

/// Wrong-Hamiltonian state estimation: truth at omega_x, observer at
/// omega_x (1 + delta) with delta ~ N(0, sigma^2), observer starts mixed.
inline ResultTable run_fidelity_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.experiment != ExperimentTag::FidelityVsTime && cfg.experiment != ExperimentTag::FidelityVsError)
        throw Error(ErrorKind::Config, "run_fidelity_experiment needs fidelity_vs_time or fidelity_vs_error");

    const std::string tag = to_string(cfg.experiment);
    const double horizon = cfg.experiment == ExperimentTag::FidelityVsError ? cfg.horizon : cfg.cycles;
    const std::size_t spc = cfg.steps_per_cycle;
    const std::size_t n_steps = detail::cycles_to_steps(horizon, spc);
    const std::size_t stride = std::max<std::size_t>(1, detail::cycles_to_steps(cfg.sample_every, spc));
    const std::size_t n_samples = n_steps / stride + 1;
    const double sat_from = horizon - cfg.saturation_window;

    ResultTable table;
    for (double k : cfg.k_list) {
        const SimParams params = SimParams::from_dimensionless(k, kTwoPi, spc);
        for (double sigma : cfg.sigma_list) {
            struct Run {
                std::vector<double> fid, pur;
                double saturated = 0.0;
                std::string failure;
            };
            std::vector<Run> runs(cfg.realizations);
            parallel_for(cfg.realizations, [&](std::size_t i) {
                Run& run = runs[i];
                try {
                    RngStream rng(cfg.seed, i);
                    BlochState truth = detail::initial_state(cfg, rng);
                    const double delta = rng.normal() * sigma / 100.0;
                    const double omega_obs = params.omega_x * (1.0 + delta);
                    BlochState est = kMixedState;
                    const double dt = params.dt_fine;
                    const double s = std::sqrt(8.0 * params.k);
                    run.fid.reserve(n_samples);
                    run.pur.reserve(n_samples);
                    double sat_sum = 0.0;
                    std::size_t sat_n = 0;
                    for (std::size_t n = 0;; ++n) {
                        if (n % stride == 0) {
                            const double f = fidelity(truth, est, 1e-6);
                            run.fid.push_back(f);
                            run.pur.push_back(purity(est));
                            if (static_cast<double>(n) / static_cast<double>(spc) >= sat_from - 1e-12) {
                                sat_sum += f;
                                ++sat_n;
                            }
                        }
                        if (n == n_steps) break;
                        const double dy = s * truth.z * dt + rng.wiener(dt);
                        truth = condition_step(truth, params.omega_x, params.k, dy, dt, params.eps_phys);
                        est = condition_step(est, omega_obs, params.k, dy, dt, params.eps_phys);
                    }
                    run.saturated = sat_n ? sat_sum / static_cast<double>(sat_n) : 0.0;
                } catch (const Error& e) {
                    run.failure = std::string(to_string(e.kind()));
                }
            });

            std::size_t failures = 0;
            for (const auto& r : runs) failures += r.failure.empty() ? 0 : 1;
            ResultRow proto{tag, k, sigma, "sme", horizon, "", 0.0, 0.0, 0};
            proto.statistic = "failures";
            table.add_count(proto, failures, cfg.realizations);

            auto collect = [&](auto getter) {
                std::vector<double> v;
                for (const auto& r : runs)
                    if (r.failure.empty()) v.push_back(getter(r));
                return v;
            };
            proto.statistic = "fidelity_saturated";
            table.add_mean(proto, collect([](const Run& r) { return r.saturated; }));

            if (cfg.experiment == ExperimentTag::FidelityVsTime) {
                for (std::size_t j = 0; j < n_samples; ++j) {
                    ResultRow p = proto;
                    p.t_cycles = static_cast<double>(j * stride) / static_cast<double>(spc);
                    p.statistic = "fidelity";
                    table.add_mean(p, collect([j](const Run& r) { return r.fid[j]; }));
                    p.statistic = "purity";
                    table.add_mean(p, collect([j](const Run& r) { return r.pur[j]; }));
                }
            } else {
                ResultRow p = proto;
                p.statistic = "fidelity";
                const auto f = collect([](const Run& r) { return r.fid.back(); });
                table.add_mean(p, f);
                std::vector<double> inf;
                for (double v : f) inf.push_back(1.0 - v);
                p.statistic = "infidelity";
                table.add_mean(p, inf);
            }
        }
    }
    return table;
}

/// Hybrid-master-equation frequency estimation. The truth runs at omega_x;
/// each realization's prior and grid are centred on a nominal guess
/// omega_x (1 + delta), delta ~ N(0, prior_sigma^2) truncated to the grid span.
inline ResultTable run_bayes_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.experiment != ExperimentTag::BayesError)
        throw Error(ErrorKind::Config, "run_bayes_experiment needs experiment = bayes_error");

    const std::string tag = to_string(cfg.experiment);
    const std::size_t spc = cfg.steps_per_cycle;
    const auto checkpoints = detail::effective_checkpoints(cfg);
    std::vector<double> times{0.0};
    times.insert(times.end(), checkpoints.begin(), checkpoints.end());
    std::vector<std::size_t> at_step;
    for (double c : times) at_step.push_back(detail::cycles_to_steps(c, spc));
    const std::size_t n_steps = at_step.back();
    const double sigma_frac = cfg.prior_sigma / 100.0;

    ResultTable table;
    for (double k : cfg.k_list) {
        const SimParams params = SimParams::from_dimensionless(k, kTwoPi, spc);
        struct Run {
            std::vector<double> err, sd, fid;
            std::string failure;
        };
        std::vector<Run> runs(cfg.realizations);
        parallel_for(cfg.realizations, [&](std::size_t i) {
            Run& run = runs[i];
            try {
                RngStream rng(cfg.seed, i);
                BlochState truth = detail::initial_state(cfg, rng);
                double delta = 0.0;
                do {
                    delta = rng.normal();
                } while (std::abs(delta) > cfg.grid_span_sigmas);
                const double w = params.omega_x;
                const double center = w * (1.0 + delta * sigma_frac);
                const double sd = w * sigma_frac;
                const double half = cfg.grid_span_sigmas * sd;
                const FrequencyGrid grid = cfg.prior == "uniform"
                                               ? FrequencyGrid::uniform(center, half, cfg.grid_points)
                                               : FrequencyGrid::gaussian(center, sd, half, cfg.grid_points);
                HybridPosterior h(grid, params.k, params.dt_fine, params.eps_phys);
                const double dt = params.dt_fine;
                const double s = std::sqrt(8.0 * params.k);
                std::size_t next = 0;
                for (std::size_t n = 0;; ++n) {
                    if (next < at_step.size() && n == at_step[next]) {
                        const auto e = h.estimate();
                        run.err.push_back(100.0 * (e.mean - w) / w);
                        run.sd.push_back(100.0 * e.std / w);
                        run.fid.push_back(fidelity(truth, h.rho_c(), 1e-6));
                        ++next;
                    }
                    if (n == n_steps) break;
                    const double dy = s * truth.z * dt + rng.wiener(dt);
                    truth = condition_step(truth, w, params.k, dy, dt, params.eps_phys);
                    h.step(dy);
                }
            } catch (const Error& e) {
                run.failure = std::string(to_string(e.kind()));
            }
        });

        std::size_t degenerate = 0;
        std::size_t other = 0;
        for (const auto& r : runs) {
            if (r.failure == "DegeneratePosterior") ++degenerate;
            else if (!r.failure.empty()) ++other;
        }
        ResultRow proto{tag, k, cfg.prior_sigma, "bayes", cfg.cycles, "", 0.0, 0.0, 0};
        proto.statistic = "degenerate_posterior";
        table.add_count(proto, degenerate, cfg.realizations);
        proto.statistic = "failures";
        table.add_count(proto, other, cfg.realizations);

        for (std::size_t j = 0; j < times.size(); ++j) {
            std::vector<double> err, sd, fid;
            for (const auto& r : runs) {
                if (!r.failure.empty()) continue;
                err.push_back(r.err[j]);
                sd.push_back(r.sd[j]);
                fid.push_back(r.fid[j]);
            }
            ResultRow p = proto;
            p.t_cycles = times[j];
            p.statistic = "rms_error_pct";
            table.add_rms(p, err);
            p.statistic = "posterior_std_pct";
            table.add_mean(p, sd);
            p.statistic = "fidelity";
            table.add_mean(p, fid);
        }
    }
    return table;
}

/// Classical estimators on decimated records at growing prefixes.
inline ResultTable run_classical_comparison(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.experiment != ExperimentTag::ClassicalComparison)
        throw Error(ErrorKind::Config, "run_classical_comparison needs experiment = classical_comparison");
    for (const auto& m : cfg.estimators)
        if (m != "periodogram" && m != "qf_lower" && m != "qf_upper" && m != "music")
            throw Error(ErrorKind::Config, "unknown estimator '" + m + "'");

    const std::string tag = to_string(cfg.experiment);
    const std::size_t spc = cfg.steps_per_cycle;
    const auto checkpoints = detail::effective_checkpoints(cfg);
    const std::size_t n_steps = detail::cycles_to_steps(cfg.cycles, spc);
    const std::size_t n_methods = cfg.estimators.size();

    QfOptions qf;
    qf.recursion = cfg.qf_recursion == "printed" ? QfRecursion::AsPrinted : QfRecursion::Standard;
    PrefilteredMusicOptions mu;
    mu.frac_band = cfg.band_frac;
    mu.music.subspace = cfg.music_subspace == "printed" ? NoiseSubspace::AsPrinted : NoiseSubspace::RealRank2;

    enum class Outcome { Included, Excluded, Failed };
    struct Cell {
        Outcome outcome = Outcome::Failed;
        double err_pct = 0.0;
    };

    ResultTable table;
    for (double k : cfg.k_list) {
        const SimParams params = SimParams::from_dimensionless(k, kTwoPi, spc);
        const double w = params.omega_x;
        const double w_init = w * (1.0 + cfg.init_error / 100.0);
        // cells[i][checkpoint * n_methods + method]
        std::vector<std::vector<Cell>> cells(cfg.realizations,
                                             std::vector<Cell>(checkpoints.size() * n_methods));
        std::vector<std::string> sim_failure(cfg.realizations);

        parallel_for(cfg.realizations, [&](std::size_t i) {
            DiscreteRecord disc;
            try {
                RngStream rng(cfg.seed, i);
                const BlochState init = detail::initial_state(cfg, rng);
                const auto rec = simulate_record(params, init, n_steps, rng);
                disc = decimate(rec, cfg.samples_per_cycle, w);
            } catch (const Error& e) {
                sim_failure[i] = std::string(to_string(e.kind()));
                return;
            }
            for (std::size_t c = 0; c < checkpoints.size(); ++c) {
                const auto prefix = disc.prefix(
                    static_cast<std::size_t>(std::llround(checkpoints[c] * static_cast<double>(cfg.samples_per_cycle))));
                for (std::size_t m = 0; m < n_methods; ++m) {
                    Cell& cell = cells[i][c * n_methods + m];
                    const auto& name = cfg.estimators[m];
                    try {
                        FrequencyEstimate e;
                        if (name == "periodogram")
                            e = periodogram_max(prefix, w_init * (1.0 - cfg.band_frac), w_init * (1.0 + cfg.band_frac));
                        else if (name == "qf_lower")
                            e = quinn_fernandes(prefix, w, qf);
                        else if (name == "qf_upper")
                            e = quinn_fernandes(prefix, w_init, qf);
                        else
                            e = music_prefiltered(prefix, w_init, mu);
                        cell.err_pct = 100.0 * (e.mean - w) / w;
                        cell.outcome = e.flagged() ? Outcome::Excluded : Outcome::Included;
                    } catch (const Error&) {
                        cell.outcome = Outcome::Failed;
                    }
                }
            }
        });

        std::size_t sim_failures = 0;
        for (const auto& f : sim_failure) sim_failures += f.empty() ? 0 : 1;

        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            for (std::size_t m = 0; m < n_methods; ++m) {
                std::vector<double> errs;
                std::size_t excluded = 0;
                std::size_t failed = sim_failures;
                for (std::size_t i = 0; i < cfg.realizations; ++i) {
                    if (!sim_failure[i].empty()) continue;
                    const Cell& cell = cells[i][c * n_methods + m];
                    if (cell.outcome == Outcome::Included) errs.push_back(cell.err_pct);
                    else if (cell.outcome == Outcome::Excluded) ++excluded;
                    else ++failed;
                }
                ResultRow p{tag, k, cfg.init_error, cfg.estimators[m], checkpoints[c], "rms_error_pct", 0.0, 0.0, 0};
                table.add_rms(p, errs);
                p.statistic = "excluded";
                table.add_count(p, excluded, cfg.realizations);
                p.statistic = "failed";
                table.add_count(p, failed, cfg.realizations);
            }
        }
    }
    return table;
}

/// Sliding-window tracking of a drifting, stepped or constant frequency.
inline ResultTable run_sliding_track(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.experiment != ExperimentTag::SlidingTrack)
        throw Error(ErrorKind::Config, "run_sliding_track needs experiment = sliding_track");

    const std::string tag = to_string(cfg.experiment);
    const std::size_t spc = cfg.steps_per_cycle;
    const std::size_t n_steps = detail::cycles_to_steps(cfg.cycles, spc);
    const double w0 = kTwoPi;
    const double period = 1.0;
    auto omega_at = [&](double t) {
        if (cfg.track_scenario == "ramp") return w0 * (1.0 + cfg.ramp_pct_per_100 / 100.0 * (t / period) / 100.0);
        if (cfg.track_scenario == "step") return t < 0.5 * cfg.cycles * period ? w0 : w0 * (1.0 + cfg.step_pct / 100.0);
        return w0;
    };
    if (cfg.track_scenario != "ramp" && cfg.track_scenario != "step" && cfg.track_scenario != "constant")
        throw Error(ErrorKind::Config, "track_scenario must be constant|ramp|step");

    TrackOptions opt;
    opt.window_cycles = cfg.window_cycles;
    opt.hop_cycles = cfg.hop_cycles;
    opt.method = parse_track_method(cfg.track_method);
    opt.band_frac = cfg.band_frac;
    opt.omega_nominal = w0;
    opt.music.music.subspace = cfg.music_subspace == "printed" ? NoiseSubspace::AsPrinted : NoiseSubspace::RealRank2;

    ResultTable table;
    for (double k : cfg.k_list) {
        const SimParams params = SimParams::from_dimensionless(k, w0, spc);
        std::vector<std::vector<TrackPoint>> tracks(cfg.realizations);
        parallel_for(cfg.realizations, [&](std::size_t i) {
            RngStream rng(cfg.seed, i);
            const BlochState init = detail::initial_state(cfg, rng);
            try {
                const auto rec = simulate_record_schedule(params, omega_at, init, n_steps, rng);
                tracks[i] = sliding_window_track(decimate(rec, cfg.samples_per_cycle, w0),
                                                 w0 * (1.0 + cfg.init_error / 100.0), opt);
            } catch (const Error&) {
                tracks[i].clear();
            }
        });

        std::size_t n_windows = 0;
        for (const auto& t : tracks) n_windows = std::max(n_windows, t.size());
        const std::string method = cfg.track_method;
        for (std::size_t j = 0; j < n_windows; ++j) {
            std::vector<double> err;
            std::vector<double> est;
            std::size_t gaps = 0;
            double t_center = 0.0;
            for (const auto& t : tracks) {
                if (j >= t.size()) {
                    ++gaps;
                    continue;
                }
                t_center = t[j].t_center;
                if (!t[j].valid()) {
                    ++gaps;
                    continue;
                }
                err.push_back(100.0 * (t[j].omega_hat - omega_at(t[j].t_center)) / w0);
                est.push_back(100.0 * (t[j].omega_hat - w0) / w0);
            }
            ResultRow p{tag, k, cfg.init_error, method, t_center / period, "track_rms_error_pct", 0.0, 0.0, 0};
            table.add_rms(p, err);
            p.statistic = "track_offset_pct";
            table.add_mean(p, est);
            p.statistic = "true_offset_pct";
            table.add({tag, k, cfg.init_error, method, t_center / period, "true_offset_pct",
                       100.0 * (omega_at(t_center) - w0) / w0, 0.0, tracks.size()});
            p.statistic = "gaps";
            table.add_count(p, gaps, cfg.realizations);
        }
    }
    return table;
}

inline ResultTable run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
    case ExperimentTag::FidelityVsTime:
    case ExperimentTag::FidelityVsError: return run_fidelity_experiment(cfg);
    case ExperimentTag::BayesError: return run_bayes_experiment(cfg);
    case ExperimentTag::ClassicalComparison: return run_classical_comparison(cfg);
    case ExperimentTag::SlidingTrack: return run_sliding_track(cfg);
    }
    throw Error(ErrorKind::Config, "unhandled experiment");
}

} // namespace qtrack::harness
