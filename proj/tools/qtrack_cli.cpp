// Command-line front end: simulate records, run observers and estimators on
// them, and drive the Monte-Carlo experiments.
//
// Failures print one JSON object {"error": <category>, "message": ...} on
// stderr and exit with a category-specific nonzero code.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qtrack/qtrack.hpp"

namespace {

using namespace qtrack;
using harness::ExperimentConfig;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> realizations;
    std::optional<double> cycles;
    std::vector<double> k;
    std::vector<double> sigma;
    std::string format = "csv";
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config, "Flat key = value config file");
    app->add_option("--seed", f.seed, "Master seed");
    app->add_option("--out", f.out, "Output path (default: stdout)");
    app->add_option("--realizations", f.realizations, "Monte-Carlo realizations");
    app->add_option("--cycles", f.cycles, "Duration in oscillation periods");
    app->add_option("--k", f.k, "Measurement strength(s), as 2 pi k / omega_x")->delimiter(',');
    app->add_option("--sigma", f.sigma, "Frequency error / prior width(s), percent")->delimiter(',');
    app->add_option("--format", f.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig resolve(const CommonFlags& f, ExperimentConfig base = {}) {
    ExperimentConfig c = f.config.empty() ? base : harness::load_config(f.config, base);
    if (f.seed) c.seed = *f.seed;
    if (f.realizations) c.realizations = *f.realizations;
    if (f.cycles) c.cycles = *f.cycles;
    if (!f.k.empty()) c.k_list = f.k;
    if (!f.sigma.empty()) c.sigma_list = f.sigma;
    return c;
}

harness::OutputFormat output_format(const CommonFlags& f) {
    return f.format == "json" ? harness::OutputFormat::Json : harness::OutputFormat::Csv;
}

/// Writes to --out when given, otherwise to stdout.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty()) {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    auto os = io::open_out(path);
    fn(os);
    os.flush();
    if (!os) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

void emit(const harness::ResultTable& table, const CommonFlags& f) {
    if (!f.out.empty()) {
        harness::emit_results(table, f.out, output_format(f));
        return;
    }
    if (output_format(f) == harness::OutputFormat::Json) harness::write_json(std::cout, table);
    else harness::write_csv(std::cout, table);
}

BlochState parse_init(const std::string& s, RngStream& rng) {
    if (s == "up") return kSpinUp;
    if (s == "random") return random_pure_state(rng);
    throw Error(ErrorKind::InvalidArgument, "init must be up|random");
}

/// Loads a discrete record; trajectory dumps are decimated on the fly.
DiscreteRecord load_discrete(const std::string& path, std::size_t samples_per_cycle, double omega_nominal) {
    auto is = io::open_in(path);
    std::string first, second;
    std::getline(is, first);
    std::getline(is, second);
    auto in = io::open_in(path);
    if (second == "n,t_n,y_n") return io::read_discrete(in);
    const auto tr = io::read_trajectory(in);
    return decimate(tr.record, samples_per_cycle, omega_nominal);
}

int exit_code(ErrorKind kind) { return 10 + static_cast<int>(kind); }

void report(std::string_view category, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = category;
    j["message"] = message;
    std::cerr << j.dump() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency tracking of a continuously measured qubit"};
    app.require_subcommand(1);

    // simulate
    CommonFlags sim_f;
    double sim_omega = kTwoPi;
    std::string sim_init = "up";
    std::size_t sim_stride = 1;
    std::string sim_record;
    std::size_t sim_spc = 4000;
    std::size_t sim_samples = 50;
    auto* sim = app.add_subcommand("simulate", "Simulate a true trajectory and its measurement record");
    add_common(sim, sim_f);
    sim->add_option("--omega", sim_omega, "True frequency (rad per unit time)");
    sim->add_option("--init", sim_init, "Initial pure state: up|random");
    sim->add_option("--steps-per-cycle", sim_spc, "Fine steps per nominal period");
    sim->add_option("--record-out", sim_record, "Also write the decimated record here");
    sim->add_option("--samples-per-cycle", sim_samples, "Coarse samples per period for --record-out");

    // condition
    CommonFlags cond_f;
    std::string cond_in;
    double cond_omega = kTwoPi;
    double cond_k = -1.0;
    auto* cond = app.add_subcommand("condition", "Run an observer with an assumed frequency over a recorded trajectory");
    add_common(cond, cond_f);
    cond->add_option("--in", cond_in, "Trajectory CSV from 'simulate'")->required();
    cond->add_option("--omega", cond_omega, "Assumed frequency");
    cond->add_option("--stride", sim_stride, "Write every n-th step");

    // bayes
    CommonFlags bayes_f;
    std::string bayes_in;
    double bayes_center = kTwoPi;
    std::size_t bayes_points = 61;
    double bayes_span = 5.0;
    std::string bayes_posterior;
    double bayes_every = 1.0;
    auto* bayes = app.add_subcommand("bayes", "Joint state/frequency estimation over a recorded trajectory");
    add_common(bayes, bayes_f);
    bayes->add_option("--in", bayes_in, "Trajectory CSV from 'simulate'")->required();
    bayes->add_option("--center", bayes_center, "Prior centre (rad per unit time)");
    bayes->add_option("--grid-points", bayes_points, "Grid size");
    bayes->add_option("--span", bayes_span, "Grid half-width in prior standard deviations");
    bayes->add_option("--posterior-out", bayes_posterior, "Write posterior snapshots here");
    bayes->add_option("--every", bayes_every, "Snapshot interval in periods");

    // classify
    CommonFlags cls_f;
    std::string cls_in, cls_method = "periodogram";
    double cls_init = kTwoPi;
    double cls_band = 0.10;
    std::size_t cls_samples = 50;
    std::string cls_subspace = "rank2";
    auto* cls = app.add_subcommand("classify", "Run one classical estimator on a record");
    add_common(cls, cls_f);
    cls->add_option("--in", cls_in, "Discrete record or trajectory CSV")->required();
    cls->add_option("--method", cls_method, "periodogram|quinn_fernandes|music")
        ->check(CLI::IsMember({"periodogram", "quinn_fernandes", "qf", "music"}));
    cls->add_option("--omega-init", cls_init, "Initial estimate / band centre");
    cls->add_option("--band", cls_band, "Relative half-width of the search band");
    cls->add_option("--samples-per-cycle", cls_samples, "Decimation rate when given a trajectory");
    cls->add_option("--music-subspace", cls_subspace, "rank2|printed")->check(CLI::IsMember({"rank2", "printed"}));

    // experiment
    CommonFlags exp_f;
    std::string exp_tag;
    auto* exp = app.add_subcommand("experiment", "Run a Monte-Carlo experiment");
    add_common(exp, exp_f);
    exp->add_option("tag", exp_tag, "fidelity_vs_time|fidelity_vs_error|bayes_error|classical_comparison|sliding_track")
        ->required();

    // track
    CommonFlags trk_f;
    std::string trk_in, trk_method = "music";
    double trk_window = 50.0, trk_hop = 10.0, trk_init = kTwoPi, trk_band = 0.10;
    std::size_t trk_samples = 50;
    auto* trk = app.add_subcommand(
        "track", "Sliding-window tracking of a record (--in), or the tracking experiment when no record is given");
    add_common(trk, trk_f);
    trk->add_option("--in", trk_in, "Discrete record or trajectory CSV");
    trk->add_option("--method", trk_method, "periodogram|quinn_fernandes|music");
    trk->add_option("--window", trk_window, "Window length in periods");
    trk->add_option("--hop", trk_hop, "Hop in periods");
    trk->add_option("--omega-init", trk_init, "Initial estimate");
    trk->add_option("--band", trk_band, "Relative half-width of the search band");
    trk->add_option("--samples-per-cycle", trk_samples, "Decimation rate when given a trajectory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        report("Usage", e.what());
        return 2;
    }

    try {
        if (*sim) {
            ExperimentConfig base;
            base.cycles = 10.0;
            const auto c = resolve(sim_f, base);
            const double k = c.k_list.front();
            SimParams p = SimParams::from_dimensionless(k, kTwoPi, sim_spc);
            RngStream rng(c.seed, 0);
            const auto init = parse_init(sim_init, rng);
            const auto n = static_cast<std::size_t>(std::llround(c.cycles * static_cast<double>(sim_spc)));
            const double w = sim_omega;
            const auto tr = simulate_truth_schedule(p, [w](double) { return w; }, init, n, rng);
            with_output(sim_f.out, [&](std::ostream& os) { io::write_trajectory(os, tr, {c.seed, 0, w, k}); });
            if (!sim_record.empty()) {
                auto os = io::open_out(sim_record);
                io::write_discrete(os, decimate(tr.record, sim_samples, kTwoPi), c.seed);
            }
        } else if (*cond) {
            auto is = io::open_in(cond_in);
            const auto tr = io::read_trajectory(is);
            const double k = cond_f.k.empty() ? io::md_number(tr.meta, "k") : cond_f.k.front();
            (void)cond_k;
            const auto est = condition_record(tr.record, cond_omega, k, kMixedState);
            const bool have_truth = tr.states.size() == est.size();
            with_output(cond_f.out, [&](std::ostream& os) {
                io::write_metadata(os, {{"omega_assumed", io::fmt(cond_omega)}, {"k", io::fmt(k)}});
                os << "t,r_x,r_y,r_z,fidelity,purity\n";
                for (std::size_t n = 0; n < est.size(); n += std::max<std::size_t>(1, sim_stride)) {
                    const auto& s = est[n];
                    os << io::fmt(tr.record.dt * static_cast<double>(n)) << ',' << io::fmt(s.x) << ',' << io::fmt(s.y)
                       << ',' << io::fmt(s.z) << ',';
                    if (have_truth && is_pure(tr.states[n], 1e-6)) os << io::fmt(fidelity(tr.states[n], s, 1e-6));
                    os << ',' << io::fmt(purity(s)) << '\n';
                }
            });
        } else if (*bayes) {
            auto is = io::open_in(bayes_in);
            const auto tr = io::read_trajectory(is);
            const double k = bayes_f.k.empty() ? io::md_number(tr.meta, "k") : bayes_f.k.front();
            const double sigma_pct = bayes_f.sigma.empty() ? 2.0 : bayes_f.sigma.front();
            const double sd = bayes_center * sigma_pct / 100.0;
            auto grid = FrequencyGrid::gaussian(bayes_center, sd, bayes_span * sd, bayes_points);
            HybridPosterior h(grid, k, tr.record.dt);
            const auto every = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(bayes_every / tr.record.dt)));
            std::optional<std::ofstream> post;
            if (!bayes_posterior.empty()) {
                post.emplace(io::open_out(bayes_posterior));
                io::write_posterior_header(*post, h);
            }
            with_output(bayes_f.out, [&](std::ostream& os) {
                io::write_estimate_header(os);
                for (std::size_t n = 0;; ++n) {
                    if (n % every == 0 || n == tr.record.size()) {
                        io::write_estimate_row(os, h.time(), h.estimate());
                        if (post) io::write_posterior_snapshot(*post, h);
                    }
                    if (n == tr.record.size()) break;
                    h.step(tr.record.increments[n]);
                }
            });
        } else if (*cls) {
            const auto disc = load_discrete(cls_in, cls_samples, kTwoPi);
            FrequencyEstimate e;
            if (cls_method == "periodogram") {
                e = periodogram_max(disc, cls_init * (1.0 - cls_band), cls_init * (1.0 + cls_band));
            } else if (cls_method == "music") {
                PrefilteredMusicOptions mo;
                mo.frac_band = cls_band;
                mo.music.subspace = cls_subspace == "printed" ? NoiseSubspace::AsPrinted : NoiseSubspace::RealRank2;
                e = music_prefiltered(disc, cls_init, mo);
            } else {
                e = quinn_fernandes(disc, cls_init);
            }
            with_output(cls_f.out, [&](std::ostream& os) {
                io::write_classical_header(os);
                io::write_classical_row(os, 0.0, disc.duration(), e);
            });
        } else if (*exp) {
            ExperimentConfig base;
            base.experiment = harness::parse_tag(exp_tag);
            auto c = resolve(exp_f, base);
            c.experiment = harness::parse_tag(exp_tag);
            emit(harness::run_experiment(c), exp_f);
        } else if (*trk) {
            if (trk_in.empty()) {
                ExperimentConfig base;
                base.experiment = harness::ExperimentTag::SlidingTrack;
                base.cycles = 500.0;
                auto c = resolve(trk_f, base);
                c.experiment = harness::ExperimentTag::SlidingTrack;
                emit(harness::run_sliding_track(c), trk_f);
            } else {
                const auto disc = load_discrete(trk_in, trk_samples, kTwoPi);
                harness::TrackOptions opt;
                opt.window_cycles = trk_window;
                opt.hop_cycles = trk_hop;
                opt.method = harness::parse_track_method(trk_method);
                opt.band_frac = trk_band;
                const auto track = harness::sliding_window_track(disc, trk_init, opt);
                with_output(trk_f.out, [&](std::ostream& os) {
                    os << "t_start,t_end,t_center,omega_hat,status\n";
                    for (const auto& pt : track)
                        os << io::fmt(pt.t_start) << ',' << io::fmt(pt.t_end) << ',' << io::fmt(pt.t_center) << ','
                           << (pt.valid() ? io::fmt(pt.omega_hat) : std::string()) << ','
                           << (pt.failure.empty() ? std::string(to_string(pt.status)) : pt.failure) << '\n';
                });
            }
        }
    } catch (const Error& e) {
        report(to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        report("Internal", e.what());
        return 1;
    }
    return 0;
}
