#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qtrack/error.hpp"

namespace qtrack::harness {

enum class ExperimentTag { FidelityVsTime, FidelityVsError, BayesError, ClassicalComparison, SlidingTrack };

inline std::string to_string(ExperimentTag t) {
    switch (t) {
    case ExperimentTag::FidelityVsTime: return "fidelity_vs_time";
    case ExperimentTag::FidelityVsError: return "fidelity_vs_error";
    case ExperimentTag::BayesError: return "bayes_error";
    case ExperimentTag::ClassicalComparison: return "classical_comparison";
    case ExperimentTag::SlidingTrack: return "sliding_track";
    }
    return "unknown";
}

inline ExperimentTag parse_tag(const std::string& s) {
    if (s == "fidelity_vs_time") return ExperimentTag::FidelityVsTime;
    if (s == "fidelity_vs_error") return ExperimentTag::FidelityVsError;
    if (s == "bayes_error") return ExperimentTag::BayesError;
    if (s == "classical_comparison") return ExperimentTag::ClassicalComparison;
    if (s == "sliding_track") return ExperimentTag::SlidingTrack;
    throw Error(ErrorKind::Config, "unknown experiment tag '" + s + "'");
}

/// Everything an experiment needs. k values use the 2 pi k / omega_x
/// convention; sigma values and error settings are percentages.
struct ExperimentConfig {
    ExperimentTag experiment = ExperimentTag::FidelityVsTime;
    std::vector<double> k_list{0.07};
    std::vector<double> sigma_list{1.0};
    double cycles = 25.0;
    std::size_t realizations = 200;
    std::size_t steps_per_cycle = 4000;
    std::size_t samples_per_cycle = 50;
    std::uint64_t seed = 20240601;
    std::string init_state = "up"; // up | random

    // fidelity experiments
    double sample_every = 0.25;     // cycles between fidelity samples
    double saturation_window = 5.0; // trailing cycles averaged into the saturated fidelity
    double horizon = 25.0;          // cycles, for fidelity_vs_error

    // bayes
    std::size_t grid_points = 61;
    double grid_span_sigmas = 5.0;
    std::string prior = "gaussian"; // gaussian | uniform
    double prior_sigma = 2.0;       // percent of omega_x

    // classical
    std::vector<std::string> estimators{"periodogram", "qf_lower", "qf_upper", "music"};
    std::vector<double> checkpoints{10, 25, 50, 100, 150, 250, 500};
    double init_error = 1.0; // percent; initial estimate for QF upper bound and the MUSIC prefilter
    double band_frac = 0.10;
    std::string music_subspace = "rank2"; // rank2 | printed
    std::string qf_recursion = "standard"; // standard | printed

    // sliding track
    double window_cycles = 50.0;
    double hop_cycles = 10.0;
    std::string track_method = "music";
    std::string track_scenario = "ramp"; // constant | ramp | step
    double ramp_pct_per_100 = 0.5;
    double step_pct = 2.0;

    void validate() const {
        if (realizations < 1) throw Error(ErrorKind::Config, "realizations must be >= 1");
        if (!(cycles >= 1.0)) throw Error(ErrorKind::Config, "cycles must be >= 1");
        if (k_list.empty()) throw Error(ErrorKind::Config, "k list is empty");
        for (double k : k_list)
            if (!(k > 0.0)) throw Error(ErrorKind::Config, "every k must be positive");
        for (double s : sigma_list)
            if (!(s >= 0.0)) throw Error(ErrorKind::Config, "sigma must be non-negative");
        if (experiment == ExperimentTag::BayesError) {
            if (grid_points < 1) throw Error(ErrorKind::Config, "grid_points must be >= 1");
            if (!(prior_sigma > 0.0)) throw Error(ErrorKind::Config, "prior_sigma must be positive");
            if (prior != "gaussian" && prior != "uniform") throw Error(ErrorKind::Config, "prior must be gaussian|uniform");
        }
        if (init_state != "up" && init_state != "random") throw Error(ErrorKind::Config, "init_state must be up|random");
        if (steps_per_cycle < 1000) throw Error(ErrorKind::Config, "steps_per_cycle must be >= 1000");
        if (samples_per_cycle < 4) throw Error(ErrorKind::Config, "samples_per_cycle must be >= 4");
        if (!(sample_every > 0.0)) throw Error(ErrorKind::Config, "sample_every must be positive");
        if (experiment == ExperimentTag::SlidingTrack && !(window_cycles >= 10.0))
            throw Error(ErrorKind::Config, "window_cycles must be >= 10");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "'" + key + "' expects a number, got '" + v + "'");
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const auto d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "'" + key + "' expects an unsigned integer, got '" + v + "'");
    }
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
    return out;
}

} // namespace detail

/// Apply one key = value setting.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    const std::string v = trim(value);
    if (key == "experiment") c.experiment = parse_tag(v);
    else if (key == "k") c.k_list = to_doubles(key, v);
    else if (key == "sigma") c.sigma_list = to_doubles(key, v);
    else if (key == "cycles") c.cycles = to_double(key, v);
    else if (key == "realizations") c.realizations = to_u64(key, v);
    else if (key == "steps_per_cycle") c.steps_per_cycle = to_u64(key, v);
    else if (key == "samples_per_cycle") c.samples_per_cycle = to_u64(key, v);
    else if (key == "seed") c.seed = to_u64(key, v);
    else if (key == "init_state") c.init_state = v;
    else if (key == "sample_every") c.sample_every = to_double(key, v);
    else if (key == "saturation_window") c.saturation_window = to_double(key, v);
    else if (key == "horizon") c.horizon = to_double(key, v);
    else if (key == "grid_points") c.grid_points = to_u64(key, v);
    else if (key == "grid_span_sigmas") c.grid_span_sigmas = to_double(key, v);
    else if (key == "prior") c.prior = v;
    else if (key == "prior_sigma") c.prior_sigma = to_double(key, v);
    else if (key == "estimators") c.estimators = split_list(v);
    else if (key == "checkpoints") c.checkpoints = to_doubles(key, v);
    else if (key == "init_error") c.init_error = to_double(key, v);
    else if (key == "band_frac") c.band_frac = to_double(key, v);
    else if (key == "music_subspace") c.music_subspace = v;
    else if (key == "qf_recursion") c.qf_recursion = v;
    else if (key == "window_cycles") c.window_cycles = to_double(key, v);
    else if (key == "hop_cycles") c.hop_cycles = to_double(key, v);
    else if (key == "track_method") c.track_method = v;
    else if (key == "track_scenario") c.track_scenario = v;
    else if (key == "ramp_pct_per_100") c.ramp_pct_per_100 = to_double(key, v);
    else if (key == "step_pct") c.step_pct = to_double(key, v);
    else throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
}

/// Flat "key = value" text; '#' starts a comment.
inline ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return base;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
    return parse_config(is, std::move(base));
}

} // namespace qtrack::harness
