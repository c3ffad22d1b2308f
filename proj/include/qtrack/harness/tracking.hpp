#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "qtrack/discrete.hpp"
#include "qtrack/error.hpp"
#include "qtrack/estimate.hpp"
#include "qtrack/music.hpp"
#include "qtrack/periodogram.hpp"
#include "qtrack/quinn_fernandes.hpp"

namespace qtrack::harness {

enum class TrackMethod { Periodogram, Music, QuinnFernandes };

inline TrackMethod parse_track_method(const std::string& s) {
    if (s == "periodogram") return TrackMethod::Periodogram;
    if (s == "music") return TrackMethod::Music;
    if (s == "quinn_fernandes" || s == "qf") return TrackMethod::QuinnFernandes;
    throw Error(ErrorKind::Config, "unknown track method '" + s + "'");
}

struct TrackPoint {
    double t_start = 0.0;
    double t_end = 0.0;
    double t_center = 0.0;
    double omega_hat = std::numeric_limits<double>::quiet_NaN(); // NaN marks a gap
    EstimateStatus status = EstimateStatus::Ok;
    std::string failure; // error category when the estimator threw

    bool valid() const noexcept { return std::isfinite(omega_hat) && status == EstimateStatus::Ok && failure.empty(); }
};

struct TrackOptions {
    double window_cycles = 50.0;
    double hop_cycles = 10.0;
    TrackMethod method = TrackMethod::Music;
    double band_frac = 0.10;
    double omega_nominal = kTwoPi; // converts cycles to samples
    PeriodogramOptions periodogram;
    QfOptions qf;
    PrefilteredMusicOptions music;
};

/// Estimate the frequency over a fixed-length window slid along the record.
/// Each window is seeded (QF start, periodogram band, MUSIC prefilter) from
/// the last valid estimate; flagged or failed windows become gaps.
inline std::vector<TrackPoint> sliding_window_track(const DiscreteRecord& disc, double omega_init,
                                                    const TrackOptions& opt = {}) {
    if (!(opt.window_cycles >= 10.0)) throw Error(ErrorKind::InvalidArgument, "window must span at least 10 cycles");
    if (!(opt.hop_cycles > 0.0)) throw Error(ErrorKind::InvalidArgument, "hop must be positive");
    const double samples_per_cycle = kTwoPi / (opt.omega_nominal * disc.delta_t);
    const auto window = static_cast<std::size_t>(std::llround(opt.window_cycles * samples_per_cycle));
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.hop_cycles * samples_per_cycle)));

    std::vector<TrackPoint> track;
    double seed = omega_init;
    for (std::size_t start = 0; start + window <= disc.size(); start += hop) {
        TrackPoint pt;
        pt.t_start = disc.time(start);
        pt.t_end = disc.time(start + window);
        pt.t_center = 0.5 * (pt.t_start + pt.t_end);
        const auto win = disc.slice(start, window);
        try {
            FrequencyEstimate e;
            switch (opt.method) {
            case TrackMethod::Periodogram:
                e = periodogram_max(win, seed * (1.0 - opt.band_frac), seed * (1.0 + opt.band_frac), opt.periodogram);
                break;
            case TrackMethod::QuinnFernandes: e = quinn_fernandes(win, seed, opt.qf); break;
            case TrackMethod::Music: {
                auto mo = opt.music;
                mo.frac_band = opt.band_frac;
                e = music_prefiltered(win, seed, mo);
                break;
            }
            }
            pt.status = e.status;
            if (!e.flagged()) {
                pt.omega_hat = e.mean;
                seed = e.mean;
            }
        } catch (const Error& err) {
            pt.failure = std::string(to_string(err.kind()));
        }
        track.push_back(pt);
    }
    return track;
}

} // namespace qtrack::harness
