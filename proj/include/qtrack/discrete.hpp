#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "qtrack/error.hpp"
#include "qtrack/sme.hpp"

namespace qtrack {

/// Coarse samples y_n, each the integral of dy over [n dt, (n+1) dt).
struct DiscreteRecord {
    std::vector<double> samples;
    double delta_t = 0.0;

    std::size_t size() const noexcept { return samples.size(); }
    double time(std::size_t n) const noexcept { return delta_t * static_cast<double>(n); }
    double duration() const noexcept { return delta_t * static_cast<double>(samples.size()); }

    /// First n samples (or all of them if n is larger).
    DiscreteRecord prefix(std::size_t n) const {
        n = std::min(n, samples.size());
        return {std::vector<double>(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n)), delta_t};
    }

    DiscreteRecord slice(std::size_t first, std::size_t count) const {
        first = std::min(first, samples.size());
        count = std::min(count, samples.size() - first);
        const auto b = samples.begin() + static_cast<std::ptrdiff_t>(first);
        return {std::vector<double>(b, b + static_cast<std::ptrdiff_t>(count)), delta_t};
    }
};

/// Number of fine steps per coarse sample; throws unless the ratio is an integer.
inline std::size_t steps_per_sample(double dt_fine, std::size_t samples_per_cycle, double omega_nominal) {
    if (samples_per_cycle == 0 || !(omega_nominal > 0.0) || !(dt_fine > 0.0))
        throw Error(ErrorKind::InvalidArgument, "decimation needs positive rates");
    const double delta_t = (kTwoPi / omega_nominal) / static_cast<double>(samples_per_cycle);
    const double ratio = delta_t / dt_fine;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
        throw Error(ErrorKind::IncompatibleSteps,
                    "coarse step is " + std::to_string(ratio) + " fine steps; must be an integer");
    return static_cast<std::size_t>(rounded);
}

/// Sum fine increments into coarse samples. A trailing partial window is dropped.
inline DiscreteRecord decimate(const MeasurementRecord& record, std::size_t samples_per_cycle,
                               double omega_nominal) {
    const std::size_t m = steps_per_sample(record.dt, samples_per_cycle, omega_nominal);
    DiscreteRecord out;
    out.delta_t = record.dt * static_cast<double>(m);
    const std::size_t n = record.size() / m;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto b = record.increments.begin() + static_cast<std::ptrdiff_t>(i * m);
        out.samples[i] = std::accumulate(b, b + static_cast<std::ptrdiff_t>(m), 0.0);
    }
    return out;
}

/// Ratio of the signal and noise terms of one coarse sample, in dB.
inline double snr_db(double k, double delta_t) {
    if (!(k > 0.0) || !(delta_t > 0.0)) throw Error(ErrorKind::InvalidArgument, "snr_db needs k, delta_t > 0");
    return 10.0 * std::log10(4.0 * k * delta_t);
}

inline double mean_of(std::span<const double> v) noexcept {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace qtrack
