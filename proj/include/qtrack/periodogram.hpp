#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "qtrack/discrete.hpp"
#include "qtrack/error.hpp"
#include "qtrack/estimate.hpp"

namespace qtrack {

namespace detail {

/// |sum_n x_n exp(-i theta n)|^2 with the phasor advanced by rotation and
/// re-anchored from std::polar every 256 samples.
inline double power_at(std::span<const double> x, double theta) noexcept {
    const std::complex<double> rot = std::polar(1.0, -theta);
    std::complex<double> acc{0.0, 0.0};
    std::complex<double> ph{1.0, 0.0};
    for (std::size_t n = 0; n < x.size(); ++n) {
        if ((n & 255U) == 0) ph = std::polar(1.0, -theta * static_cast<double>(n));
        acc += x[n] * ph;
        ph *= rot;
    }
    return std::norm(acc);
}

inline std::vector<double> centered(std::span<const double> x) {
    const double m = mean_of(x);
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out) v -= m;
    return out;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

/// Median periodogram over up to `count` Fourier frequencies spread across (0, Nyquist).
inline double noise_floor(std::span<const double> x, std::size_t count = 256) {
    const std::size_t n = x.size();
    const std::size_t bins = (n - 1) / 2;
    if (bins == 0) return 0.0;
    const std::size_t take = std::min(count, bins);
    std::vector<double> vals;
    vals.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t m = 1 + (take == 1 ? 0 : i * (bins - 1) / (take - 1));
        vals.push_back(power_at(x, 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n)));
    }
    return median(std::move(vals));
}

} // namespace detail

/// I(omega) = |sum_n (y_n - ybar) exp(-i omega t_n)|^2, t_n = n delta_t.
inline double periodogram(const DiscreteRecord& disc, double omega) {
    const auto c = detail::centered(disc.samples);
    return detail::power_at(c, omega * disc.delta_t);
}

struct PeriodogramOptions {
    double oversample = 8.0;
    double flat_factor = 10.0; // peak / noise-floor median below this flags the estimate
    double rel_tol = 1e-6;
};

/// Maximize the periodogram over [omega_lo, omega_hi]: a grid of spacing
/// 2 pi / (N delta_t oversample), then golden-section inside the bracket
/// around the best grid point.
inline FrequencyEstimate periodogram_max(const DiscreteRecord& disc, double omega_lo, double omega_hi,
                                         const PeriodogramOptions& opt = {}) {
    const double nyquist = std::numbers::pi / disc.delta_t;
    if (!(omega_lo > 0.0) || !(omega_hi > omega_lo) || !(omega_hi < nyquist))
        throw Error(ErrorKind::BandEmpty, "search band must satisfy 0 < lo < hi < pi/delta_t");
    if (disc.size() < 2) throw Error(ErrorKind::RecordTooShort, "periodogram needs at least 2 samples");
    if (!(opt.oversample >= 1.0)) throw Error(ErrorKind::InvalidArgument, "oversample must be >= 1");

    const auto x = detail::centered(disc.samples);
    const double dt = disc.delta_t;
    const double h = 2.0 * std::numbers::pi / (static_cast<double>(x.size()) * dt * opt.oversample);
    const auto steps = static_cast<std::size_t>(std::floor((omega_hi - omega_lo) / h));

    std::vector<double> grid;
    std::vector<double> power;
    grid.reserve(steps + 2);
    for (std::size_t i = 0; i <= steps; ++i) grid.push_back(omega_lo + h * static_cast<double>(i));
    if (grid.back() < omega_hi) grid.push_back(omega_hi);
    power.reserve(grid.size());
    for (double w : grid) power.push_back(detail::power_at(x, w * dt));

    const auto imax = static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());

    // Second-highest local maximum on the grid.
    double second = 0.0;
    for (std::size_t i = 0; i < power.size(); ++i) {
        if (i == imax) continue;
        const bool left = i == 0 || power[i] >= power[i - 1];
        const bool right = i + 1 == power.size() || power[i] >= power[i + 1];
        if (left && right) second = std::max(second, power[i]);
    }

    double a = grid[imax == 0 ? 0 : imax - 1];
    double b = grid[std::min(imax + 1, grid.size() - 1)];
    auto f = [&](double w) { return detail::power_at(x, w * dt); };

    double best_w = grid[imax];
    double best_p = power[imax];
    if (b > a) {
        constexpr double invphi = 0.6180339887498949;
        double c = b - invphi * (b - a);
        double d = a + invphi * (b - a);
        double fc = f(c);
        double fd = f(d);
        const double tol = opt.rel_tol * grid[imax];
        while (b - a > tol) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - invphi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + invphi * (b - a);
                fd = f(d);
            }
        }
        const double w = 0.5 * (a + b);
        const double p = f(w);
        if (p >= best_p) {
            best_w = w;
            best_p = p;
        }
    }

    const double floor = detail::noise_floor(x);
    FrequencyEstimate e;
    e.method = "periodogram";
    e.mean = e.map = best_w;
    e.info["grid_peak"] = power[imax];
    e.info["refined_peak"] = best_p;
    e.info["second_peak_ratio"] = power[imax] > 0.0 ? second / power[imax] : 0.0;
    e.info["peak_to_median"] = floor > 0.0 ? best_p / floor : 0.0;
    e.info["grid_points"] = static_cast<double>(grid.size());
    if (!(floor > 0.0) || best_p / floor < opt.flat_factor) e.status = EstimateStatus::LowConfidence;
    return e;
}

} // namespace qtrack
