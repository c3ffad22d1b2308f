#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "qtrack/butterworth.hpp"
#include "qtrack/discrete.hpp"
#include "qtrack/error.hpp"
#include "qtrack/estimate.hpp"
#include "qtrack/periodogram.hpp"

namespace qtrack {

/// Symmetric Toeplitz matrix built from autocovariances C_0..C_{M-1}.
struct ToeplitzCov {
    std::size_t order = 0;
    std::vector<double> lags;    // C_0 .. C_{M-1}
    std::vector<double> entries; // row-major M x M

    double at(std::size_t i, std::size_t j) const noexcept { return entries[i * order + j]; }
};

/// Eigenpairs sorted by ascending eigenvalue; vectors[m] pairs with values[m].
struct EigenPairs {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
};

/// Mean-removed biased autocovariances C_j = N^-1 sum_{n>=j} (y_n - ybar)(y_{n-j} - ybar).
inline ToeplitzCov autocovariance_toeplitz(const DiscreteRecord& disc, std::size_t order) {
    if (order <= 2) throw Error(ErrorKind::InvalidArgument, "autocovariance order must exceed 2");
    const std::size_t n = disc.size();
    if (n < 4 * order)
        throw Error(ErrorKind::RecordTooShort,
                    std::to_string(n) + " samples is too short for order " + std::to_string(order));

    const double ybar = mean_of(disc.samples);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = disc.samples[i] - ybar;

    ToeplitzCov cov;
    cov.order = order;
    cov.lags.resize(order);
    for (std::size_t j = 0; j < order; ++j) {
        double acc = 0.0;
        for (std::size_t i = j; i < n; ++i) acc += c[i] * c[i - j];
        cov.lags[j] = acc / static_cast<double>(n);
    }
    cov.entries.resize(order * order);
    for (std::size_t i = 0; i < order; ++i)
        for (std::size_t j = 0; j < order; ++j)
            cov.entries[i * order + j] = cov.lags[i > j ? i - j : j - i];
    return cov;
}

/// Cyclic Jacobi eigensolver for small dense symmetric matrices (row-major).
inline EigenPairs symmetric_eig(std::vector<double> a, std::size_t m, std::size_t max_sweeps = 64) {
    if (a.size() != m * m) throw Error(ErrorKind::InvalidArgument, "matrix size mismatch");
    if (m == 0 || m > 32) throw Error(ErrorKind::InvalidArgument, "symmetric_eig supports 1 <= M <= 32");

    std::vector<double> v(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) v[i * m + i] = 1.0;

    double fro = 0.0;
    for (double x : a) fro += x * x;
    fro = std::sqrt(fro);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (i != j) s += a[i * m + j] * a[i * m + j];
        return std::sqrt(s);
    };

    const double target = 1e-12 * fro;
    std::size_t sweep = 0;
    while (off_norm() > target) {
        if (sweep++ >= max_sweeps) throw Error(ErrorKind::NoConvergence, "Jacobi sweeps exhausted");
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                const double apq = a[p * m + q];
                if (apq == 0.0) continue;
                const double app = a[p * m + p];
                const double aqq = a[q * m + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < m; ++k) {
                    const double akp = a[k * m + p];
                    const double akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < m; ++k) {
                    const double apk = a[p * m + k];
                    const double aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < m; ++k) {
                    const double vkp = v[k * m + p];
                    const double vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return a[i * m + i] < a[j * m + j]; });

    EigenPairs out;
    for (std::size_t i : idx) {
        out.values.push_back(a[i * m + i]);
        std::vector<double> col(m);
        for (std::size_t k = 0; k < m; ++k) col[k] = v[k * m + i];
        out.vectors.push_back(std::move(col));
    }
    return out;
}

inline EigenPairs symmetric_eig(const ToeplitzCov& cov) { return symmetric_eig(cov.entries, cov.order); }

/// How many eigenvectors form the noise subspace.
enum class NoiseSubspace {
    AsPrinted, // M - p: p counted as complex exponentials
    RealRank2, // M - 2p: each real sinusoid spans two dimensions
};

struct MusicOptions {
    std::size_t order = 5;
    std::size_t sinusoids = 1;
    NoiseSubspace subspace = NoiseSubspace::RealRank2;
    double grid_rel_step = 1e-4; // spectrum grid spacing relative to the band centre
    double flat_factor = 5.0;    // peak / median of S below this flags the estimate
};

/// Pseudo-spectrum S(omega) = 1 / sum_m |e(omega)^H nu_m|^2 over the noise eigenvectors.
inline double music_spectrum(const EigenPairs& eig, std::size_t noise_dim, double omega, double delta_t) {
    double denom = 0.0;
    for (std::size_t m = 0; m < noise_dim; ++m) {
        const auto& nu = eig.vectors[m];
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t i = 0; i < nu.size(); ++i)
            acc += nu[i] * std::polar(1.0, -omega * delta_t * static_cast<double>(i));
        denom += std::norm(acc);
    }
    return 1.0 / denom;
}

inline std::size_t noise_dimension(const MusicOptions& opt) {
    const std::size_t signal = opt.subspace == NoiseSubspace::RealRank2 ? 2 * opt.sinusoids : opt.sinusoids;
    if (opt.sinusoids == 0 || signal >= opt.order)
        throw Error(ErrorKind::InvalidArgument, "MUSIC needs 0 < signal dimension < M");
    return opt.order - signal;
}

/// MUSIC estimate of the dominant frequency within [omega_lo, omega_hi]:
/// dense-grid maximum of S, refined by a parabola through log S.
inline FrequencyEstimate music_estimate(const DiscreteRecord& disc, double omega_lo, double omega_hi,
                                        const MusicOptions& opt = {}) {
    const double nyq = std::numbers::pi / disc.delta_t;
    if (!(omega_lo > 0.0) || !(omega_hi > omega_lo) || !(omega_hi < nyq))
        throw Error(ErrorKind::BandEmpty, "search band must satisfy 0 < lo < hi < pi/delta_t");
    const std::size_t noise_dim = noise_dimension(opt);
    const auto cov = autocovariance_toeplitz(disc, opt.order);
    const auto eig = symmetric_eig(cov);

    const double h = opt.grid_rel_step * 0.5 * (omega_lo + omega_hi);
    const auto steps = static_cast<std::size_t>(std::ceil((omega_hi - omega_lo) / h));
    std::vector<double> grid(steps + 1);
    std::vector<double> spec(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        grid[i] = std::min(omega_hi, omega_lo + h * static_cast<double>(i));
        spec[i] = music_spectrum(eig, noise_dim, grid[i], disc.delta_t);
    }
    const auto imax = static_cast<std::size_t>(std::max_element(spec.begin(), spec.end()) - spec.begin());

    double w = grid[imax];
    if (imax > 0 && imax + 1 < grid.size()) {
        const double l0 = std::log(spec[imax - 1]);
        const double l1 = std::log(spec[imax]);
        const double l2 = std::log(spec[imax + 1]);
        const double curv = l0 - 2.0 * l1 + l2;
        if (curv < 0.0) w += 0.5 * h * (l0 - l2) / curv;
    }

    const double med = detail::median(spec);
    FrequencyEstimate e;
    e.method = "music";
    e.mean = e.map = w;
    e.info["peak"] = spec[imax];
    e.info["peak_to_median"] = med > 0.0 ? spec[imax] / med : 0.0;
    e.info["noise_dim"] = static_cast<double>(noise_dim);
    e.info["at_band_edge"] = (imax == 0 || imax + 1 == grid.size()) ? 1.0 : 0.0;
    e.traces["eigenvalues"] = eig.values;
    if (!(med > 0.0) || spec[imax] / med < opt.flat_factor) e.status = EstimateStatus::LowConfidence;
    return e;
}

struct PrefilteredMusicOptions {
    MusicOptions music;
    double frac_band = 0.10;
    std::size_t filter_order = 4;
    double skip_cycles = 3.0; // filter start-up excluded from the autocovariance
};

/// Bandpass around omega_init (+/- frac_band), drop the start-up transient,
/// then search the same band with MUSIC.
inline FrequencyEstimate music_prefiltered(const DiscreteRecord& disc, double omega_init,
                                           const PrefilteredMusicOptions& opt = {}) {
    const auto filtered = butterworth_bandpass(disc, omega_init, opt.frac_band, opt.filter_order);
    const double period_samples = kTwoPi / (omega_init * disc.delta_t);
    const auto skip = static_cast<std::size_t>(std::ceil(opt.skip_cycles * period_samples));
    if (skip >= filtered.size())
        throw Error(ErrorKind::RecordTooShort, "record shorter than the filter start-up window");
    auto e = music_estimate(filtered.slice(skip, filtered.size() - skip), omega_init * (1.0 - opt.frac_band),
                            omega_init * (1.0 + opt.frac_band), opt.music);
    e.info["skipped_samples"] = static_cast<double>(skip);
    return e;
}

} // namespace qtrack
