#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "qtrack/discrete.hpp"
#include "qtrack/error.hpp"

namespace qtrack {

/// Second-order section b0 (1 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

/// Digital Butterworth bandpass: analog lowpass prototype, lowpass-to-bandpass
/// transform, then the bilinear transform with prewarped band edges. An
/// order-N design has 2N poles, realized as N biquads.
class ButterworthBandpass {
public:
    /// Band edges are angular frequencies with 0 < lo < hi < pi / delta_t.
    ButterworthBandpass(double omega_lo, double omega_hi, double delta_t, std::size_t order) {
        const double nyq = std::numbers::pi / delta_t;
        if (order == 0 || !(omega_lo > 0.0) || !(omega_hi > omega_lo) || !(omega_hi < nyq))
            throw Error(ErrorKind::BandOutOfRange, "passband must lie strictly inside (0, pi/delta_t)");

        using cd = std::complex<double>;
        // Bilinear transform with s = (z - 1)/(z + 1): Omega = tan(theta / 2).
        const double w1 = std::tan(0.5 * omega_lo * delta_t);
        const double w2 = std::tan(0.5 * omega_hi * delta_t);
        const double bw = w2 - w1;
        const double w0sq = w1 * w2;

        // Each entry is a pair of analog poles whose product polynomial is real.
        std::vector<std::pair<cd, cd>> pairs;
        for (std::size_t k = 0; k < order; ++k) {
            const double ang = std::numbers::pi * static_cast<double>(2 * k + order + 1) / static_cast<double>(2 * order);
            const cd p = std::polar(1.0, ang);
            if (p.imag() < -1e-12) continue; // conjugates are implied
            const cd pb = p * bw;
            const cd root = std::sqrt(pb * pb - 4.0 * w0sq);
            const cd s1 = 0.5 * (pb + root);
            const cd s2 = 0.5 * (pb - root);
            if (std::abs(p.imag()) <= 1e-12) {
                pairs.emplace_back(s1, s2);
            } else {
                pairs.emplace_back(s1, std::conj(s1));
                pairs.emplace_back(s2, std::conj(s2));
            }
        }

        for (const auto& [sa, sb] : pairs) {
            const cd za = (1.0 + sa) / (1.0 - sa);
            const cd zb = (1.0 + sb) / (1.0 - sb);
            Biquad q;
            q.b1 = 0.0;
            q.b2 = -1.0; // zeros at z = +1 and z = -1
            q.a1 = -(za + zb).real();
            q.a2 = (za * zb).real();
            poles_.push_back(za);
            poles_.push_back(zb);
            sections_.push_back(q);
        }

        center_ = 2.0 * std::atan(std::sqrt(w0sq)) / delta_t;
        const double g = std::abs(response(center_, delta_t));
        const double per = std::pow(1.0 / g, 1.0 / static_cast<double>(sections_.size()));
        for (auto& q : sections_) q.b0 *= per;

        // Slowest decay sets the transient length.
        double rmax = 0.0;
        for (const auto& z : poles_) rmax = std::max(rmax, std::abs(z));
        transient_samples_ = rmax > 0.0 ? static_cast<std::size_t>(std::ceil(-5.0 / std::log(rmax))) : 0;
    }

    const std::vector<Biquad>& sections() const noexcept { return sections_; }
    /// All 2N digital poles.
    const std::vector<std::complex<double>>& poles() const noexcept { return poles_; }
    /// Geometric band centre after prewarping (where the gain is normalized to 1).
    double center() const noexcept { return center_; }
    /// About five time constants of the slowest pole, in samples.
    std::size_t transient_samples() const noexcept { return transient_samples_; }

    std::complex<double> response(double omega, double delta_t) const {
        const std::complex<double> zi = std::polar(1.0, -omega * delta_t);
        std::complex<double> h{1.0, 0.0};
        for (const auto& q : sections_) {
            h *= q.b0 * (1.0 + q.b1 * zi + q.b2 * zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi);
        }
        return h;
    }

    /// Causal filtering from rest, direct form II transposed per section.
    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y = x;
        for (const auto& q : sections_) {
            double s1 = 0.0;
            double s2 = 0.0;
            for (double& v : y) {
                const double in = v;
                const double out = q.b0 * in + s1;
                s1 = q.b0 * q.b1 * in - q.a1 * out + s2;
                s2 = q.b0 * q.b2 * in - q.a2 * out;
                v = out;
            }
        }
        return y;
    }

private:
    std::vector<Biquad> sections_;
    std::vector<std::complex<double>> poles_;
    double center_ = 0.0;
    std::size_t transient_samples_ = 0;
};

/// Bandpass [omega_c (1 - frac), omega_c (1 + frac)]. Output has the input's length.
inline DiscreteRecord butterworth_bandpass(const DiscreteRecord& disc, double omega_center, double frac_band = 0.10,
                                           std::size_t order = 4) {
    if (!(frac_band > 0.0) || !(frac_band < 1.0))
        throw Error(ErrorKind::BandOutOfRange, "frac_band must lie in (0, 1)");
    const ButterworthBandpass f(omega_center * (1.0 - frac_band), omega_center * (1.0 + frac_band), disc.delta_t,
                                order);
    return {f.apply(disc.samples), disc.delta_t};
}

} // namespace qtrack
