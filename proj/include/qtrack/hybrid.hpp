#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qtrack/bloch.hpp"
#include "qtrack/error.hpp"
#include "qtrack/estimate.hpp"
#include "qtrack/sme.hpp"

// Hybrid master equation: a bank of conditioned states rho_lambda, one per
// candidate frequency, plus a discrete posterior P(lambda) updated by the
// Kushner-Stratonovich equation
//
//   dP(lambda) = sqrt(8k) (<y>_lambda - <y>) dW_c P(lambda),
//   dW_c       = dy - sqrt(8k) <y> dt.
//
// The observer's state rho_c is the posterior mixture of the bank.

namespace qtrack {

/// Candidate frequencies on a uniform grid with prior weights.
struct FrequencyGrid {
    std::vector<double> points;
    std::vector<double> prior;

    std::size_t size() const noexcept { return points.size(); }
    double spacing() const noexcept { return points.size() > 1 ? points[1] - points[0] : 0.0; }

    void validate() const {
        if (points.empty()) throw Error(ErrorKind::InvalidGrid, "empty grid");
        if (prior.size() != points.size()) throw Error(ErrorKind::InvalidGrid, "prior/points size mismatch");
        if (points.size() > 1) {
            const double h = spacing();
            if (!(h > 0.0)) throw Error(ErrorKind::InvalidGrid, "points must be strictly increasing");
            for (std::size_t j = 1; j < points.size(); ++j) {
                const double d = points[j] - points[j - 1];
                if (!(d > 0.0) || std::abs(d - h) > 1e-9 * std::max(std::abs(h), std::abs(points[j])))
                    throw Error(ErrorKind::InvalidGrid, "grid spacing is not uniform");
            }
        }
        double total = 0.0;
        for (double p : prior) {
            if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidGrid, "prior weights must be >= 0");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw Error(ErrorKind::InvalidGrid, "prior sums to " + std::to_string(total));
    }

    static FrequencyGrid uniform(double center, double half_span, std::size_t n) {
        FrequencyGrid g;
        g.points = linspace(center, half_span, n);
        g.prior.assign(n, 1.0 / static_cast<double>(n));
        return g;
    }

    /// Gaussian prior of width sigma about center, truncated to the grid and renormalized.
    static FrequencyGrid gaussian(double center, double sigma, double half_span, std::size_t n) {
        if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidGrid, "prior sigma must be positive");
        FrequencyGrid g;
        g.points = linspace(center, half_span, n);
        g.prior.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double u = (g.points[j] - center) / sigma;
            g.prior[j] = std::exp(-0.5 * u * u);
        }
        const double total = std::accumulate(g.prior.begin(), g.prior.end(), 0.0);
        for (double& p : g.prior) p /= total;
        return g;
    }

    static FrequencyGrid delta(std::span<const double> points, std::size_t at) {
        FrequencyGrid g;
        g.points.assign(points.begin(), points.end());
        g.prior.assign(points.size(), 0.0);
        g.prior.at(at) = 1.0;
        return g;
    }

private:
    static std::vector<double> linspace(double center, double half_span, std::size_t n) {
        if (n == 0) throw Error(ErrorKind::InvalidGrid, "empty grid");
        std::vector<double> pts(n);
        if (n == 1) {
            pts[0] = center;
            return pts;
        }
        const double lo = center - half_span;
        const double h = 2.0 * half_span / static_cast<double>(n - 1);
        for (std::size_t j = 0; j < n; ++j) pts[j] = lo + h * static_cast<double>(j);
        return pts;
    }
};

class HybridPosterior {
public:
    HybridPosterior(const FrequencyGrid& grid, double k, double dt, double eps = kPhysTolerance)
        : points_(grid.points), weights_(grid.prior), rho_lambda_(grid.size(), kMixedState), k_(k), dt_(dt),
          eps_(eps) {
        grid.validate();
        if (!(k >= 0.0) || !(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "need k >= 0 and dt > 0");
    }

    const BlochState& rho_c() const noexcept { return rho_c_; }
    std::span<const BlochState> rho_lambda() const noexcept { return rho_lambda_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> points() const noexcept { return points_; }
    double k() const noexcept { return k_; }
    double dt() const noexcept { return dt_; }
    std::size_t steps() const noexcept { return steps_; }
    double time() const noexcept { return dt_ * static_cast<double>(steps_); }
    const StepDiagnostics& diagnostics() const noexcept { return diag_; }

    /// Advance by one record increment dy (same dt and k as the record).
    void step(double dy) {
        const double s = std::sqrt(8.0 * k_);
        const double y_c = rho_c_.z;
        const double dw_c = dy - s * y_c * dt_;

        double total = 0.0;
        for (std::size_t j = 0; j < points_.size(); ++j) {
            // Linearized Bayes factor; can dip below zero for large |dW|.
            const double factor = 1.0 + s * (rho_lambda_[j].z - y_c) * dw_c;
            // A NaN factor (non-finite dy) is clipped to zero as well.
            weights_[j] *= std::max(0.0, factor);
            total += weights_[j];
        }
        if (!(total > 0.0) || !std::isfinite(total))
            throw Error(ErrorKind::DegeneratePosterior,
                        "all weights vanished at t = " + std::to_string(time()) + "; grid may not cover the truth");
        for (std::size_t j = 0; j < points_.size(); ++j)
            rho_lambda_[j] = condition_step(rho_lambda_[j], points_[j], k_, dy, dt_, eps_, &diag_);

        BlochState mix{};
        for (std::size_t j = 0; j < points_.size(); ++j) {
            weights_[j] /= total;
            mix.x += weights_[j] * rho_lambda_[j].x;
            mix.y += weights_[j] * rho_lambda_[j].y;
            mix.z += weights_[j] * rho_lambda_[j].z;
        }
        rho_c_ = mix;
        ++steps_;
    }

    FrequencyEstimate estimate() const {
        FrequencyEstimate e;
        e.method = "bayes";
        double m1 = 0.0;
        double m2 = 0.0;
        for (std::size_t j = 0; j < points_.size(); ++j) {
            m1 += weights_[j] * points_[j];
            m2 += weights_[j] * points_[j] * points_[j];
        }
        e.mean = m1;
        e.std = std::sqrt(std::max(0.0, m2 - m1 * m1));
        // First maximum wins ties.
        e.map = points_[static_cast<std::size_t>(std::max_element(weights_.begin(), weights_.end()) - weights_.begin())];
        return e;
    }

private:
    std::vector<double> points_;
    std::vector<double> weights_;
    std::vector<BlochState> rho_lambda_;
    BlochState rho_c_ = kMixedState;
    double k_;
    double dt_;
    double eps_;
    std::size_t steps_ = 0;
    StepDiagnostics diag_;
};

inline HybridPosterior init_hybrid(const FrequencyGrid& grid, double k, double dt) {
    return HybridPosterior(grid, k, dt);
}

inline HybridPosterior hybrid_step(HybridPosterior h, double dy) {
    h.step(dy);
    return h;
}

inline FrequencyEstimate freq_estimate(const HybridPosterior& h) { return h.estimate(); }

/// Direct update of rho_c under the posterior-averaged Hamiltonian. Agrees
/// with the bank mixture whenever all rho_lambda coincide with rho_c.
inline BlochState advance_mixture_sme(const BlochState& rho_c, std::span<const double> weights,
                                      std::span<const double> points, double k, double dy, double dt,
                                      double eps = kPhysTolerance) {
    double omega_bar = 0.0;
    for (std::size_t j = 0; j < points.size(); ++j) omega_bar += weights[j] * points[j];
    return condition_step(rho_c, omega_bar, k, dy, dt, eps);
}

} // namespace qtrack
