#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qtrack/bloch.hpp"
#include "qtrack/error.hpp"
#include "qtrack/rng.hpp"

// Stochastic master equation for a qubit rotating about x at frequency omega
// while sigma_z is weakly measured at strength k (hbar = 1):
//
//   dr_x = -4k r_x dt                 - sqrt(8k) r_x r_z dW
//   dr_y = (-omega r_z - 4k r_y) dt    - sqrt(8k) r_y r_z dW
//   dr_z =  omega r_y dt              + sqrt(8k) (1 - r_z^2) dW
//
//   dy   = sqrt(8k) r_z dt + dW

namespace qtrack {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Physical parameters of a simulated qubit. Times are in units of the
/// nominal period when omega_x = 2 pi.
struct SimParams {
    double omega_x = kTwoPi;
    double k = 0.07;
    double dt_fine = 1.0 / 4000.0;
    double eps_phys = kPhysTolerance;

    double period() const noexcept { return kTwoPi / omega_x; }
    /// Measurement strength in the 2 pi k / omega_x convention.
    double k_dimensionless() const noexcept { return kTwoPi * k / omega_x; }
    std::size_t steps_per_cycle() const noexcept {
        return static_cast<std::size_t>(std::llround(period() / dt_fine));
    }

    static SimParams from_dimensionless(double k_dimless, double omega_x = kTwoPi,
                                        std::size_t steps_per_cycle = 4000) {
        SimParams p;
        p.omega_x = omega_x;
        p.k = k_dimless * omega_x / kTwoPi;
        p.dt_fine = (kTwoPi / omega_x) / static_cast<double>(steps_per_cycle);
        return p;
    }

    void validate() const {
        if (!(omega_x > 0.0) || !std::isfinite(omega_x))
            throw Error(ErrorKind::InvalidArgument, "omega_x must be positive");
        // k = 0 is the unmeasured limit: pure rotation, record is white noise.
        if (!(k >= 0.0) || !std::isfinite(k))
            throw Error(ErrorKind::InvalidArgument, "k must be non-negative");
        if (!(dt_fine > 0.0) || dt_fine > period() / 1000.0 * (1.0 + 1e-12))
            throw Error(ErrorKind::InvalidArgument, "dt_fine must lie in (0, period/1000]");
        if (!(eps_phys >= 0.0))
            throw Error(ErrorKind::InvalidArgument, "eps_phys must be non-negative");
    }
};

/// Increments dy on a uniform fine grid. dy[n] covers [n dt, (n+1) dt).
struct MeasurementRecord {
    double dt = 0.0;
    std::vector<double> increments;

    std::size_t size() const noexcept { return increments.size(); }
    double duration() const noexcept { return dt * static_cast<double>(increments.size()); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

struct DriftDiffusion {
    Vec3 drift;     // per unit time
    Vec3 diffusion; // per sqrt(time)
};

inline DriftDiffusion drift_diffusion(const BlochState& r, double omega, double k) noexcept {
    const double s = std::sqrt(8.0 * k);
    return {
        {-4.0 * k * r.x, -omega * r.z - 4.0 * k * r.y, omega * r.y},
        {-s * r.x * r.z, -s * r.y * r.z, s * (1.0 - r.z * r.z)},
    };
}

/// Counts physicality rescues over a trajectory.
struct StepDiagnostics {
    std::size_t rescues = 0;
};

/// One Milstein step for the single-noise SME. The correction term is
/// 0.5 (b.grad) b (dW^2 - dt), exact for one Wiener process.
///
/// A pure input is projected back onto the unit sphere, since efficient
/// measurement maps pure states to pure states. A mixed input whose update
/// leaves the ball is rescaled to |r| = 1; overshoots beyond eps count as rescues.
inline BlochState milstein_step(const BlochState& r, double omega, double k, double dt, double dW,
                                double eps = kPhysTolerance, StepDiagnostics* diag = nullptr) {
    const auto [a, b] = drift_diffusion(r, omega, k);
    const double s2 = 8.0 * k;
    const double zz = 2.0 * r.z * r.z - 1.0;
    const double corr = 0.5 * (dW * dW - dt);

    BlochState out{
        r.x + a.x * dt + b.x * dW + corr * s2 * r.x * zz,
        r.y + a.y * dt + b.y * dW + corr * s2 * r.y * zz,
        r.z + a.z * dt + b.z * dW + corr * (-2.0 * s2 * r.z * (1.0 - r.z * r.z)),
    };
    if (!out.finite()) {
        throw Error(ErrorKind::NonFiniteState, "non-finite Bloch vector; step size too large?");
    }

    const double n = out.norm();
    const bool was_pure = std::abs(r.norm() - 1.0) <= eps;
    if (was_pure || n > 1.0) {
        if (!was_pure && n > 1.0 + eps && diag) ++diag->rescues;
        out.x /= n;
        out.y /= n;
        out.z /= n;
    }
    return out;
}

/// Innovation dW = dy - sqrt(8k) <sigma_z> dt under the observer's state.
inline double innovation(const BlochState& r, double k, double dy, double dt) noexcept {
    return dy - std::sqrt(8.0 * k) * r.z * dt;
}

/// Observer update: reconstruct the innovation from dy, then step with the
/// assumed frequency.
inline BlochState condition_step(const BlochState& r, double omega_assumed, double k, double dy, double dt,
                                 double eps = kPhysTolerance, StepDiagnostics* diag = nullptr) {
    return milstein_step(r, omega_assumed, k, dt, innovation(r, k, dy, dt), eps, diag);
}

struct Trajectory {
    std::vector<BlochState> states; // n_steps + 1 entries, states[0] = init
    MeasurementRecord record;
    StepDiagnostics diagnostics;
};

/// Simulate a true trajectory with a time-dependent frequency omega_of_t(t).
///
/// The state is advanced through condition_step on the generated dy so that
/// an observer fed the same record from the same start reproduces it exactly.
template <class OmegaFn>
Trajectory simulate_truth_schedule(const SimParams& params, OmegaFn&& omega_of_t, const BlochState& init,
                                   std::size_t n_steps, RngStream& rng) {
    params.validate();
    if (!is_pure(init, params.eps_phys))
        throw Error(ErrorKind::NotPure, "truth must start in a pure state");

    const double dt = params.dt_fine;
    const double s = std::sqrt(8.0 * params.k);
    Trajectory tr;
    tr.states.reserve(n_steps + 1);
    tr.record.dt = dt;
    tr.record.increments.reserve(n_steps);
    tr.states.push_back(init);

    BlochState r = init;
    for (std::size_t n = 0; n < n_steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        const double dy = s * r.z * dt + rng.wiener(dt);
        r = condition_step(r, omega_of_t(t), params.k, dy, dt, params.eps_phys, &tr.diagnostics);
        tr.record.increments.push_back(dy);
        tr.states.push_back(r);
    }
    return tr;
}

inline Trajectory simulate_truth(const SimParams& params, const BlochState& init, std::size_t n_steps,
                                 RngStream& rng) {
    const double omega = params.omega_x;
    return simulate_truth_schedule(params, [omega](double) { return omega; }, init, n_steps, rng);
}

/// Record only, for long runs where the trajectory is not needed.
template <class OmegaFn>
MeasurementRecord simulate_record_schedule(const SimParams& params, OmegaFn&& omega_of_t, const BlochState& init,
                                           std::size_t n_steps, RngStream& rng,
                                           StepDiagnostics* diag = nullptr) {
    params.validate();
    if (!is_pure(init, params.eps_phys))
        throw Error(ErrorKind::NotPure, "truth must start in a pure state");
    const double dt = params.dt_fine;
    const double s = std::sqrt(8.0 * params.k);
    MeasurementRecord rec;
    rec.dt = dt;
    rec.increments.resize(n_steps);
    BlochState r = init;
    for (std::size_t n = 0; n < n_steps; ++n) {
        const double dy = s * r.z * dt + rng.wiener(dt);
        r = condition_step(r, omega_of_t(static_cast<double>(n) * dt), params.k, dy, dt, params.eps_phys, diag);
        rec.increments[n] = dy;
    }
    return rec;
}

inline MeasurementRecord simulate_record(const SimParams& params, const BlochState& init, std::size_t n_steps,
                                         RngStream& rng, StepDiagnostics* diag = nullptr) {
    const double omega = params.omega_x;
    return simulate_record_schedule(params, [omega](double) { return omega; }, init, n_steps, rng, diag);
}

/// Run an observer over a whole record. Returns size()+1 states.
inline std::vector<BlochState> condition_record(const MeasurementRecord& record, double omega_assumed, double k,
                                                const BlochState& init, double eps = kPhysTolerance,
                                                StepDiagnostics* diag = nullptr) {
    std::vector<BlochState> out;
    out.reserve(record.size() + 1);
    out.push_back(init);
    BlochState r = init;
    for (double dy : record.increments) {
        r = condition_step(r, omega_assumed, k, dy, record.dt, eps, diag);
        out.push_back(r);
    }
    return out;
}

/// Uniformly distributed pure state.
inline BlochState random_pure_state(RngStream& rng) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, kTwoPi);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {rho * std::cos(phi), rho * std::sin(phi), z};
}

} // namespace qtrack
