#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "qtrack/discrete.hpp"
#include "qtrack/error.hpp"
#include "qtrack/estimate.hpp"

namespace qtrack {

/// Sign convention of the notch-filter recursion.
enum class QfRecursion {
    Standard,  // zeta_n = x_n + alpha zeta_{n-1} - zeta_{n-2}; resonant at the notch frequency
    AsPrinted, // zeta_n = x_n - alpha zeta_{n-1} + zeta_{n-2}; has a real pole outside the unit circle
};

struct QfOptions {
    double tol = 1e-6; // on |alpha - beta|
    std::size_t max_iter = 20;
    QfRecursion recursion = QfRecursion::Standard;
};

/// Quinn-Fernandes iterative frequency estimator.
///
/// Starting from alpha_1 = 2 cos(omega_init dt), each pass filters the
/// mean-removed record with the current alpha and forms
///   beta = sum (zeta_n + zeta_{n-2}) zeta_{n-1} / sum zeta_{n-1}^2,
/// then sets alpha <- beta until |alpha - beta| <= tol.
/// Traces "alpha" and "beta" hold the full iteration history.
inline FrequencyEstimate quinn_fernandes(const DiscreteRecord& disc, double omega_init, const QfOptions& opt = {}) {
    const double dt = disc.delta_t;
    if (!(omega_init * dt > 0.0) || !(omega_init * dt < std::numbers::pi))
        throw Error(ErrorKind::InvalidArgument, "need 0 < omega_init dt < pi");
    if (!(opt.tol > 0.0) || opt.max_iter == 0) throw Error(ErrorKind::InvalidArgument, "need tol > 0, max_iter > 0");
    if (disc.size() < 3) throw Error(ErrorKind::RecordTooShort, "Quinn-Fernandes needs at least 3 samples");

    const double m = mean_of(disc.samples);
    const double sign = opt.recursion == QfRecursion::Standard ? 1.0 : -1.0;

    FrequencyEstimate e;
    e.method = "quinn_fernandes";
    auto& alphas = e.traces["alpha"];
    auto& betas = e.traces["beta"];

    double alpha = 2.0 * std::cos(omega_init * dt);
    double beta = alpha;
    bool converged = false;
    for (std::size_t j = 0; j < opt.max_iter; ++j) {
        double z1 = 0.0; // zeta_{n-1}
        double z2 = 0.0; // zeta_{n-2}
        double num = 0.0;
        double den = 0.0;
        for (double v : disc.samples) {
            const double z0 = (v - m) + sign * (alpha * z1 - z2);
            num += (z0 + z2) * z1;
            den += z1 * z1;
            z2 = z1;
            z1 = z0;
        }
        beta = num / den;
        alphas.push_back(alpha);
        betas.push_back(beta);
        e.iterations = j + 1;
        if (!std::isfinite(beta) || std::abs(beta) > 2.0)
            throw Error(ErrorKind::OutOfRange, "beta = " + std::to_string(beta) + " left [-2, 2] at iteration " +
                                                   std::to_string(j + 1));
        if (std::abs(alpha - beta) <= opt.tol) {
            converged = true;
            break;
        }
        alpha = beta;
    }

    e.mean = e.map = std::acos(0.5 * beta) / dt;
    e.info["converged"] = converged ? 1.0 : 0.0;
    if (!converged) e.status = EstimateStatus::NoConvergence;
    return e;
}

} // namespace qtrack
