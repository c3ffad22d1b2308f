#pragma once

#include <cmath>

#include "qtrack/error.hpp"

namespace qtrack {

/// Default tolerance on |r| beyond the unit ball before a state counts as unphysical.
inline constexpr double kPhysTolerance = 1e-9;

/// Qubit state as a Bloch vector r_i = Tr[sigma_i rho].
struct BlochState {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr double norm2() const noexcept { return x * x + y * y + z * z; }
    double norm() const noexcept { return std::sqrt(norm2()); }
    bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

    friend constexpr bool operator==(const BlochState&, const BlochState&) = default;
};

constexpr double dot(const BlochState& a, const BlochState& b) noexcept {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

constexpr BlochState kMixedState{0.0, 0.0, 0.0};
constexpr BlochState kSpinUp{0.0, 0.0, 1.0};

/// Tr[rho^2].
constexpr double purity(const BlochState& s) noexcept { return 0.5 * (1.0 + s.norm2()); }

inline bool is_pure(const BlochState& s, double eps = kPhysTolerance) noexcept {
    return std::abs(s.norm() - 1.0) <= eps;
}

/// Uhlmann fidelity against a pure reference, which reduces to (1 + r0.r)/2.
inline double fidelity(const BlochState& truth, const BlochState& estimate,
                       double eps = kPhysTolerance) {
    if (!is_pure(truth, eps)) {
        throw Error(ErrorKind::NotPure, "fidelity reference has |r| = " + std::to_string(truth.norm()));
    }
    return 0.5 * (1.0 + dot(truth, estimate));
}

} // namespace qtrack
