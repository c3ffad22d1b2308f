#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qtrack {

enum class EstimateStatus {
    Ok,
    LowConfidence, // no clear spectral line (peak/median below threshold)
    NoConvergence, // iteration budget exhausted
};

constexpr std::string_view to_string(EstimateStatus s) noexcept {
    switch (s) {
    case EstimateStatus::Ok: return "ok";
    case EstimateStatus::LowConfidence: return "low_confidence";
    case EstimateStatus::NoConvergence: return "no_convergence";
    }
    return "unknown";
}

/// Point estimate of an angular frequency (rad per unit time).
///
/// Bayesian estimates fill mean/std/map from the posterior; classical
/// estimators set mean = map = the estimate and std = 0.
struct FrequencyEstimate {
    double mean = 0.0;
    double std = 0.0;
    double map = 0.0;
    std::string method;
    EstimateStatus status = EstimateStatus::Ok;
    std::size_t iterations = 0;
    std::map<std::string, double> info;
    std::map<std::string, std::vector<double>> traces;

    bool flagged() const noexcept { return status != EstimateStatus::Ok; }
};

} // namespace qtrack
