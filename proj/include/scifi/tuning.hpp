#pragma once

// Least-squares calibration of the process-noise level sigma_ww against a
// sliding-window mean of the measurements over a rain event.

#include <cstddef>
#include <span>
#include <vector>

#include "scifi/scifi_model.hpp"

namespace scifi::tuning {

/// Trailing mean over the last min(window, k + 1) inputs ending at k.
std::vector<double> sliding_mean(std::span<const double> y, std::size_t window = 20);

/// A measured series and the inclusive index span [start_index, end_index]
/// of the event used in the objective.
struct EventWindow {
    std::vector<TimeSeriesSample> samples;
    std::size_t start_index = 0;
    std::size_t end_index = 0;

    void validate() const;
};

struct SearchOptions {
    double lower = 1e-9;
    double upper = 1e-2;
    std::size_t grid_points = 25;
    double rel_tolerance = 1e-2;
    std::size_t window = 20;
    GainMode mode = GainMode::decorrelated;
};

struct GridPoint {
    double sigma_ww = 0.0;
    double objective = 0.0;
};

struct TuneResult {
    double sigma_ww = 0.0;
    double objective = 0.0;
    std::vector<GridPoint> curve; ///< coarse log grid, ascending sigma_ww
    bool at_boundary = false;     ///< minimum sits on the edge of the search range
    bool refined = false;         ///< golden-section refinement improved on the grid
};

/// Sum over the event span of (a_hat_k - ybar_k)^2. Returns +inf when the
/// filter breaks down numerically for this sigma_ww.
double tuning_objective(const EventWindow& event, const SciFiConfig& config, double sigma_ww,
                        GainMode mode = GainMode::decorrelated, std::size_t window = 20);

TuneResult tune_process_noise(const EventWindow& event, const SciFiConfig& config,
                              const SearchOptions& search = {});

} // namespace scifi::tuning
