#pragma once

// Attenuation / fade-slope tracking through scintillation.
//
// State x = (a, da/dt) in (dB, dB/s), driven by white noise on the second
// derivative; measurement y = a + n with n a first-order colored noise whose
// driving variance follows the attenuation level.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scifi/kalman_core.hpp"

namespace scifi {

using kf::GainMode;
using StateEstimate = kf::GaussianEstimate<2>;

/// Physical and link parameters. Defaults describe a 39.4 GHz Q-band beacon
/// received at 34.5 degrees elevation with a 1.2 m dish.
struct SciFiConfig {
    double elevation_deg = 34.5;
    double antenna_efficiency = 0.6;
    double antenna_diameter_m = 1.2;
    double frequency_GHz = 39.4;
    double n_wet = 50.0;
    double sigma_ww = 5e-6;              ///< sqrt of the slope-rate noise PSD
    double corner_freq_Hz = 0.1;         ///< scintillation corner frequency f_c
    double alpha_min = std::pow(2.0, 5.0 / 12.0);
    double turbulence_height_m = 1000.0; ///< h_L of the P.618 path model
    double initial_horizon_s = 3600.0;   ///< h_0 used to size the prior covariance

    /// Every violated constraint, one message per field; empty when valid.
    std::vector<std::string> problems() const;
    /// Throws ConfigError listing all problems at once.
    void validate() const;
};

struct TimeSeriesSample {
    double t = 0.0; ///< seconds
    double y = 0.0; ///< measured excess attenuation, dB
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

struct EstimateRecord {
    double t = 0.0;
    double a_hat = 0.0;
    double slope_hat = 0.0;
    Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
    Interval a_bounds;
    Interval slope_bounds;
    double innovation = 0.0;
    double innovation_var = 0.0;
};

struct DiscreteDynamics {
    Eigen::Matrix2d A;
    Eigen::Matrix2d Q;
};

/// Exact discretization of the double integrator over h seconds:
/// A = [[1, h], [0, 1]], Q = sigma_ww^2 [[h^3/3, h^2/2], [h^2/2, h]].
DiscreteDynamics dynamics_matrices(double h, double sigma_ww);

/// F = exp(-h f_c), the one-step pole of the scintillation noise.
double scintillation_transition(double h, double corner_freq_Hz);

/// Standard deviation (dB) of tropospheric scintillation from the
/// ITU-R P.618 Section 2.4.1 prediction method.
double p618_scintillation_stddev(const SciFiConfig& config);

/// Attenuation-dependent scaling r(a) = max(alpha_min, a^(5/12)), a clamped at 0.
double scintillation_scaling(double a_hat, double alpha_min);

/// R = sigma_P618^2 * r(a_prev_hat).
double measurement_variance(double sigma_p618_sq, double a_prev_hat, double alpha_min);

/// Diffuse prior: mean (a0_mean, 0), covariance Q(h0).
StateEstimate scifi_init(const SciFiConfig& config, double t0, double a0_mean, double h0 = 3600.0);

enum class StateComponent { attenuation, slope };

/// (s - 3 sqrt(P_ss), s + 3 sqrt(P_ss)).
Interval sigma_bounds(const StateEstimate& est, StateComponent which);

/// Open-loop prediction `horizon` seconds ahead; no measurement consumed.
StateEstimate predict_short_term(const StateEstimate& current, double horizon, const SciFiConfig& config);

/// Streaming filter: feed one sample, receive one record. The first sample
/// only seeds the prior and the pseudo-measurement history.
class SciFiFilter {
public:
    explicit SciFiFilter(const SciFiConfig& config, GainMode mode = GainMode::decorrelated);

    std::optional<EstimateRecord> push(const TimeSeriesSample& sample);

    bool started() const { return samples_seen_ > 0; }
    std::size_t samples_seen() const { return samples_seen_; }
    const StateEstimate& estimate() const { return estimate_; }
    const SciFiConfig& config() const { return config_; }
    GainMode mode() const { return mode_; }
    double scintillation_variance() const { return sigma_p618_sq_; }
    /// R used by the most recent step (0 before the first step).
    double last_measurement_variance() const { return last_R_; }

    static constexpr double divergence_trace = 1e6;

private:
    SciFiConfig config_;
    GainMode mode_;
    double sigma_p618_sq_;
    StateEstimate estimate_;
    TimeSeriesSample last_sample_;
    std::size_t samples_seen_ = 0;
    double last_R_ = 0.0;
};

EstimateRecord make_record(const StateEstimate& est, const kf::Innovation<1>& innovation);

/// Batch driver: one record per sample after the first.
std::vector<EstimateRecord> scifi_run(std::span<const TimeSeriesSample> samples, const SciFiConfig& config,
                                      GainMode mode = GainMode::decorrelated);

} // namespace scifi
