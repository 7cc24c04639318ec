#include "scifi/scifi_model.hpp"

#include <numbers>
#include <sstream>

namespace scifi {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) {
            out += "; ";
        }
        out += item;
    }
    return out;
}

} // namespace

std::vector<std::string> SciFiConfig::problems() const {
    std::vector<std::string> out;
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            out.push_back(std::string(name) + " must be strictly positive");
        }
    };
    if (!(elevation_deg > 0.0 && elevation_deg <= 90.0)) {
        out.emplace_back("elevation_deg must lie in (0, 90]");
    }
    if (!(antenna_efficiency > 0.0 && antenna_efficiency <= 1.0)) {
        out.emplace_back("antenna_efficiency must lie in (0, 1]");
    }
    positive(antenna_diameter_m, "antenna_diameter_m");
    if (!(frequency_GHz >= 4.0 && frequency_GHz <= 55.0)) {
        out.emplace_back("frequency_GHz must lie in [4, 55] (validity range of the P.618 scintillation model)");
    }
    positive(n_wet, "n_wet");
    positive(sigma_ww, "sigma_ww");
    positive(corner_freq_Hz, "corner_freq_Hz");
    positive(alpha_min, "alpha_min");
    positive(turbulence_height_m, "turbulence_height_m");
    if (!(initial_horizon_s >= 3600.0)) {
        out.emplace_back("initial_horizon_s must be at least 3600");
    }
    return out;
}

void SciFiConfig::validate() const {
    const auto issues = problems();
    if (!issues.empty()) {
        throw ConfigError("invalid configuration: " + join(issues));
    }
}

DiscreteDynamics dynamics_matrices(double h, double sigma_ww) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        std::ostringstream msg;
        msg << "invalid time step h = " << h << " (must be > 0)";
        throw ConfigError(msg.str());
    }
    const double s2 = sigma_ww * sigma_ww;
    const double h2 = h * h;
    DiscreteDynamics out;
    out.A << 1.0, h, 0.0, 1.0;
    out.Q << s2 * h2 * h / 3.0, s2 * h2 / 2.0, s2 * h2 / 2.0, s2 * h;
    return out;
}

double scintillation_transition(double h, double corner_freq_Hz) {
    if (!(h > 0.0) || !(corner_freq_Hz > 0.0)) {
        throw ConfigError("scintillation_transition: h and corner frequency must be > 0");
    }
    return std::exp(-h * corner_freq_Hz);
}

double p618_scintillation_stddev(const SciFiConfig& config) {
    config.validate();
    const double theta = config.elevation_deg * kDegToRad;
    const double sin_theta = std::sin(theta);

    // Step 2: reference standard deviation from the wet refractivity.
    const double sigma_ref = 3.6e-3 + 1e-4 * config.n_wet;
    // Step 3: effective path length through the turbulent layer.
    const double path =
        2.0 * config.turbulence_height_m / (std::sqrt(sin_theta * sin_theta + 2.35e-4) + sin_theta);
    // Steps 4-6: antenna averaging.
    const double d_eff = std::sqrt(config.antenna_efficiency) * config.antenna_diameter_m;
    const double x = 1.22 * d_eff * d_eff * (config.frequency_GHz / path);
    const double bracket = 3.86 * std::pow(x * x + 1.0, 11.0 / 12.0) *
                               std::sin(11.0 / 6.0 * std::atan(1.0 / x)) -
                           7.08 * std::pow(x, 5.0 / 6.0);
    if (!(bracket > 0.0)) {
        std::ostringstream msg;
        msg << "antenna averaging factor undefined: x = " << x
            << " gives a non-positive bracket (" << bracket << "); antenna too large for this path";
        throw ConfigError(msg.str());
    }
    const double g = std::sqrt(bracket);
    // Step 7.
    return sigma_ref * std::pow(config.frequency_GHz, 7.0 / 12.0) * g / std::pow(sin_theta, 1.2);
}

double scintillation_scaling(double a_hat, double alpha_min) {
    const double a = std::max(a_hat, 0.0);
    return std::max(alpha_min, std::pow(a, 5.0 / 12.0));
}

double measurement_variance(double sigma_p618_sq, double a_prev_hat, double alpha_min) {
    if (!(sigma_p618_sq > 0.0)) {
        throw ConfigError("measurement_variance: sigma_P618^2 must be > 0");
    }
    return sigma_p618_sq * scintillation_scaling(a_prev_hat, alpha_min);
}

StateEstimate scifi_init(const SciFiConfig& config, double t0, double a0_mean, double h0) {
    if (!(h0 >= 3600.0)) {
        throw ConfigError("scifi_init: h0 must be at least 3600 s");
    }
    StateEstimate est;
    est.mean << a0_mean, 0.0;
    est.cov = dynamics_matrices(h0, config.sigma_ww).Q;
    est.time_index = 0;
    est.timestamp = t0;
    return est;
}

Interval sigma_bounds(const StateEstimate& est, StateComponent which) {
    const int i = which == StateComponent::attenuation ? 0 : 1;
    const double var = est.cov(i, i);
    if (!(var >= 0.0)) {
        throw NumericalError("sigma_bounds: negative variance after covariance repair");
    }
    const double half = 3.0 * std::sqrt(var);
    return {est.mean(i) - half, est.mean(i) + half};
}

StateEstimate predict_short_term(const StateEstimate& current, double horizon, const SciFiConfig& config) {
    if (!(horizon > 0.0)) {
        throw ConfigError("predict_short_term: horizon must be > 0");
    }
    const auto dyn = dynamics_matrices(horizon, config.sigma_ww);
    return kf::kf_predict<2>(current, dyn.A, dyn.Q, horizon);
}

EstimateRecord make_record(const StateEstimate& est, const kf::Innovation<1>& innovation) {
    EstimateRecord r;
    r.t = est.timestamp;
    r.a_hat = est.mean(0);
    r.slope_hat = est.mean(1);
    r.P = est.cov;
    r.a_bounds = sigma_bounds(est, StateComponent::attenuation);
    r.slope_bounds = sigma_bounds(est, StateComponent::slope);
    r.innovation = innovation.value(0);
    r.innovation_var = innovation.cov(0, 0);
    return r;
}

SciFiFilter::SciFiFilter(const SciFiConfig& config, GainMode mode)
    : config_(config), mode_(mode), sigma_p618_sq_(0.0) {
    config_.validate();
    const double sigma = p618_scintillation_stddev(config_);
    sigma_p618_sq_ = sigma * sigma;
}

std::optional<EstimateRecord> SciFiFilter::push(const TimeSeriesSample& sample) {
    if (!std::isfinite(sample.t) || !std::isfinite(sample.y)) {
        std::ostringstream msg;
        msg << "sample " << samples_seen_ << " is not finite";
        throw DataError(msg.str());
    }
    if (samples_seen_ == 0) {
        estimate_ = scifi_init(config_, sample.t, sample.y, config_.initial_horizon_s);
        last_sample_ = sample;
        samples_seen_ = 1;
        return std::nullopt;
    }

    const double h = sample.t - last_sample_.t;
    if (!(h > 0.0)) {
        std::ostringstream msg;
        msg << "timestamps not strictly increasing at sample index " << samples_seen_ << " (t = " << sample.t
            << " after " << last_sample_.t << ")";
        throw DataError(msg.str());
    }

    const auto dyn = dynamics_matrices(h, config_.sigma_ww);
    kf::ColoredSystemStep<2, 1> step;
    step.A = dyn.A;
    step.Q = dyn.Q;
    step.C_now << 1.0, 0.0;
    step.C_prev = step.C_now;
    step.F(0, 0) = scintillation_transition(h, config_.corner_freq_Hz);
    last_R_ = measurement_variance(sigma_p618_sq_, estimate_.mean(0), config_.alpha_min);
    step.R(0, 0) = last_R_;
    step.dt = h;

    kf::Vector<1> y_now;
    kf::Vector<1> y_prev;
    y_now(0) = sample.y;
    y_prev(0) = last_sample_.y;

    auto result = kf::ckf_step<2, 1>(estimate_, y_now, y_prev, step, mode_);
    // Keep the caller's timestamp rather than an accumulated sum of steps.
    result.posterior.timestamp = sample.t;

    const double trace = result.posterior.cov.trace();
    if (!(trace <= divergence_trace)) {
        std::ostringstream msg;
        msg << "filter diverged at sample index " << samples_seen_ << " (t = " << sample.t
            << "): trace(P) = " << trace << " exceeds " << divergence_trace;
        throw DivergenceError(msg.str());
    }

    estimate_ = result.posterior;
    last_sample_ = sample;
    ++samples_seen_;
    return make_record(estimate_, result.innovation);
}

std::vector<EstimateRecord> scifi_run(std::span<const TimeSeriesSample> samples, const SciFiConfig& config,
                                      GainMode mode) {
    if (samples.size() < 2) {
        throw DataError("scifi_run needs at least two samples");
    }
    SciFiFilter filter(config, mode);
    std::vector<EstimateRecord> out;
    out.reserve(samples.size() - 1);
    for (const auto& s : samples) {
        if (auto rec = filter.push(s)) {
            out.push_back(*rec);
        }
    }
    return out;
}

} // namespace scifi
