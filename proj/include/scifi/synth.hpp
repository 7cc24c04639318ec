#pragma once

// Synthetic test signals: spectrally shaped scintillation, the AR(1) noise
// the filter itself assumes, parametric rain events and model-matched runs.

#include <cstdint>
#include <vector>

#include "scifi/scifi_model.hpp"

namespace scifi::synth {

struct SynthSpec {
    double duration_s = 3600.0;
    double sample_rate_Hz = 10.0;
    double corner_freq_Hz = 0.1;
    double spectral_slope_dB_per_dec = -80.0 / 3.0;
    double target_std_dB = 0.1;
    std::uint64_t seed = 1;
};

/// White Gaussian noise shaped by |H(f)| = (1 + (f/f_c)^2)^(slope/40) in the
/// frequency domain, then rescaled to the target standard deviation.
std::vector<double> gen_scintillation(const SynthSpec& spec);

/// n_k = exp(-h f_c) n_{k-1} + eps_k, eps ~ N(0, R), started from the
/// stationary law N(0, R / (1 - F^2)).
std::vector<double> gen_ar1_noise(std::size_t n, double h, double corner_freq_Hz, double R, std::uint64_t seed);

/// Raised-cosine rise, flat plateau, raised-cosine decay sampled uniformly.
std::vector<TimeSeriesSample> gen_rain_event(double peak_dB, double rise_s, double fall_s, double plateau_s,
                                             double sample_rate_Hz);

/// Truth and measurements simulated from the filter's own model: the state
/// follows the discretized double integrator with PSD sigma_ww^2 and the
/// measurement noise is AR(1) driven with variance sigma_P618^2 r(a_{k-1}).
struct ModelMatchedSeries {
    std::vector<TimeSeriesSample> samples;
    std::vector<double> true_a;
    std::vector<double> true_slope;
    std::vector<double> noise;
};

ModelMatchedSeries gen_model_matched(const SciFiConfig& config, std::size_t n, double h, std::uint64_t seed,
                                     double a0 = 0.0, double slope0 = 0.0);

/// Adds a model-matched Brownian-slope excursion and AR(1) noise on top of a
/// deterministic profile (e.g. a rain event).
ModelMatchedSeries gen_model_matched(const SciFiConfig& config, const std::vector<TimeSeriesSample>& profile,
                                     std::uint64_t seed);

} // namespace scifi::synth
