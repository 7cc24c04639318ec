#pragma once

// Low-pass reference estimator: causal Butterworth filtering of the
// attenuation followed by first-difference slope estimation.

#include <complex>
#include <span>
#include <vector>

#include "scifi/scifi_model.hpp"

namespace scifi::baseline {

/// y = b0 x + b1 x[-1] + b2 x[-2] - a1 y[-1] - a2 y[-2]
/// A first-order section has b2 = a2 = 0.
struct Biquad {
    double b0 = 1.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
};

struct IIRFilterSpec {
    int order = 5;
    double cutoff_Hz = 2.5e-2;
    double sample_rate_Hz = 10.0;
    std::vector<Biquad> sections;
};

/// Digital Butterworth low-pass by bilinear transform with prewarping at the
/// cutoff, factored into second-order sections (plus one first-order section
/// for odd orders). Each section has unit DC gain.
IIRFilterSpec butterworth_design(int order = 5, double cutoff_Hz = 2.5e-2, double sample_rate_Hz = 10.0);

std::complex<double> frequency_response(const IIRFilterSpec& spec, double f_Hz);
std::vector<std::complex<double>> poles(const IIRFilterSpec& spec);

/// Causal cascade filtering. The state starts at the steady-state response
/// to a constant input equal to y[0].
std::vector<double> lp_filter(std::span<const double> y, const IIRFilterSpec& spec);

/// Same, after checking the timestamps are uniform at spec.sample_rate_Hz.
std::vector<double> lp_filter(std::span<const TimeSeriesSample> samples, const IIRFilterSpec& spec);

/// (a[k] - a[k-1]) * f_s for k >= 1.
std::vector<double> euler_slope(std::span<const double> a_lp, double sample_rate_Hz);

} // namespace scifi::baseline
