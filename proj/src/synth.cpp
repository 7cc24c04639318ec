#include "scifi/synth.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <random>

namespace scifi::synth {

namespace {

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T[], FftwDeleter> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (p == nullptr) {
        throw std::bad_alloc();
    }
    return std::unique_ptr<T[], FftwDeleter>(p);
}

} // namespace

std::vector<double> gen_scintillation(const SynthSpec& spec) {
    if (!(spec.sample_rate_Hz > 0.0) || !(spec.corner_freq_Hz > 0.0) || !(spec.target_std_dB >= 0.0)) {
        throw ConfigError("gen_scintillation: sample rate and corner frequency must be > 0, target std >= 0");
    }
    const double count = std::floor(spec.duration_s * spec.sample_rate_Hz);
    if (!(count >= 1024.0)) {
        throw ConfigError("gen_scintillation: duration * sample rate must give at least 1024 samples");
    }
    const auto n = static_cast<std::size_t>(count);
    if (spec.target_std_dB == 0.0) {
        return std::vector<double>(n, 0.0);
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss;
    const std::size_t bins = n / 2 + 1;
    auto time = fftw_buffer<double>(n);
    auto freq = fftw_buffer<fftw_complex>(bins);
    for (std::size_t k = 0; k < n; ++k) {
        time[k] = gauss(rng);
    }

    // FFTW_ESTIMATE keeps the plan (and therefore the output) deterministic.
    fftw_plan forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), time.get(), freq.get(), FFTW_ESTIMATE);
    fftw_plan inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq.get(), time.get(), FFTW_ESTIMATE);
    fftw_execute(forward);

    const double exponent = spec.spectral_slope_dB_per_dec / 40.0;
    const double df = spec.sample_rate_Hz / static_cast<double>(n);
    freq[0][0] = 0.0;
    freq[0][1] = 0.0;
    for (std::size_t k = 1; k < bins; ++k) {
        const double ratio = static_cast<double>(k) * df / spec.corner_freq_Hz;
        const double gain = std::pow(1.0 + ratio * ratio, exponent);
        freq[k][0] *= gain;
        freq[k][1] *= gain;
    }
    fftw_execute(inverse);
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);

    std::vector<double> out(time.get(), time.get() + n);
    double mean = 0.0;
    for (const double v : out) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const double v : out) {
        var += (v - mean) * (v - mean);
    }
    const double scale = spec.target_std_dB / std::sqrt(var / static_cast<double>(n));
    for (double& v : out) {
        v = (v - mean) * scale;
    }
    return out;
}

std::vector<double> gen_ar1_noise(std::size_t n, double h, double corner_freq_Hz, double R, std::uint64_t seed) {
    if (n == 0) {
        throw ConfigError("gen_ar1_noise: n must be >= 1");
    }
    if (!(R >= 0.0)) {
        throw ConfigError("gen_ar1_noise: R must be >= 0");
    }
    const double F = scintillation_transition(h, corner_freq_Hz);
    std::vector<double> out(n, 0.0);
    if (R == 0.0) {
        return out;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    const double drive = std::sqrt(R);
    out[0] = std::sqrt(R / (1.0 - F * F)) * gauss(rng);
    for (std::size_t k = 1; k < n; ++k) {
        out[k] = F * out[k - 1] + drive * gauss(rng);
    }
    return out;
}

std::vector<TimeSeriesSample> gen_rain_event(double peak_dB, double rise_s, double fall_s, double plateau_s,
                                             double sample_rate_Hz) {
    if (!(rise_s > 0.0) || !(fall_s > 0.0) || !(plateau_s > 0.0) || !(sample_rate_Hz > 0.0)) {
        throw ConfigError("gen_rain_event: durations and sample rate must be > 0");
    }
    const auto n = static_cast<std::size_t>(std::floor((rise_s + plateau_s + fall_s) * sample_rate_Hz));
    std::vector<TimeSeriesSample> out(n);
    const double pi = std::numbers::pi;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / sample_rate_Hz;
        double a;
        if (t < rise_s) {
            a = peak_dB * 0.5 * (1.0 - std::cos(pi * t / rise_s));
        } else if (t <= rise_s + plateau_s) {
            a = peak_dB;
        } else {
            a = peak_dB * 0.5 * (1.0 + std::cos(pi * (t - rise_s - plateau_s) / fall_s));
        }
        out[k] = {t, a};
    }
    return out;
}

namespace {

ModelMatchedSeries simulate(const SciFiConfig& config, const std::vector<double>& t, const std::vector<double>& base,
                            std::uint64_t seed, double a0, double slope0) {
    config.validate();
    const double sigma = p618_scintillation_stddev(config);
    const double sigma_sq = sigma * sigma;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;

    const std::size_t n = t.size();
    ModelMatchedSeries out;
    out.samples.resize(n);
    out.true_a.resize(n);
    out.true_slope.resize(n);
    out.noise.resize(n);

    Eigen::Vector2d x(a0, slope0);
    double noise = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0) {
            const double h = n > 1 ? t[1] - t[0] : 1.0;
            const double F = scintillation_transition(h, config.corner_freq_Hz);
            const double R = measurement_variance(sigma_sq, x(0) + base[0], config.alpha_min);
            noise = std::sqrt(R / (1.0 - F * F)) * gauss(rng);
        } else {
            const double h = t[k] - t[k - 1];
            const auto dyn = dynamics_matrices(h, config.sigma_ww);
            const Eigen::Matrix2d L = dyn.Q.llt().matrixL();
            const Eigen::Vector2d w(gauss(rng), gauss(rng));
            const double R = measurement_variance(sigma_sq, out.true_a[k - 1], config.alpha_min);
            x = dyn.A * x + L * w;
            noise = scintillation_transition(h, config.corner_freq_Hz) * noise + std::sqrt(R) * gauss(rng);
        }
        const double slope_base = k == 0 ? 0.0 : (base[k] - base[k - 1]) / (t[k] - t[k - 1]);
        out.true_a[k] = x(0) + base[k];
        out.true_slope[k] = x(1) + slope_base;
        out.noise[k] = noise;
        out.samples[k] = {t[k], out.true_a[k] + noise};
    }
    return out;
}

} // namespace

ModelMatchedSeries gen_model_matched(const SciFiConfig& config, std::size_t n, double h, std::uint64_t seed,
                                     double a0, double slope0) {
    if (n == 0 || !(h > 0.0)) {
        throw ConfigError("gen_model_matched: need n >= 1 and h > 0");
    }
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) {
        t[k] = static_cast<double>(k) * h;
    }
    return simulate(config, t, std::vector<double>(n, 0.0), seed, a0, slope0);
}

ModelMatchedSeries gen_model_matched(const SciFiConfig& config, const std::vector<TimeSeriesSample>& profile,
                                     std::uint64_t seed) {
    if (profile.empty()) {
        throw ConfigError("gen_model_matched: empty profile");
    }
    std::vector<double> t(profile.size());
    std::vector<double> base(profile.size());
    for (std::size_t k = 0; k < profile.size(); ++k) {
        t[k] = profile[k].t;
        base[k] = profile[k].y;
    }
    return simulate(config, t, base, seed, 0.0, 0.0);
}

} // namespace scifi::synth
