#pragma once

// Independent reference computations used only by the tests.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

namespace scifi::oracle {

/// Composite Simpson quadrature of the process-noise integral
///   int_0^h exp(M t) diag(0, s^2) exp(M t)^T dt,  M = [[0, 1], [0, 0]],
/// with exp(M t) formed from its power series.
inline Eigen::Matrix2d process_noise_quadrature(double h, double sigma_ww, int intervals = 2000) {
    auto integrand = [&](double t) {
        Eigen::Matrix2d M;
        M << 0.0, 1.0, 0.0, 0.0;
        Eigen::Matrix2d expo = Eigen::Matrix2d::Identity();
        Eigen::Matrix2d term = Eigen::Matrix2d::Identity();
        for (int k = 1; k < 6; ++k) {
            term = term * M * t / static_cast<double>(k);
            expo += term;
        }
        Eigen::Matrix2d W = Eigen::Matrix2d::Zero();
        W(1, 1) = sigma_ww * sigma_ww;
        return Eigen::Matrix2d(expo * W * expo.transpose());
    };
    const double dt = h / intervals;
    Eigen::Matrix2d sum = integrand(0.0) + integrand(h);
    for (int i = 1; i < intervals; ++i) {
        sum += (i % 2 == 1 ? 4.0 : 2.0) * integrand(dt * i);
    }
    return sum * dt / 3.0;
}

/// Second implementation of the P.618 scintillation standard deviation,
/// written in long double from the published step list.
inline double p618_sigma(double elevation_deg, double efficiency, double diameter_m, double f_GHz, double n_wet,
                         double h_layer_m = 1000.0) {
    using ld = long double;
    const ld theta = static_cast<ld>(elevation_deg) * std::numbers::pi_v<ld> / 180.0L;
    const ld s = std::sin(theta);
    const ld sigma_ref = 0.0036L + 0.0001L * static_cast<ld>(n_wet);
    const ld L = 2.0L * static_cast<ld>(h_layer_m) / (std::sqrt(s * s + 0.000235L) + s);
    const ld d_eff_sq = static_cast<ld>(efficiency) * static_cast<ld>(diameter_m) * static_cast<ld>(diameter_m);
    const ld x = 1.22L * d_eff_sq * static_cast<ld>(f_GHz) / L;
    const ld angle = (11.0L / 6.0L) * std::atan2(1.0L, x);
    const ld g_sq = 3.86L * std::exp((11.0L / 12.0L) * std::log(x * x + 1.0L)) * std::sin(angle) -
                    7.08L * std::exp((5.0L / 6.0L) * std::log(x));
    const ld g = std::sqrt(g_sq);
    const ld f_term = std::exp((7.0L / 12.0L) * std::log(static_cast<ld>(f_GHz)));
    const ld elev_term = std::exp(-1.2L * std::log(s));
    return static_cast<double>(sigma_ref * f_term * g * elev_term);
}

/// Posterior of a linear-Gaussian model by direct conditioning:
/// u ~ N(mu_u, Sigma_u), x = Hx u, y = Hy u. Returns E[x | y], cov[x | y].
struct Conditional {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

inline Conditional condition(const Eigen::VectorXd& mu_u, const Eigen::MatrixXd& sigma_u, const Eigen::MatrixXd& Hx,
                             const Eigen::MatrixXd& Hy, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd Sxy = Hx * sigma_u * Hy.transpose();
    const Eigen::MatrixXd Syy = Hy * sigma_u * Hy.transpose();
    const Eigen::MatrixXd Sxx = Hx * sigma_u * Hx.transpose();
    const Eigen::MatrixXd gain = Syy.ldlt().solve(Sxy.transpose()).transpose();
    Conditional out;
    out.mean = Hx * mu_u + gain * (y - Hy * mu_u);
    out.cov = Sxx - gain * Sxy.transpose();
    return out;
}

/// Magnitude of a bilinear-transformed, cutoff-prewarped Butterworth low-pass.
inline double butterworth_magnitude(int order, double cutoff_Hz, double fs, double f_Hz) {
    const double ratio = std::tan(std::numbers::pi * f_Hz / fs) / std::tan(std::numbers::pi * cutoff_Hz / fs);
    return 1.0 / std::sqrt(1.0 + std::pow(ratio, 2 * order));
}

/// Impulse response of the cascade by direct-form recursion on each section,
/// then step response by explicit convolution with a step input.
template <typename Sections>
std::vector<double> step_response_by_convolution(const Sections& sections, std::size_t n) {
    std::vector<double> h(n, 0.0);
    h[0] = 1.0;
    for (const auto& q : sections) {
        std::vector<double> out(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            double acc = q.b0 * h[k];
            if (k >= 1) acc += q.b1 * h[k - 1] - q.a1 * out[k - 1];
            if (k >= 2) acc += q.b2 * h[k - 2] - q.a2 * out[k - 2];
            out[k] = acc;
        }
        h = out;
    }
    std::vector<double> step(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= k; ++j) {
            acc += h[j]; // input is 1 for every sample index >= 0
        }
        step[k] = acc;
    }
    return step;
}

/// Iterative radix-2 FFT, independent of the FFT library used by synth.
/// The input length must be a power of two.
inline std::vector<std::complex<double>> radix2_fft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> X(x.begin(), x.end());
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(X[i], X[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t j = 0; j < len / 2; ++j) {
                // Twiddles computed directly to avoid drift from repeated products.
                const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(j));
                const auto u = X[i + j];
                const auto v = X[i + j + len / 2] * w;
                X[i + j] = u + v;
                X[i + j + len / 2] = u - v;
            }
        }
    }
    return X;
}

} // namespace scifi::oracle
