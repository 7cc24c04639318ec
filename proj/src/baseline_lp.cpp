#include "scifi/baseline_lp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace scifi::baseline {

using cplx = std::complex<double>;

IIRFilterSpec butterworth_design(int order, double cutoff_Hz, double sample_rate_Hz) {
    if (order < 1) {
        throw ConfigError("butterworth_design: order must be >= 1");
    }
    if (!(sample_rate_Hz > 0.0) || !(cutoff_Hz > 0.0) || !(cutoff_Hz < sample_rate_Hz / 2.0)) {
        std::ostringstream msg;
        msg << "butterworth_design: cutoff " << cutoff_Hz << " Hz must lie in (0, " << sample_rate_Hz / 2.0
            << ") Hz";
        throw ConfigError(msg.str());
    }

    IIRFilterSpec spec;
    spec.order = order;
    spec.cutoff_Hz = cutoff_Hz;
    spec.sample_rate_Hz = sample_rate_Hz;

    const double two_fs = 2.0 * sample_rate_Hz;
    const double warped = two_fs * std::tan(std::numbers::pi * cutoff_Hz / sample_rate_Hz);
    const auto to_z = [&](cplx s) { return (two_fs + s) / (two_fs - s); };

    // Upper-half-plane poles pair with their conjugates; zeros all map to z = -1.
    for (int k = 0; k < order / 2; ++k) {
        const double angle = std::numbers::pi * (2.0 * k + order + 1.0) / (2.0 * order);
        const cplx pz = to_z(warped * std::polar(1.0, angle));
        Biquad q;
        q.a1 = -2.0 * pz.real();
        q.a2 = std::norm(pz);
        const double g = (1.0 + q.a1 + q.a2) / 4.0;
        q.b0 = g;
        q.b1 = 2.0 * g;
        q.b2 = g;
        spec.sections.push_back(q);
    }
    if (order % 2 == 1) {
        const double pz = to_z(cplx(-warped, 0.0)).real();
        Biquad q;
        q.a1 = -pz;
        const double g = (1.0 - pz) / 2.0;
        q.b0 = g;
        q.b1 = g;
        spec.sections.push_back(q);
    }
    return spec;
}

cplx frequency_response(const IIRFilterSpec& spec, double f_Hz) {
    const cplx zi = std::polar(1.0, -2.0 * std::numbers::pi * f_Hz / spec.sample_rate_Hz);
    const cplx zi2 = zi * zi;
    cplx h(1.0, 0.0);
    for (const auto& q : spec.sections) {
        h *= (q.b0 + q.b1 * zi + q.b2 * zi2) / (1.0 + q.a1 * zi + q.a2 * zi2);
    }
    return h;
}

std::vector<cplx> poles(const IIRFilterSpec& spec) {
    std::vector<cplx> out;
    for (const auto& q : spec.sections) {
        if (q.a2 == 0.0) {
            out.emplace_back(-q.a1, 0.0);
            continue;
        }
        // Roots of z^2 + a1 z + a2.
        const cplx disc = std::sqrt(cplx(q.a1 * q.a1 - 4.0 * q.a2, 0.0));
        out.push_back((-q.a1 + disc) / 2.0);
        out.push_back((-q.a1 - disc) / 2.0);
    }
    return out;
}

std::vector<double> lp_filter(std::span<const double> y, const IIRFilterSpec& spec) {
    std::vector<double> out(y.begin(), y.end());
    if (out.empty()) {
        return out;
    }
    // Transposed direct form II, section by section.
    for (const auto& q : spec.sections) {
        const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
        const double x0 = out.front();
        const double y0 = dc * x0;
        double s2 = q.b2 * x0 - q.a2 * y0;
        double s1 = q.b1 * x0 - q.a1 * y0 + s2;
        for (double& v : out) {
            const double x = v;
            const double yk = q.b0 * x + s1;
            s1 = q.b1 * x - q.a1 * yk + s2;
            s2 = q.b2 * x - q.a2 * yk;
            v = yk;
        }
    }
    return out;
}

std::vector<double> lp_filter(std::span<const TimeSeriesSample> samples, const IIRFilterSpec& spec) {
    const double period = 1.0 / spec.sample_rate_Hz;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const double h = samples[k].t - samples[k - 1].t;
        if (std::abs(h - period) > 1e-3 * period) {
            std::ostringstream msg;
            msg << "low-pass baseline needs uniform sampling at " << spec.sample_rate_Hz << " Hz; step " << h
                << " s at sample index " << k << " (resample the series first)";
            throw DataError(msg.str());
        }
    }
    std::vector<double> y(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        y[k] = samples[k].y;
    }
    return lp_filter(y, spec);
}

std::vector<double> euler_slope(std::span<const double> a_lp, double sample_rate_Hz) {
    if (a_lp.size() < 2) {
        throw DataError("euler_slope: at least two samples required");
    }
    std::vector<double> out(a_lp.size() - 1);
    for (std::size_t k = 1; k < a_lp.size(); ++k) {
        out[k - 1] = (a_lp[k] - a_lp[k - 1]) * sample_rate_Hz;
    }
    return out;
}

} // namespace scifi::baseline
