#include "scifi/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iostream>
#include <limits>
#include <sstream>

namespace scifi::tuning {

std::vector<double> sliding_mean(std::span<const double> y, std::size_t window) {
    if (y.empty()) {
        throw DataError("sliding_mean: empty input");
    }
    if (window == 0) {
        throw ConfigError("sliding_mean: window must be >= 1");
    }
    std::vector<double> out(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        const std::size_t first = k + 1 >= window ? k + 1 - window : 0;
        double sum = 0.0;
        for (std::size_t j = first; j <= k; ++j) {
            sum += y[j];
        }
        out[k] = sum / static_cast<double>(k + 1 - first);
    }
    return out;
}

void EventWindow::validate() const {
    if (samples.size() < 40) {
        throw DataError("event window needs at least 40 samples");
    }
    if (!(end_index > start_index)) {
        throw DataError("event window: end_index must exceed start_index");
    }
    if (end_index >= samples.size()) {
        throw DataError("event window: end_index past the last sample");
    }
}

namespace {

std::vector<double> measurements(const EventWindow& event) {
    std::vector<double> y(event.samples.size());
    std::transform(event.samples.begin(), event.samples.end(), y.begin(),
                   [](const TimeSeriesSample& s) { return s.y; });
    return y;
}

double objective_against(const EventWindow& event, const std::vector<double>& ybar, SciFiConfig config,
                         double sigma_ww, GainMode mode) {
    config.sigma_ww = sigma_ww;
    try {
        SciFiFilter filter(config, mode);
        double sum = 0.0;
        for (std::size_t k = 0; k <= event.end_index; ++k) {
            const auto rec = filter.push(event.samples[k]);
            if (rec && k >= event.start_index) {
                const double d = rec->a_hat - ybar[k];
                sum += d * d;
            }
        }
        return std::isfinite(sum) ? sum : std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
    }
}

} // namespace

double tuning_objective(const EventWindow& event, const SciFiConfig& config, double sigma_ww, GainMode mode,
                        std::size_t window) {
    event.validate();
    const auto y = measurements(event);
    return objective_against(event, sliding_mean(y, window), config, sigma_ww, mode);
}

TuneResult tune_process_noise(const EventWindow& event, const SciFiConfig& config, const SearchOptions& search) {
    event.validate();
    config.validate();
    if (!(search.lower > 0.0) || !(search.upper > search.lower) || search.upper / search.lower < 1e4) {
        throw ConfigError("tune_process_noise: search bounds must be positive and span at least 4 decades");
    }
    if (search.grid_points < 25) {
        throw ConfigError("tune_process_noise: at least 25 grid points required");
    }
    if (!(search.rel_tolerance > 0.0)) {
        throw ConfigError("tune_process_noise: relative tolerance must be > 0");
    }

    const auto y = measurements(event);
    const auto ybar = sliding_mean(y, search.window);
    auto objective = [&](double sigma) { return objective_against(event, ybar, config, sigma, search.mode); };

    const double log_lo = std::log(search.lower);
    const double log_hi = std::log(search.upper);
    const std::size_t n = search.grid_points;

    TuneResult result;
    result.curve.resize(n);
    std::vector<std::future<double>> pending;
    pending.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sigma = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(n - 1));
        result.curve[i].sigma_ww = sigma;
        pending.push_back(std::async(std::launch::async, objective, sigma));
    }
    for (std::size_t i = 0; i < n; ++i) {
        result.curve[i].objective = pending[i].get();
    }

    std::size_t argmin = n;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = result.curve[i].objective;
        if (std::isfinite(f) && (argmin == n || f < result.curve[argmin].objective)) {
            argmin = i;
        }
    }
    if (argmin == n) {
        throw NumericalError("tuning failed: objective is non-finite for every candidate sigma_ww");
    }

    // Smoothest filter among near-ties.
    const double best = result.curve[argmin].objective;
    std::size_t chosen = argmin;
    for (std::size_t i = 0; i < argmin; ++i) {
        if (result.curve[i].objective <= best * 1.01) {
            chosen = i;
            break;
        }
    }

    result.sigma_ww = result.curve[chosen].sigma_ww;
    result.objective = result.curve[chosen].objective;
    result.at_boundary = chosen == 0 || chosen == n - 1;

    if (chosen == argmin) {
        // Golden-section search in log(sigma) between the grid neighbours.
        double a = std::log(result.curve[chosen == 0 ? 0 : chosen - 1].sigma_ww);
        double b = std::log(result.curve[std::min(chosen + 1, n - 1)].sigma_ww);
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        const double stop = std::log1p(search.rel_tolerance);
        double c = b - inv_phi * (b - a);
        double d = a + inv_phi * (b - a);
        double fc = objective(std::exp(c));
        double fd = objective(std::exp(d));
        while (b - a > stop) {
            if (fc <= fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = objective(std::exp(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = objective(std::exp(d));
            }
        }
        const double x = fc <= fd ? c : d;
        const double fx = std::min(fc, fd);
        if (fx < result.objective) {
            result.sigma_ww = std::exp(x);
            result.objective = fx;
            result.refined = true;
        }
    }

    if (result.at_boundary) {
        std::cerr << "warning: tuned sigma_ww = " << result.sigma_ww
                  << " lies on the boundary of the search range [" << search.lower << ", " << search.upper
                  << "]\n";
    }
    return result;
}

} // namespace scifi::tuning
