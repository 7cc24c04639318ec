#include "scifi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "scifi/errors.hpp"

namespace scifi::stats {

EmpiricalDistribution empirical_pdf(std::span<const double> values, double bin_width, double lo, double hi) {
    if (values.empty()) {
        throw DataError("empirical_pdf: empty input");
    }
    if (!(bin_width > 0.0) || !(hi > lo)) {
        throw ConfigError("empirical_pdf: bin width must be > 0 and hi > lo");
    }
    const auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / bin_width - 1e-9));
    EmpiricalDistribution out;
    out.kind = DistributionKind::pdf;
    out.n_samples = values.size();
    out.support.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        out.support[i] = lo + bin_width * static_cast<double>(i);
    }

    std::vector<std::size_t> counts(bins, 0);
    for (const double v : values) {
        const double pos = std::floor((v - lo) / bin_width);
        std::size_t idx;
        if (!(pos >= 0.0)) {
            idx = 0;
            ++out.n_out_of_range;
        } else if (pos >= static_cast<double>(bins)) {
            idx = bins - 1;
            ++out.n_out_of_range;
        } else {
            idx = static_cast<std::size_t>(pos);
        }
        ++counts[idx];
    }
    out.values.resize(bins);
    const double norm = 1.0 / (static_cast<double>(values.size()) * bin_width);
    for (std::size_t i = 0; i < bins; ++i) {
        out.values[i] = static_cast<double>(counts[i]) * norm;
    }
    return out;
}

namespace {

void check_thresholds(const std::vector<double>& t) {
    for (std::size_t j = 1; j < t.size(); ++j) {
        if (!(t[j] > t[j - 1])) {
            throw ConfigError("thresholds must be strictly increasing");
        }
    }
}

} // namespace

ExceedanceCounter::ExceedanceCounter(std::vector<double> thresholds)
    : thresholds_(std::move(thresholds)), below_(thresholds_.size() + 1, 0) {
    check_thresholds(thresholds_);
}

void ExceedanceCounter::add(double value) {
    // Index of the first threshold >= value: the value exceeds every threshold before it.
    const auto it = std::lower_bound(thresholds_.begin(), thresholds_.end(), value);
    ++below_[static_cast<std::size_t>(it - thresholds_.begin())];
    ++total_;
}

void ExceedanceCounter::merge(const ExceedanceCounter& other) {
    if (other.thresholds_ != thresholds_) {
        throw ConfigError("cannot merge counters over different thresholds");
    }
    for (std::size_t j = 0; j < below_.size(); ++j) {
        below_[j] += other.below_[j];
    }
    total_ += other.total_;
}

std::vector<std::size_t> ExceedanceCounter::counts() const {
    // Values in bucket b exceed thresholds 0..b-1.
    std::vector<std::size_t> out(thresholds_.size(), 0);
    std::size_t running = total_;
    for (std::size_t j = 0; j < thresholds_.size(); ++j) {
        running -= below_[j];
        out[j] = running;
    }
    return out;
}

EmpiricalDistribution ExceedanceCounter::distribution() const {
    if (total_ == 0) {
        throw DataError("ccdf: empty input");
    }
    EmpiricalDistribution out;
    out.kind = DistributionKind::ccdf;
    out.support = thresholds_;
    out.n_samples = total_;
    const auto c = counts();
    out.values.resize(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) {
        out.values[j] = static_cast<double>(c[j]) / static_cast<double>(total_);
    }
    return out;
}

EmpiricalDistribution ccdf(std::span<const double> values, std::span<const double> thresholds) {
    ExceedanceCounter counter({thresholds.begin(), thresholds.end()});
    for (const double v : values) {
        counter.add(v);
    }
    return counter.distribution();
}

ConditionalSlopeCounter::ConditionalSlopeCounter(double tau, std::vector<double> thresholds)
    : tau_(tau), joint_(std::move(thresholds)) {}

void ConditionalSlopeCounter::add(double a, double slope) {
    ++total_;
    if (a > tau_) {
        joint_.add(std::abs(slope));
    }
}

void ConditionalSlopeCounter::merge(const ConditionalSlopeCounter& other) {
    if (other.tau_ != tau_) {
        throw ConfigError("cannot merge conditional counters with different tau");
    }
    joint_.merge(other.joint_);
    total_ += other.total_;
}

EmpiricalDistribution ConditionalSlopeCounter::distribution() const {
    if (joint_.total() == 0) {
        std::ostringstream msg;
        msg << "conditional slope CCDF: no sample has attenuation above tau = " << tau_;
        throw DataError(msg.str());
    }
    auto out = joint_.distribution();
    out.n_samples = joint_.total();
    return out;
}

EmpiricalDistribution conditional_slope_ccdf(std::span<const double> a, std::span<const double> slope, double tau,
                                             std::span<const double> thresholds) {
    if (a.size() != slope.size()) {
        throw DataError("conditional_slope_ccdf: attenuation and slope series differ in length");
    }
    if (a.empty()) {
        throw DataError("conditional_slope_ccdf: empty input");
    }
    ConditionalSlopeCounter counter(tau, {thresholds.begin(), thresholds.end()});
    for (std::size_t k = 0; k < a.size(); ++k) {
        counter.add(a[k], slope[k]);
    }
    return counter.distribution();
}

} // namespace scifi::stats
