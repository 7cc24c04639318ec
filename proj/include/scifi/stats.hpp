#pragma once

// Empirical distributions of attenuation and fade-slope estimates: binned
// PDFs, exceedance curves (CCDF) and the slope CCDF conditioned on the
// attenuation exceeding a threshold.

#include <cstddef>
#include <span>
#include <vector>

namespace scifi::stats {

enum class DistributionKind { pdf, ccdf };

struct EmpiricalDistribution {
    DistributionKind kind = DistributionKind::ccdf;
    /// Bin edges (size values + 1) for a PDF, thresholds for a CCDF.
    std::vector<double> support;
    /// Densities for a PDF, exceedance probabilities for a CCDF.
    std::vector<double> values;
    std::size_t n_samples = 0;
    /// PDF only: samples outside the range, folded into the edge bins.
    std::size_t n_out_of_range = 0;
};

/// Histogram over [lo, hi) with bins of bin_width, normalized to unit area.
EmpiricalDistribution empirical_pdf(std::span<const double> values, double bin_width, double lo, double hi);

/// Single-pass exceedance counter over a fixed threshold grid. P[X > t] uses
/// a strict inequality, so ties at a threshold do not count.
class ExceedanceCounter {
public:
    explicit ExceedanceCounter(std::vector<double> thresholds);

    void add(double value);
    void merge(const ExceedanceCounter& other);

    std::size_t total() const { return total_; }
    /// Number of added values strictly above each threshold.
    std::vector<std::size_t> counts() const;
    const std::vector<double>& thresholds() const { return thresholds_; }
    EmpiricalDistribution distribution() const;

private:
    std::vector<double> thresholds_;
    // below_[j] = number of values v with thresholds_[j - 1] < v <= thresholds_[j].
    std::vector<std::size_t> below_;
    std::size_t total_ = 0;
};

EmpiricalDistribution ccdf(std::span<const double> values, std::span<const double> thresholds);

/// P[|slope| > t | a > tau] for every threshold t, counted in one pass.
class ConditionalSlopeCounter {
public:
    ConditionalSlopeCounter(double tau, std::vector<double> thresholds);

    void add(double a, double slope);
    void merge(const ConditionalSlopeCounter& other);

    double tau() const { return tau_; }
    std::size_t conditioning_count() const { return joint_.total(); }
    std::size_t total() const { return total_; }
    /// Joint counts #{|slope| > t and a > tau}.
    std::vector<std::size_t> joint_counts() const { return joint_.counts(); }
    EmpiricalDistribution distribution() const;

private:
    double tau_;
    ExceedanceCounter joint_;
    std::size_t total_ = 0;
};

EmpiricalDistribution conditional_slope_ccdf(std::span<const double> a, std::span<const double> slope, double tau,
                                             std::span<const double> thresholds);

} // namespace scifi::stats
