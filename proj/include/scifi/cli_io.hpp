#pragma once

// File formats, run configuration and the command-line pipeline.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "scifi/scifi_model.hpp"

namespace scifi::io {

// --- time series input -----------------------------------------------------

struct IngestResult {
    std::vector<TimeSeriesSample> samples;
    std::size_t dropped_rows = 0; ///< blank or NaN rows skipped
    bool had_header = false;
};

/// Two columns `t_seconds,attenuation_dB`, optional header row. Timestamps
/// must be strictly increasing; unparseable rows fail with their line number.
IngestResult parse_samples(std::istream& in);
IngestResult ingest_csv(const std::string& path);

void write_samples(std::ostream& out, const std::vector<TimeSeriesSample>& samples);

// --- estimate output -------------------------------------------------------

inline constexpr const char* kEstimateHeader =
    "t,a_hat,slope_hat,a_lo,a_hi,slope_lo,slope_hi,innovation,innovation_var";

/// One emitted line of an estimates file.
struct EstimateRow {
    double t = 0.0;
    double a_hat = 0.0;
    double slope_hat = 0.0;
    double a_lo = 0.0;
    double a_hi = 0.0;
    double slope_lo = 0.0;
    double slope_hi = 0.0;
    double innovation = 0.0;
    double innovation_var = 0.0;

    bool operator==(const EstimateRow&) const = default;
};

EstimateRow to_row(const EstimateRecord& record);

void write_estimates(std::ostream& out, const std::vector<EstimateRecord>& records);
void emit_estimates(const std::vector<EstimateRecord>& records, const std::string& path);
std::vector<EstimateRow> parse_estimates(std::istream& in);

/// Shortest decimal string that parses back to the identical double.
std::string format_double(double v);

/// Strict parse of a whole field; false on trailing garbage or empty input.
bool parse_double(const std::string& text, double& out);

/// Header-indexed numeric table (any CSV with one header row).
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const;
};

Table read_table(std::istream& in);
Table read_table(const std::string& path);

// --- configuration ---------------------------------------------------------

struct StatsGrid {
    double slope_bin_width = 0.002;
    double slope_range_lo = -0.5;
    double slope_range_hi = 0.5;
    double att_threshold_lo = 0.0;
    double att_threshold_hi = 30.0;
    double att_threshold_step = 0.1;
    double slope_threshold_lo = 0.0;
    double slope_threshold_hi = 1.0;
    double slope_threshold_step = 0.005;
    std::vector<double> taus{1.0, 3.0, 5.0};

    std::vector<double> att_thresholds() const;
    std::vector<double> slope_thresholds() const;
};

struct RunConfig {
    SciFiConfig scifi;
    GainMode gain_mode = GainMode::decorrelated;
    std::string input;
    std::string output = "-";
    int lp_order = 5;
    double lp_cutoff_Hz = 2.5e-2;
    double sample_rate_Hz = 10.0;
    StatsGrid stats;

    /// All invalid fields, each message prefixed with the field name.
    std::vector<std::string> problems() const;
    void validate() const;
};

/// Keys accepted in config files and as `--key value` flags.
const std::vector<std::string>& config_keys();

/// Applies key/value pairs; every bad key or value is reported at once.
void apply_settings(RunConfig& config, const std::map<std::string, std::string>& settings);

/// Flat `key = value` lines, `#` starts a comment.
std::map<std::string, std::string> parse_config_text(std::istream& in);
std::map<std::string, std::string> parse_config_file(const std::string& path);

// --- pipeline ---------------------------------------------------------------

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitDivergence = 3,
};

/// Full command-line entry point. Data go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace scifi::io
