#include "scifi/cli_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "scifi/baseline_lp.hpp"
#include "scifi/stats.hpp"
#include "scifi/synth.hpp"
#include "scifi/tuning.hpp"

namespace scifi::io {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) {
        out.push_back(trim(field));
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

bool is_missing(const std::string& field) {
    if (field.empty()) {
        return true;
    }
    double v = 0.0;
    return parse_double(field, v) && std::isnan(v);
}

std::string line_error(std::size_t line, const std::string& what) {
    return "line " + std::to_string(line) + ": " + what;
}

} // namespace

bool parse_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) {
        return false;
    }
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// --- samples ----------------------------------------------------------------

IngestResult parse_samples(std::istream& in) {
    IngestResult out;
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    double last_t = -std::numeric_limits<double>::infinity();
    std::size_t last_line = 0;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = trim(line);
        if (content.empty()) {
            ++out.dropped_rows;
            continue;
        }
        const auto fields = split(content, ',');
        if (!seen_content) {
            seen_content = true;
            double probe = 0.0;
            if (!fields.empty() && !fields[0].empty() && !parse_double(fields[0], probe)) {
                out.had_header = true;
                continue;
            }
        }
        if (fields.size() != 2) {
            throw DataError(line_error(line_no, "expected 2 columns (t_seconds,attenuation_dB), found " +
                                                    std::to_string(fields.size())));
        }
        if (is_missing(fields[0]) || is_missing(fields[1])) {
            ++out.dropped_rows;
            continue;
        }
        TimeSeriesSample s;
        if (!parse_double(fields[0], s.t) || !parse_double(fields[1], s.y) || !std::isfinite(s.t) ||
            !std::isfinite(s.y)) {
            throw DataError(line_error(line_no, "cannot parse '" + content + "'"));
        }
        if (!(s.t > last_t)) {
            throw DataError(line_error(line_no, "timestamp " + format_double(s.t) +
                                                    " is not greater than the one on line " +
                                                    std::to_string(last_line)));
        }
        last_t = s.t;
        last_line = line_no;
        out.samples.push_back(s);
    }
    return out;
}

IngestResult ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open input file '" + path + "'");
    }
    return parse_samples(in);
}

void write_samples(std::ostream& out, const std::vector<TimeSeriesSample>& samples) {
    out << "t_seconds,attenuation_dB\n";
    for (const auto& s : samples) {
        out << format_double(s.t) << ',' << format_double(s.y) << '\n';
    }
}

// --- estimates ----------------------------------------------------------------

EstimateRow to_row(const EstimateRecord& r) {
    return {r.t,
            r.a_hat,
            r.slope_hat,
            r.a_bounds.lower,
            r.a_bounds.upper,
            r.slope_bounds.lower,
            r.slope_bounds.upper,
            r.innovation,
            r.innovation_var};
}

void write_estimates(std::ostream& out, const std::vector<EstimateRecord>& records) {
    out << kEstimateHeader << '\n';
    for (const auto& rec : records) {
        const auto r = to_row(rec);
        out << format_double(r.t) << ',' << format_double(r.a_hat) << ',' << format_double(r.slope_hat) << ','
            << format_double(r.a_lo) << ',' << format_double(r.a_hi) << ',' << format_double(r.slope_lo) << ','
            << format_double(r.slope_hi) << ',' << format_double(r.innovation) << ','
            << format_double(r.innovation_var) << '\n';
    }
}

void emit_estimates(const std::vector<EstimateRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot open output file '" + path + "'");
    }
    write_estimates(out, records);
    out.flush();
    if (!out) {
        throw DataError("failed writing '" + path + "'");
    }
}

std::vector<EstimateRow> parse_estimates(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || trim(line) != kEstimateHeader) {
        throw DataError(line_error(1, "missing estimates header"));
    }
    std::vector<EstimateRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split(trim(line), ',');
        if (f.size() != 9) {
            throw DataError(line_error(line_no, "expected 9 columns"));
        }
        EstimateRow r;
        double* dst[] = {&r.t,        &r.a_hat,    &r.slope_hat,  &r.a_lo,          &r.a_hi,
                         &r.slope_lo, &r.slope_hi, &r.innovation, &r.innovation_var};
        for (std::size_t i = 0; i < 9; ++i) {
            if (!parse_double(f[i], *dst[i])) {
                throw DataError(line_error(line_no, "cannot parse column " + std::to_string(i + 1)));
            }
        }
        rows.push_back(r);
    }
    return rows;
}

// --- generic tables -----------------------------------------------------------

std::vector<double> Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw DataError("column '" + name + "' not found");
    }
    const auto idx = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        out.push_back(row[idx]);
    }
    return out;
}

Table read_table(std::istream& in) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        const auto fields = split(content, ',');
        if (table.columns.empty()) {
            table.columns = fields;
            continue;
        }
        if (fields.size() != table.columns.size()) {
            throw DataError(line_error(line_no, "column count differs from header"));
        }
        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (fields[i].empty()) {
                row[i] = std::numeric_limits<double>::quiet_NaN();
            } else if (!parse_double(fields[i], row[i])) {
                throw DataError(line_error(line_no, "cannot parse '" + fields[i] + "'"));
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.columns.empty()) {
        throw DataError("table has no header");
    }
    return table;
}

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open input file '" + path + "'");
    }
    return read_table(in);
}

// --- configuration ------------------------------------------------------------

namespace {

std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) {
        out.push_back(lo + step * static_cast<double>(i));
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

double number(const std::string& value) {
    double v = 0.0;
    if (!parse_double(value, v)) {
        throw ConfigError("'" + value + "' is not a number");
    }
    return v;
}

Setter real(double SciFiConfig::*field) {
    return [field](RunConfig& c, const std::string& v) { c.scifi.*field = number(v); };
}

Setter stat(double StatsGrid::*field) {
    return [field](RunConfig& c, const std::string& v) { c.stats.*field = number(v); };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"elevation_deg", real(&SciFiConfig::elevation_deg)},
        {"antenna_efficiency", real(&SciFiConfig::antenna_efficiency)},
        {"antenna_diameter_m", real(&SciFiConfig::antenna_diameter_m)},
        {"frequency_GHz", real(&SciFiConfig::frequency_GHz)},
        {"n_wet", real(&SciFiConfig::n_wet)},
        {"sigma_ww", real(&SciFiConfig::sigma_ww)},
        {"corner_freq_Hz", real(&SciFiConfig::corner_freq_Hz)},
        {"alpha_min", real(&SciFiConfig::alpha_min)},
        {"turbulence_height_m", real(&SciFiConfig::turbulence_height_m)},
        {"initial_horizon_s", real(&SciFiConfig::initial_horizon_s)},
        {"gain_mode",
         [](RunConfig& c, const std::string& v) {
             if (v == "decorrelated") {
                 c.gain_mode = GainMode::decorrelated;
             } else if (v == "paper_faithful") {
                 c.gain_mode = GainMode::paper_faithful;
             } else {
                 throw ConfigError("'" + v + "' is not one of decorrelated, paper_faithful");
             }
         }},
        {"input", [](RunConfig& c, const std::string& v) { c.input = v; }},
        {"output", [](RunConfig& c, const std::string& v) { c.output = v; }},
        {"lp_order",
         [](RunConfig& c, const std::string& v) {
             const double d = number(v);
             if (d != std::floor(d)) {
                 throw ConfigError("'" + v + "' is not an integer");
             }
             c.lp_order = static_cast<int>(d);
         }},
        {"lp_cutoff_Hz", [](RunConfig& c, const std::string& v) { c.lp_cutoff_Hz = number(v); }},
        {"sample_rate_Hz", [](RunConfig& c, const std::string& v) { c.sample_rate_Hz = number(v); }},
        {"slope_bin_width", stat(&StatsGrid::slope_bin_width)},
        {"slope_range_lo", stat(&StatsGrid::slope_range_lo)},
        {"slope_range_hi", stat(&StatsGrid::slope_range_hi)},
        {"att_threshold_lo", stat(&StatsGrid::att_threshold_lo)},
        {"att_threshold_hi", stat(&StatsGrid::att_threshold_hi)},
        {"att_threshold_step", stat(&StatsGrid::att_threshold_step)},
        {"slope_threshold_lo", stat(&StatsGrid::slope_threshold_lo)},
        {"slope_threshold_hi", stat(&StatsGrid::slope_threshold_hi)},
        {"slope_threshold_step", stat(&StatsGrid::slope_threshold_step)},
        {"taus",
         [](RunConfig& c, const std::string& v) {
             std::vector<double> taus;
             for (const auto& f : split(v, ',')) {
                 if (!f.empty()) {
                     taus.push_back(number(f));
                 }
             }
             c.stats.taus = taus;
         }},
    };
    return table;
}

} // namespace

std::vector<double> StatsGrid::att_thresholds() const {
    return grid(att_threshold_lo, att_threshold_hi, att_threshold_step);
}

std::vector<double> StatsGrid::slope_thresholds() const {
    return grid(slope_threshold_lo, slope_threshold_hi, slope_threshold_step);
}

std::vector<std::string> RunConfig::problems() const {
    auto out = scifi.problems();
    if (lp_order < 1) {
        out.emplace_back("lp_order must be >= 1");
    }
    if (!(sample_rate_Hz > 0.0)) {
        out.emplace_back("sample_rate_Hz must be > 0");
    }
    if (!(lp_cutoff_Hz > 0.0 && lp_cutoff_Hz < sample_rate_Hz / 2.0)) {
        out.emplace_back("lp_cutoff_Hz must lie in (0, sample_rate_Hz / 2)");
    }
    if (!(stats.slope_bin_width > 0.0)) {
        out.emplace_back("slope_bin_width must be > 0");
    }
    if (!(stats.slope_range_hi > stats.slope_range_lo)) {
        out.emplace_back("slope_range_hi must exceed slope_range_lo");
    }
    if (!(stats.att_threshold_step > 0.0) || !(stats.att_threshold_hi >= stats.att_threshold_lo)) {
        out.emplace_back("att_threshold_*: need step > 0 and hi >= lo");
    }
    if (!(stats.slope_threshold_step > 0.0) || !(stats.slope_threshold_hi >= stats.slope_threshold_lo)) {
        out.emplace_back("slope_threshold_*: need step > 0 and hi >= lo");
    }
    return out;
}

void RunConfig::validate() const {
    const auto issues = problems();
    if (!issues.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& i : issues) {
            msg += "\n  " + i;
        }
        throw ConfigError(msg);
    }
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) {
            k.push_back(name);
        }
        return k;
    }();
    return keys;
}

void apply_settings(RunConfig& config, const std::map<std::string, std::string>& settings) {
    std::vector<std::string> errors;
    for (const auto& [key, value] : settings) {
        const auto& table = setters();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
        if (it == table.end()) {
            errors.push_back(key + ": unknown setting");
            continue;
        }
        try {
            it->second(config, value);
        } catch (const ConfigError& e) {
            errors.push_back(key + ": " + e.what());
        }
    }
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors) {
            msg += "\n  " + e;
        }
        throw ConfigError(msg);
    }
}

std::map<std::string, std::string> parse_config_text(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string content = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (content.empty()) {
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config " + line_error(line_no, "expected key = value"));
        }
        out[trim(content.substr(0, eq))] = trim(content.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    return parse_config_text(in);
}

// --- pipeline -------------------------------------------------------------------

namespace {

struct Output {
    std::unique_ptr<std::ofstream> file;
    std::ostream* stream;
    std::string name;

    Output(const std::string& path, std::ostream& fallback) : stream(&fallback), name(path) {
        if (!path.empty() && path != "-") {
            file = std::make_unique<std::ofstream>(path);
            if (!*file) {
                throw DataError("cannot open output file '" + path + "'");
            }
            stream = file.get();
        }
    }

    void finish() {
        stream->flush();
        if (!*stream) {
            throw DataError("failed writing output '" + name + "'");
        }
    }
};

IngestResult load_input(const RunConfig& cfg, std::ostream& err) {
    if (cfg.input.empty()) {
        throw ConfigError("input: no input file given (--input)");
    }
    auto in = ingest_csv(cfg.input);
    if (in.dropped_rows > 0) {
        err << "dropped " << in.dropped_rows << " blank or NaN rows from " << cfg.input << '\n';
    }
    return in;
}

double stddev(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size()));
}

double abs_quantile(std::vector<double> v, double q) {
    for (double& x : v) {
        x = std::abs(x);
    }
    const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

void write_row(std::ostream& out, const std::string& table, const std::string& method, const std::string& param,
               double x, double value) {
    out << table << ',' << method << ',' << param << ',' << format_double(x) << ',' << format_double(value) << '\n';
}

/// PDF, CCDF and conditional CCDF rows for one estimator.
void write_distributions(std::ostream& out, const std::string& method, const std::vector<double>& a,
                         const std::vector<double>& slope, const StatsGrid& g, std::ostream& err) {
    const auto pdf = stats::empirical_pdf(slope, g.slope_bin_width, g.slope_range_lo, g.slope_range_hi);
    for (std::size_t i = 0; i < pdf.values.size(); ++i) {
        write_row(out, "slope_pdf", method, "", 0.5 * (pdf.support[i] + pdf.support[i + 1]), pdf.values[i]);
    }
    const auto att = g.att_thresholds();
    const auto cc = stats::ccdf(a, att);
    for (std::size_t j = 0; j < cc.values.size(); ++j) {
        write_row(out, "att_ccdf", method, "", cc.support[j], cc.values[j]);
    }
    const auto thresholds = g.slope_thresholds();
    for (const double tau : g.taus) {
        try {
            const auto cond = stats::conditional_slope_ccdf(a, slope, tau, thresholds);
            for (std::size_t j = 0; j < cond.values.size(); ++j) {
                write_row(out, "cond_slope_ccdf", method, format_double(tau), cond.support[j], cond.values[j]);
            }
        } catch (const DataError& e) {
            err << method << ": " << e.what() << " (table skipped)\n";
        }
    }
}

void run_filter(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto in = load_input(cfg, err);
    const auto records = scifi_run(in.samples, cfg.scifi, cfg.gain_mode);
    Output dst(cfg.output, out);
    write_estimates(*dst.stream, records);
    dst.finish();
    err << "filtered " << in.samples.size() << " samples (" << kf::to_string(cfg.gain_mode) << ")\n";
}

struct TuneFlags {
    long start = 0;
    long end = -1;
    double lower = 1e-9;
    double upper = 1e-2;
    std::size_t grid = 25;
    double tol = 1e-2;
};

void run_tune(const RunConfig& cfg, const TuneFlags& flags, std::ostream& out, std::ostream& err) {
    auto in = load_input(cfg, err);
    tuning::EventWindow event;
    const auto n = static_cast<long>(in.samples.size());
    event.start_index = static_cast<std::size_t>(std::max(0L, flags.start));
    event.end_index = static_cast<std::size_t>(flags.end < 0 ? n - 1 : std::min(flags.end, n - 1));
    event.samples = std::move(in.samples);

    tuning::SearchOptions search;
    search.lower = flags.lower;
    search.upper = flags.upper;
    search.grid_points = flags.grid;
    search.rel_tolerance = flags.tol;
    search.mode = cfg.gain_mode;
    const auto result = tuning::tune_process_noise(event, cfg.scifi, search);

    Output dst(cfg.output, out);
    auto& o = *dst.stream;
    o << "# sigma_ww_star=" << format_double(result.sigma_ww) << " objective=" << format_double(result.objective)
      << " refined=" << (result.refined ? 1 : 0) << " at_boundary=" << (result.at_boundary ? 1 : 0) << '\n';
    o << "sigma_ww,objective\n";
    for (const auto& p : result.curve) {
        o << format_double(p.sigma_ww) << ',' << format_double(p.objective) << '\n';
    }
    dst.finish();
    err << "sigma_ww* = " << result.sigma_ww << '\n';
}

void run_baseline(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto in = load_input(cfg, err);
    const auto spec = baseline::butterworth_design(cfg.lp_order, cfg.lp_cutoff_Hz, cfg.sample_rate_Hz);
    const auto a = baseline::lp_filter(std::span<const TimeSeriesSample>(in.samples), spec);
    const auto slope = baseline::euler_slope(a, cfg.sample_rate_Hz);
    Output dst(cfg.output, out);
    auto& o = *dst.stream;
    o << "t,a_lp,slope_lp\n";
    for (std::size_t k = 1; k < a.size(); ++k) {
        o << format_double(in.samples[k].t) << ',' << format_double(a[k]) << ',' << format_double(slope[k - 1])
          << '\n';
    }
    dst.finish();
}

void run_stats(const RunConfig& cfg, const std::string& a_column, const std::string& slope_column,
               std::ostream& out, std::ostream& err) {
    if (cfg.input.empty()) {
        throw ConfigError("input: no input file given (--input)");
    }
    const auto table = read_table(cfg.input);
    auto a = table.column(a_column);
    auto slope = table.column(slope_column);
    // Rows with a missing value in either column are skipped.
    std::vector<double> a_ok;
    std::vector<double> s_ok;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::isfinite(a[k]) && std::isfinite(slope[k])) {
            a_ok.push_back(a[k]);
            s_ok.push_back(slope[k]);
        }
    }
    if (a_ok.empty()) {
        throw DataError("no complete rows in '" + cfg.input + "'");
    }
    Output dst(cfg.output, out);
    *dst.stream << "table,method,param,x,value\n";
    write_distributions(*dst.stream, "input", a_ok, s_ok, cfg.stats, err);
    dst.finish();
}

struct SynthFlags {
    std::string kind = "scintillation";
    double duration = 3600.0;
    std::uint64_t seed = 1;
    double target_std = -1.0;
    double peak = 10.0;
    double rise = 600.0;
    double fall = 900.0;
    double plateau = 300.0;
    bool noisy = false;
};

void run_synth(const RunConfig& cfg, const SynthFlags& flags, std::ostream& out) {
    const double rate = cfg.sample_rate_Hz;
    const double h = 1.0 / rate;
    std::vector<TimeSeriesSample> samples;
    if (flags.kind == "scintillation") {
        synth::SynthSpec spec;
        spec.duration_s = flags.duration;
        spec.sample_rate_Hz = rate;
        spec.corner_freq_Hz = cfg.scifi.corner_freq_Hz;
        spec.target_std_dB = flags.target_std >= 0.0 ? flags.target_std : p618_scintillation_stddev(cfg.scifi);
        spec.seed = flags.seed;
        const auto y = synth::gen_scintillation(spec);
        for (std::size_t k = 0; k < y.size(); ++k) {
            samples.push_back({static_cast<double>(k) * h, y[k]});
        }
    } else if (flags.kind == "ar1") {
        const double sigma = p618_scintillation_stddev(cfg.scifi);
        const auto n = static_cast<std::size_t>(std::floor(flags.duration * rate));
        const auto y = synth::gen_ar1_noise(n, h, cfg.scifi.corner_freq_Hz,
                                            sigma * sigma * cfg.scifi.alpha_min, flags.seed);
        for (std::size_t k = 0; k < y.size(); ++k) {
            samples.push_back({static_cast<double>(k) * h, y[k]});
        }
    } else if (flags.kind == "event") {
        samples = synth::gen_rain_event(flags.peak, flags.rise, flags.fall, flags.plateau, rate);
        if (flags.noisy) {
            samples = synth::gen_model_matched(cfg.scifi, samples, flags.seed).samples;
        }
    } else if (flags.kind == "model") {
        const auto n = static_cast<std::size_t>(std::floor(flags.duration * rate));
        samples = synth::gen_model_matched(cfg.scifi, n, h, flags.seed).samples;
    } else {
        throw ConfigError("kind: '" + flags.kind + "' is not one of scintillation, ar1, event, model");
    }
    Output dst(cfg.output, out);
    write_samples(*dst.stream, samples);
    dst.finish();
}

void run_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto in = load_input(cfg, err);
    const auto kf_records = scifi_run(in.samples, cfg.scifi, cfg.gain_mode);

    const GainMode other = cfg.gain_mode == GainMode::decorrelated ? GainMode::paper_faithful : GainMode::decorrelated;
    double max_da = std::numeric_limits<double>::quiet_NaN();
    double max_ds = std::numeric_limits<double>::quiet_NaN();
    try {
        const auto alt = scifi_run(in.samples, cfg.scifi, other);
        max_da = 0.0;
        max_ds = 0.0;
        for (std::size_t k = 0; k < alt.size(); ++k) {
            max_da = std::max(max_da, std::abs(alt[k].a_hat - kf_records[k].a_hat));
            max_ds = std::max(max_ds, std::abs(alt[k].slope_hat - kf_records[k].slope_hat));
        }
    } catch (const NumericalError& e) {
        err << kf::to_string(other) << " run failed: " << e.what() << '\n';
    }

    const auto spec = baseline::butterworth_design(cfg.lp_order, cfg.lp_cutoff_Hz, cfg.sample_rate_Hz);
    const auto a_lp_full = baseline::lp_filter(std::span<const TimeSeriesSample>(in.samples), spec);
    const auto slope_lp = baseline::euler_slope(a_lp_full, cfg.sample_rate_Hz);
    const std::vector<double> a_lp(a_lp_full.begin() + 1, a_lp_full.end());

    std::vector<double> a_kf;
    std::vector<double> slope_kf;
    for (const auto& r : kf_records) {
        a_kf.push_back(r.a_hat);
        slope_kf.push_back(r.slope_hat);
    }

    Output dst(cfg.output, out);
    auto& o = *dst.stream;
    o << "table,method,param,x,value\n";
    write_row(o, "summary", "KF", "slope_std", 0.0, stddev(slope_kf));
    write_row(o, "summary", "LP", "slope_std", 0.0, stddev(slope_lp));
    write_row(o, "summary", "KF", "abs_slope_p999", 0.0, abs_quantile(slope_kf, 0.999));
    write_row(o, "summary", "LP", "abs_slope_p999", 0.0, abs_quantile(slope_lp, 0.999));
    write_row(o, "summary", "gain_modes", "max_abs_diff_a", 0.0, max_da);
    write_row(o, "summary", "gain_modes", "max_abs_diff_slope", 0.0, max_ds);
    write_distributions(o, "KF", a_kf, slope_kf, cfg.stats, err);
    write_distributions(o, "LP", a_lp, slope_lp, cfg.stats, err);
    dst.finish();
    err << "slope std: KF " << stddev(slope_kf) << " dB/s, LP " << stddev(slope_lp) << " dB/s\n";
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rain attenuation and fade-slope estimation through scintillation"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> overrides;
    for (const auto& key : config_keys()) {
        overrides[key];
    }
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "key = value configuration file");
        sub->add_option("-i,--input", overrides["input"], "input CSV");
        sub->add_option("-o,--output", overrides["output"], "output path ('-' for standard output)");
        for (const auto& key : config_keys()) {
            if (key != "input" && key != "output") {
                sub->add_option("--" + key, overrides[key]);
            }
        }
    };

    auto* filter = app.add_subcommand("filter", "run the colored-noise Kalman filter over a series");
    auto* tune = app.add_subcommand("tune", "least-squares calibration of sigma_ww over an event");
    auto* base = app.add_subcommand("baseline", "Butterworth low-pass and first-difference slope");
    auto* stat = app.add_subcommand("stats", "PDF / CCDF / conditional slope CCDF tables");
    auto* syn = app.add_subcommand("synth", "generate synthetic series");
    auto* cmp = app.add_subcommand("compare", "Kalman filter vs low-pass baseline on the same input");
    for (auto* sub : {filter, tune, base, stat, syn, cmp}) {
        add_common(sub);
    }

    TuneFlags tflags;
    tune->add_option("--start", tflags.start, "first sample index of the event");
    tune->add_option("--end", tflags.end, "last sample index of the event (default: last sample)");
    tune->add_option("--lower", tflags.lower, "lower search bound for sigma_ww");
    tune->add_option("--upper", tflags.upper, "upper search bound for sigma_ww");
    tune->add_option("--grid", tflags.grid, "number of log-spaced grid points (>= 25)");
    tune->add_option("--tol", tflags.tol, "relative tolerance of the golden-section refinement");

    std::string a_column = "a_hat";
    std::string slope_column = "slope_hat";
    stat->add_option("--a-column", a_column, "attenuation column name");
    stat->add_option("--slope-column", slope_column, "slope column name");

    SynthFlags sflags;
    syn->add_option("--kind", sflags.kind, "scintillation | ar1 | event | model");
    syn->add_option("--duration", sflags.duration, "seconds");
    syn->add_option("--seed", sflags.seed);
    syn->add_option("--target-std", sflags.target_std, "scintillation std in dB (default: P.618 value)");
    syn->add_option("--peak", sflags.peak, "event peak attenuation, dB");
    syn->add_option("--rise", sflags.rise, "event rise time, s");
    syn->add_option("--fall", sflags.fall, "event decay time, s");
    syn->add_option("--plateau", sflags.plateau, "event plateau duration, s");
    syn->add_flag("--noisy", sflags.noisy, "add model-matched state wander and AR(1) noise to the event");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            apply_settings(cfg, parse_config_file(config_path));
        }
        std::map<std::string, std::string> given;
        for (const auto& [k, v] : overrides) {
            if (!v.empty()) {
                given[k] = v;
            }
        }
        apply_settings(cfg, given);
        cfg.validate();

        if (app.got_subcommand(filter)) {
            run_filter(cfg, out, err);
        } else if (app.got_subcommand(tune)) {
            run_tune(cfg, tflags, out, err);
        } else if (app.got_subcommand(base)) {
            run_baseline(cfg, out, err);
        } else if (app.got_subcommand(stat)) {
            run_stats(cfg, a_column, slope_column, out, err);
        } else if (app.got_subcommand(syn)) {
            run_synth(cfg, sflags, out);
        } else if (app.got_subcommand(cmp)) {
            run_compare(cfg, out, err);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDivergence;
    }
    return kExitOk;
}

} // namespace scifi::io
