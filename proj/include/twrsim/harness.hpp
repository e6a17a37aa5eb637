#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "twrsim/channel.hpp"

namespace twrsim {

inline constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat key=value configuration text. '#' starts a comment, blank lines
// are ignored, later assignments win. Keys are validated against the
// experiment's schema when the spec is resolved; unknown keys are errors.
class FlatConfig {
  public:
    static FlatConfig from_file(const std::string& path);
    static FlatConfig from_string(const std::string& text);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

enum class Experiment { theta_sweep, snr_delay_sweep, esr_sweep, par_sweep, oracle_check };

const char* experiment_name(Experiment e);

// A fully resolved experiment: channel config plus the experiment's own
// knobs, with defaults filled in and every value validated. `echo` holds
// the complete resolved key set for the CSV metadata block.
struct SweepSpec {
    Experiment experiment = Experiment::theta_sweep;
    FadingConfig fading;        // power/noise resolved from power_db
    double power_db = 10.0;
    std::vector<double> thetas;
    std::vector<double> snr_db;
    std::vector<double> rhos;       // absolute packet rates (par_sweep)
    std::vector<double> rho_fracs;  // fractions of per-protocol capacity
    std::int64_t horizon_t = 1000000;
    std::int64_t warmup = 10000;
    std::int64_t n_samples = 1000000;
    std::int64_t n_sequences = 1000;
    std::int64_t seq_len = 2000;
    double packet_len = 10.0;
    std::vector<std::pair<std::string, std::string>> echo;
};

// Validates keys and values for the experiment; throws ConfigError.
SweepSpec resolve_spec(Experiment experiment, const FlatConfig& config);

struct SweepResult {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;  // cells preformatted
};

SweepResult run_theta_sweep(const SweepSpec& spec);
SweepResult run_snr_delay_sweep(const SweepSpec& spec);
SweepResult run_esr_sweep(const SweepSpec& spec);
SweepResult run_par_sweep(const SweepSpec& spec);

struct OracleCheckReport {
    std::int64_t sequences = 0;
    std::int64_t injections = 0;
    std::int64_t mismatches = 0;
    std::string first_mismatch;  // reproducer text; empty when clean
    SweepResult table;
};

// Replays random channel windows (with exact-tie and near-tie rounds
// mixed in) through both the queue engine and the reference scan and
// compares every completion delay exactly.
OracleCheckReport run_oracle_check(const SweepSpec& spec);

// Doubles print with 9 significant digits.
std::string format_g9(double value);

// Metadata block (comment lines), header row, data rows. The generated-at
// line is omitted when reproducible is true so reruns are byte-identical.
void write_csv(std::ostream& out, const SweepResult& result, bool reproducible);
std::string csv_to_string(const SweepResult& result, bool reproducible);

}  // namespace twrsim
