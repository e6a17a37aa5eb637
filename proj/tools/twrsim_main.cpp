// twrsim: two-way relay fading-channel simulator.
//
// Subcommands sweep the delay and sum-rate behavior of a buffered
// relaying protocol against its immediate-forwarding baseline and write
// RFC-4180 CSV with a commented metadata block. Exit codes: 0 success,
// 1 validation failure (reference-check mismatch), 2 configuration error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "twrsim/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    bool reproducible = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, const std::string& default_out) {
    cmd->add_option("--config", args.config_path, "flat key=value config file");
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out_path, "output CSV path")->default_val(default_out);
    cmd->add_flag("--reproducible", args.reproducible,
                  "omit the timestamp line so reruns are byte-identical");
}

twrsim::SweepSpec load_spec(twrsim::Experiment experiment, const CommonArgs& args) {
    twrsim::FlatConfig config;
    if (!args.config_path.empty()) {
        config = twrsim::FlatConfig::from_file(args.config_path);
    }
    if (args.seed) {
        config.set("seed", std::to_string(*args.seed));
    }
    return twrsim::resolve_spec(experiment, config);
}

void write_result(const twrsim::SweepResult& result, const CommonArgs& args) {
    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) {
        throw twrsim::ConfigError("cannot open output file '" + args.out_path + "'");
    }
    twrsim::write_csv(out, result, args.reproducible);
    std::cout << args.out_path << ": " << result.rows.size() << " rows\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-way relay fading-channel simulator"};
    app.require_subcommand(1);

    CommonArgs theta_args, snr_args, esr_args, par_args, oracle_args;

    CLI::App* theta = app.add_subcommand(
        "theta-sweep", "relay-buffer delay vs. surplus fraction theta (bound mode)");
    add_common(theta, theta_args, "theta_sweep.csv");

    CLI::App* snr = app.add_subcommand(
        "snr-delay", "relay-buffer delay vs. P/sigma^2 (implemented-scheme mode)");
    add_common(snr, snr_args, "snr_delay.csv");

    CLI::App* esr = app.add_subcommand("esr", "ergodic sum-rate bounds and achievable rates");
    add_common(esr, esr_args, "esr.csv");

    CLI::App* par = app.add_subcommand(
        "par-sweep", "source/relay buffer delay vs. packet arrival rate");
    add_common(par, par_args, "par_sweep.csv");

    CLI::App* oracle = app.add_subcommand(
        "oracle-check", "compare queue-engine delays against the reference scan");
    add_common(oracle, oracle_args, "oracle_check.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (theta->parsed()) {
            const auto spec = load_spec(twrsim::Experiment::theta_sweep, theta_args);
            write_result(twrsim::run_theta_sweep(spec), theta_args);
        } else if (snr->parsed()) {
            const auto spec = load_spec(twrsim::Experiment::snr_delay_sweep, snr_args);
            write_result(twrsim::run_snr_delay_sweep(spec), snr_args);
        } else if (esr->parsed()) {
            const auto spec = load_spec(twrsim::Experiment::esr_sweep, esr_args);
            write_result(twrsim::run_esr_sweep(spec), esr_args);
        } else if (par->parsed()) {
            const auto spec = load_spec(twrsim::Experiment::par_sweep, par_args);
            write_result(twrsim::run_par_sweep(spec), par_args);
        } else if (oracle->parsed()) {
            const auto spec = load_spec(twrsim::Experiment::oracle_check, oracle_args);
            const twrsim::OracleCheckReport report = twrsim::run_oracle_check(spec);
            write_result(report.table, oracle_args);
            std::cout << "oracle-check: " << report.mismatches << " mismatches over "
                      << report.injections << " injections (" << report.sequences
                      << " mode-sequences)\n";
            if (report.mismatches > 0) {
                std::cerr << "reference mismatch reproducer: " << report.first_mismatch << '\n';
                return 1;
            }
        }
    } catch (const twrsim::ConfigError& err) {
        std::cerr << "config error: " << err.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& err) {
        std::cerr << "config error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
