#include "twrsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "twrsim/queueing.hpp"
#include "twrsim/rates.hpp"
#include "twrsim/relay_delay.hpp"

namespace twrsim {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size() || !std::isfinite(v)) {
            throw ConfigError("");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + value + "' is not a finite number");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) {
            throw ConfigError("");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + value + "' is not an integer");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size() || value.find('-') != std::string::npos) {
            throw ConfigError("");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + value +
                          "' is not an unsigned integer");
    }
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(parse_double(key, item));
        }
    }
    if (out.empty()) {
        throw ConfigError("config key '" + key + "': empty list");
    }
    return out;
}

std::string join_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += format_g9(values[i]);
    }
    return out;
}

PlacementPolicy parse_placement(const std::string& value) {
    if (value == "fixed") {
        return PlacementPolicy::fixed;
    }
    if (value == "uniform_per_round") {
        return PlacementPolicy::uniform_per_round;
    }
    if (value == "uniform_per_replication") {
        return PlacementPolicy::uniform_per_replication;
    }
    throw ConfigError("config key 'placement': unknown value '" + value +
                      "' (expected fixed | uniform_per_round | uniform_per_replication)");
}

const char* placement_name(PlacementPolicy p) {
    switch (p) {
        case PlacementPolicy::fixed:
            return "fixed";
        case PlacementPolicy::uniform_per_round:
            return "uniform_per_round";
        default:
            return "uniform_per_replication";
    }
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct Welford {
    double mean = 0.0;
    double m2 = 0.0;
    std::int64_t n = 0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double std_error() const {
        if (n < 2) {
            return 0.0;
        }
        return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    }
};

std::string cell(double v) { return format_g9(v); }
std::string cell(std::int64_t v) { return std::to_string(v); }

}  // namespace

const char* experiment_name(Experiment e) {
    switch (e) {
        case Experiment::theta_sweep:
            return "theta_sweep";
        case Experiment::snr_delay_sweep:
            return "snr_delay_sweep";
        case Experiment::esr_sweep:
            return "esr_sweep";
        case Experiment::par_sweep:
            return "par_sweep";
        default:
            return "oracle_check";
    }
}

FlatConfig FlatConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

FlatConfig FlatConfig::from_string(const std::string& text) {
    FlatConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key=value, got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

SweepSpec resolve_spec(Experiment experiment, const FlatConfig& config) {
    static const std::set<std::string> kChannelKeys = {
        "nakagami_m", "power_db", "beta", "placement", "relay_x", "relay_y", "seed"};

    std::set<std::string> allowed = kChannelKeys;
    switch (experiment) {
        case Experiment::theta_sweep:
            allowed.insert({"thetas", "horizon_T", "warmup"});
            break;
        case Experiment::snr_delay_sweep:
            allowed.insert({"snr_db", "horizon_T", "warmup"});
            break;
        case Experiment::esr_sweep:
            allowed.insert({"snr_db", "n_samples"});
            break;
        case Experiment::par_sweep:
            allowed.insert({"rhos", "rho_fracs", "packet_len", "horizon_T", "warmup",
                            "n_samples"});
            break;
        case Experiment::oracle_check:
            allowed.insert({"thetas", "n_sequences", "seq_len"});
            break;
    }
    for (const auto& [key, value] : config.values()) {
        if (!allowed.count(key)) {
            throw ConfigError("unknown config key '" + key + "' for experiment " +
                              experiment_name(experiment));
        }
    }

    const auto get = [&](const char* key) -> std::optional<std::string> {
        const auto it = config.values().find(key);
        if (it == config.values().end()) {
            return std::nullopt;
        }
        return it->second;
    };

    SweepSpec spec;
    spec.experiment = experiment;
    spec.fading.nakagami_m = get("nakagami_m") ? parse_double("nakagami_m", *get("nakagami_m"))
                                               : 1.0;
    spec.power_db = get("power_db") ? parse_double("power_db", *get("power_db")) : 10.0;
    spec.fading.power = db_to_linear(spec.power_db);
    spec.fading.noise_var = 1.0;
    spec.fading.geometry.beta = get("beta") ? parse_double("beta", *get("beta")) : 3.0;
    spec.fading.placement =
        get("placement") ? parse_placement(*get("placement")) : PlacementPolicy::uniform_per_round;
    spec.fading.geometry.relay_x = get("relay_x") ? parse_double("relay_x", *get("relay_x")) : 0.0;
    spec.fading.geometry.relay_y = get("relay_y") ? parse_double("relay_y", *get("relay_y")) : 0.0;
    spec.fading.seed = get("seed") ? parse_uint("seed", *get("seed")) : 1;
    try {
        spec.fading.validate();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("invalid channel config: ") + err.what());
    }

    if (experiment == Experiment::theta_sweep || experiment == Experiment::oracle_check) {
        spec.thetas = get("thetas") ? parse_list("thetas", *get("thetas"))
                      : experiment == Experiment::theta_sweep
                          ? std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.97, 0.99}
                          : std::vector<double>{0.3, 0.7, 0.95};
        for (const double theta : spec.thetas) {
            if (!(theta >= 0.0 && theta <= 1.0)) {
                throw ConfigError("config key 'thetas': theta " + format_g9(theta) +
                                  " outside [0, 1]");
            }
        }
    }
    if (experiment == Experiment::snr_delay_sweep || experiment == Experiment::esr_sweep) {
        spec.snr_db = get("snr_db") ? parse_list("snr_db", *get("snr_db"))
                                    : std::vector<double>{0, 5, 10, 15, 20, 25, 30};
    }
    if (experiment == Experiment::theta_sweep || experiment == Experiment::snr_delay_sweep ||
        experiment == Experiment::par_sweep) {
        spec.horizon_t = get("horizon_T") ? parse_int("horizon_T", *get("horizon_T")) : 1000000;
        spec.warmup = get("warmup") ? parse_int("warmup", *get("warmup")) : 10000;
        if (spec.horizon_t <= spec.warmup || spec.warmup < 0) {
            throw ConfigError("need horizon_T > warmup >= 0");
        }
    }
    if (experiment == Experiment::esr_sweep || experiment == Experiment::par_sweep) {
        spec.n_samples = get("n_samples") ? parse_int("n_samples", *get("n_samples")) : 1000000;
        if (spec.n_samples < 1000) {
            throw ConfigError("config key 'n_samples': must be >= 1000");
        }
    }
    if (experiment == Experiment::par_sweep) {
        spec.packet_len = get("packet_len") ? parse_double("packet_len", *get("packet_len")) : 10.0;
        if (!(spec.packet_len > 0.0)) {
            throw ConfigError("config key 'packet_len': must be positive");
        }
        if (get("rhos") && get("rho_fracs")) {
            throw ConfigError("give either 'rhos' or 'rho_fracs', not both");
        }
        if (get("rhos")) {
            spec.rhos = parse_list("rhos", *get("rhos"));
        } else {
            spec.rho_fracs = get("rho_fracs")
                                 ? parse_list("rho_fracs", *get("rho_fracs"))
                                 : std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9, 0.98};
        }
        for (const double rho : spec.rhos) {
            if (rho < 0.0) {
                throw ConfigError("config key 'rhos': negative arrival rate");
            }
        }
        for (const double frac : spec.rho_fracs) {
            if (frac < 0.0) {
                throw ConfigError("config key 'rho_fracs': negative fraction");
            }
        }
    }
    if (experiment == Experiment::oracle_check) {
        spec.n_sequences = get("n_sequences") ? parse_int("n_sequences", *get("n_sequences"))
                                              : 1000;
        spec.seq_len = get("seq_len") ? parse_int("seq_len", *get("seq_len")) : 2000;
        if (spec.n_sequences < 1 || spec.seq_len < 2) {
            throw ConfigError("need n_sequences >= 1 and seq_len >= 2");
        }
        if (spec.seq_len > 10000) {
            throw ConfigError("config key 'seq_len': reference scan is capped at 10^4 rounds");
        }
    }

    // Complete resolved echo, sorted by key.
    spec.echo.emplace_back("beta", format_g9(spec.fading.geometry.beta));
    spec.echo.emplace_back("nakagami_m", format_g9(spec.fading.nakagami_m));
    spec.echo.emplace_back("placement", placement_name(spec.fading.placement));
    spec.echo.emplace_back("power_db", format_g9(spec.power_db));
    spec.echo.emplace_back("relay_x", format_g9(spec.fading.geometry.relay_x));
    spec.echo.emplace_back("relay_y", format_g9(spec.fading.geometry.relay_y));
    spec.echo.emplace_back("seed", std::to_string(spec.fading.seed));
    switch (experiment) {
        case Experiment::theta_sweep:
            spec.echo.emplace_back("horizon_T", std::to_string(spec.horizon_t));
            spec.echo.emplace_back("thetas", join_list(spec.thetas));
            spec.echo.emplace_back("warmup", std::to_string(spec.warmup));
            break;
        case Experiment::snr_delay_sweep:
            spec.echo.emplace_back("horizon_T", std::to_string(spec.horizon_t));
            spec.echo.emplace_back("snr_db", join_list(spec.snr_db));
            spec.echo.emplace_back("warmup", std::to_string(spec.warmup));
            break;
        case Experiment::esr_sweep:
            spec.echo.emplace_back("n_samples", std::to_string(spec.n_samples));
            spec.echo.emplace_back("snr_db", join_list(spec.snr_db));
            break;
        case Experiment::par_sweep:
            spec.echo.emplace_back("horizon_T", std::to_string(spec.horizon_t));
            spec.echo.emplace_back("n_samples", std::to_string(spec.n_samples));
            spec.echo.emplace_back("packet_len", format_g9(spec.packet_len));
            if (!spec.rhos.empty()) {
                spec.echo.emplace_back("rhos", join_list(spec.rhos));
            } else {
                spec.echo.emplace_back("rho_fracs", join_list(spec.rho_fracs));
            }
            spec.echo.emplace_back("warmup", std::to_string(spec.warmup));
            break;
        case Experiment::oracle_check:
            spec.echo.emplace_back("n_sequences", std::to_string(spec.n_sequences));
            spec.echo.emplace_back("seq_len", std::to_string(spec.seq_len));
            spec.echo.emplace_back("thetas", join_list(spec.thetas));
            break;
    }
    std::sort(spec.echo.begin(), spec.echo.end());
    return spec;
}

namespace {

SweepResult make_result(const SweepSpec& spec) {
    SweepResult result;
    result.metadata.emplace_back("experiment", experiment_name(spec.experiment));
    result.metadata.emplace_back("version", kVersion);
    for (const auto& kv : spec.echo) {
        result.metadata.push_back(kv);
    }
    return result;
}

}  // namespace

SweepResult run_theta_sweep(const SweepSpec& spec) {
    SweepResult result = make_result(spec);
    result.columns = {"theta", "mean_l01", "mean_l21", "censored"};
    std::vector<double> thetas = spec.thetas;
    std::sort(thetas.begin(), thetas.end());
    for (const double theta : thetas) {
        const DelayStats stats = run_delay_sim(spec.fading, DelayMode::UpperBound(theta),
                                               spec.horizon_t, spec.warmup);
        result.rows.push_back(
            {cell(theta), cell(stats.mean_l01), cell(stats.mean_l21), cell(stats.censored_count)});
    }
    return result;
}

SweepResult run_snr_delay_sweep(const SweepSpec& spec) {
    SweepResult result = make_result(spec);
    result.columns = {"snr_db", "mean_l01", "mean_l21", "censored"};
    std::vector<double> snrs = spec.snr_db;
    std::sort(snrs.begin(), snrs.end());
    for (const double snr_db : snrs) {
        FadingConfig fading = spec.fading;
        fading.power = db_to_linear(snr_db);
        fading.noise_var = 1.0;
        const DelayStats stats =
            run_delay_sim(fading, DelayMode::Suboptimal(), spec.horizon_t, spec.warmup);
        result.rows.push_back(
            {cell(snr_db), cell(stats.mean_l01), cell(stats.mean_l21), cell(stats.censored_count)});
    }
    return result;
}

SweepResult run_esr_sweep(const SweepSpec& spec) {
    SweepResult result = make_result(spec);
    result.columns = {"snr_db",      "trad_ub",    "trad_ub_se", "aab_ub", "aab_ub_se",
                      "aab_ach",     "aab_ach_se", "dnf",        "dnf_se"};
    std::vector<double> snrs = spec.snr_db;
    std::sort(snrs.begin(), snrs.end());
    for (const double snr_db : snrs) {
        FadingConfig fading = spec.fading;
        fading.power = db_to_linear(snr_db);
        fading.noise_var = 1.0;
        // One pass over a single realization stream; the four estimates
        // share the randomness, so the gaps between them are low-noise.
        ChannelSampler sampler(fading, kChannelStream);
        Welford trad_ub, aab_ub, aab_ach, dnf;
        for (std::int64_t i = 0; i < spec.n_samples; ++i) {
            const ChannelRealization r = sampler.next();
            trad_ub.add(trad_upper_bound(r));
            aab_ub.add(aab_upper_bound(r));
            aab_ach.add(aab_sum_rate(r));
            dnf.add(dnf_sum_rate(r));
        }
        result.rows.push_back({cell(snr_db), cell(trad_ub.mean), cell(trad_ub.std_error()),
                               cell(aab_ub.mean), cell(aab_ub.std_error()), cell(aab_ach.mean),
                               cell(aab_ach.std_error()), cell(dnf.mean), cell(dnf.std_error())});
    }
    return result;
}

SweepResult run_par_sweep(const SweepSpec& spec) {
    SweepResult result = make_result(spec);
    result.columns = {"protocol", "rho",    "mean_ss_d02", "mean_ss_d20",
                      "mean_st",  "served", "censored"};

    double cap[2] = {0.0, 0.0};
    if (!spec.rho_fracs.empty()) {
        cap[0] = max_stable_par(Protocol::aab, spec.fading, spec.n_samples, spec.packet_len);
        cap[1] = max_stable_par(Protocol::dnf, spec.fading, spec.n_samples, spec.packet_len);
    }
    std::vector<double> axis = spec.rhos.empty() ? spec.rho_fracs : spec.rhos;
    std::sort(axis.begin(), axis.end());

    for (const double value : axis) {
        for (const Protocol protocol : {Protocol::aab, Protocol::dnf}) {
            const double rho =
                spec.rhos.empty() ? value * cap[protocol == Protocol::aab ? 0 : 1] : value;
            ArrivalConfig arrivals;
            arrivals.rho = rho;
            arrivals.packet_len = spec.packet_len;
            arrivals.horizon_t = spec.horizon_t;
            arrivals.warmup = spec.warmup;
            const SystemStats stats = simulate_system(protocol, spec.fading, arrivals);
            result.rows.push_back({protocol == Protocol::aab ? "aab" : "dnf", cell(rho),
                                   cell(stats.mean_ss_d02), cell(stats.mean_ss_d20),
                                   stats.mean_st ? cell(*stats.mean_st) : std::string(),
                                   cell(stats.served_packets), cell(stats.censored_packets)});
        }
    }
    return result;
}

namespace {

struct QueueOutcome {
    std::vector<std::pair<std::int64_t, std::optional<std::int64_t>>> per_direction[2];
};

// Runs the queue engine over a stored realization window and lists every
// injection as (birth_round, delay or censored), per direction.
QueueOutcome queue_outcomes(const DelayMode& mode,
                            const std::vector<ChannelRealization>& rounds) {
    QueueOutcome out;
    RelayBacklogQueue queue(mode);
    std::vector<std::vector<CompletionEvent>> completed(2);
    for (const ChannelRealization& r : rounds) {
        for (const CompletionEvent& ev : queue.step(r)) {
            completed[dir_index(ev.direction)].push_back(ev);
        }
    }
    for (const FlowDirection d : {FlowDirection::d02, FlowDirection::d20}) {
        std::vector<std::pair<std::int64_t, std::optional<std::int64_t>>>& list =
            out.per_direction[dir_index(d)];
        for (const CompletionEvent& ev : completed[dir_index(d)]) {
            list.emplace_back(ev.birth_round, ev.delay);
        }
        for (const Injection& inj : queue.pending(d)) {
            list.emplace_back(inj.birth_round, std::nullopt);
        }
        std::sort(list.begin(), list.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return out;
}

}  // namespace

OracleCheckReport run_oracle_check(const SweepSpec& spec) {
    OracleCheckReport report;
    report.table = make_result(spec);
    report.table.columns = {"mode", "theta", "sequences", "injections", "mismatches"};

    struct ModeCase {
        DelayMode mode;
        std::string label;
        std::string theta_cell;
    };
    std::vector<ModeCase> cases;
    for (const double theta : spec.thetas) {
        cases.push_back({DelayMode::UpperBound(theta), "upper_bound", format_g9(theta)});
    }
    cases.push_back({DelayMode::Suboptimal(), "suboptimal", ""});

    std::vector<std::int64_t> injections_per_case(cases.size(), 0);
    std::vector<std::int64_t> mismatches_per_case(cases.size(), 0);

    for (std::int64_t k = 0; k < spec.n_sequences; ++k) {
        ChannelSampler sampler(spec.fading, 1000 + static_cast<std::uint64_t>(k));
        std::vector<ChannelRealization> rounds;
        rounds.reserve(static_cast<std::size_t>(spec.seq_len));
        for (std::int64_t t = 0; t < spec.seq_len; ++t) {
            ChannelRealization r = sampler.next();
            if (k % 5 == 0) {
                // Adversarial rounds: exact gain ties and sub-1e-12 gaps.
                if (t % 7 == 3) {
                    r.g21 = r.g01;
                } else if (t % 7 == 5) {
                    r.g21 = r.g01 * (1.0 + 1e-13);
                }
            }
            rounds.push_back(r);
        }

        for (std::size_t c = 0; c < cases.size(); ++c) {
            const QueueOutcome queue_result = queue_outcomes(cases[c].mode, rounds);
            for (const FlowDirection d : {FlowDirection::d02, FlowDirection::d20}) {
                const DirectionSequences seq = build_direction_sequences(d, cases[c].mode, rounds);
                const auto oracle = reference_completion_delays(seq.surplus, seq.drain);
                const auto& queue_list = queue_result.per_direction[dir_index(d)];
                injections_per_case[c] += static_cast<std::int64_t>(oracle.size());

                const std::size_t n = std::max(oracle.size(), queue_list.size());
                for (std::size_t i = 0; i < n; ++i) {
                    const bool both = i < oracle.size() && i < queue_list.size();
                    const bool match = both && oracle[i] == queue_list[i].second;
                    if (!match) {
                        ++mismatches_per_case[c];
                        if (report.first_mismatch.empty()) {
                            std::ostringstream dump;
                            dump << "mode=" << cases[c].label;
                            if (!cases[c].theta_cell.empty()) {
                                dump << " theta=" << cases[c].theta_cell;
                            }
                            dump << " seed=" << spec.fading.seed << " stream=" << (1000 + k)
                                 << " seq=" << k << " dir="
                                 << (d == FlowDirection::d02 ? "d02" : "d20")
                                 << " injection_index=" << i;
                            if (both) {
                                dump << " birth=" << queue_list[i].first << " queue=";
                                if (queue_list[i].second) {
                                    dump << *queue_list[i].second;
                                } else {
                                    dump << "censored";
                                }
                                dump << " reference=";
                                if (oracle[i]) {
                                    dump << *oracle[i];
                                } else {
                                    dump << "censored";
                                }
                            } else {
                                dump << " queue_count=" << queue_list.size()
                                     << " reference_count=" << oracle.size();
                            }
                            report.first_mismatch = dump.str();
                        }
                    }
                }
            }
        }
    }

    for (std::size_t c = 0; c < cases.size(); ++c) {
        report.sequences += spec.n_sequences;
        report.injections += injections_per_case[c];
        report.mismatches += mismatches_per_case[c];
        report.table.rows.push_back({cases[c].label, cases[c].theta_cell,
                                     cell(spec.n_sequences), cell(injections_per_case[c]),
                                     cell(mismatches_per_case[c])});
    }
    return report;
}

std::string format_g9(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

namespace {

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) {
        return cell;
    }
    std::string quoted = "\"";
    for (const char ch : cell) {
        if (ch == '"') {
            quoted += '"';
        }
        quoted += ch;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

void write_csv(std::ostream& out, const SweepResult& result, bool reproducible) {
    for (const auto& [key, value] : result.metadata) {
        out << "# " << key << '=' << value << '\n';
    }
    if (!reproducible) {
        std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        out << "# generated=" << stamp << '\n';
    }
    for (std::size_t i = 0; i < result.columns.size(); ++i) {
        if (i) {
            out << ',';
        }
        out << csv_escape(result.columns[i]);
    }
    out << '\n';
    for (const auto& row : result.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                out << ',';
            }
            out << csv_escape(row[i]);
        }
        out << '\n';
    }
}

std::string csv_to_string(const SweepResult& result, bool reproducible) {
    std::ostringstream out;
    write_csv(out, result, reproducible);
    return out.str();
}

}  // namespace twrsim
