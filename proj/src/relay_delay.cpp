#include "twrsim/relay_delay.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "twrsim/rates.hpp"

namespace twrsim {

DelayMode DelayMode::UpperBound(double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw std::invalid_argument("DelayMode: theta must be in [0, 1]");
    }
    DelayMode m;
    m.kind = Kind::upper_bound;
    m.theta = theta;
    return m;
}

DelayMode DelayMode::Suboptimal() {
    DelayMode m;
    m.kind = Kind::suboptimal;
    return m;
}

SurplusEvent surplus_bits(const DelayMode& mode, const ChannelRealization& r) {
    SurplusEvent ev;
    ev.direction = r.g01 >= r.g21 ? FlowDirection::d02 : FlowDirection::d20;
    if (r.g01 == r.g21) {
        return ev;  // no gap, no surplus
    }
    if (mode.kind == DelayMode::Kind::upper_bound) {
        const double c01 = shannon_capacity(snr(r, Link::uplink01));
        const double c21 = shannon_capacity(snr(r, Link::uplink21));
        ev.bits = mode.theta * std::abs(c01 - c21);
    } else {
        const double g_min = std::min(r.g01, r.g21);
        const double gap = std::abs(r.g01 - r.g21);
        ev.bits = std::log2(1.0 + r.power * gap / (r.noise_var + 2.0 * r.power * g_min));
    }
    return ev;
}

DrainEvent drain_bits(const DelayMode& mode, const ChannelRealization& r, double eta_at_round) {
    DrainEvent ev;
    if (r.g01 == r.g21) {
        return ev;  // neither downlink is strictly stronger
    }
    ev.direction = r.g21 > r.g01 ? FlowDirection::d02 : FlowDirection::d20;
    if (mode.kind == DelayMode::Kind::upper_bound) {
        const double c01 = shannon_capacity(snr(r, Link::uplink01));
        const double c21 = shannon_capacity(snr(r, Link::uplink21));
        ev.bits = std::abs(c01 - c21);
    } else {
        const double g_strong = std::max(r.g01, r.g21);
        ev.bits = std::log2(1.0 + (1.0 - eta_at_round) * r.power * g_strong / r.noise_var);
    }
    return ev;
}

double RelayBacklogQueue::backlog_bits(FlowDirection d) const {
    double total = 0.0;
    for (const Injection& inj : fifo_[dir_index(d)]) {
        total += inj.bits_remaining;
    }
    return total;
}

std::vector<CompletionEvent> RelayBacklogQueue::step(const ChannelRealization& r,
                                                     std::ostream* trace) {
    if (started_ && r.round <= last_round_) {
        throw std::invalid_argument("RelayBacklogQueue::step: rounds must be increasing");
    }
    started_ = true;
    last_round_ = r.round;

    std::vector<CompletionEvent> events;
    const double eta = mode_.kind == DelayMode::Kind::suboptimal ? eta_min(r) : 1.0;
    const DrainEvent dr = drain_bits(mode_, r, eta);
    double drained_now[2] = {0.0, 0.0};

    if (dr.direction && dr.bits > 0.0) {
        std::deque<Injection>& fifo = fifo_[dir_index(*dr.direction)];
        double budget = dr.bits;
        while (budget > 0.0 && !fifo.empty()) {
            Injection& front = fifo.front();
            if (budget >= front.bits_remaining) {
                budget -= front.bits_remaining;
                drained_now[dir_index(*dr.direction)] += front.bits_remaining;
                front.bits_remaining = 0.0;
                events.push_back({front.birth_round, r.round, r.round - front.birth_round,
                                  front.direction});
                fifo.pop_front();
            } else {
                front.bits_remaining -= budget;
                drained_now[dir_index(*dr.direction)] += budget;
                budget = 0.0;
            }
        }
        drained_[dir_index(*dr.direction)] += drained_now[dir_index(*dr.direction)];
    }

    const SurplusEvent s = surplus_bits(mode_, r);
    if (s.bits > 0.0) {
        fifo_[dir_index(s.direction)].push_back({r.round, s.bits, s.bits, s.direction});
        injected_[dir_index(s.direction)] += s.bits;
    }

    if (trace) {
        const char* dir_label = s.bits > 0.0
                                    ? (s.direction == FlowDirection::d02 ? "d02" : "d20")
                                    : "";
        char line[256];
        std::snprintf(line, sizeof(line), "%lld,%.9g,%.9g,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%zu\n",
                      static_cast<long long>(r.round), r.g01, r.g21, dir_label,
                      s.bits > 0.0 ? s.bits : 0.0, drained_now[0], drained_now[1],
                      backlog_bits(FlowDirection::d02), backlog_bits(FlowDirection::d20),
                      events.size());
        *trace << line;
    }
    return events;
}

DelayStats run_delay_sim(const FadingConfig& config, const DelayMode& mode,
                         std::int64_t horizon_t, std::int64_t warmup, std::uint64_t stream,
                         std::ostream* trace) {
    if (horizon_t <= warmup || warmup < 0) {
        throw std::invalid_argument("run_delay_sim: need horizon_t > warmup >= 0");
    }
    ChannelSampler sampler(config, stream);
    RelayBacklogQueue queue(mode);
    if (trace) {
        *trace << kTraceHeader << '\n';
    }
    double sum[2] = {0.0, 0.0};
    std::int64_t count[2] = {0, 0};
    for (std::int64_t t = 0; t < horizon_t; ++t) {
        for (const CompletionEvent& ev : queue.step(sampler.next(), trace)) {
            if (ev.birth_round > warmup) {
                sum[dir_index(ev.direction)] += static_cast<double>(ev.delay);
                ++count[dir_index(ev.direction)];
            }
        }
    }
    DelayStats stats;
    stats.count_01 = count[dir_index(FlowDirection::d02)];
    stats.count_21 = count[dir_index(FlowDirection::d20)];
    stats.mean_l01 = stats.count_01 > 0
                         ? sum[dir_index(FlowDirection::d02)] / static_cast<double>(stats.count_01)
                         : 0.0;
    stats.mean_l21 = stats.count_21 > 0
                         ? sum[dir_index(FlowDirection::d20)] / static_cast<double>(stats.count_21)
                         : 0.0;
    for (FlowDirection d : {FlowDirection::d02, FlowDirection::d20}) {
        for (const Injection& inj : queue.pending(d)) {
            if (inj.birth_round > warmup) {
                ++stats.censored_count;
            }
        }
    }
    return stats;
}

DirectionSequences build_direction_sequences(FlowDirection direction, const DelayMode& mode,
                                             std::span<const ChannelRealization> rounds) {
    DirectionSequences seq;
    seq.surplus.resize(rounds.size(), 0.0);
    seq.drain.resize(rounds.size(), 0.0);
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        const ChannelRealization& r = rounds[i];
        const SurplusEvent s = surplus_bits(mode, r);
        if (s.bits > 0.0 && s.direction == direction) {
            seq.surplus[i] = s.bits;
        }
        const double eta = mode.kind == DelayMode::Kind::suboptimal ? eta_min(r) : 1.0;
        const DrainEvent dr = drain_bits(mode, r, eta);
        if (dr.direction && *dr.direction == direction) {
            seq.drain[i] = dr.bits;
        }
    }
    return seq;
}

std::vector<std::optional<std::int64_t>> reference_completion_delays(
    std::span<const double> surplus, std::span<const double> drain) {
    if (surplus.size() != drain.size()) {
        throw std::invalid_argument("reference_completion_delays: length mismatch");
    }
    if (surplus.size() > 10000) {
        throw std::invalid_argument("reference_completion_delays: window capped at 10^4 rounds");
    }
    const std::int64_t n = static_cast<std::int64_t>(surplus.size());
    std::vector<std::optional<std::int64_t>> delays;

    std::int64_t pred_end = -1;    // round where the previous injection completed
    double leftover = 0.0;         // drain left in round pred_end after it completed
    bool pred_censored = false;

    for (std::int64_t t = 0; t < n; ++t) {
        if (!(surplus[static_cast<std::size_t>(t)] > 0.0)) {
            continue;
        }
        if (pred_censored) {
            delays.push_back(std::nullopt);  // FIFO: blocked behind an unfinished one
            continue;
        }
        double need = surplus[static_cast<std::size_t>(t)];
        std::int64_t u;
        if (pred_end > t && leftover > 0.0) {
            // The predecessor finished after this injection was born; the
            // remainder of that round's drain is available first.
            if (leftover >= need) {
                leftover -= need;
                delays.push_back(pred_end - t);
                continue;
            }
            need -= leftover;
            leftover = 0.0;
            u = pred_end + 1;
        } else {
            u = std::max(t, pred_end) + 1;
        }
        bool done = false;
        for (; u < n; ++u) {
            const double d = drain[static_cast<std::size_t>(u)];
            if (d >= need) {
                pred_end = u;
                leftover = d - need;
                delays.push_back(u - t);
                done = true;
                break;
            }
            need -= d;
        }
        if (!done) {
            pred_censored = true;
            delays.push_back(std::nullopt);
        }
    }
    return delays;
}

}  // namespace twrsim
