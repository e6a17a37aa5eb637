#include "twrsim/queueing.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "twrsim/rates.hpp"

namespace twrsim {

ServiceRates service_rates(Protocol protocol, const ChannelRealization& r) {
    ServiceRates out;
    if (protocol == Protocol::aab) {
        const MaRatePair pair = ma_rate_pair(r);
        out.bits_d02 = pair.strong_is_01 ? pair.strong : pair.weak;
        out.bits_d20 = pair.strong_is_01 ? pair.weak : pair.strong;
    } else {
        const double half = 0.5 * dnf_sum_rate(r);
        out.bits_d02 = half;
        out.bits_d20 = half;
    }
    return out;
}

void SourceQueue::serve(double budget, std::int64_t round, std::int64_t warmup) {
    while (budget > 0.0 && !fifo_.empty()) {
        Packet& front = fifo_.front();
        if (budget >= front.bits_remaining) {
            budget -= front.bits_remaining;
            if (front.arrival_round > warmup) {
                delay_sum_ += static_cast<double>(round - front.arrival_round);
                ++served_;
            }
            fifo_.pop_front();
        } else {
            front.bits_remaining -= budget;
            budget = 0.0;
        }
    }
}

std::int64_t SourceQueue::censored_after(std::int64_t warmup) const {
    std::int64_t n = 0;
    for (const Packet& p : fifo_) {
        if (p.arrival_round > warmup) {
            ++n;
        }
    }
    return n;
}

SystemStats simulate_system(Protocol protocol, const FadingConfig& fading,
                            const ArrivalConfig& arrivals) {
    if (arrivals.rho < 0.0 || !std::isfinite(arrivals.rho)) {
        throw std::invalid_argument("simulate_system: rho must be finite and >= 0");
    }
    if (!(arrivals.packet_len > 0.0)) {
        throw std::invalid_argument("simulate_system: packet_len must be positive");
    }
    if (arrivals.horizon_t <= arrivals.warmup || arrivals.warmup < 0) {
        throw std::invalid_argument("simulate_system: need horizon_t > warmup >= 0");
    }
    if (arrivals.rho > 0.0) {
        const double cap = max_stable_par(protocol, fading, 100000, arrivals.packet_len);
        if (arrivals.rho > 10.0 * cap) {
            std::ostringstream msg;
            msg << "simulate_system: rho=" << arrivals.rho
                << " exceeds 10x the estimated stable arrival rate (" << cap
                << " packets/round); the source backlog would grow without bound";
            throw std::invalid_argument(msg.str());
        }
    }

    ChannelSampler sampler(fading, kChannelStream);
    std::mt19937_64 arrivals0 = make_stream(fading.seed, kArrivalsSource0);
    std::mt19937_64 arrivals2 = make_stream(fading.seed, kArrivalsSource2);
    std::poisson_distribution<int> poisson(arrivals.rho > 0.0 ? arrivals.rho : 1.0);

    SourceQueue source0;
    SourceQueue source2;
    const DelayMode relay_mode = DelayMode::Suboptimal();
    RelayBacklogQueue relay(relay_mode);
    double st_sum = 0.0;
    std::int64_t st_count = 0;

    for (std::int64_t t = 0; t < arrivals.horizon_t; ++t) {
        const ChannelRealization r = sampler.next();
        if (arrivals.rho > 0.0) {
            const int n0 = poisson(arrivals0);
            const int n2 = poisson(arrivals2);
            for (int i = 0; i < n0; ++i) {
                source0.enqueue(t, arrivals.packet_len);
            }
            for (int i = 0; i < n2; ++i) {
                source2.enqueue(t, arrivals.packet_len);
            }
        }
        const ServiceRates rates = service_rates(protocol, r);
        source0.serve(rates.bits_d02, t, arrivals.warmup);
        source2.serve(rates.bits_d20, t, arrivals.warmup);
        if (protocol == Protocol::aab) {
            for (const CompletionEvent& ev : relay.step(r)) {
                if (ev.birth_round > arrivals.warmup) {
                    st_sum += static_cast<double>(ev.delay);
                    ++st_count;
                }
            }
        }
    }

    SystemStats stats;
    stats.mean_ss_d02 =
        source0.served() > 0 ? source0.delay_sum() / static_cast<double>(source0.served()) : 0.0;
    stats.mean_ss_d20 =
        source2.served() > 0 ? source2.delay_sum() / static_cast<double>(source2.served()) : 0.0;
    stats.served_packets = source0.served() + source2.served();
    stats.censored_packets =
        source0.censored_after(arrivals.warmup) + source2.censored_after(arrivals.warmup);
    if (protocol == Protocol::aab) {
        stats.mean_st = st_count > 0 ? st_sum / static_cast<double>(st_count) : 0.0;
    }
    return stats;
}

double max_stable_par(Protocol protocol, const FadingConfig& fading, std::int64_t n_samples,
                      double packet_len) {
    if (n_samples < 1000) {
        throw std::invalid_argument("max_stable_par: n_samples must be >= 10^3");
    }
    if (!(packet_len > 0.0)) {
        throw std::invalid_argument("max_stable_par: packet_len must be positive");
    }
    const ErgodicEstimate rate = ergodic(
        [protocol](const ChannelRealization& r) {
            const ServiceRates s = service_rates(protocol, r);
            return 0.5 * (s.bits_d02 + s.bits_d20);
        },
        fading, n_samples, kCapacityStream);
    return rate.mean / packet_len;
}

}  // namespace twrsim
