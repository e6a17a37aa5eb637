#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "twrsim/channel.hpp"
#include "twrsim/relay_delay.hpp"

namespace twrsim {

// End-to-end system view: Poisson packet arrivals queue at each source
// and are served fluidly at that round's uplink rate. The buffered
// protocol additionally runs the relay backlog queue on the same channel
// stream; the baseline forwards immediately and needs no relay buffer.

enum class Protocol { aab, dnf };

struct ArrivalConfig {
    double rho = 0.0;         // packets per time unit (per source)
    double packet_len = 10.0; // bits
    std::int64_t horizon_t = 0;
    std::int64_t warmup = 0;
};

struct ServiceRates {
    double bits_d02 = 0.0;  // source 0's budget this round
    double bits_d20 = 0.0;  // source 2's budget this round
};

// Per-round source service budgets. aab: the source behind the stronger
// uplink gets the strong multiple-access rate, the other the weak one.
// dnf: each direction gets half the baseline sum rate.
ServiceRates service_rates(Protocol protocol, const ChannelRealization& realization);

// FIFO fluid packet queue for one source. Packets may be served across
// several rounds; a packet's delay is completion_round - arrival_round.
class SourceQueue {
  public:
    void enqueue(std::int64_t round, double bits) { fifo_.push_back({round, bits}); }

    // Drains up to `budget` bits; completed packets with arrival_round >
    // warmup are accumulated into the served statistics.
    void serve(double budget, std::int64_t round, std::int64_t warmup);

    std::int64_t served() const { return served_; }
    double delay_sum() const { return delay_sum_; }
    std::size_t backlog_packets() const { return fifo_.size(); }
    std::int64_t censored_after(std::int64_t warmup) const;

  private:
    struct Packet {
        std::int64_t arrival_round;
        double bits_remaining;
    };
    std::deque<Packet> fifo_;
    std::int64_t served_ = 0;
    double delay_sum_ = 0.0;
};

struct SystemStats {
    double mean_ss_d02 = 0.0;  // source 0 packet delay
    double mean_ss_d20 = 0.0;  // source 2 packet delay
    std::optional<double> mean_st;  // relay buffer delay; aab only
    std::int64_t served_packets = 0;
    std::int64_t censored_packets = 0;
};

// Runs `horizon_t` rounds of the full system. Streams: channel draws on
// kChannelStream, per-source arrivals on kArrivalsSource0/2, so the
// channel realization sequence is identical for every (protocol, rho)
// at a fixed seed. Rejects rho above 10x the estimated per-direction
// capacity instead of filling an unbounded queue.
SystemStats simulate_system(Protocol protocol, const FadingConfig& fading,
                            const ArrivalConfig& arrivals);

// Ergodic per-direction service rate divided by packet_len: the largest
// arrival rate each source can sustain. Uses kCapacityStream.
double max_stable_par(Protocol protocol, const FadingConfig& fading, std::int64_t n_samples,
                      double packet_len = 10.0);

}  // namespace twrsim
