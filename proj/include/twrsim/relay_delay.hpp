#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "twrsim/channel.hpp"

namespace twrsim {

// Relay-buffer surplus/backlog model. In each round the stronger uplink
// injects surplus bits into that direction's FIFO; the buffer of the
// opposite direction drains over the (now stronger) downlink. An
// injection born in round t that empties in round t+l has delay l, and l
// is always >= 1 because a direction never injects and drains in the
// same round.

enum class FlowDirection { d02 = 0, d20 = 1 };

inline int dir_index(FlowDirection d) { return static_cast<int>(d); }

struct DelayMode {
    enum class Kind { upper_bound, suboptimal };
    Kind kind = Kind::upper_bound;
    double theta = 1.0;  // used by upper_bound only

    // theta scales how much of the capacity gap is realized as surplus.
    static DelayMode UpperBound(double theta);
    static DelayMode Suboptimal();
};

struct SurplusEvent {
    FlowDirection direction = FlowDirection::d02;  // d02 when g01 >= g21
    double bits = 0.0;                             // 0 at gain ties
};

// Surplus injected this round. upper_bound: theta * |C01 - C21|.
// suboptimal: log2(1 + P*|g01 - g21| / (sigma^2 + 2*P*g_min)).
SurplusEvent surplus_bits(const DelayMode& mode, const ChannelRealization& realization);

struct DrainEvent {
    std::optional<FlowDirection> direction;  // empty at gain ties
    double bits = 0.0;
};

// Drain capacity this round, applied to the direction whose downlink is
// strictly stronger (d02 when g21 > g01). upper_bound: |C01 - C21|.
// suboptimal: log2(1 + (1-eta) * P * g_strong / sigma^2) with eta taken
// from eta_at_round (ignored in upper_bound mode).
DrainEvent drain_bits(const DelayMode& mode, const ChannelRealization& realization,
                      double eta_at_round);

struct Injection {
    std::int64_t birth_round = 0;
    double bits_total = 0.0;
    double bits_remaining = 0.0;
    FlowDirection direction = FlowDirection::d02;
};

struct CompletionEvent {
    std::int64_t birth_round = 0;
    std::int64_t completion_round = 0;
    std::int64_t delay = 0;  // completion_round - birth_round
    FlowDirection direction = FlowDirection::d02;
};

// Per-round trace row matching the CSV columns written by step(..., trace).
inline constexpr const char* kTraceHeader =
    "round,g01,g21,inject_dir,inject_bits,drain_d02,drain_d20,backlog_d02,backlog_d20,"
    "completions";

class RelayBacklogQueue {
  public:
    explicit RelayBacklogQueue(DelayMode mode) : mode_(mode) {}

    // Feeds one round (round indices must be strictly increasing).
    // Within a round the drain is applied before the injection, so drain
    // capacity only ever serves bits stored in earlier rounds. Returns
    // the injections completed this round, FIFO order.
    std::vector<CompletionEvent> step(const ChannelRealization& realization,
                                      std::ostream* trace = nullptr);

    double backlog_bits(FlowDirection d) const;
    std::size_t pending_count(FlowDirection d) const { return fifo_[dir_index(d)].size(); }
    double injected_bits(FlowDirection d) const { return injected_[dir_index(d)]; }
    double drained_bits(FlowDirection d) const { return drained_[dir_index(d)]; }
    const std::deque<Injection>& pending(FlowDirection d) const { return fifo_[dir_index(d)]; }

  private:
    DelayMode mode_;
    std::deque<Injection> fifo_[2];
    double injected_[2] = {0.0, 0.0};
    double drained_[2] = {0.0, 0.0};
    std::int64_t last_round_ = -1;
    bool started_ = false;
};

struct DelayStats {
    double mean_l01 = 0.0;  // mean completion delay, direction 0->2
    double mean_l21 = 0.0;  // mean completion delay, direction 2->0
    std::int64_t count_01 = 0;
    std::int64_t count_21 = 0;
    std::int64_t censored_count = 0;  // post-warmup injections alive at the horizon
};

// Streams horizon_t rounds from a fresh sampler through the queue.
// Completions whose birth round is > warmup enter the means; censored
// injections are counted and excluded. An optional trace stream receives
// one CSV row per round (kTraceHeader is written first).
DelayStats run_delay_sim(const FadingConfig& config, const DelayMode& mode,
                         std::int64_t horizon_t, std::int64_t warmup,
                         std::uint64_t stream = kChannelStream, std::ostream* trace = nullptr);

// Per-direction surplus/drain amounts for a stored realization window,
// aligned by round. surplus[t] > 0 exactly when round t injects into
// `direction`; drain[t] is that direction's drain capacity in round t.
struct DirectionSequences {
    std::vector<double> surplus;
    std::vector<double> drain;
};

DirectionSequences build_direction_sequences(FlowDirection direction, const DelayMode& mode,
                                             std::span<const ChannelRealization> rounds);

// Reference evaluation of the completion delays, independent of the
// queue engine: for each injection in birth order, scan forward through
// the drain sequence, consuming what the predecessor left of its
// completion round, until the cumulative drain covers the injection.
// Returns one entry per round with surplus[t] > 0, in round order;
// nullopt marks an injection still incomplete at the end of the window.
// Capped at 10^4 rounds (throws std::invalid_argument beyond).
std::vector<std::optional<std::int64_t>> reference_completion_delays(
    std::span<const double> surplus, std::span<const double> drain);

}  // namespace twrsim
