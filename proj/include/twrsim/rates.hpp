#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "twrsim/channel.hpp"

namespace twrsim {

// Instantaneous rate and bound expressions for one channel realization.
// All quantities are in b/s/Hz; one information-exchange round spans one
// multiple-access slot plus one broadcast slot, and the per-slot factor
// 1/2 appears exactly where the closed forms carry it.

// log2(1 + snr). Throws std::invalid_argument on negative snr.
double shannon_capacity(double snr_linear);

// min(C01, C21): sum-capacity bound of relaying schemes that forward the
// whole flow immediately, so each direction is pinned to its weaker hop.
double trad_upper_bound(const ChannelRealization& realization);

// (C01 + C21) / 2: the bound once buffering removes the min().
double aab_upper_bound(const ChannelRealization& realization);

struct MaRatePair {
    double strong = 0.0;  // rate of the source behind the stronger uplink
    double weak = 0.0;    // rate of the other source
    bool strong_is_01 = true;  // direction tag; ties resolve to link 0-1
};

// Multiple-access phase rate pair. With A = P*g_min/sigma^2:
//   weak   = (1/2) * [log2(1/2 + A)]+
//   strong = weak + (1/2) * log2(1 + P*(g_max - g_min)/(sigma^2 + 2*P*g_min))
MaRatePair ma_rate_pair(const ChannelRealization& realization);

struct BcRatePair {
    double to_weak_side = 0.0;    // toward the node behind the weaker link
    double to_strong_side = 0.0;  // toward the node behind the stronger link
};

// Broadcast phase rate pair under relay power split eta (lattice layer
// gets eta, backlog layer gets 1-eta). Throws if eta is outside [0, 1].
BcRatePair bc_rate_pair(const ChannelRealization& realization, double eta);

// Power fraction the stronger source puts on its lattice-coded layer so
// both lattice signals arrive at equal SNR: g_min / g_max. Defined as 1
// in the degenerate both-gains-zero case.
double zeta(const ChannelRealization& realization);

// Smallest relay power split that keeps the broadcast phase from
// reducing the weaker side's multiple-access rate. Piecewise in
// A = P*g_min/sigma^2, B = P*g_max/sigma^2:
//   A < 1/2               -> 0
//   g_min/g_max <= 1/2    -> 1 - 1/(2A)
//   otherwise             -> (2A-1)(B+1) / (B(1+2A))
// clamped to [0, 1].
double eta_min(const ChannelRealization& realization);

// Achievable sum rate of the buffered protocol:
//   [log2(1/2 + A)]+ + (1/2)*log2(1 + P*|g01-g21|/(sigma^2 + 2*P*g_min)).
// Equals ma_rate_pair().strong + weak exactly.
double aab_sum_rate(const ChannelRealization& realization);

// Denoise-and-forward baseline sum rate: [log2(1/2 + A)]+.
double dnf_sum_rate(const ChannelRealization& realization);

// Everything above for one realization, plus the instantaneous sum
// quantities, bundled for sweeps and traces.
struct InstantRates {
    double c01 = 0.0;
    double c21 = 0.0;
    double r01 = 0.0;
    double r21 = 0.0;
    double r10 = 0.0;
    double r12 = 0.0;
    double sum_trad_ub = 0.0;
    double sum_aab_ub = 0.0;
    double sum_aab_ach = 0.0;
    double sum_dnf = 0.0;
    double zeta = 0.0;
    double eta = 0.0;  // eta_min of the round
};

InstantRates instant_rates(const ChannelRealization& realization);

struct ErgodicEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
};

// Sample mean and standard error of fn over n_samples independent
// realizations. Welford's compensated one-pass update keeps the mean
// exact to rounding regardless of n. Deterministic given (config, stream).
template <typename Fn>
ErgodicEstimate ergodic(Fn&& fn, const FadingConfig& config, std::int64_t n_samples,
                        std::uint64_t stream = kChannelStream) {
    if (n_samples < 1) {
        throw std::invalid_argument("ergodic: n_samples must be >= 1");
    }
    ChannelSampler sampler(config, stream);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::int64_t i = 1; i <= n_samples; ++i) {
        const double x = fn(sampler.next());
        const double delta = x - mean;
        mean += delta / static_cast<double>(i);
        m2 += delta * (x - mean);
    }
    ErgodicEstimate est;
    est.mean = mean;
    est.n_samples = n_samples;
    if (n_samples > 1) {
        const double variance = m2 / static_cast<double>(n_samples - 1);
        est.std_error = std::sqrt(variance / static_cast<double>(n_samples));
    }
    return est;
}

}  // namespace twrsim
