#pragma once

#include <cstdint>
#include <random>

#include "twrsim/rng.hpp"

namespace twrsim {

// Two source nodes exchange data through one relay. Node 0 sits at
// (-0.5, 0), node 2 at (+0.5, 0); the inter-source distance is the unit
// of length. The relay position is either fixed or drawn uniformly from
// the [-0.5, 0.5]^2 square.

enum class Endpoint { source0, source2 };

enum class PlacementPolicy {
    fixed,                    // relay pinned at Geometry::relay_x/relay_y
    uniform_per_round,        // fresh U[-0.5,0.5]^2 position every round
    uniform_per_replication,  // one U[-0.5,0.5]^2 position per sampler
};

struct Geometry {
    double relay_x = 0.0;
    double relay_y = 0.0;
    double beta = 3.0;  // path-loss exponent
};

// Euclidean distance from the named source to the relay.
double distance(const Geometry& geometry, Endpoint endpoint);

struct FadingConfig {
    double nakagami_m = 1.0;  // shape; 1 = Rayleigh
    double power = 10.0;      // transmit power P (linear), same at all nodes
    double noise_var = 1.0;   // sigma^2 (linear), same at all nodes
    PlacementPolicy placement = PlacementPolicy::uniform_per_round;
    Geometry geometry;        // position used by `fixed`; beta used always
    std::uint64_t seed = 1;

    // Throws std::invalid_argument on out-of-domain values (m < 0.5,
    // nonpositive power/noise/beta, fixed relay coinciding with a source).
    void validate() const;
};

// One round of reciprocal link gains. g01 = |h01|^2 = |h10|^2 and
// g21 = |h21|^2 = |h12|^2; the reverse links are never stored separately.
struct ChannelRealization {
    std::int64_t round = 0;
    double g01 = 0.0;
    double g21 = 0.0;
    double power = 1.0;
    double noise_var = 1.0;
};

enum class Link { uplink01, uplink21, downlink10, downlink12 };

// gamma_ij = P * g / sigma^2 for the requested link. Reciprocity makes
// snr(r, uplink01) == snr(r, downlink10) by construction.
double snr(const ChannelRealization& realization, Link link);

// Draws per-round gains g = |alpha|^2 * d^(-beta) with |alpha|^2 ~
// Gamma(shape = m, scale = 1/m), i.e. Nakagami-m power with unit mean.
// Per round the draw order is: placement x, y (uniform_per_round only),
// then alpha01^2, then alpha21^2. Deterministic given (config, stream).
class ChannelSampler {
  public:
    explicit ChannelSampler(const FadingConfig& config, std::uint64_t stream = kChannelStream);

    ChannelRealization next();

    const FadingConfig& config() const { return config_; }

  private:
    FadingConfig config_;
    std::mt19937_64 rng_;
    std::gamma_distribution<double> alpha_sq_;
    std::uniform_real_distribution<double> position_;
    Geometry current_;
    std::int64_t round_ = 0;
};

}  // namespace twrsim
