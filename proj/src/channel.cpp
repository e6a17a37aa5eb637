#include "twrsim/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace twrsim {

namespace {
constexpr double kSource0X = -0.5;
constexpr double kSource2X = 0.5;
}  // namespace

double distance(const Geometry& geometry, Endpoint endpoint) {
    const double sx = endpoint == Endpoint::source0 ? kSource0X : kSource2X;
    return std::hypot(geometry.relay_x - sx, geometry.relay_y);
}

void FadingConfig::validate() const {
    if (!(nakagami_m >= 0.5)) {
        throw std::invalid_argument("nakagami_m must be >= 0.5");
    }
    if (!(power > 0.0) || !std::isfinite(power)) {
        throw std::invalid_argument("power must be positive and finite");
    }
    if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
        throw std::invalid_argument("noise_var must be positive and finite");
    }
    if (!(geometry.beta > 0.0)) {
        throw std::invalid_argument("beta must be positive");
    }
    if (placement == PlacementPolicy::fixed) {
        if (distance(geometry, Endpoint::source0) <= 0.0 ||
            distance(geometry, Endpoint::source2) <= 0.0) {
            throw std::invalid_argument("fixed relay position coincides with a source");
        }
    }
}

double snr(const ChannelRealization& realization, Link link) {
    const double g = (link == Link::uplink01 || link == Link::downlink10)
                         ? realization.g01
                         : realization.g21;
    return realization.power * g / realization.noise_var;
}

ChannelSampler::ChannelSampler(const FadingConfig& config, std::uint64_t stream)
    : config_(config),
      rng_(make_stream(config.seed, stream)),
      alpha_sq_(config.nakagami_m, 1.0 / config.nakagami_m),
      position_(-0.5, 0.5),
      current_(config.geometry) {
    config_.validate();
    if (config_.placement == PlacementPolicy::uniform_per_replication) {
        current_.relay_x = position_(rng_);
        current_.relay_y = position_(rng_);
    }
}

ChannelRealization ChannelSampler::next() {
    if (config_.placement == PlacementPolicy::uniform_per_round) {
        current_.relay_x = position_(rng_);
        current_.relay_y = position_(rng_);
    }
    const double beta = config_.geometry.beta;
    const double d0 = distance(current_, Endpoint::source0);
    const double d2 = distance(current_, Endpoint::source2);
    const double a01 = alpha_sq_(rng_);
    const double a21 = alpha_sq_(rng_);

    ChannelRealization r;
    r.round = round_++;
    r.g01 = a01 * std::pow(d0, -beta);
    r.g21 = a21 * std::pow(d2, -beta);
    r.power = config_.power;
    r.noise_var = config_.noise_var;
    return r;
}

}  // namespace twrsim
