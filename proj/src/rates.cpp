#include "twrsim/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace twrsim {

namespace {

struct OrderedGains {
    double g_min = 0.0;
    double g_max = 0.0;
    bool strong_is_01 = true;
};

OrderedGains ordered(const ChannelRealization& r) {
    OrderedGains o;
    o.strong_is_01 = r.g01 >= r.g21;
    o.g_min = o.strong_is_01 ? r.g21 : r.g01;
    o.g_max = o.strong_is_01 ? r.g01 : r.g21;
    return o;
}

inline double pos(double x) { return std::max(x, 0.0); }

}  // namespace

double shannon_capacity(double snr_linear) {
    if (snr_linear < 0.0) {
        throw std::invalid_argument("shannon_capacity: negative SNR");
    }
    return std::log2(1.0 + snr_linear);
}

double trad_upper_bound(const ChannelRealization& r) {
    const double c01 = shannon_capacity(snr(r, Link::uplink01));
    const double c21 = shannon_capacity(snr(r, Link::uplink21));
    return std::min(c01, c21);
}

double aab_upper_bound(const ChannelRealization& r) {
    const double c01 = shannon_capacity(snr(r, Link::uplink01));
    const double c21 = shannon_capacity(snr(r, Link::uplink21));
    return 0.5 * (c01 + c21);
}

MaRatePair ma_rate_pair(const ChannelRealization& r) {
    const OrderedGains o = ordered(r);
    const double p = r.power;
    const double nv = r.noise_var;
    MaRatePair pair;
    pair.strong_is_01 = o.strong_is_01;
    pair.weak = 0.5 * pos(std::log2(0.5 + p * o.g_min / nv));
    pair.strong =
        pair.weak + 0.5 * std::log2(1.0 + p * (o.g_max - o.g_min) / (nv + 2.0 * p * o.g_min));
    return pair;
}

BcRatePair bc_rate_pair(const ChannelRealization& r, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("bc_rate_pair: eta must be in [0, 1]");
    }
    const OrderedGains o = ordered(r);
    const double p = r.power;
    const double nv = r.noise_var;
    BcRatePair pair;
    // Downlink gains mirror the uplinks; the weaker-link node receives the
    // lattice layer only, the stronger-link node peels both layers.
    pair.to_weak_side = 0.5 * std::log2(1.0 + eta * p * o.g_min / nv);
    pair.to_strong_side =
        0.5 * (std::log2(1.0 + eta * p * o.g_max / (nv + (1.0 - eta) * p * o.g_max)) +
               std::log2(1.0 + (1.0 - eta) * p * o.g_max / nv));
    return pair;
}

double zeta(const ChannelRealization& r) {
    const OrderedGains o = ordered(r);
    if (o.g_max == 0.0) {
        return 1.0;  // degenerate: both links fully faded
    }
    return o.g_min / o.g_max;
}

double eta_min(const ChannelRealization& r) {
    const OrderedGains o = ordered(r);
    const double a = r.power * o.g_min / r.noise_var;
    if (a < 0.5) {
        return 0.0;
    }
    const double b = r.power * o.g_max / r.noise_var;
    const double ratio = o.g_min / o.g_max;  // g_max > 0 here since a >= 1/2
    double eta;
    if (ratio <= 0.5) {
        eta = 1.0 - 1.0 / (2.0 * a);
    } else {
        eta = (2.0 * a - 1.0) * (b + 1.0) / (b * (1.0 + 2.0 * a));
    }
    return std::clamp(eta, 0.0, 1.0);
}

double aab_sum_rate(const ChannelRealization& r) {
    const OrderedGains o = ordered(r);
    const double p = r.power;
    const double nv = r.noise_var;
    return pos(std::log2(0.5 + p * o.g_min / nv)) +
           0.5 * std::log2(1.0 + p * (o.g_max - o.g_min) / (nv + 2.0 * p * o.g_min));
}

double dnf_sum_rate(const ChannelRealization& r) {
    const OrderedGains o = ordered(r);
    return pos(std::log2(0.5 + r.power * o.g_min / r.noise_var));
}

InstantRates instant_rates(const ChannelRealization& r) {
    InstantRates out;
    out.c01 = shannon_capacity(snr(r, Link::uplink01));
    out.c21 = shannon_capacity(snr(r, Link::uplink21));
    const MaRatePair ma = ma_rate_pair(r);
    out.r01 = ma.strong_is_01 ? ma.strong : ma.weak;
    out.r21 = ma.strong_is_01 ? ma.weak : ma.strong;
    out.eta = eta_min(r);
    const BcRatePair bc = bc_rate_pair(r, out.eta);
    // r12 serves the node behind the weaker link when g01 >= g21.
    out.r12 = ma.strong_is_01 ? bc.to_weak_side : bc.to_strong_side;
    out.r10 = ma.strong_is_01 ? bc.to_strong_side : bc.to_weak_side;
    out.sum_trad_ub = std::min(out.c01, out.c21);
    out.sum_aab_ub = 0.5 * (out.c01 + out.c21);
    out.sum_aab_ach = aab_sum_rate(r);
    out.sum_dnf = dnf_sum_rate(r);
    out.zeta = zeta(r);
    return out;
}

}  // namespace twrsim
