#pragma once

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "coopsim/math.hpp"

namespace coopsim {

// Free-space power law with unity reference distance: mean rx power P * d^-alpha.
struct PathLossLaw {
    double tx_power_mw = 10.0;
    double exponent = 3.5;

    double mean_rx_power(double dist_m) const {
        if (dist_m <= 0.0)
            throw std::invalid_argument("PathLossLaw: two nodes at identical positions");
        return tx_power_mw * std::pow(dist_m, -exponent);
    }
};

inline double jakes_correlation(double lag_s, double doppler_hz) {
    return bessel_j0(2.0 * kPi * doppler_hz * lag_s);
}

// Time-correlated Rayleigh fading of one ordered link. The complex gain is
// evolved with a conditional Gaussian update whose one-step correlation equals
// J0(2*pi*fd*dt); |gain|^2 stays exponential with unit mean.
struct LinkChannel {
    double re = 0.0;
    double im = 0.0;
    double last_update = 0.0;

    template <class Rng>
    static LinkChannel init(Rng& rng, double t = 0.0) {
        std::normal_distribution<double> n(0.0, std::sqrt(0.5));
        return LinkChannel{n(rng), n(rng), t};
    }

    double power_gain() const { return re * re + im * im; }

    template <class Rng>
    void evolve(double t_new, double doppler_hz, Rng& rng) {
        if (t_new < last_update)
            throw std::invalid_argument("LinkChannel::evolve: time regression");
        if (t_new == last_update) return;
        const double rho = jakes_correlation(t_new - last_update, doppler_hz);
        const double sigma = std::sqrt(std::max(0.0, 1.0 - rho * rho) * 0.5);
        std::normal_distribution<double> n(0.0, 1.0);
        re = rho * re + sigma * n(rng);
        im = rho * im + sigma * n(rng);
        last_update = t_new;
    }
};

inline double instantaneous_capacity(double gamma, double bandwidth_hz) {
    if (gamma < 0.0) throw std::invalid_argument("capacity: negative SINR");
    return bandwidth_hz * std::log2(1.0 + gamma);
}

struct SinrSegment {
    double duration_s;
    double gamma;
};

// Information accumulated over a piecewise-constant SINR trace.
inline double decoded_bits(std::span<const SinrSegment> trace, double bandwidth_hz) {
    double bits = 0.0;
    for (const auto& seg : trace) {
        if (seg.duration_s < 0.0)
            throw std::invalid_argument("decoded_bits: gap in trace coverage");
        bits += seg.duration_s * instantaneous_capacity(seg.gamma, bandwidth_hz);
    }
    return bits;
}

} // namespace coopsim
