#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "coopsim/channel.hpp"
#include "coopsim/rng.hpp"

using namespace coopsim;

TEST_CASE("path loss at reference distances") {
    PathLossLaw law{10.0, 3.5};
    REQUIRE(law.mean_rx_power(1.0) == Catch::Approx(10.0));
    REQUIRE(law.mean_rx_power(60.0) == Catch::Approx(5.9716e-6).epsilon(1e-3));
    REQUIRE(law.mean_rx_power(120.0) ==
            Catch::Approx(law.mean_rx_power(60.0) / std::pow(2.0, 3.5)).epsilon(1e-12));
    REQUIRE_THROWS_AS(law.mean_rx_power(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(law.mean_rx_power(-2.0), std::invalid_argument);
}

TEST_CASE("jakes correlation endpoints") {
    REQUIRE(jakes_correlation(0.0, 11.1) == Catch::Approx(1.0));
    // first zero of J0 at 2.404825...: lag = 2.404825 / (2 pi fd)
    const double lag = 2.404825557695773 / (2.0 * kPi * 11.1);
    REQUIRE(jakes_correlation(lag, 11.1) == Catch::Approx(0.0).margin(2e-7));
}

TEST_CASE("stationary gain distribution is Exp(1)") {
    auto rng = make_rng(42);
    const int n = 200000;
    std::vector<double> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i) samples.push_back(LinkChannel::init(rng).power_gain());
    std::sort(samples.begin(), samples.end());
    double mean = 0.0, ks = 0.0;
    for (int i = 0; i < n; ++i) {
        mean += samples[i];
        const double cdf = 1.0 - std::exp(-samples[i]);
        ks = std::max(ks, std::max(std::abs(cdf - double(i) / n),
                                   std::abs(cdf - double(i + 1) / n)));
    }
    mean /= n;
    REQUIRE(mean == Catch::Approx(1.0).margin(0.01));
    // KS critical value at alpha = 0.001 is 1.9495 / sqrt(n)
    REQUIRE(ks < 1.9495 / std::sqrt(double(n)));
}

TEST_CASE("one-step correlation of the complex gain equals J0") {
    auto rng = make_rng(7);
    const double fd = 11.1, dt = 1e-3;
    const double rho = jakes_correlation(dt, fd);
    const int n = 400000;
    double acc_re = 0.0, acc_gain = 0.0;
    for (int i = 0; i < n; ++i) {
        auto link = LinkChannel::init(rng);
        const double re0 = link.re, im0 = link.im;
        link.evolve(dt, fd, rng);
        acc_re += re0 * link.re + im0 * link.im;   // Re<h0 conj(h1)>
        acc_gain += link.power_gain();
    }
    // E[Re h0* h1] = rho * E|h0|^2 = rho
    REQUIRE(acc_re / n == Catch::Approx(rho).margin(0.01));
    REQUIRE(acc_gain / n == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("evolve is a no-op at equal time and throws on regression") {
    auto rng = make_rng(1);
    auto link = LinkChannel::init(rng);
    link.evolve(0.5, 11.1, rng);
    const double g = link.power_gain();
    link.evolve(0.5, 11.1, rng);
    REQUIRE(link.power_gain() == g);
    REQUIRE_THROWS_AS(link.evolve(0.25, 11.1, rng), std::invalid_argument);
}

TEST_CASE("long-lag evolution decorrelates") {
    auto rng = make_rng(9);
    const int n = 200000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        auto link = LinkChannel::init(rng);
        const double re0 = link.re, im0 = link.im;
        for (int s = 1; s <= 100; ++s) link.evolve(s * 0.01, 11.1, rng);   // fd * lag >> 1
        acc += re0 * link.re + im0 * link.im;
    }
    REQUIRE(std::abs(acc / n) < 0.01);
}

TEST_CASE("decoded bits equals quadrature of the trace") {
    const std::vector<SinrSegment> trace{{1e-3, 3.0}, {0.5e-3, 0.2}, {2e-3, 10.0}};
    double ref = 0.0;
    for (const auto& s : trace) ref += s.duration_s * 1e6 * std::log2(1.0 + s.gamma);
    REQUIRE(decoded_bits(trace, 1e6) == Catch::Approx(ref).epsilon(1e-12));
    REQUIRE(decoded_bits({}, 1e6) == 0.0);
    const std::vector<SinrSegment> bad{{-1e-6, 1.0}};
    REQUIRE_THROWS_AS(decoded_bits(bad, 1e6), std::invalid_argument);
}

TEST_CASE("decoded bits is monotone in SINR and duration") {
    const std::vector<SinrSegment> a{{1e-3, 2.0}};
    const std::vector<SinrSegment> b{{1e-3, 3.0}};
    const std::vector<SinrSegment> c{{2e-3, 2.0}};
    REQUIRE(decoded_bits(a, 1e6) < decoded_bits(b, 1e6));
    REQUIRE(decoded_bits(a, 1e6) < decoded_bits(c, 1e6));
}
