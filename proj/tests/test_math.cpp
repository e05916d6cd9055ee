#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "coopsim/math.hpp"
#include "coopsim/units.hpp"

using namespace coopsim;

namespace {

// Simpson quadrature of exp(-t)/t on [x, inf), the defining integral.
// Log substitution handles the near-singular head, a rational map the tail.
double e1_quadrature(double x) {
    double acc = 0.0;
    const double mid = std::max(x, 1.0);
    if (x < 1.0) {
        // t = x e^u: integrand becomes exp(-x e^u) on [0, ln(1/x)]
        auto g = [&](double u) { return std::exp(-x * std::exp(u)); };
        const double span = std::log(1.0 / x);
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const double a = span * i / n, b = span * (i + 1) / n;
            acc += (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
        }
    }
    // tail from mid: t = mid + v/(1-v)
    auto h = [&](double v) {
        const double t = mid + v / (1.0 - v);
        return std::exp(-t) / t / ((1.0 - v) * (1.0 - v));
    };
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double a = i / double(n), b = (i + 1.0) / double(n);
        acc += (b - a) / 6.0 * (h(a) + 4.0 * h(0.5 * (a + b)) + (b < 1.0 ? h(b) : 0.0));
    }
    return acc;
}

} // namespace

TEST_CASE("expint_e1 matches quadrature over a wide range") {
    for (double x : {1e-8, 1e-4, 0.01, 0.3, 0.999, 1.0, 1.5, 3.0, 10.0, 50.0}) {
        const double ref = e1_quadrature(x);
        REQUIRE(expint_e1(x) == Catch::Approx(ref).epsilon(1e-8));
    }
}

TEST_CASE("expint_e1 small-argument expansion") {
    // E1(x) ~ -gamma - ln x for x -> 0
    const double x = 1e-10;
    REQUIRE(expint_e1(x) == Catch::Approx(-kEulerGamma - std::log(x)).epsilon(1e-9));
}

TEST_CASE("scaled form agrees and stays finite for large arguments") {
    for (double x : {0.5, 1.0, 5.0, 100.0, 1000.0}) {
        if (x <= 500.0)
            REQUIRE(expint_e1_scaled(x) ==
                    Catch::Approx(std::exp(x) * expint_e1(x)).epsilon(1e-9));
        // asymptotic e^x E1(x) ~ 1/x (1 - 1/x + ...)
        if (x >= 100.0)
            REQUIRE(expint_e1_scaled(x) == Catch::Approx(1.0 / x).epsilon(0.02));
    }
}

TEST_CASE("bessel_j0 reference values") {
    // handbook values; rational fit is good to ~1e-7
    REQUIRE(bessel_j0(0.0) == Catch::Approx(1.0).margin(1e-7));
    REQUIRE(bessel_j0(1.0) == Catch::Approx(0.7651976866).margin(2e-7));
    REQUIRE(bessel_j0(2.404825557695773) == Catch::Approx(0.0).margin(2e-7));
    REQUIRE(bessel_j0(5.0) == Catch::Approx(-0.1775967713).margin(2e-7));
    REQUIRE(bessel_j0(10.0) == Catch::Approx(-0.2459357645).margin(2e-7));
    REQUIRE(bessel_j0(-3.0) == Catch::Approx(bessel_j0(3.0)).margin(1e-14));
}

TEST_CASE("dbm conversions round-trip") {
    REQUIRE(dbm_to_mw(0.0) == Catch::Approx(1.0));
    REQUIRE(dbm_to_mw(10.0) == Catch::Approx(10.0));
    REQUIRE(dbm_to_mw(-100.0) == Catch::Approx(1e-10));
    for (double d : {-102.0, -96.0, 3.7, 20.0})
        REQUIRE(mw_to_dbm(dbm_to_mw(d)) == Catch::Approx(d).margin(1e-12));
}

TEST_CASE("RunningStats against closed-form moments") {
    RunningStats st;
    for (int i = 1; i <= 5; ++i) st.add(i);
    REQUIRE(st.mean() == Catch::Approx(3.0));
    REQUIRE(st.variance() == Catch::Approx(2.5));
    REQUIRE(st.stderr_mean() == Catch::Approx(std::sqrt(2.5 / 5.0)));
}
