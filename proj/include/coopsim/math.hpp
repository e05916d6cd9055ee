#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace coopsim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEulerGamma = 0.57721566490153286061;

// Zero-order Bessel function of the first kind, rational/asymptotic fit
// (Abramowitz & Stegun 9.4.1 and 9.4.3, ~1e-7 absolute).
inline double bessel_j0(double x) {
    const double ax = std::fabs(x);
    if (ax < 8.0) {
        const double y = x * x;
        const double p1 = 57568490574.0 + y * (-13362590354.0 + y * (651619640.7 +
                          y * (-11214424.18 + y * (77392.33017 + y * -184.9052456))));
        const double p2 = 57568490411.0 + y * (1029532985.0 + y * (9494680.718 +
                          y * (59272.64853 + y * (267.8532712 + y))));
        return p1 / p2;
    }
    const double z = 8.0 / ax;
    const double y = z * z;
    const double xx = ax - 0.785398164;
    const double p1 = 1.0 + y * (-0.1098628627e-2 + y * (0.2734510407e-4 +
                      y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
    const double p2 = -0.1562499995e-1 + y * (0.1430488765e-3 +
                      y * (-0.6911147651e-5 + y * (0.7621095161e-6 - y * 0.934935152e-7)));
    return std::sqrt(0.636619772 / ax) * (std::cos(xx) * p1 - z * std::sin(xx) * p2);
}

// Exponential integral E1(x) for x > 0.
// Series for x < 1, continued fraction (modified Lentz) for x >= 1;
// both converge to ~1e-10 absolute in a handful of iterations.
inline double expint_e1(double x) {
    if (x <= 0.0) throw std::domain_error("expint_e1: argument must be positive");
    if (x < 1.0) {
        double sum = 0.0, term = 1.0;
        for (int k = 1; k <= 40; ++k) {
            term *= -x / k;
            const double add = -term / k;
            sum += add;
            if (std::fabs(add) < 1e-16 * (std::fabs(sum) + 1.0)) break;
        }
        return -kEulerGamma - std::log(x) + sum;
    }
    return std::exp(-x) * [&] {
        const double tiny = 1e-300;
        double b = x + 1.0, c = 1.0 / tiny, d = 1.0 / b, h = d;
        for (int k = 1; k <= 200; ++k) {
            const double a = -static_cast<double>(k) * k;
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            const double delta = c * d;
            h *= delta;
            if (std::fabs(delta - 1.0) < 1e-14) break;
        }
        return h;
    }();
}

// e^x * E1(x), stable for large x where E1 underflows.
inline double expint_e1_scaled(double x) {
    if (x <= 0.0) throw std::domain_error("expint_e1_scaled: argument must be positive");
    if (x < 1.0) return std::exp(x) * expint_e1(x);
    const double tiny = 1e-300;
    double b = x + 1.0, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int k = 1; k <= 200; ++k) {
        const double a = -static_cast<double>(k) * k;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double delta = c * d;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-14) break;
    }
    return h;
}

struct RunningStats {
    long long n = 0;
    double sum = 0.0, sumsq = 0.0;
    void add(double v) { ++n; sum += v; sumsq += v * v; }
    double mean() const { return n ? sum / n : 0.0; }
    double variance() const {
        if (n < 2) return 0.0;
        const double m = mean();
        return (sumsq - n * m * m) / (n - 1);
    }
    double stddev() const { return std::sqrt(std::max(0.0, variance())); }
    double stderr_mean() const { return n ? stddev() / std::sqrt(double(n)) : 0.0; }
};

} // namespace coopsim
