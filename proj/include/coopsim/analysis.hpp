#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "coopsim/channel.hpp"
#include "coopsim/geometry.hpp"
#include "coopsim/math.hpp"

namespace coopsim {

// Four-node scene used by the closed-form / Monte Carlo throughput study.
// Interference at C and D is exponential with mean sigma_i2_mw.
struct AnalyticScene {
    Vec2 p_s, p_d, p_c;
    Rect region{-150.0, 200.0, -200.0, 200.0};
    double sigma_i2_mw = 0.0;
    PathLossLaw law{};
    double noise_mw = 6.309573444801943e-11;   // -102 dBm
    double bandwidth_hz = 1e6;
    double cs_threshold_mw = 1e-10;            // -100 dBm
};

// G(a) = (B/ln2) e^-a Integral_{-a}^inf e^-t / t dt, defined for a < 0.
inline double g_function(double a, double bandwidth_hz) {
    if (a >= 0.0) throw std::domain_error("g_function: requires a < 0");
    return bandwidth_hz / std::log(2.0) * expint_e1_scaled(-a);
}

// Fading/interference average of B*log2(1+gamma_sd). Closed form; the
// removable singularity at P d^-alpha == sigma_i2 is handled by symmetric
// perturbation.
inline double tau_direct(const AnalyticScene& sc) {
    const double m_sd = sc.law.mean_rx_power(distance(sc.p_s, sc.p_d));
    const double s2 = sc.sigma_i2_mw;
    if (s2 <= 0.0) return g_function(-sc.noise_mw / m_sd, sc.bandwidth_hz);
    auto eval = [&](double m) {
        return m / (m - s2) *
               (g_function(-sc.noise_mw / m, sc.bandwidth_hz) -
                g_function(-sc.noise_mw / s2, sc.bandwidth_hz));
    };
    if (std::fabs(m_sd - s2) < 1e-6 * m_sd) {
        const double h = 1e-6 * m_sd;
        return 0.5 * (eval(m_sd + h) + eval(m_sd - h));
    }
    return eval(m_sd);
}

// Duration of a two-phase delivery, L (C_sc + C_cd - C_sd) / (C_sc C_cd).
inline double t_split_closed(double c_sc, double c_cd, double c_sd, double payload_bits) {
    const double denom = c_sc * c_cd;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return payload_bits * (c_sc + c_cd - c_sd) / denom;
}

// Split region: both hop capacities at least the direct capacity.
inline bool in_split_region(double gamma_sc, double gamma_cd, double gamma_sd) {
    return gamma_sc >= gamma_sd && gamma_cd >= gamma_sd;
}

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Eq.-style Monte Carlo of the cooperative throughput: min-time strategy over
// {split, direct} with i.i.d. interference of mean sigma_i2 at C and D.
template <class Rng>
MonteCarloEstimate tau_coop(const AnalyticScene& sc, long long n_samples, Rng& rng) {
    if (n_samples < 1) throw std::invalid_argument("tau_coop: n_samples < 1");
    const double m_sd = sc.law.mean_rx_power(distance(sc.p_s, sc.p_d));
    const double m_sc = sc.law.mean_rx_power(distance(sc.p_s, sc.p_c));
    const double m_cd = sc.law.mean_rx_power(distance(sc.p_c, sc.p_d));
    std::exponential_distribution<double> unit(1.0);
    RunningStats stats;
    for (long long i = 0; i < n_samples; ++i) {
        const double eta_sd = m_sd * unit(rng);
        const double eta_sc = m_sc * unit(rng);
        const double eta_cd = m_cd * unit(rng);
        const double iota_c = sc.sigma_i2_mw > 0.0 ? sc.sigma_i2_mw * unit(rng) : 0.0;
        const double iota_d = sc.sigma_i2_mw > 0.0 ? sc.sigma_i2_mw * unit(rng) : 0.0;
        const double g_sd = eta_sd / (sc.noise_mw + iota_d);
        const double g_sc = eta_sc / (sc.noise_mw + iota_c);
        const double g_cd = eta_cd / (sc.noise_mw + iota_d);
        const double c_sd = instantaneous_capacity(g_sd, sc.bandwidth_hz);
        double rate = c_sd;
        if (in_split_region(g_sc, g_cd, g_sd)) {
            const double c_sc = instantaneous_capacity(g_sc, sc.bandwidth_hz);
            const double c_cd = instantaneous_capacity(g_cd, sc.bandwidth_hz);
            const double denom = c_sc + c_cd - c_sd;
            rate = denom > 0.0 ? c_sc * c_cd / denom : 0.0;
        }
        stats.add(rate);
    }
    return {stats.mean(), stats.stderr_mean()};
}

// Monte Carlo of tau_direct with the same sampling scheme; used as the
// independent check of the closed form.
template <class Rng>
MonteCarloEstimate tau_direct_mc(const AnalyticScene& sc, long long n_samples, Rng& rng) {
    const double m_sd = sc.law.mean_rx_power(distance(sc.p_s, sc.p_d));
    std::exponential_distribution<double> unit(1.0);
    RunningStats stats;
    for (long long i = 0; i < n_samples; ++i) {
        const double eta = m_sd * unit(rng);
        const double iota = sc.sigma_i2_mw > 0.0 ? sc.sigma_i2_mw * unit(rng) : 0.0;
        stats.add(instantaneous_capacity(eta / (sc.noise_mw + iota), sc.bandwidth_hz));
    }
    return {stats.mean(), stats.stderr_mean()};
}

// Probability that a node at p_i senses the medium idle while p_s transmits:
// 1 - exp(-(Lambda - N) / (P d^-alpha)).
inline double idle_probability(const Vec2& p_s, const Vec2& p_i, const PathLossLaw& law,
                               double cs_threshold_mw, double noise_mw) {
    if (cs_threshold_mw <= noise_mw)
        throw std::invalid_argument("idle_probability: CS threshold must exceed the noise floor");
    const double mean = law.mean_rx_power(distance(p_s, p_i));
    return 1.0 - std::exp(-(cs_threshold_mw - noise_mw) / mean);
}

struct ScalarField {
    Rect window;
    int nx = 0, ny = 0;
    std::vector<double> values;   // row-major, y outer

    double at(int ix, int iy) const { return values[static_cast<size_t>(iy) * nx + ix]; }
    Vec2 point(int ix, int iy) const {
        return {window.x0 + (ix + 0.5) * window.width() / nx,
                window.y0 + (iy + 0.5) * window.height() / ny};
    }
};

namespace detail {

// Midpoint-rule grid over the integration region A with F(p_s, p_i) weights.
struct InterfererGrid {
    std::vector<Vec2> cells;
    std::vector<double> w;   // F(p_s, p_i) per cell
    double w_sum = 0.0;

    InterfererGrid(const Vec2& p_s, const Rect& a, double cell_m, const PathLossLaw& law,
                   double cs_mw, double noise_mw) {
        const int nx = std::max(1, static_cast<int>(std::lround(a.width() / cell_m)));
        const int ny = std::max(1, static_cast<int>(std::lround(a.height() / cell_m)));
        cells.reserve(static_cast<size_t>(nx) * ny);
        w.reserve(cells.capacity());
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const Vec2 p{a.x0 + (ix + 0.5) * a.width() / nx,
                             a.y0 + (iy + 0.5) * a.height() / ny};
                const double f = idle_probability(p_s, p, law, cs_mw, noise_mw);
                cells.push_back(p);
                w.push_back(f);
                w_sum += f;
            }
        }
    }
};

} // namespace detail

// Conditional relay availability M(p_c) = int F(p_i,p_c) F(p_s,p_i) dp_i /
// int F(p_s,p_i) dp_i, evaluated on a fixed midpoint grid.
inline double relay_idle_value(const Vec2& p_c, const detail::InterfererGrid& grid,
                               const PathLossLaw& law, double cs_mw, double noise_mw) {
    double num = 0.0;
    for (size_t i = 0; i < grid.cells.size(); ++i) {
        const double d = distance(grid.cells[i], p_c);
        const double f = d > 0.0 ? idle_probability(grid.cells[i], p_c, law, cs_mw, noise_mw) : 0.0;
        num += f * grid.w[i];
    }
    return num / grid.w_sum;
}

inline ScalarField relay_idle_field(const Vec2& p_s, const Rect& a, const Rect& window,
                                    int nx, int ny, const PathLossLaw& law, double cs_mw,
                                    double noise_mw, double cell_m = 0.5) {
    detail::InterfererGrid grid(p_s, a, cell_m, law, cs_mw, noise_mw);
    ScalarField f{window, nx, ny, {}};
    f.values.resize(static_cast<size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            f.values[static_cast<size_t>(iy) * nx + ix] =
                relay_idle_value(f.point(ix, iy), grid, law, cs_mw, noise_mw);
    return f;
}

// Probability that a relay at p_c yields a split gain, averaged over the
// carrier-sense-biased interferer position. Interference at C and D has
// position-dependent means P d_ic^-alpha and P d_id^-alpha.
template <class Rng>
double relay_gain_value(const Vec2& p_s, const Vec2& p_d, const Vec2& p_c,
                        std::span<const Vec2> interferer_pool, const AnalyticScene& sc,
                        long long n_samples, Rng& rng) {
    if (interferer_pool.empty()) throw std::invalid_argument("relay_gain_value: empty pool");
    const double m_sd = sc.law.mean_rx_power(distance(p_s, p_d));
    const double m_sc = sc.law.mean_rx_power(distance(p_s, p_c));
    const double m_cd = sc.law.mean_rx_power(distance(p_c, p_d));
    std::exponential_distribution<double> unit(1.0);
    long long hits = 0;
    for (long long i = 0; i < n_samples; ++i) {
        const Vec2& p_i = interferer_pool[static_cast<size_t>(i) % interferer_pool.size()];
        const double m_ic = sc.law.mean_rx_power(std::max(1e-9, distance(p_i, p_c)));
        const double m_id = sc.law.mean_rx_power(std::max(1e-9, distance(p_i, p_d)));
        const double iota_c = m_ic * unit(rng);
        const double iota_d = m_id * unit(rng);
        const double g_sd = m_sd * unit(rng) / (sc.noise_mw + iota_d);
        const double g_sc = m_sc * unit(rng) / (sc.noise_mw + iota_c);
        const double g_cd = m_cd * unit(rng) / (sc.noise_mw + iota_d);
        if (in_split_region(g_sc, g_cd, g_sd)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n_samples);
}

// Rejection sampling of interferer positions with density proportional to
// F(p_s, p_i) over A.
template <class Rng>
std::vector<Vec2> sample_biased_interferers(const Vec2& p_s, const Rect& a,
                                            const PathLossLaw& law, double cs_mw,
                                            double noise_mw, size_t count, Rng& rng) {
    std::uniform_real_distribution<double> ux(a.x0, a.x1), uy(a.y0, a.y1), u01(0.0, 1.0);
    std::vector<Vec2> out;
    out.reserve(count);
    while (out.size() < count) {
        const Vec2 p{ux(rng), uy(rng)};
        const double d = distance(p_s, p);
        if (d <= 0.0) continue;
        if (u01(rng) < idle_probability(p_s, p, law, cs_mw, noise_mw)) out.push_back(p);
    }
    return out;
}

template <class Rng>
ScalarField relay_gain_field(const Vec2& p_s, const Vec2& p_d, const Rect& a,
                             const Rect& window, int nx, int ny, const AnalyticScene& sc,
                             long long n_samples_per_point, Rng& rng, size_t pool_size = 4096) {
    const auto pool = sample_biased_interferers(p_s, a, sc.law, sc.cs_threshold_mw,
                                                sc.noise_mw, pool_size, rng);
    ScalarField f{window, nx, ny, {}};
    f.values.resize(static_cast<size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            f.values[static_cast<size_t>(iy) * nx + ix] = relay_gain_value(
                p_s, p_d, f.point(ix, iy), pool, sc, n_samples_per_point, rng);
    return f;
}

// Sampling of a k-interferer CSMA-admissible configuration. Each concurrent
// interferer independently passed the carrier-sense test against the tagged
// source, so every position follows the density proportional to F(p_s, .).
// Rejection acceptance is normalized by the density's maximum over A
// (bounded on a boundary-including scan) so tiny idle probabilities do not
// starve the sampler.
template <class Rng>
std::vector<Vec2> sample_csma_interferers(int k, const Vec2& p_s, const Rect& a,
                                          const PathLossLaw& law, double cs_mw,
                                          double noise_mw, Rng& rng,
                                          long long retry_budget = 10'000'000) {
    if (k < 1) throw std::invalid_argument("sample_csma_interferers: k must be >= 1");
    std::uniform_real_distribution<double> ux(a.x0, a.x1), uy(a.y0, a.y1), u01(0.0, 1.0);
    auto density = [&](const Vec2& p) {
        return distance(p_s, p) > 0.0 ? idle_probability(p_s, p, law, cs_mw, noise_mw)
                                      : 0.0;
    };
    // the density peaks on the boundary of A; scan it including corners
    const int gx = 71, gy = 81;
    double bound = 0.0;
    for (int iy = 0; iy < gy; ++iy)
        for (int ix = 0; ix < gx; ++ix)
            bound = std::max(bound, density({a.x0 + a.width() * ix / (gx - 1),
                                             a.y0 + a.height() * iy / (gy - 1)}));
    bound *= 1.25;
    if (bound <= 0.0)
        throw std::runtime_error("sample_csma_interferers: acceptance starvation");
    std::vector<Vec2> placed;
    placed.reserve(static_cast<size_t>(k));
    long long tries = 0;
    while (static_cast<int>(placed.size()) < k) {
        if (++tries > retry_budget)
            throw std::runtime_error("sample_csma_interferers: acceptance starvation");
        const Vec2 p{ux(rng), uy(rng)};
        if (u01(rng) < density(p) / bound) placed.push_back(p);
    }
    return placed;
}

// Pr{ sum of k independent exponentials (distinct means) < x }, hypoexponential
// CDF. Near-equal means are jittered to keep the partial-fraction form stable.
inline double sum_exponentials_cdf(std::vector<double> means, double x) {
    if (x <= 0.0) return 0.0;
    for (size_t i = 0; i < means.size(); ++i)
        for (size_t j = 0; j < i; ++j)
            if (std::fabs(means[i] - means[j]) < 1e-9 * means[j]) means[i] *= 1.0 + 1e-6 * (i + 1);
    double p = 1.0;
    for (size_t j = 0; j < means.size(); ++j) {
        const double rj = 1.0 / means[j];
        double coeff = 1.0;
        for (size_t m = 0; m < means.size(); ++m) {
            if (m == j) continue;
            const double rm = 1.0 / means[m];
            coeff *= rm / (rm - rj);
        }
        p -= coeff * std::exp(-rj * x);
    }
    return std::clamp(p, 0.0, 1.0);
}

// Availability of a relay at p_c under k CSMA-admissible interferers, averaged
// over sampled admissible configurations.
inline double multi_interferer_idle(const Vec2& p_c,
                                    std::span<const std::vector<Vec2>> configs,
                                    const PathLossLaw& law, double cs_mw, double noise_mw) {
    if (configs.empty()) throw std::invalid_argument("multi_interferer_idle: no configs");
    double acc = 0.0;
    std::vector<double> means;
    for (const auto& cfg : configs) {
        means.clear();
        for (const auto& p : cfg)
            means.push_back(law.mean_rx_power(std::max(1e-9, distance(p, p_c))));
        acc += sum_exponentials_cdf(means, cs_mw - noise_mw);
    }
    return acc / static_cast<double>(configs.size());
}

struct BiasedGainResult {
    double gain_uniform = 0.0;       // tau_coop / tau_direct, uniform interference
    double gain_csma = 0.0;          // same with CS-biased interferer and relay blocking
    double lost_coop_fraction = 0.0; // split-beneficial trials aborted (relay busy)
    double duration_ratio = 0.0;     // mean coop duration, no-MAC over CSMA
    double matched_sigma_i2 = 0.0;   // interference power used in the uniform case
};

// Fig.-5 style comparison. The CSMA case places one always-active interferer
// with the carrier-sense-biased spatial density and blocks the relay whenever
// it senses that interferer; the uniform case applies i.i.d. interference
// matched to the mean power the biased interferer delivers at the destination
// and never blocks. Gains are mean-rate ratios at the representative midpoint
// relay; aborts are counted per cooperative attempt; duration statistics use
// a uniformly drawn relay so that carrier sensing shows up as the positional
// penalty of the relays it leaves available, capped at T_max = L / rho_min.
template <class Rng>
BiasedGainResult biased_gain_comparison(double delta_sd, const Rect& a,
                                        const AnalyticScene& proto, long long n_trials,
                                        double payload_bits, Rng& rng,
                                        double min_rate_bps = 0.95e6) {
    if (n_trials < 1) throw std::invalid_argument("biased_gain_comparison: n_trials < 1");
    const Vec2 p_s{0.0, 0.0}, p_d{delta_sd, 0.0}, p_m{0.5 * delta_sd, 0.0};
    const double m_sd = proto.law.mean_rx_power(delta_sd);
    const double m_mid = proto.law.mean_rx_power(0.5 * delta_sd);
    const double t_max = payload_bits / min_rate_bps;
    std::exponential_distribution<double> unit(1.0);
    std::uniform_real_distribution<double> ux(a.x0, a.x1), uy(a.y0, a.y1), u01(0.0, 1.0);

    // matched interference level: F-weighted mean of the interferer's power
    // at the destination, by deterministic quadrature (1 m near-field guard)
    double sigma2 = 0.0, f_norm = 0.0;
    {
        const int gx = 176, gy = 201;
        for (int iy = 0; iy < gy; ++iy)
            for (int ix = 0; ix < gx; ++ix) {
                const Vec2 p{a.x0 + a.width() * (ix + 0.5) / gx,
                             a.y0 + a.height() * (iy + 0.5) / gy};
                const double w = distance(p_s, p) > 0.0
                                     ? idle_probability(p_s, p, proto.law,
                                                        proto.cs_threshold_mw,
                                                        proto.noise_mw)
                                     : 0.0;
                sigma2 += w * proto.law.mean_rx_power(std::max(1.0, distance(p, p_d)));
                f_norm += w;
            }
        sigma2 /= f_norm;
    }

    const auto interferers = sample_biased_interferers(
        p_s, a, proto.law, proto.cs_threshold_mw, proto.noise_mw,
        static_cast<size_t>(std::min<long long>(n_trials, 8192)), rng);

    // evaluates one channel realization; returns the delivery duration and
    // whether the channel vector favors a split, given interference means
    struct Draw {
        double t_direct, t_split;
        bool split;
    };
    auto draw = [&](double m_sc, double m_cd, double mi_c, double mi_d) {
        const double iota_c = mi_c * unit(rng);
        const double iota_d = mi_d * unit(rng);
        const double g_sd = m_sd * unit(rng) / (proto.noise_mw + iota_d);
        const double g_sc = m_sc * unit(rng) / (proto.noise_mw + iota_c);
        const double g_cd = m_cd * unit(rng) / (proto.noise_mw + iota_d);
        const double c_sd = instantaneous_capacity(g_sd, proto.bandwidth_hz);
        Draw d;
        d.t_direct = c_sd > 0.0 ? payload_bits / c_sd
                                : std::numeric_limits<double>::infinity();
        d.split = in_split_region(g_sc, g_cd, g_sd);
        d.t_split = d.t_direct;
        if (d.split) {
            const double c_sc = instantaneous_capacity(g_sc, proto.bandwidth_hz);
            const double c_cd = instantaneous_capacity(g_cd, proto.bandwidth_hz);
            const double ts = t_split_closed(c_sc, c_cd, c_sd, payload_bits);
            if (std::isfinite(ts) && ts > 0.0) d.t_split = std::min(d.t_split, ts);
        }
        return d;
    };

    RunningStats coop_csma, dir_csma, coop_unif, dir_unif, t_csma, t_unif;
    long long aborted = 0, attempts = 0;
    for (long long i = 0; i < n_trials; ++i) {
        const Vec2& p_i = interferers[static_cast<size_t>(i) % interferers.size()];
        const double f_mid = idle_probability(p_i, p_m, proto.law, proto.cs_threshold_mw,
                                              proto.noise_mw);

        // gain statistics at the midpoint relay
        {
            const double mi_m =
                proto.law.mean_rx_power(std::max(1.0, distance(p_i, p_m)));
            const double mi_d =
                proto.law.mean_rx_power(std::max(1.0, distance(p_i, p_d)));
            const Draw c = draw(m_mid, m_mid, mi_m, mi_d);
            const bool available = u01(rng) < f_mid;
            if (c.split) {
                ++attempts;
                if (!available) ++aborted;
            }
            const double t = c.split && available ? c.t_split : c.t_direct;
            coop_csma.add(payload_bits / t);
            dir_csma.add(payload_bits / c.t_direct);

            const Draw u = draw(m_mid, m_mid, sigma2, sigma2);
            coop_unif.add(payload_bits / (u.split ? u.t_split : u.t_direct));
            dir_unif.add(payload_bits / u.t_direct);
        }

        // duration statistics at a uniformly drawn relay
        {
            const Vec2 p_c{ux(rng), uy(rng)};
            const double m_sc =
                proto.law.mean_rx_power(std::max(1.0, distance(p_s, p_c)));
            const double m_cd =
                proto.law.mean_rx_power(std::max(1.0, distance(p_c, p_d)));
            const double mi_c =
                proto.law.mean_rx_power(std::max(1.0, distance(p_i, p_c)));
            const double mi_d =
                proto.law.mean_rx_power(std::max(1.0, distance(p_i, p_d)));
            const Draw c = draw(m_sc, m_cd, mi_c, mi_d);
            const bool available =
                u01(rng) < idle_probability(p_i, p_c, proto.law, proto.cs_threshold_mw,
                                            proto.noise_mw);
            // paired comparison over cooperative attempts: without contention
            // the split is always performed, under CSMA a blocked relay forces
            // the payload back onto the direct link
            if (c.split) {
                t_unif.add(std::min(c.t_split, t_max));
                t_csma.add(std::min(available ? c.t_split : c.t_direct, t_max));
            }
        }
    }

    BiasedGainResult r;
    r.gain_csma = coop_csma.mean() / dir_csma.mean();
    r.gain_uniform = coop_unif.mean() / dir_unif.mean();
    r.lost_coop_fraction =
        attempts > 0 ? static_cast<double>(aborted) / static_cast<double>(attempts) : 0.0;
    r.duration_ratio = t_csma.n > 0 && t_unif.n > 0 ? t_unif.mean() / t_csma.mean() : 0.0;
    r.matched_sigma_i2 = sigma2;
    return r;
}

} // namespace coopsim
