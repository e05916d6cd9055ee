#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coopsim/analysis.hpp"
#include "coopsim/batch.hpp"
#include "coopsim/config.hpp"
#include "coopsim/engine.hpp"
#include "coopsim/rng.hpp"

namespace {

using namespace coopsim;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct OutStream {
    std::ofstream file;
    std::ostream& os;
    explicit OutStream(const std::string& path)
        : file(path.empty() ? std::ofstream{} : std::ofstream{path}),
          os(path.empty() ? std::cout : file) {
        if (!path.empty() && !file) throw std::invalid_argument("cannot open output: " + path);
    }
};

Rect parse_rect(const std::vector<double>& v, const Rect& fallback) {
    if (v.empty()) return fallback;
    if (v.size() != 4) throw std::invalid_argument("region needs x0,x1,y0,y1");
    return Rect{v[0], v[1], v[2], v[3]};
}

int run_simulate(const std::string& config_path, const std::string& protocol,
                 int reps, uint64_t seed, const std::string& genie,
                 const std::vector<double>& sweep, const std::string& out,
                 double load_kbps, unsigned threads) {
    ScenarioConfig cfg = config_path.empty() ? ScenarioConfig{} : load_config_file(config_path);
    if (!protocol.empty()) cfg.protocol = parse_protocol(protocol);
    if (!genie.empty()) cfg.genie = parse_genie(genie);
    if (seed != 0) cfg.seed = seed;
    if (load_kbps > 0.0) cfg.load_kbps = load_kbps;
    cfg.validate();

    if (!sweep.empty()) {
        ScenarioConfig base = cfg;
        base.protocol = Protocol::CsmaCsi;
        const BatchResult plain = run_batch(base, reps, threads);
        OutStream o(out);
        o.os << "# coopsim min-rate sweep v1\n";
        o.os << "min_rate_bps,performed_coop_fraction,coop_success_fraction,"
                "throughput_gain_over_csma\n";
        for (double thr : sweep) {
            if (thr < cfg.min_rate_bps)
                throw std::invalid_argument("sweep threshold below the minimum rate");
            ScenarioConfig c = cfg;
            c.protocol = Protocol::CoopCsi;
            c.min_rate_coop_gate_bps = thr;
            const BatchResult b = run_batch(c, reps, threads);
            const auto cb = coop_phase_breakdown(b.merged);
            o.os << fmt(thr) << ',' << fmt(cb.split_performed) << ','
                 << fmt(cb.coop_success_rate) << ','
                 << fmt(b.mean_throughput_bps / plain.mean_throughput_bps - 1.0) << '\n';
        }
        return 0;
    }

    const BatchResult b = run_batch(cfg, reps, threads);
    OutStream o(out);
    write_batch_csv(o.os, b);
    return 0;
}

AnalyticScene default_scene() {
    AnalyticScene sc;
    sc.law = PathLossLaw{dbm_to_mw(10.0), 3.5};
    return sc;
}

int run_fig1(std::vector<double> deltas, std::vector<double> sigmas_dbm,
             long long samples, uint64_t seed, const std::string& out) {
    if (deltas.empty()) deltas = {20, 30, 40, 50, 60, 70, 80, 90, 100};
    if (sigmas_dbm.empty()) sigmas_dbm = {-102, -96, -90};
    OutStream o(out);
    o.os << "# coopsim fig1 v1: coop/direct throughput ratio, relay at the s-d midpoint\n";
    o.os << "delta_sd_m,sigma_i2_dbm,ratio,stderr\n";
    for (double sdbm : sigmas_dbm) {
        for (double d : deltas) {
            AnalyticScene sc = default_scene();
            sc.p_s = {0.0, 0.0};
            sc.p_d = {d, 0.0};
            sc.p_c = {d / 2.0, 0.0};
            sc.sigma_i2_mw = dbm_to_mw(sdbm);
            auto rng = make_rng(seed, static_cast<uint64_t>(d * 1000 + sdbm));
            const double td = tau_direct(sc);
            const auto tc = tau_coop(sc, samples, rng);
            o.os << fmt(d) << ',' << fmt(sdbm) << ',' << fmt(tc.value / td) << ','
                 << fmt(tc.std_error / td) << '\n';
        }
    }
    return 0;
}

int run_fig2(const std::vector<double>& region, const std::vector<double>& window,
             double step, double cell, const std::string& out) {
    const Rect a = parse_rect(region, Rect{-150, 200, -200, 200});
    const Rect w = parse_rect(window, Rect{-30, 90, -40, 40});
    const int nx = std::max(1, static_cast<int>(std::lround(w.width() / step)));
    const int ny = std::max(1, static_cast<int>(std::lround(w.height() / step)));
    const AnalyticScene sc = default_scene();
    const ScalarField f = relay_idle_field({0, 0}, a, w, nx, ny, sc.law,
                                           sc.cs_threshold_mw, sc.noise_mw, cell);
    OutStream o(out);
    o.os << "# coopsim fig2 v1: relay idle probability M(p_c), p_s = (0,0), p_d = (60,0)\n";
    o.os << "x_m,y_m,value\n";
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const Vec2 p = f.point(ix, iy);
            o.os << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(f.at(ix, iy)) << '\n';
        }
    return 0;
}

int run_fig3(const std::vector<double>& region, const std::vector<double>& window,
             double step, long long samples, uint64_t seed, const std::string& out) {
    const Rect a = parse_rect(region, Rect{-150, 200, -200, 200});
    const Rect w = parse_rect(window, Rect{-30, 90, -40, 40});
    const int nx = std::max(1, static_cast<int>(std::lround(w.width() / step)));
    const int ny = std::max(1, static_cast<int>(std::lround(w.height() / step)));
    AnalyticScene sc = default_scene();
    auto rng = make_rng(seed);
    const ScalarField f =
        relay_gain_field({0, 0}, {60, 0}, a, w, nx, ny, sc, samples, rng);
    OutStream o(out);
    o.os << "# coopsim fig3 v1: split-trigger probability R(p_c), p_s = (0,0), p_d = (60,0)\n";
    o.os << "x_m,y_m,value\n";
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const Vec2 p = f.point(ix, iy);
            o.os << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(f.at(ix, iy)) << '\n';
        }
    return 0;
}

int run_fig4(std::vector<int> ks, std::vector<double> deltas, int n_configs,
             const std::vector<double>& region, uint64_t seed, const std::string& out) {
    if (ks.empty()) ks = {1, 2, 3};
    if (deltas.empty())
        for (double d = 0.0; d <= 60.0; d += 5.0) deltas.push_back(d);
    const Rect a = parse_rect(region, Rect{-150, 200, -200, 200});
    const AnalyticScene sc = default_scene();
    const Vec2 p_s{0, 0};
    OutStream o(out);
    o.os << "# coopsim fig4 v1: on-line relay availability normalized to the source position\n";
    o.os << "k,delta_sc_m,normalized_idle\n";
    for (int k : ks) {
        auto rng = make_rng(seed, static_cast<uint64_t>(k));
        std::vector<std::vector<Vec2>> configs;
        configs.reserve(static_cast<size_t>(n_configs));
        for (int i = 0; i < n_configs; ++i)
            configs.push_back(sample_csma_interferers(k, p_s, a, sc.law,
                                                      sc.cs_threshold_mw, sc.noise_mw, rng));
        const double at_source =
            multi_interferer_idle(p_s, configs, sc.law, sc.cs_threshold_mw, sc.noise_mw);
        for (double d : deltas) {
            const double v = multi_interferer_idle({d, 0.0}, configs, sc.law,
                                                   sc.cs_threshold_mw, sc.noise_mw);
            o.os << k << ',' << fmt(d) << ',' << fmt(v / at_source) << '\n';
        }
    }
    return 0;
}

int run_fig5(std::vector<double> deltas, long long trials, uint64_t seed,
             const std::vector<double>& region, const std::string& out) {
    if (deltas.empty()) deltas = {20, 30, 40, 50, 60, 70, 80};
    const Rect a = parse_rect(region, Rect{-150, 200, -200, 200});
    const AnalyticScene sc = default_scene();
    OutStream o(out);
    o.os << "# coopsim fig5 v1: carrier-sense impact on cooperative gains\n";
    o.os << "delta_sd_m,gain_uniform,gain_csma,lost_coop_fraction,duration_ratio\n";
    for (double d : deltas) {
        auto rng = make_rng(seed, static_cast<uint64_t>(d));
        const BiasedGainResult r = biased_gain_comparison(d, a, sc, trials, 5000.0, rng);
        o.os << fmt(d) << ',' << fmt(r.gain_uniform) << ',' << fmt(r.gain_csma) << ','
             << fmt(r.lost_coop_fraction) << ',' << fmt(r.duration_ratio) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cooperative relaying simulator and numerical toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run batched network simulations");
    std::string config_path, protocol, genie, out;
    int reps = 50;
    uint64_t seed = 0;
    double load_kbps = 0.0;
    unsigned threads = std::thread::hardware_concurrency();
    std::vector<double> sweep;
    sim->add_option("--config", config_path, "scenario config file (key = value)");
    sim->add_option("--protocol", protocol)->check(CLI::IsMember({"csma-csi", "coop-csi"}));
    sim->add_option("--reps", reps, "independent replications")->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "override the config seed");
    sim->add_option("--genie", genie)
        ->check(CLI::IsMember({"off", "all-relays-available", "forced-cooperation"}));
    sim->add_option("--sweep-min-rate", sweep,
                    "coop gate thresholds in bit/s; emits the sweep table")
        ->delimiter(',');
    sim->add_option("--load-kbps", load_kbps, "override per-node offered load");
    sim->add_option("--threads", threads);
    sim->add_option("--out", out, "output file (default stdout)");

    // analyze
    auto* an = app.add_subcommand("analyze", "closed-form and Monte Carlo studies");
    an->require_subcommand(1);
    std::vector<double> region, window, deltas, sigmas;
    std::vector<int> ks;
    double step = 2.0, cell = 0.5;
    long long samples = 1'000'000;
    int n_configs = 2000;
    uint64_t aseed = 1;
    std::string aout;
    for (const char* name : {"fig1", "fig2", "fig3", "fig4", "fig5"}) {
        auto* f = an->add_subcommand(name);
        f->add_option("--region", region, "interferer region x0,x1,y0,y1 (m)")->delimiter(',');
        f->add_option("--seed", aseed);
        f->add_option("--out", aout, "output file (default stdout)");
        if (std::string(name) == "fig1") {
            f->add_option("--deltas", deltas, "s-d distances (m)")->delimiter(',');
            f->add_option("--sigmas-dbm", sigmas, "interference levels (dBm)")->delimiter(',');
            f->add_option("--samples", samples);
        } else if (std::string(name) == "fig2") {
            f->add_option("--window", window, "relay grid x0,x1,y0,y1 (m)")->delimiter(',');
            f->add_option("--step", step, "relay grid step (m)");
            f->add_option("--cell", cell, "quadrature cell (m)");
        } else if (std::string(name) == "fig3") {
            f->add_option("--window", window, "relay grid x0,x1,y0,y1 (m)")->delimiter(',');
            f->add_option("--step", step, "relay grid step (m)");
            f->add_option("--samples", samples, "Monte Carlo samples per grid point");
        } else if (std::string(name) == "fig4") {
            f->add_option("--k", ks, "interferer counts")->delimiter(',');
            f->add_option("--deltas", deltas, "on-line relay offsets (m)")->delimiter(',');
            f->add_option("--configs", n_configs, "sampled interferer configurations");
        } else {
            f->add_option("--deltas", deltas, "s-d distances (m)")->delimiter(',');
            f->add_option("--trials", samples, "Monte Carlo trials per distance");
        }
    }

    try {
        app.parse(argc, argv);
        if (*sim)
            return run_simulate(config_path, protocol, reps, seed, genie, sweep, out,
                                load_kbps, threads);
        if (an->got_subcommand("fig1")) return run_fig1(deltas, sigmas, samples, aseed, aout);
        if (an->got_subcommand("fig2")) return run_fig2(region, window, step, cell, aout);
        if (an->got_subcommand("fig3"))
            return run_fig3(region, window, step, samples, aseed, aout);
        if (an->got_subcommand("fig4")) return run_fig4(ks, deltas, n_configs, region, aseed, aout);
        if (an->got_subcommand("fig5")) return run_fig5(deltas, samples, aseed, region, aout);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}
