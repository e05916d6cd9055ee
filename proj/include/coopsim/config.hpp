#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "coopsim/units.hpp"

namespace coopsim {

enum class Protocol { CsmaCsi, CoopCsi };
enum class GenieMode { Off, AllRelaysAvailable, ForcedCooperation };

// Full scenario description: every physical and protocol constant plus
// topology, traffic and seed parameters. Defaults follow the reference
// parameter set.
struct ScenarioConfig {
    int node_count = 35;
    double area_m = 300.0;

    double tx_power_dbm = 10.0;
    double noise_dbm = -102.0;
    double detection_threshold_dbm = -96.0;
    double cs_threshold_dbm = -100.0;
    double path_loss_exponent = 3.5;
    double doppler_hz = 11.1;
    double carrier_ghz = 2.4;
    double reference_distance_m = 2.5;
    double breakpoint_m = 60.0;
    double far_path_loss_exponent = 6.0;
    double bandwidth_hz = 1e6;
    double ctrl_rate_bps = 0.532e6;
    double min_rate_bps = 0.95e6;
    double slot_s = 10e-6;
    double difs_s = 128e-6;
    double sifs_s = 10e-6;
    int cw_start = 5;
    int srl_csma_csi = 5;
    int srl_coop_csi = 4;
    double margin = 0.15;       // epsilon
    int header_bits = 112;
    int payload_bits = 5000;
    int ack_bits = 112;

    double neighbor_radius_m = 60.0;
    Protocol protocol = Protocol::CoopCsi;
    GenieMode genie = GenieMode::Off;
    double min_rate_coop_gate_bps = 0.95e6;   // rho_sd^min, Fig.-11 sweep knob

    double load_kbps = 100.0;   // offered load per node
    double duration_s = 25.0;
    double warmup_s = 5.0;
    double fading_refresh_s = 1e-3;

    uint64_t seed = 1;
    uint64_t placement_seed = 7;

    double tx_power_mw() const { return dbm_to_mw(tx_power_dbm); }
    // log-distance model: free-space loss up to the close-in reference
    // distance d0 for the configured carrier, exponent alpha beyond, i.e.
    // mean_rx(d) = P / L_fs(d0) * (d0 / d)^alpha
    double reference_loss() const {
        const double wavelength_m = 2.99792458e8 / (carrier_ghz * 1e9);
        const double x = 4.0 * 3.14159265358979323846 * reference_distance_m / wavelength_m;
        return x * x;
    }
    // folded into the d^-alpha law used by the channel model
    double rx_reference_mw() const {
        return tx_power_mw() / reference_loss() *
               std::pow(reference_distance_m, path_loss_exponent);
    }
    // dual-slope log-distance mean received power: exponent alpha out to the
    // breakpoint, a steeper slope beyond (clutter-limited far field)
    double mean_rx_mw(double distance_m) const {
        const double d = std::max(distance_m, reference_distance_m);
        if (d <= breakpoint_m)
            return rx_reference_mw() * std::pow(d, -path_loss_exponent);
        return rx_reference_mw() * std::pow(breakpoint_m, -path_loss_exponent) *
               std::pow(breakpoint_m / d, far_path_loss_exponent);
    }
    double noise_mw() const { return dbm_to_mw(noise_dbm); }
    double detection_threshold_mw() const { return dbm_to_mw(detection_threshold_dbm); }
    double cs_threshold_mw() const { return dbm_to_mw(cs_threshold_dbm); }
    int srl() const { return protocol == Protocol::CoopCsi ? srl_coop_csi : srl_csma_csi; }
    double header_duration_s() const { return header_bits / ctrl_rate_bps; }
    double ack_duration_s() const { return ack_bits / ctrl_rate_bps; }

    void validate() const {
        if (cs_threshold_dbm <= noise_dbm)
            throw std::invalid_argument("config: CS threshold must exceed the noise floor");
        if (payload_bits <= 0 || duration_s <= 0.0 || node_count < 2)
            throw std::invalid_argument("config: payload, duration and node count must be positive");
        if (warmup_s >= duration_s)
            throw std::invalid_argument("config: warm-up must be shorter than the run");
    }
};

inline Protocol parse_protocol(const std::string& s) {
    if (s == "csma-csi") return Protocol::CsmaCsi;
    if (s == "coop-csi") return Protocol::CoopCsi;
    throw std::invalid_argument("unknown protocol: " + s);
}

inline GenieMode parse_genie(const std::string& s) {
    if (s == "off") return GenieMode::Off;
    if (s == "all-relays-available") return GenieMode::AllRelaysAvailable;
    if (s == "forced-cooperation") return GenieMode::ForcedCooperation;
    throw std::invalid_argument("unknown genie mode: " + s);
}

// key = value file, '#' comments. Unknown keys are an error so typos do not
// silently fall back to defaults.
inline ScenarioConfig load_config(std::istream& in) {
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        auto d = [&] { return std::stod(val); };
        auto i = [&] { return std::stoi(val); };
        if (key == "node_count") cfg.node_count = i();
        else if (key == "area_m") cfg.area_m = d();
        else if (key == "tx_power_dbm") cfg.tx_power_dbm = d();
        else if (key == "noise_dbm") cfg.noise_dbm = d();
        else if (key == "detection_threshold_dbm") cfg.detection_threshold_dbm = d();
        else if (key == "cs_threshold_dbm") cfg.cs_threshold_dbm = d();
        else if (key == "path_loss_exponent") cfg.path_loss_exponent = d();
        else if (key == "doppler_hz") cfg.doppler_hz = d();
        else if (key == "carrier_ghz") cfg.carrier_ghz = d();
        else if (key == "reference_distance_m") cfg.reference_distance_m = d();
        else if (key == "breakpoint_m") cfg.breakpoint_m = d();
        else if (key == "far_path_loss_exponent") cfg.far_path_loss_exponent = d();
        else if (key == "bandwidth_hz") cfg.bandwidth_hz = d();
        else if (key == "ctrl_rate_bps") cfg.ctrl_rate_bps = d();
        else if (key == "min_rate_bps") cfg.min_rate_bps = d();
        else if (key == "slot_us") cfg.slot_s = d() * 1e-6;
        else if (key == "difs_us") cfg.difs_s = d() * 1e-6;
        else if (key == "sifs_us") cfg.sifs_s = d() * 1e-6;
        else if (key == "cw_start") cfg.cw_start = i();
        else if (key == "srl_csma_csi") cfg.srl_csma_csi = i();
        else if (key == "srl_coop_csi") cfg.srl_coop_csi = i();
        else if (key == "margin") cfg.margin = d();
        else if (key == "header_bits") cfg.header_bits = i();
        else if (key == "payload_bits") cfg.payload_bits = i();
        else if (key == "ack_bits") cfg.ack_bits = i();
        else if (key == "neighbor_radius_m") cfg.neighbor_radius_m = d();
        else if (key == "protocol") cfg.protocol = parse_protocol(val);
        else if (key == "genie") cfg.genie = parse_genie(val);
        else if (key == "min_rate_coop_gate_bps") cfg.min_rate_coop_gate_bps = d();
        else if (key == "load_kbps") cfg.load_kbps = d();
        else if (key == "duration_s") cfg.duration_s = d();
        else if (key == "warmup_s") cfg.warmup_s = d();
        else if (key == "fading_refresh_us") cfg.fading_refresh_s = d() * 1e-6;
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "placement_seed") cfg.placement_seed = std::stoull(val);
        else throw std::invalid_argument("config line " + std::to_string(lineno) +
                                         ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return load_config(in);
}

} // namespace coopsim
