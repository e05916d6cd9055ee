#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "coopsim/protocol.hpp"

namespace coopsim {

enum class CoopOutcome {
    Success,
    HeaderLossNoSyncPower,
    HeaderLossNoSyncBusy,
    HeaderLossChannel,
    DataLossAtRelay,
    DataLossOverCd
};

// All counters are events inside the measurement window; breakdowns partition
// their parent counts exactly.
struct MetricsLedger {
    double measured_time_s = 0.0;
    double delivered_bits = 0.0;

    // transmission decisions at channel-access instants
    long long decisions_direct = 0;
    long long decisions_split = 0;
    long long decisions_defer = 0;

    // why a coop-eligible access did not relay
    long long noncoop_no_available_relays = 0;
    long long noncoop_unsuitable_relays = 0;

    // per-candidate exclusion reasons at t0
    long long excl_cs_busy = 0;
    long long excl_hidden_sync = 0;
    long long excl_nav = 0;
    long long excl_tx_rx_busy = 0;

    // outcome of every performed cooperative phase
    long long coop_success = 0;
    long long coop_header_loss_power = 0;
    long long coop_header_loss_busy = 0;
    long long coop_header_loss_channel = 0;
    long long coop_data_loss_relay = 0;
    long long coop_data_loss_cd = 0;

    long long packets_generated = 0;
    long long packets_delivered = 0;
    long long packets_dropped = 0;

    // durations of completed (delivered) communications, per final strategy
    double duration_sum_direct_s = 0.0;
    long long duration_count_direct = 0;
    double duration_sum_split_s = 0.0;
    long long duration_count_split = 0;

    void record_exclusion(ExclusionReason r) {
        switch (r) {
            case ExclusionReason::CsBusy: ++excl_cs_busy; break;
            case ExclusionReason::HiddenSync: ++excl_hidden_sync; break;
            case ExclusionReason::Nav: ++excl_nav; break;
            case ExclusionReason::TxRxBusy: ++excl_tx_rx_busy; break;
        }
    }

    void record_coop_outcome(CoopOutcome o) {
        switch (o) {
            case CoopOutcome::Success: ++coop_success; break;
            case CoopOutcome::HeaderLossNoSyncPower: ++coop_header_loss_power; break;
            case CoopOutcome::HeaderLossNoSyncBusy: ++coop_header_loss_busy; break;
            case CoopOutcome::HeaderLossChannel: ++coop_header_loss_channel; break;
            case CoopOutcome::DataLossAtRelay: ++coop_data_loss_relay; break;
            case CoopOutcome::DataLossOverCd: ++coop_data_loss_cd; break;
        }
    }

    long long decisions_total() const {
        return decisions_direct + decisions_split + decisions_defer;
    }
    long long exclusions_total() const {
        return excl_cs_busy + excl_hidden_sync + excl_nav + excl_tx_rx_busy;
    }
    long long coop_phases_total() const {
        return coop_success + coop_header_loss_power + coop_header_loss_busy +
               coop_header_loss_channel + coop_data_loss_relay + coop_data_loss_cd;
    }

    double aggregate_throughput_bps() const {
        if (measured_time_s <= 0.0)
            throw std::runtime_error("aggregate_throughput: zero measured time");
        return delivered_bits / measured_time_s;
    }

    // delivered over generated; backlog still sitting in queues counts against
    double packet_delivery_ratio() const {
        return packets_generated > 0
                   ? static_cast<double>(packets_delivered) / packets_generated
                   : 0.0;
    }

    double mean_communication_duration_s() const {
        const long long n = duration_count_direct + duration_count_split;
        return n > 0 ? (duration_sum_direct_s + duration_sum_split_s) / n : 0.0;
    }
};

struct CoopPhaseBreakdown {
    double split_performed = 0.0;        // split decisions / all decisions
    double noncoop = 0.0;                // non-split decisions / all decisions
    double no_available_relays = 0.0;    // share of all decisions
    double unsuitable_relays = 0.0;      // share of all decisions
    double coop_success_rate = 0.0;      // successes / performed coop phases
};

inline CoopPhaseBreakdown coop_phase_breakdown(const MetricsLedger& m) {
    const double total = static_cast<double>(m.decisions_total());
    if (total <= 0.0) throw std::runtime_error("coop_phase_breakdown: no decisions recorded");
    CoopPhaseBreakdown b;
    b.split_performed = m.decisions_split / total;
    b.noncoop = (total - m.decisions_split) / total;
    b.no_available_relays = m.noncoop_no_available_relays / total;
    b.unsuitable_relays = m.noncoop_unsuitable_relays / total;
    const long long phases = m.coop_phases_total();
    b.coop_success_rate = phases > 0 ? static_cast<double>(m.coop_success) / phases : 0.0;
    return b;
}

struct RelayUnavailabilityBreakdown {
    double cs_busy = 0.0;
    double hidden_sync = 0.0;
    double nav = 0.0;
    double tx_rx_busy = 0.0;
};

inline RelayUnavailabilityBreakdown relay_unavailability_breakdown(const MetricsLedger& m) {
    const double total = static_cast<double>(m.exclusions_total());
    if (total <= 0.0)
        throw std::runtime_error("relay_unavailability_breakdown: no exclusions recorded");
    return {m.excl_cs_busy / total, m.excl_hidden_sync / total, m.excl_nav / total,
            m.excl_tx_rx_busy / total};
}

struct CoopFailureBreakdown {
    double header_loss_power = 0.0;
    double header_loss_busy = 0.0;
    double header_loss_channel = 0.0;
    double data_loss_relay = 0.0;
    double data_loss_cd = 0.0;
};

inline CoopFailureBreakdown coop_failure_breakdown(const MetricsLedger& m) {
    const double fails = static_cast<double>(m.coop_phases_total() - m.coop_success);
    if (fails <= 0.0) throw std::runtime_error("coop_failure_breakdown: no failures recorded");
    return {m.coop_header_loss_power / fails, m.coop_header_loss_busy / fails,
            m.coop_header_loss_channel / fails, m.coop_data_loss_relay / fails,
            m.coop_data_loss_cd / fails};
}

// Mean completed-communication duration of a scheme over the plain baseline.
inline double duration_ratio(const MetricsLedger& scheme, const MetricsLedger& baseline) {
    const double base = baseline.mean_communication_duration_s();
    if (base <= 0.0) throw std::runtime_error("duration_ratio: baseline has no completions");
    return scheme.mean_communication_duration_s() / base;
}

inline MetricsLedger merge(const MetricsLedger& a, const MetricsLedger& b) {
    MetricsLedger m = a;
    m.measured_time_s += b.measured_time_s;
    m.delivered_bits += b.delivered_bits;
    m.decisions_direct += b.decisions_direct;
    m.decisions_split += b.decisions_split;
    m.decisions_defer += b.decisions_defer;
    m.noncoop_no_available_relays += b.noncoop_no_available_relays;
    m.noncoop_unsuitable_relays += b.noncoop_unsuitable_relays;
    m.excl_cs_busy += b.excl_cs_busy;
    m.excl_hidden_sync += b.excl_hidden_sync;
    m.excl_nav += b.excl_nav;
    m.excl_tx_rx_busy += b.excl_tx_rx_busy;
    m.coop_success += b.coop_success;
    m.coop_header_loss_power += b.coop_header_loss_power;
    m.coop_header_loss_busy += b.coop_header_loss_busy;
    m.coop_header_loss_channel += b.coop_header_loss_channel;
    m.coop_data_loss_relay += b.coop_data_loss_relay;
    m.coop_data_loss_cd += b.coop_data_loss_cd;
    m.packets_generated += b.packets_generated;
    m.packets_delivered += b.packets_delivered;
    m.packets_dropped += b.packets_dropped;
    m.duration_sum_direct_s += b.duration_sum_direct_s;
    m.duration_count_direct += b.duration_count_direct;
    m.duration_sum_split_s += b.duration_sum_split_s;
    m.duration_count_split += b.duration_count_split;
    return m;
}

} // namespace coopsim
