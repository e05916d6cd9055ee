#pragma once

#include <atomic>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "coopsim/engine.hpp"
#include "coopsim/math.hpp"
#include "coopsim/metrics.hpp"

namespace coopsim {

struct ReplicationRow {
    uint64_t rep = 0;
    MetricsLedger ledger;
};

struct BatchResult {
    std::vector<ReplicationRow> rows;
    MetricsLedger merged;

    double mean_throughput_bps = 0.0;
    double ci95_throughput_frac = 0.0;   // half-width / mean; 0 for single rep
    double mean_pdr = 0.0;
    double ci95_pdr_frac = 0.0;
    double mean_duration_s = 0.0;
    double ci95_duration_frac = 0.0;
};

namespace detail {

inline void ci_over_rows(const std::vector<double>& xs, double& mean, double& ci_frac) {
    RunningStats st;
    for (double x : xs) st.add(x);
    mean = st.mean();
    ci_frac = 0.0;
    if (xs.size() > 1 && mean != 0.0) ci_frac = 1.96 * st.stderr_mean() / std::abs(mean);
}

} // namespace detail

// Replications are fully isolated (own rng streams and topology draw) and run
// in parallel; the merge is order-independent so results do not depend on
// scheduling.
inline BatchResult run_batch(const ScenarioConfig& cfg, int replications,
                             unsigned threads = std::thread::hardware_concurrency()) {
    if (replications < 1) throw std::invalid_argument("run_batch: replications >= 1");
    if (threads == 0) threads = 1;

    std::vector<ReplicationRow> rows(replications);
    std::vector<std::string> errors(replications);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= replications) return;
            try {
                Simulator sim(cfg, static_cast<uint64_t>(r));
                rows[r] = {static_cast<uint64_t>(r), sim.run()};
            } catch (const std::exception& e) {
                errors[r] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(threads, replications);
    for (unsigned i = 0; i + 1 < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (int r = 0; r < replications; ++r)
        if (!errors[r].empty())
            throw std::runtime_error("replication " + std::to_string(r) +
                                     " (seed stream " + std::to_string(r) +
                                     ") aborted: " + errors[r]);

    BatchResult out;
    out.rows = std::move(rows);
    std::vector<double> tps, pdrs, durs;
    for (const auto& row : out.rows) {
        out.merged = merge(out.merged, row.ledger);
        tps.push_back(row.ledger.aggregate_throughput_bps());
        pdrs.push_back(row.ledger.packet_delivery_ratio());
        durs.push_back(row.ledger.mean_communication_duration_s());
    }
    detail::ci_over_rows(tps, out.mean_throughput_bps, out.ci95_throughput_frac);
    detail::ci_over_rows(pdrs, out.mean_pdr, out.ci95_pdr_frac);
    detail::ci_over_rows(durs, out.mean_duration_s, out.ci95_duration_frac);
    return out;
}

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace detail

inline constexpr const char* kBatchCsvSchema = "# coopsim batch csv v1";

inline void write_batch_csv(std::ostream& os, const BatchResult& b) {
    os << kBatchCsvSchema << "\n";
    os << "rep,throughput_bps,pdr,mean_duration_s,packets_generated,packets_delivered,"
          "packets_dropped,decisions_direct,decisions_split,decisions_defer,"
          "noncoop_no_available_relays,noncoop_unsuitable_relays,"
          "excl_cs_busy,excl_hidden_sync,excl_nav,excl_tx_rx_busy,"
          "coop_success,coop_header_loss_power,coop_header_loss_busy,"
          "coop_header_loss_channel,coop_data_loss_relay,coop_data_loss_cd\n";
    for (const auto& row : b.rows) {
        const MetricsLedger& m = row.ledger;
        os << row.rep << ',' << detail::fmt(m.aggregate_throughput_bps()) << ','
           << detail::fmt(m.packet_delivery_ratio()) << ','
           << detail::fmt(m.mean_communication_duration_s()) << ','
           << m.packets_generated << ',' << m.packets_delivered << ',' << m.packets_dropped
           << ',' << m.decisions_direct << ',' << m.decisions_split << ','
           << m.decisions_defer << ',' << m.noncoop_no_available_relays << ','
           << m.noncoop_unsuitable_relays << ',' << m.excl_cs_busy << ','
           << m.excl_hidden_sync << ',' << m.excl_nav << ',' << m.excl_tx_rx_busy << ','
           << m.coop_success << ',' << m.coop_header_loss_power << ','
           << m.coop_header_loss_busy << ',' << m.coop_header_loss_channel << ','
           << m.coop_data_loss_relay << ',' << m.coop_data_loss_cd << '\n';
    }
    const bool single = b.rows.size() == 1;
    os << "summary,mean_throughput_bps=" << detail::fmt(b.mean_throughput_bps)
       << ",ci95_frac=" << (single ? "" : detail::fmt(b.ci95_throughput_frac))
       << ",mean_pdr=" << detail::fmt(b.mean_pdr)
       << ",pdr_ci95_frac=" << (single ? "" : detail::fmt(b.ci95_pdr_frac))
       << ",mean_duration_s=" << detail::fmt(b.mean_duration_s)
       << ",duration_ci95_frac=" << (single ? "" : detail::fmt(b.ci95_duration_frac))
       << '\n';
}

} // namespace coopsim
