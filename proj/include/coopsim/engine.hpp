#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <vector>

#include "coopsim/channel.hpp"
#include "coopsim/config.hpp"
#include "coopsim/geometry.hpp"
#include "coopsim/mac.hpp"
#include "coopsim/metrics.hpp"
#include "coopsim/protocol.hpp"
#include "coopsim/rng.hpp"

namespace coopsim {

// Uniform placement with a 1 m degeneracy guard; every node must have at
// least one neighbor within the reliability radius, otherwise the whole
// placement is redrawn.
template <class Rng>
std::vector<Vec2> generate_topology(const ScenarioConfig& cfg, Rng& rng,
                                    int redraw_budget = 10000) {
    std::uniform_real_distribution<double> u(0.0, cfg.area_m);
    for (int attempt = 0; attempt < redraw_budget; ++attempt) {
        std::vector<Vec2> pos(cfg.node_count);
        for (auto& p : pos) p = {u(rng), u(rng)};
        bool ok = true;
        for (int i = 0; ok && i < cfg.node_count; ++i) {
            bool has_neighbor = false;
            for (int j = 0; j < cfg.node_count; ++j) {
                if (i == j) continue;
                const double d = distance(pos[i], pos[j]);
                if (d < 1.0) { ok = false; break; }
                if (d <= cfg.neighbor_radius_m) has_neighbor = true;
            }
            if (!has_neighbor) ok = false;
        }
        if (ok) return pos;
    }
    throw std::runtime_error("generate_topology: redraw budget exhausted");
}

enum class FrameKind { Data1, Data2, Ack };

struct Frame {
    FrameKind kind = FrameKind::Data1;
    int tx = -1;
    int addressee = -1;      // relay for split phase 1, else the receiver
    int final_dst = -1;      // payload destination for data frames
    int session = -1;        // index into sessions, -1 for non-coop
    uint64_t packet_id = 0;
    int attempt = 0;
    double rate = 0.0;
    double start = 0.0, header_end = 0.0, end = 0.0;
    double nav_until = 0.0;  // reservation carried in the header
    double payload_bits = 0.0;
    double exchange_start = 0.0;  // start of Data1, for duration metrics
    bool active = false;
    std::vector<int> receivers;
};

struct Session {
    uint64_t packet_id = 0;
    int attempt = 0;
    int src = -1, relay = -1, dst = -1;
    double rate2 = 0.0;
    double t2_payload = 0.0;        // planned phase-2 payload airtime
    double cached_bits = 0.0;
    bool dst_has_session = false;
    bool relay_decoded = false;
    bool dst_header_failed = false;
    CoopOutcome dst_header_fail = CoopOutcome::HeaderLossChannel;
    bool outcome_recorded = false;
};

class Simulator {
public:
    Simulator(const ScenarioConfig& cfg, uint64_t replication = 0)
        : cfg_(cfg), rng_(make_rng(cfg.seed, replication)) {
        cfg_.validate();
        auto place_rng = make_rng(cfg.placement_seed, replication);
        positions_ = generate_topology(cfg_, place_rng);
        init();
    }

    Simulator(const ScenarioConfig& cfg, std::vector<Vec2> positions, uint64_t replication = 0)
        : cfg_(cfg), rng_(make_rng(cfg.seed, replication)), positions_(std::move(positions)) {
        cfg_.validate();
        init();
    }

    // Optional hook: when set, every channel-access decision is appended.
    std::vector<RateDecision>* decision_log = nullptr;

    MetricsLedger run() {
        scheduleInitialArrivals();
        while (!events_.empty()) {
            Event ev = events_.top();
            if (ev.t > cfg_.duration_s) break;
            events_.pop();
            if (ev.t < now_ - 1e-12)
                throw std::runtime_error("engine: event in the past");
            now_ = std::max(now_, ev.t);
            dispatch(ev);
        }
        ledger_.measured_time_s = cfg_.duration_s - cfg_.warmup_s;
        return ledger_;
    }

    const std::vector<Vec2>& positions() const { return positions_; }
    const std::vector<int>& neighbors(int n) const { return nodes_[n].neighbors; }
    const MetricsLedger& ledger() const { return ledger_; }
    long long packets_in_queues() const {
        long long q = 0;
        for (const auto& n : nodes_) q += static_cast<long long>(n.queue.size());
        return q;
    }

    // Sensed power at a node right now, re-derived by brute-force scene scan
    // without evolving fading (uses the gains as of their last update).
    double sensed_power_snapshot(int node) const {
        double p = noise_mw_;
        for (int fi : active_frames_) {
            const Frame& f = frames_[fi];
            if (f.tx == node) continue;
            p += mean_rx_[f.tx][node] * links_[linkIndex(f.tx, node)].power_gain();
        }
        return p;
    }

private:
    enum class EvKind {
        Arrival, BackoffExpire, HeaderEnd, FrameEnd, Refresh, StartAck, StartPhase2,
        Resolve, Recheck
    };

    struct Event {
        double t;
        uint64_t seq;
        EvKind kind;
        int a = -1;          // node / frame / session index
        uint64_t b = 0;      // backoff generation or packet id
        int c = 0;           // attempt number for Resolve
        bool operator>(const Event& o) const {
            return t != o.t ? t > o.t : seq > o.seq;
        }
    };

    struct Packet {
        uint64_t id;
        int dst;
        double arrival;
    };

    struct Reception {
        int frame = -1;
        bool header_ok = false;
        double seg_start = 0.0;
        double gamma = 0.0;
        double bits_header = 0.0;
        double bits_payload = 0.0;
    };

    struct Node {
        Vec2 pos;
        std::vector<int> neighbors;
        std::deque<Packet> queue;
        BackoffState bo;
        bool contending = false;
        bool blocked = true;
        double unblocked_at = 0.0;
        uint64_t bo_gen = 0;
        NavState nav;
        int tx_frame = -1;
        Reception rx;
        bool awaiting = false;
        uint64_t awaiting_packet = 0;
        int awaiting_attempt = 0;
        bool ack_received = false;
        double involved_until = 0.0;
        double next_arrival = 0.0;
    };

    ScenarioConfig cfg_;
    std::mt19937_64 rng_;
    std::vector<Vec2> positions_;
    std::vector<Node> nodes_;
    std::vector<std::vector<double>> mean_rx_;
    std::vector<LinkChannel> links_;
    std::vector<Frame> frames_;
    std::vector<int> active_frames_;
    std::vector<Session> sessions_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    double now_ = 0.0;
    uint64_t seq_ = 0;
    uint64_t next_packet_id_ = 1;
    MetricsLedger ledger_;

    double noise_mw_ = 0.0, cs_mw_ = 0.0, det_mw_ = 0.0, tx_mw_ = 0.0;
    double t_max_ = 0.0;

    size_t linkIndex(int tx, int rx) const {
        return static_cast<size_t>(tx) * nodes_.size() + rx;
    }

    void init() {
        noise_mw_ = cfg_.noise_mw();
        cs_mw_ = cfg_.cs_threshold_mw();
        det_mw_ = cfg_.detection_threshold_mw();
        tx_mw_ = cfg_.tx_power_mw();
        t_max_ = cfg_.payload_bits / cfg_.min_rate_bps;

        const int n = cfg_.node_count;
        nodes_.resize(n);
        mean_rx_.assign(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i) {
            nodes_[i].pos = positions_[i];
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                mean_rx_[i][j] = cfg_.mean_rx_mw(distance(positions_[i], positions_[j]));
                if (distance(positions_[i], positions_[j]) <= cfg_.neighbor_radius_m)
                    nodes_[i].neighbors.push_back(j);
            }
        }
        links_.reserve(static_cast<size_t>(n) * n);
        for (int i = 0; i < n * n; ++i) links_.push_back(LinkChannel::init(rng_));
    }

    void schedule(double t, EvKind k, int a = -1, uint64_t b = 0, int c = 0) {
        events_.push(Event{t, seq_++, k, a, b, c});
    }

    bool inWindow(double t) const { return t >= cfg_.warmup_s && t <= cfg_.duration_s; }

    double rxPower(int tx, int rx, double t) {
        auto& link = links_[linkIndex(tx, rx)];
        link.evolve(t, cfg_.doppler_hz, rng_);
        return mean_rx_[tx][rx] * link.power_gain();
    }

    double interference(int node, double t, int exclude_frame = -1) {
        double p = 0.0;
        for (int fi : active_frames_) {
            if (fi == exclude_frame) continue;
            const Frame& f = frames_[fi];
            if (f.tx == node) continue;
            p += rxPower(f.tx, node, t);
        }
        return p;
    }

    bool mediumBusy(int node, double t) {
        return sense_busy(noise_mw_ + interference(node, t), cs_mw_);
    }

    // ---- traffic ----

    void scheduleInitialArrivals() {
        const double rate = cfg_.load_kbps * 1000.0 / cfg_.payload_bits;
        std::exponential_distribution<double> exp_d(rate);
        for (int i = 0; i < cfg_.node_count; ++i) {
            nodes_[i].next_arrival = exp_d(rng_);
            schedule(nodes_[i].next_arrival, EvKind::Arrival, i);
        }
    }

    void onArrival(int ni) {
        Node& node = nodes_[ni];
        std::uniform_int_distribution<size_t> pick(0, node.neighbors.size() - 1);
        Packet p{next_packet_id_++, node.neighbors[pick(rng_)], now_};
        node.queue.push_back(p);
        if (inWindow(now_)) ++ledger_.packets_generated;
        if (node.queue.size() == 1) startHeadPacket(ni);
        const double rate = cfg_.load_kbps * 1000.0 / cfg_.payload_bits;
        std::exponential_distribution<double> exp_d(rate);
        schedule(now_ + exp_d(rng_), EvKind::Arrival, ni);
    }

    void startHeadPacket(int ni) {
        Node& node = nodes_[ni];
        node.bo = BackoffState{};
        node.bo.remaining_slots = draw_backoff(0, cfg_.cw_start, cfg_.srl(), rng_);
        node.contending = true;
        resumeContention(ni);
    }

    // ---- contention ----

    bool contentionEligible(int ni) const {
        const Node& n = nodes_[ni];
        return n.contending && n.tx_frame < 0 && n.rx.frame < 0 && !n.awaiting &&
               now_ >= n.involved_until;
    }

    void resumeContention(int ni) {
        Node& node = nodes_[ni];
        ++node.bo_gen;
        if (!contentionEligible(ni)) {
            if (node.contending && now_ < node.involved_until)
                schedule(node.involved_until, EvKind::Recheck, ni);
            return;
        }
        node.blocked = mediumBusy(ni, now_) || node.nav.active(now_);
        if (node.blocked) {
            if (node.nav.active(now_)) schedule(node.nav.reserved_until, EvKind::Recheck, ni);
            return;
        }
        node.unblocked_at = now_;
        schedule(now_ + cfg_.difs_s + node.bo.remaining_slots * cfg_.slot_s,
                 EvKind::BackoffExpire, ni, node.bo_gen);
    }

    void freezeContention(int ni) {
        Node& node = nodes_[ni];
        if (node.blocked) return;
        const double expiry = node.unblocked_at + cfg_.difs_s +
                              node.bo.remaining_slots * cfg_.slot_s;
        if (expiry <= now_ + 1e-12) return;  // grant already due this instant
        const double elapsed = now_ - node.unblocked_at - cfg_.difs_s;
        const int done = std::clamp(
            static_cast<int>(std::floor(elapsed / cfg_.slot_s + 1e-9)), 0,
            node.bo.remaining_slots);
        node.bo.remaining_slots -= done;
        node.bo.frozen = true;
        node.blocked = true;
        ++node.bo_gen;
    }

    // Busy/idle is re-evaluated at every transmission start/stop; nodes whose
    // view changed freeze or resume their countdown.
    void powerUpdate() {
        for (int i = 0; i < cfg_.node_count; ++i) {
            if (!contentionEligible(i)) continue;
            Node& node = nodes_[i];
            const bool blocked = mediumBusy(i, now_) || node.nav.active(now_);
            if (blocked && !node.blocked) {
                freezeContention(i);
            } else if (!blocked && node.blocked) {
                node.bo.frozen = false;
                resumeContention(i);
            }
        }
    }

    // ---- channel access (t0) ----

    std::optional<ExclusionReason> candidateExclusion(int c, int src) {
        Node& cand = nodes_[c];
        const bool involved = cand.tx_frame >= 0 || cand.awaiting ||
                              now_ < cand.involved_until ||
                              (cand.rx.frame >= 0 && addressedTo(frames_[cand.rx.frame], c));
        if (involved) return ExclusionReason::TxRxBusy;
        // everything below is the medium-idle requirement, which the
        // all-relays-available counterfactual waives
        if (cfg_.genie == GenieMode::AllRelaysAvailable) return std::nullopt;
        if (cand.rx.frame >= 0) {
            const Frame& f = frames_[cand.rx.frame];
            const bool hidden =
                !sense_busy(noise_mw_ + rxPower(f.tx, src, now_), cs_mw_);
            if (hidden) return ExclusionReason::HiddenSync;
            return ExclusionReason::CsBusy;
        }
        if (cand.nav.active(now_)) return ExclusionReason::Nav;
        if (mediumBusy(c, now_)) return ExclusionReason::CsBusy;
        return std::nullopt;
    }

    static bool addressedTo(const Frame& f, int node) {
        return f.addressee == node || f.final_dst == node;
    }

    void onBackoffExpire(int ni, uint64_t gen) {
        Node& node = nodes_[ni];
        if (gen != node.bo_gen || !contentionEligible(ni) || node.blocked) return;
        const Packet pkt = node.queue.front();
        const int dst = pkt.dst;

        // genie CSI snapshot at t0
        const double iota_d = interference(dst, now_);
        const double gamma_sd = rxPower(ni, dst, now_) / (noise_mw_ + iota_d);
        const double rate_sd = compute_direct_rate(gamma_sd, cfg_.bandwidth_hz, cfg_.margin);

        std::vector<CandidateEntry> entries;
        bool coop_eligible = false;
        bool any_candidate = false;
        if (cfg_.protocol == Protocol::CoopCsi &&
            min_rate_gate(rate_sd, cfg_.min_rate_coop_gate_bps)) {
            coop_eligible = true;
            for (int c : node.neighbors) {
                if (c == dst) continue;
                if (auto reason = candidateExclusion(c, ni)) {
                    if (inWindow(now_)) ledger_.record_exclusion(*reason);
                    continue;
                }
                any_candidate = true;
                const double gamma_sc =
                    rxPower(ni, c, now_) / (noise_mw_ + interference(c, now_));
                const double gamma_cd = rxPower(c, dst, now_) / (noise_mw_ + iota_d);
                entries.push_back({c, evaluate_split(gamma_sc, gamma_sd, gamma_cd,
                                                     cfg_.payload_bits, cfg_.bandwidth_hz,
                                                     cfg_.margin,
                                                     cfg_.header_duration_s())});
            }
        }

        RateDecision dec = decide(rate_sd, cfg_.payload_bits, cfg_.min_rate_bps,
                                  std::move(entries),
                                  coop_eligible && cfg_.genie == GenieMode::ForcedCooperation);
        if (decision_log) decision_log->push_back(dec);

        if (inWindow(now_)) {
            if (dec.choice == Strategy::Direct) ++ledger_.decisions_direct;
            else if (dec.choice == Strategy::Split) ++ledger_.decisions_split;
            else ++ledger_.decisions_defer;
            if (coop_eligible && dec.choice != Strategy::Split) {
                if (any_candidate) ++ledger_.noncoop_unsuitable_relays;
                else ++ledger_.noncoop_no_available_relays;
            }
        }

        if (dec.choice == Strategy::Defer) {
            attemptFailed(ni);
            return;
        }
        if (dec.choice == Strategy::Direct) {
            startDataFrame(ni, dst, dst, dec.rate_sd, -1);
        } else {
            const auto& best = *std::find_if(dec.candidates.begin(), dec.candidates.end(),
                                             [&](const CandidateEntry& e) {
                                                 return e.relay_id == dec.relay_id;
                                             });
            sessions_.push_back(Session{pkt.id, node.bo.attempt, ni, dec.relay_id, dst,
                                        best.eval.rate_cd,
                                        std::max(0.0, cfg_.payload_bits - best.eval.l1_bits) /
                                            std::max(best.eval.rate_cd, 1e-9)});
            startDataFrame(ni, dec.relay_id, dst, best.eval.rate_sc,
                           static_cast<int>(sessions_.size()) - 1);
        }
    }

    // ---- frames ----

    int newFrame(Frame f) {
        frames_.push_back(std::move(f));
        return static_cast<int>(frames_.size()) - 1;
    }

    void startDataFrame(int src, int addressee, int final_dst, double rate, int session) {
        Node& node = nodes_[src];
        const Packet& pkt = node.queue.front();
        Frame f;
        f.kind = FrameKind::Data1;
        f.tx = src;
        f.addressee = addressee;
        f.final_dst = final_dst;
        f.session = session;
        f.packet_id = pkt.id;
        f.attempt = node.bo.attempt;
        f.rate = rate;
        f.start = now_;
        f.header_end = now_ + cfg_.header_duration_s();
        f.end = f.header_end + cfg_.payload_bits / rate;
        f.payload_bits = cfg_.payload_bits;
        f.exchange_start = now_;
        double tail = cfg_.sifs_s + cfg_.ack_duration_s();
        if (session >= 0)
            tail += cfg_.header_duration_s() + sessions_[session].t2_payload;
        f.nav_until = f.end + tail;

        node.awaiting = true;
        node.awaiting_packet = pkt.id;
        node.awaiting_attempt = node.bo.attempt;
        node.ack_received = false;
        nodes_[final_dst].involved_until = std::max(nodes_[final_dst].involved_until, f.nav_until);
        if (session >= 0)
            nodes_[addressee].involved_until =
                std::max(nodes_[addressee].involved_until, f.nav_until);

        launchFrame(f);
        schedule(f.nav_until + 1e-6, EvKind::Resolve, src, pkt.id, node.bo.attempt);
    }

    void launchFrame(Frame f) {
        closeSegments();
        const int fi = newFrame(std::move(f));
        Frame& frame = frames_[fi];
        frame.active = true;
        active_frames_.push_back(fi);
        nodes_[frame.tx].tx_frame = fi;

        for (int n = 0; n < cfg_.node_count; ++n) {
            if (n == frame.tx) continue;
            beginReception(n, fi);
        }
        refreshGammas();
        powerUpdate();
        schedule(frame.header_end, EvKind::HeaderEnd, fi);
        schedule(frame.end, EvKind::FrameEnd, fi);
        if (frame.end - frame.start > cfg_.fading_refresh_s)
            schedule(frame.start + cfg_.fading_refresh_s, EvKind::Refresh, fi, 1);
    }

    void beginReception(int n, int fi) {
        Frame& f = frames_[fi];
        Node& node = nodes_[n];
        const bool is_session_dst =
            f.kind == FrameKind::Data2 && f.session >= 0 && sessions_[f.session].dst == n &&
            sessions_[f.session].dst_has_session;
        if (node.tx_frame >= 0 || node.rx.frame >= 0) {
            if (f.session >= 0 && f.kind == FrameKind::Data1 && n == f.final_dst) {
                Session& s = sessions_[f.session];
                s.dst_header_failed = true;
                s.dst_header_fail = CoopOutcome::HeaderLossNoSyncBusy;
            }
            return;
        }
        const double p = rxPower(f.tx, n, now_);
        if (p < det_mw_) {
            if (f.session >= 0 && f.kind == FrameKind::Data1 && n == f.final_dst) {
                Session& s = sessions_[f.session];
                s.dst_header_failed = true;
                s.dst_header_fail = CoopOutcome::HeaderLossNoSyncPower;
            }
            return;
        }
        node.rx = Reception{};
        node.rx.frame = fi;
        node.rx.seg_start = now_;
        // ACKs carry no header; expected phase-2 redundancy needs none either
        node.rx.header_ok = is_session_dst || f.kind == FrameKind::Ack;
        f.receivers.push_back(n);
    }

    void closeSegments() {
        for (int fi : active_frames_) {
            Frame& f = frames_[fi];
            for (int n : f.receivers) {
                Reception& r = nodes_[n].rx;
                if (r.frame != fi) continue;
                const double dur = now_ - r.seg_start;
                if (dur <= 0.0) continue;
                const double bits =
                    dur * instantaneous_capacity(r.gamma, cfg_.bandwidth_hz);
                if (r.seg_start >= f.header_end - 1e-15) r.bits_payload += bits;
                else r.bits_header += bits;
                r.seg_start = now_;
            }
        }
    }

    void refreshGammas() {
        for (int fi : active_frames_) {
            Frame& f = frames_[fi];
            for (int n : f.receivers) {
                Reception& r = nodes_[n].rx;
                if (r.frame != fi) continue;
                const double desired = rxPower(f.tx, n, now_);
                const double iota = interference(n, now_, fi);
                r.gamma = desired / (noise_mw_ + iota);
                r.seg_start = now_;
            }
        }
    }

    void onRefresh(int fi, uint64_t k) {
        if (fi < 0 || !frames_[fi].active) return;
        closeSegments();
        refreshGammas();
        const double next = frames_[fi].start + (k + 1) * cfg_.fading_refresh_s;
        if (next < frames_[fi].end) schedule(next, EvKind::Refresh, fi, k + 1);
    }

    void onHeaderEnd(int fi) {
        Frame& f = frames_[fi];
        if (!f.active || f.kind == FrameKind::Ack) return;
        closeSegments();
        std::vector<int> keep;
        for (int n : f.receivers) {
            Node& node = nodes_[n];
            Reception& r = node.rx;
            if (r.frame != fi) continue;
            const bool session_dst_auto = r.header_ok;  // pre-granted for expected Data2
            if (!session_dst_auto && r.bits_header < cfg_.header_bits) {
                // header lost over the channel
                if (f.session >= 0 && f.kind == FrameKind::Data1 && n == f.final_dst) {
                    Session& s = sessions_[f.session];
                    s.dst_header_failed = true;
                    s.dst_header_fail = CoopOutcome::HeaderLossChannel;
                }
                node.rx = Reception{};
                resumeContention(n);
                continue;
            }
            r.header_ok = true;
            if (f.session >= 0 && f.kind == FrameKind::Data1 && n == f.final_dst)
                sessions_[f.session].dst_has_session = true;
            if (!addressedTo(f, n)) {
                node.nav.extend(f.nav_until);
                if (node.contending) schedule(f.nav_until, EvKind::Recheck, n);
            }
            keep.push_back(n);
        }
        f.receivers = std::move(keep);
        refreshGammas();
    }

    void onFrameEnd(int fi) {
        Frame& f = frames_[fi];
        closeSegments();
        f.active = false;
        active_frames_.erase(std::find(active_frames_.begin(), active_frames_.end(), fi));
        nodes_[f.tx].tx_frame = -1;

        for (int n : f.receivers) {
            Node& node = nodes_[n];
            Reception r = node.rx;
            if (r.frame != fi) continue;
            node.rx = Reception{};
            if (r.header_ok) frameDecoded(fi, n, r);
            resumeContention(n);
        }
        f.receivers.clear();
        refreshGammas();
        powerUpdate();
        if (nodes_[f.tx].tx_frame < 0) resumeContention(f.tx);
    }

    void frameDecoded(int fi, int n, const Reception& r) {
        Frame& f = frames_[fi];
        switch (f.kind) {
            case FrameKind::Data1:
                if (f.session < 0) {
                    if (n == f.addressee && r.bits_payload >= f.payload_bits)
                        scheduleAck(fi, n);
                } else {
                    Session& s = sessions_[f.session];
                    if (n == s.dst)
                        s.cached_bits = std::min(r.bits_payload, double(cfg_.payload_bits));
                    if (n == s.relay && r.bits_payload >= f.payload_bits) {
                        s.relay_decoded = true;
                        schedule(now_, EvKind::StartPhase2, f.session, 0);
                    }
                }
                break;
            case FrameKind::Data2: {
                Session& s = sessions_[f.session];
                if (n == s.dst && s.dst_has_session &&
                    s.cached_bits + r.bits_payload >= cfg_.payload_bits) {
                    recordCoopOutcome(f.session, CoopOutcome::Success);
                    scheduleAck(fi, n);
                }
                break;
            }
            case FrameKind::Ack:
                if (n == f.addressee && r.bits_payload >= cfg_.ack_bits) ackDecoded(fi, n);
                break;
        }
    }

    void scheduleAck(int data_fi, int from) {
        schedule(now_ + cfg_.sifs_s, EvKind::StartAck, data_fi, static_cast<uint64_t>(from));
    }

    void onStartAck(int data_fi, int from) {
        const Frame& data = frames_[data_fi];
        if (nodes_[from].tx_frame >= 0) return;
        if (nodes_[from].rx.frame >= 0) dropReception(from);
        Frame ack;
        ack.kind = FrameKind::Ack;
        ack.tx = from;
        ack.addressee = data.session >= 0 ? sessions_[data.session].src : data.tx;
        ack.final_dst = ack.addressee;
        ack.session = data.session;
        ack.packet_id = data.packet_id;
        ack.attempt = data.attempt;
        ack.rate = cfg_.ctrl_rate_bps;
        ack.start = now_;
        ack.header_end = now_;  // the whole ACK is control payload
        ack.end = now_ + cfg_.ack_duration_s();
        ack.nav_until = ack.end;
        ack.payload_bits = cfg_.ack_bits;
        ack.exchange_start = data.exchange_start;
        launchFrame(std::move(ack));
    }

    void onStartPhase2(int si) {
        Session& s = sessions_[si];
        if (nodes_[s.relay].tx_frame >= 0) return;
        if (nodes_[s.relay].rx.frame >= 0) dropReception(s.relay);
        Frame f;
        f.kind = FrameKind::Data2;
        f.tx = s.relay;
        f.addressee = s.dst;
        f.final_dst = s.dst;
        f.session = si;
        f.packet_id = s.packet_id;
        f.attempt = s.attempt;
        f.rate = s.rate2;
        f.start = now_;
        f.header_end = now_ + cfg_.header_duration_s();
        f.end = f.header_end + s.t2_payload;
        f.nav_until = f.end + cfg_.sifs_s + cfg_.ack_duration_s();
        f.payload_bits = s.t2_payload * s.rate2;
        f.exchange_start = exchangeStartOf(s);
        launchFrame(std::move(f));
    }

    double exchangeStartOf(const Session& s) const {
        // phase 1 started t_sc before now; reconstruct from the frame log
        for (auto it = frames_.rbegin(); it != frames_.rend(); ++it)
            if (it->session >= 0 && &sessions_[it->session] == &s &&
                it->kind == FrameKind::Data1)
                return it->exchange_start;
        return now_;
    }

    void dropReception(int n) {
        Node& node = nodes_[n];
        if (node.rx.frame >= 0) {
            Frame& f = frames_[node.rx.frame];
            f.receivers.erase(std::find(f.receivers.begin(), f.receivers.end(), n));
            node.rx = Reception{};
        }
    }

    void ackDecoded(int ack_fi, int src) {
        const Frame& ack = frames_[ack_fi];
        Node& node = nodes_[src];
        if (!node.awaiting || node.awaiting_packet != ack.packet_id) return;
        node.ack_received = true;
        node.awaiting = false;
        // completed communication
        if (inWindow(now_)) {
            ledger_.delivered_bits += cfg_.payload_bits;
            ++ledger_.packets_delivered;
            // duration of the delivering exchange itself; retry ladders are
            // excluded so the statistic is comparable across SRL settings
            const double dur = now_ - ack.exchange_start;
            if (ack.session >= 0) {
                ledger_.duration_sum_split_s += dur;
                ++ledger_.duration_count_split;
            } else {
                ledger_.duration_sum_direct_s += dur;
                ++ledger_.duration_count_direct;
            }
        }
        node.queue.pop_front();
        node.contending = false;
        if (!node.queue.empty()) startHeadPacket(src);
    }

    void onResolve(int src, uint64_t packet_id, int attempt) {
        Node& node = nodes_[src];
        if (!node.awaiting || node.awaiting_packet != packet_id ||
            node.awaiting_attempt != attempt)
            return;
        node.awaiting = false;
        attemptFailed(src);
    }

    void recordCoopOutcome(int si, CoopOutcome o) {
        Session& s = sessions_[si];
        if (s.outcome_recorded) return;
        s.outcome_recorded = true;
        if (inWindow(now_)) ledger_.record_coop_outcome(o);
    }

    void classifyCoopFailure(int si) {
        const Session& s = sessions_[si];
        if (s.outcome_recorded) return;
        if (!s.dst_has_session) {
            recordCoopOutcome(si, s.dst_header_failed ? s.dst_header_fail
                                                      : CoopOutcome::HeaderLossNoSyncPower);
        } else if (!s.relay_decoded) {
            recordCoopOutcome(si, CoopOutcome::DataLossAtRelay);
        } else {
            recordCoopOutcome(si, CoopOutcome::DataLossOverCd);
        }
    }

    void attemptFailed(int src) {
        Node& node = nodes_[src];
        // settle the outcome of an unresolved split attempt
        for (size_t i = sessions_.size(); i-- > 0;) {
            if (sessions_[i].src == src && sessions_[i].packet_id == node.queue.front().id &&
                sessions_[i].attempt == node.bo.attempt) {
                classifyCoopFailure(static_cast<int>(i));
                break;
            }
        }
        const auto outcome = on_attempt_failure(node.bo, cfg_.cw_start, cfg_.srl(), rng_);
        if (outcome == AttemptOutcome::Drop) {
            if (inWindow(now_)) ++ledger_.packets_dropped;
            node.queue.pop_front();
            node.contending = false;
            if (!node.queue.empty()) startHeadPacket(src);
            return;
        }
        resumeContention(src);
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
            case EvKind::Arrival: onArrival(ev.a); break;
            case EvKind::BackoffExpire: onBackoffExpire(ev.a, ev.b); break;
            case EvKind::HeaderEnd: onHeaderEnd(ev.a); break;
            case EvKind::FrameEnd: onFrameEnd(ev.a); break;
            case EvKind::Refresh: onRefresh(ev.a, ev.b); break;
            case EvKind::StartAck: onStartAck(ev.a, static_cast<int>(ev.b)); break;
            case EvKind::StartPhase2: onStartPhase2(ev.a); break;
            case EvKind::Resolve: onResolve(ev.a, ev.b, ev.c); break;
            case EvKind::Recheck:
                if (contentionEligible(ev.a) && nodes_[ev.a].blocked) resumeContention(ev.a);
                break;
        }
    }
};

} // namespace coopsim
