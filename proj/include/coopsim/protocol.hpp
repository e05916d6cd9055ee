#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "coopsim/channel.hpp"

namespace coopsim {

enum class ExclusionReason { CsBusy, HiddenSync, Nav, TxRxBusy };

// Conservative sustainable rate: the capacity discounted by the margin, as if
// L(1+eps) bits had to be delivered.
inline double compute_direct_rate(double gamma_sd, double bandwidth_hz, double margin) {
    return instantaneous_capacity(gamma_sd, bandwidth_hz) / (1.0 + margin);
}

struct SplitEvaluation {
    double rate_sc = 0.0;      // phase-1 rate toward the relay
    double rate_cd = 0.0;      // planned phase-2 rate
    double l1_bits = 0.0;      // bits the destination overhears in phase 1
    double t_split = std::numeric_limits<double>::infinity();
};

// Eq.-style two-phase duration with a candidate relay, all SINRs read at t0.
// The second term floors at zero when the destination would already overhear
// the whole payload. Overheard phase-1 bits are banked at the margined rate,
// consistent with every other planned rate. `overhead_s` charges any fixed
// per-split airtime (the relay's own header) against the two-phase option.
inline SplitEvaluation evaluate_split(double gamma_sc, double gamma_sd, double gamma_cd,
                                      double payload_bits, double bandwidth_hz,
                                      double margin, double overhead_s = 0.0) {
    SplitEvaluation ev;
    ev.rate_sc = compute_direct_rate(gamma_sc, bandwidth_hz, margin);
    ev.rate_cd = compute_direct_rate(gamma_cd, bandwidth_hz, margin);
    if (ev.rate_sc <= 0.0) return ev;
    const double t_sc = payload_bits / ev.rate_sc;
    ev.l1_bits = t_sc * compute_direct_rate(gamma_sd, bandwidth_hz, margin);
    const double remaining = std::max(0.0, payload_bits - ev.l1_bits);
    if (remaining == 0.0) {
        ev.t_split = t_sc + overhead_s;
    } else if (ev.rate_cd > 0.0) {
        ev.t_split = t_sc + overhead_s + remaining / ev.rate_cd;
    }
    return ev;
}

enum class Strategy { Direct, Split, Defer };

struct CandidateEntry {
    int relay_id = -1;
    SplitEvaluation eval;
};

struct RateDecision {
    double rate_sd = 0.0;
    double t_sd = std::numeric_limits<double>::infinity();
    double t_max = std::numeric_limits<double>::infinity();
    Strategy choice = Strategy::Defer;
    int relay_id = -1;
    double t_star = std::numeric_limits<double>::infinity();
    std::vector<CandidateEntry> candidates;
};

// T* = min over {T_split,i, T_sd, T_max}. Ties prefer Direct over Split and
// the lower relay id among equal splits; Defer only when T* = T_max strictly
// beats both.
inline RateDecision decide(double rate_sd, double payload_bits, double min_rate,
                           std::vector<CandidateEntry> candidates,
                           bool forced_cooperation = false) {
    RateDecision d;
    d.rate_sd = rate_sd;
    d.t_sd = rate_sd > 0.0 ? payload_bits / rate_sd : std::numeric_limits<double>::infinity();
    d.t_max = payload_bits / min_rate;
    d.candidates = std::move(candidates);

    double best_split = std::numeric_limits<double>::infinity();
    int best_relay = -1;
    for (const auto& c : d.candidates) {
        if (c.eval.t_split < best_split ||
            (c.eval.t_split == best_split && best_relay >= 0 && c.relay_id < best_relay)) {
            best_split = c.eval.t_split;
            best_relay = c.relay_id;
        }
    }

    d.t_star = std::min(d.t_max, best_split);
    if (!forced_cooperation) d.t_star = std::min(d.t_star, d.t_sd);

    if (!forced_cooperation && d.t_sd <= d.t_max && d.t_sd <= best_split) {
        d.choice = Strategy::Direct;
    } else if (best_split <= d.t_max) {
        d.choice = Strategy::Split;
        d.relay_id = best_relay;
    } else {
        d.choice = Strategy::Defer;
        d.t_star = d.t_max;
    }
    return d;
}

// Fig.-11 gate: candidate search runs only when the direct link is at least
// this good. The baseline protocol uses threshold == rho_min.
inline bool min_rate_gate(double rate_sd, double min_rate_for_coop) {
    return rate_sd >= min_rate_for_coop;
}

} // namespace coopsim
