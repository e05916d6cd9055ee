#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace coopsim {

// Per-packet contention state. remaining_slots counts down only while the
// medium has been idle for at least a DIFS; busy periods freeze it.
struct BackoffState {
    int attempt = 0;          // CW index i, bounded by SRL
    int remaining_slots = 0;
    bool frozen = false;
};

struct NavState {
    double reserved_until = 0.0;
    bool active(double now) const { return now < reserved_until; }
    void extend(double until) {
        if (until > reserved_until) reserved_until = until;
    }
};

// Uniform draw on [0, 2^(cw_start + i - 1)] inclusive.
template <class Rng>
int draw_backoff(int attempt, int cw_start, int srl, Rng& rng) {
    if (attempt < 0 || attempt >= srl)
        throw std::invalid_argument("draw_backoff: retry limit exhausted");
    const int cw = cw_start + attempt;
    std::uniform_int_distribution<int> u(0, 1 << (cw - 1));
    return u(rng);
}

// Strict comparison: power exactly at the threshold still counts as idle.
inline bool sense_busy(double aggregate_power_mw, double cs_threshold_mw) {
    return aggregate_power_mw > cs_threshold_mw;
}

enum class AttemptOutcome { Retry, Drop };

// Failed attempt (no ACK, or rate check refused the transmission): bump the
// CW index, drop the packet once SRL is reached.
template <class Rng>
AttemptOutcome on_attempt_failure(BackoffState& st, int cw_start, int srl, Rng& rng) {
    ++st.attempt;
    if (st.attempt >= srl) return AttemptOutcome::Drop;
    st.remaining_slots = draw_backoff(st.attempt, cw_start, srl, rng);
    st.frozen = false;
    return AttemptOutcome::Retry;
}

} // namespace coopsim
