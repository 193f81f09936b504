#pragma once

// Brute-force interval statistics, used as an oracle for compute_statistics.

#include <algorithm>

#include <seqdwell/dwell.hpp>

namespace oracle {

/// Walks every segment and attributes its overlap with [t1, t2) directly.
inline seqdwell::DwellStatistics recount(const seqdwell::SwitchingSignal& sig, double t1, double t2) {
    using seqdwell::OrderedPair;
    seqdwell::DwellStatistics st;
    const auto& segs = sig.segments();
    double start = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const double end = start + segs[i].dwell;
        const double overlap = std::max(0.0, std::min(end, t2) - std::max(start, t1));
        const int p = segs[i].mode;
        st.mode_time[p] += overlap;
        if (i > 0) {
            const OrderedPair entered{p, segs[i - 1].mode};
            st.successor_time[entered] += overlap;
            if (start >= t1 && start < t2) {
                st.pair_events[entered] += 1;
                st.mode_events[p] += 1;
            }
        }
        if (i + 1 < segs.size()) st.predecessor_time[OrderedPair{segs[i + 1].mode, p}] += overlap;
        start = end;
    }
    return st;
}

}  // namespace oracle
