#pragma once

// Dwell-time accounting for switching signals under four average-dwell-time
// schemes:
//
//   ADT     one budget for every mode (treated as MDADT with shared parameters)
//   MDADT   per-mode budget:               N_p     <= N0_p        + T_p       / tau_p
//   SBASDT  per switch p|q, successor:     N_{p|q} <= N0_(p,p|q)  + T_{p,p|q} / tau_(p,p|q)
//   SBAPDT  per switch p|q, predecessor:   N_{p|q} <= N0_(q,p|q)  + T_{q,p|q} / tau_(q,p|q)
//
// T_{p,p|q} is the running time of p-segments entered from q; T_{q,p|q} is the
// running time of q-segments that are left towards p. The first segment has no
// predecessor and only contributes to the per-mode total T_p.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace seqdwell {

enum class Scheme { adt, mdadt, sbasdt, sbapdt };

inline std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::adt: return "adt";
        case Scheme::mdadt: return "mdadt";
        case Scheme::sbasdt: return "sbasdt";
        case Scheme::sbapdt: return "sbapdt";
    }
    return "?";
}

inline Scheme parse_scheme(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "adt") return Scheme::adt;
    if (lower == "mdadt") return Scheme::mdadt;
    if (lower == "sbasdt") return Scheme::sbasdt;
    if (lower == "sbapdt") return Scheme::sbapdt;
    throw InputError("scheme: expected adt|mdadt|sbasdt|sbapdt, got \"" + std::string(s) + "\"");
}

inline bool is_sequence_based(Scheme s) { return s == Scheme::sbasdt || s == Scheme::sbapdt; }

/// Budget key. `mode` is the mode whose running time pays for the switch (and
/// whose decay rate enters the threshold); `pair` is set for sequence-based
/// schemes. MDADT: {p}; SBASDT: {p, p|q}; SBAPDT: {q, p|q}.
struct DwellKey {
    int mode = 0;
    std::optional<OrderedPair> pair;

    friend auto operator<=>(const DwellKey&, const DwellKey&) = default;
    friend bool operator==(const DwellKey&, const DwellKey&) = default;

    [[nodiscard]] std::string to_string() const {
        if (!pair) return std::to_string(mode);
        return "(" + std::to_string(mode) + "," + pair->to_string() + ")";
    }
};

/// Key that budgets the switch event `pair` under `scheme`.
inline DwellKey key_for(Scheme scheme, OrderedPair pair) {
    switch (scheme) {
        case Scheme::adt:
        case Scheme::mdadt: return {pair.p, std::nullopt};
        case Scheme::sbasdt: return {pair.p, pair};
        case Scheme::sbapdt: return {pair.q, pair};
    }
    return {};
}

/// All keys of a scheme over modes 1..num_modes, in (p, q) order of the pairs.
inline std::vector<DwellKey> scheme_keys(Scheme scheme, int num_modes) {
    std::vector<DwellKey> keys;
    if (!is_sequence_based(scheme)) {
        for (int p = 1; p <= num_modes; ++p) keys.push_back({p, std::nullopt});
        return keys;
    }
    for (int p = 1; p <= num_modes; ++p)
        for (int q = 1; q <= num_modes; ++q)
            if (p != q) keys.push_back(key_for(scheme, {p, q}));
    return keys;
}

/// Minimal average dwell time for jump gain `mu` and decay rate `lambda`.
/// Continuous: ln(mu)/lambda. Discrete: -ln(mu)/ln(1 - lambda), a step count.
/// The scheme only decides which mode's lambda the caller passes in.
inline double threshold(Scheme /*scheme*/, TimeDomain domain, double mu, double lambda) {
    if (!std::isfinite(mu) || mu < 1.0) throw InputError("threshold: jump gain mu must be >= 1, got " + std::to_string(mu));
    if (domain == TimeDomain::continuous) {
        if (!std::isfinite(lambda) || lambda <= 0.0)
            throw InputError("threshold: continuous decay rate must be > 0, got " + std::to_string(lambda));
    } else if (!(lambda > 0.0 && lambda < 1.0)) {
        throw InputError("threshold: discrete decay rate must lie in (0, 1), got " + std::to_string(lambda));
    }
    if (mu == 1.0) return 0.0;
    if (domain == TimeDomain::continuous) return std::log(mu) / lambda;
    return -std::log(mu) / std::log(1.0 - lambda);
}

/// Scheme parameters. Thresholds are never stored; they are recomputed from
/// (mu, lambda) so they always agree with `threshold`.
struct DwellPolicy {
    Scheme scheme = Scheme::sbasdt;
    TimeDomain domain = TimeDomain::continuous;
    std::map<int, double> lambda;            // per mode
    std::map<OrderedPair, double> pair_mu;   // SBASDT / SBAPDT
    std::map<int, double> mode_mu;           // ADT / MDADT
    std::map<DwellKey, int> chatter;         // N0, default 1

    static constexpr int default_chatter = 1;

    [[nodiscard]] int num_modes() const { return lambda.empty() ? 0 : lambda.rbegin()->first; }

    [[nodiscard]] double lambda_for(const DwellKey& key) const {
        const auto it = lambda.find(key.mode);
        if (it == lambda.end()) throw InputError("policy: missing lambda for mode " + std::to_string(key.mode));
        return it->second;
    }

    [[nodiscard]] double mu_for(const DwellKey& key) const {
        if (is_sequence_based(scheme)) {
            if (!key.pair) throw InputError("policy: key " + key.to_string() + " lacks a switch pair");
            const auto it = pair_mu.find(*key.pair);
            if (it == pair_mu.end())
                throw InputError("policy: missing mu for key " + key.to_string() + " (pair " + key.pair->to_string() + ")");
            return it->second;
        }
        const auto it = mode_mu.find(key.mode);
        if (it == mode_mu.end()) throw InputError("policy: missing mu for key " + key.to_string());
        return it->second;
    }

    [[nodiscard]] int chatter_for(const DwellKey& key) const {
        const auto it = chatter.find(key);
        return it == chatter.end() ? default_chatter : it->second;
    }

    [[nodiscard]] double threshold_for(const DwellKey& key) const {
        return threshold(scheme, domain, mu_for(key), lambda_for(key));
    }

    /// Structural checks: contiguous mode ids, ADT parameter sharing, N0 >= 0.
    void validate() const {
        int expected = 1;
        for (const auto& [mode, value] : lambda) {
            if (mode != expected) throw InputError("policy.lambda: mode ids must be contiguous from 1");
            if (!std::isfinite(value)) throw InputError("policy.lambda: non-finite value for mode " + std::to_string(mode));
            ++expected;
        }
        for (const auto& [key, n0] : chatter)
            if (n0 < 0) throw InputError("policy.chatter: negative chatter bound for key " + key.to_string());
        if (scheme == Scheme::adt) {
            auto all_equal = [](const std::map<int, double>& m) {
                return std::all_of(m.begin(), m.end(), [&](const auto& kv) { return kv.second == m.begin()->second; });
            };
            if (!all_equal(lambda) || !all_equal(mode_mu))
                throw InputError("policy: ADT uses one decay rate and one jump gain for every mode");
        }
    }
};

/// tau for every key of the policy's scheme; a missing mu or lambda names the key.
inline std::map<DwellKey, double> threshold_table(const DwellPolicy& policy) {
    policy.validate();
    std::map<DwellKey, double> table;
    for (const auto& key : scheme_keys(policy.scheme, policy.num_modes())) table[key] = policy.threshold_for(key);
    return table;
}

/// Counters of one interval [t1, t2). Lookups of absent entries return zero.
struct DwellStatistics {
    double t1 = 0.0;
    double t2 = 0.0;
    std::map<int, int> mode_events;                  // N_{sigma p}: activations by switching
    std::map<int, double> mode_time;                 // T_p
    std::map<OrderedPair, int> pair_events;          // N_{sigma p|q}
    std::map<OrderedPair, double> successor_time;    // T_{p,p|q}
    std::map<OrderedPair, double> predecessor_time;  // T_{q,p|q}
    std::set<OrderedPair> observed_pairs;            // pairs with an event inside the interval

    [[nodiscard]] int events(int p) const { return lookup(mode_events, p); }
    [[nodiscard]] double time(int p) const { return lookup(mode_time, p); }
    [[nodiscard]] int events(OrderedPair pq) const { return lookup(pair_events, pq); }
    [[nodiscard]] double successor(OrderedPair pq) const { return lookup(successor_time, pq); }
    [[nodiscard]] double predecessor(OrderedPair pq) const { return lookup(predecessor_time, pq); }

private:
    template <typename Map, typename Key>
    static typename Map::mapped_type lookup(const Map& m, const Key& k) {
        const auto it = m.find(k);
        return it == m.end() ? typename Map::mapped_type{} : it->second;
    }
};

/// Prefix-sum index over a signal: every counter of `DwellStatistics` is
/// answered for any interval in O(log segments) by differencing cumulative
/// accruals, instead of re-walking the segments.
class DwellLedger {
public:
    explicit DwellLedger(const SwitchingSignal& signal) : bounds_(signal.boundaries()) {
        const auto& segs = signal.segments();
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const int p = segs[i].mode;
            modes_.insert(p);
            mode_time_[p].add(i, segs[i].dwell);
            if (i > 0) {
                const OrderedPair entered{p, segs[i - 1].mode};
                successor_time_[entered].add(i, segs[i].dwell);
                pair_events_[entered].push_back(bounds_[i]);
                mode_events_[p].push_back(bounds_[i]);
            }
            if (i + 1 < segs.size()) predecessor_time_[OrderedPair{segs[i + 1].mode, p}].add(i, segs[i].dwell);
        }
    }

    [[nodiscard]] double horizon() const { return bounds_.back(); }
    [[nodiscard]] const std::set<int>& modes() const { return modes_; }

    /// Switch instants of event p|q, ascending.
    [[nodiscard]] const std::vector<double>& event_times(OrderedPair pq) const { return find_or_empty(pair_events_, pq); }
    [[nodiscard]] const std::vector<double>& activation_times(int p) const { return find_or_empty(mode_events_, p); }

    [[nodiscard]] std::vector<OrderedPair> pairs() const {
        std::vector<OrderedPair> out;
        for (const auto& [pq, times] : pair_events_) out.push_back(pq);
        return out;
    }

    /// Running time accrued on [0, t) by each counter family.
    [[nodiscard]] double mode_time_until(int p, double t) const { return accrued(mode_time_, p, t); }
    [[nodiscard]] double successor_time_until(OrderedPair pq, double t) const { return accrued(successor_time_, pq, t); }
    [[nodiscard]] double predecessor_time_until(OrderedPair pq, double t) const {
        return accrued(predecessor_time_, pq, t);
    }

    /// Running time accrued on [0, t) by the counter that budgets `key` under `scheme`.
    [[nodiscard]] double budget_until(Scheme scheme, const DwellKey& key, double t) const {
        switch (scheme) {
            case Scheme::adt:
            case Scheme::mdadt: return mode_time_until(key.mode, t);
            case Scheme::sbasdt: return successor_time_until(*key.pair, t);
            case Scheme::sbapdt: return predecessor_time_until(*key.pair, t);
        }
        return 0.0;
    }

    [[nodiscard]] DwellStatistics statistics(double t1, double t2) const {
        DwellStatistics st;
        st.t1 = t1;
        st.t2 = t2;
        for (int p : modes_) {
            st.mode_time[p] = mode_time_until(p, t2) - mode_time_until(p, t1);
            st.mode_events[p] = count_in(activation_times(p), t1, t2);
        }
        for (const auto& [pq, series] : successor_time_) st.successor_time[pq] = series.until(bounds_, t2) - series.until(bounds_, t1);
        for (const auto& [pq, series] : predecessor_time_)
            st.predecessor_time[pq] = series.until(bounds_, t2) - series.until(bounds_, t1);
        for (const auto& [pq, times] : pair_events_) {
            const int n = count_in(times, t1, t2);
            st.pair_events[pq] = n;
            if (n > 0) st.observed_pairs.insert(pq);
        }
        return st;
    }

private:
    // Segments contributing to one counter, with prefix sums of their dwell.
    struct Series {
        std::vector<std::size_t> segments;
        std::vector<double> prefix{0.0};

        void add(std::size_t seg, double dwell) {
            segments.push_back(seg);
            prefix.push_back(prefix.back() + dwell);
        }

        [[nodiscard]] double until(const std::vector<double>& bounds, double t) const {
            if (t <= 0.0) return 0.0;
            const std::size_t last = bounds.size() - 2;
            if (t >= bounds.back()) return prefix.back();
            auto it = std::upper_bound(bounds.begin(), bounds.end(), t);
            const auto j = std::min(static_cast<std::size_t>(it - bounds.begin()) - 1, last);
            const auto k = static_cast<std::size_t>(std::lower_bound(segments.begin(), segments.end(), j) - segments.begin());
            double total = prefix[k];
            if (k < segments.size() && segments[k] == j) total += t - bounds[j];
            return total;
        }
    };

    template <typename Key>
    double accrued(const std::map<Key, Series>& m, const Key& k, double t) const {
        const auto it = m.find(k);
        return it == m.end() ? 0.0 : it->second.until(bounds_, t);
    }

    template <typename Key>
    static const std::vector<double>& find_or_empty(const std::map<Key, std::vector<double>>& m, const Key& k) {
        static const std::vector<double> empty;
        const auto it = m.find(k);
        return it == m.end() ? empty : it->second;
    }

    static int count_in(const std::vector<double>& times, double t1, double t2) {
        return static_cast<int>(std::lower_bound(times.begin(), times.end(), t2) -
                                std::lower_bound(times.begin(), times.end(), t1));
    }

    std::vector<double> bounds_;
    std::set<int> modes_;
    std::map<int, Series> mode_time_;
    std::map<OrderedPair, Series> successor_time_;
    std::map<OrderedPair, Series> predecessor_time_;
    std::map<OrderedPair, std::vector<double>> pair_events_;
    std::map<int, std::vector<double>> mode_events_;
};

inline DwellStatistics compute_statistics(const SwitchingSignal& signal, double t1, double t2) {
    const double horizon = signal.horizon();
    const double slack = 1e-9 * std::max(1.0, horizon);
    if (!(t1 >= 0.0 && t1 < t2 && t2 <= horizon + slack))
        throw InputError("compute_statistics: need 0 <= t1 < t2 <= horizon (" + std::to_string(horizon) + "), got [" +
                         std::to_string(t1) + ", " + std::to_string(t2) + ")");
    return DwellLedger(signal).statistics(t1, std::min(t2, horizon));
}

struct KeyVerdict {
    DwellKey key;
    double tau = 0.0;
    int chatter = 0;
    int events = 0;                // over the whole signal
    double worst_slack = std::numeric_limits<double>::infinity();  // min of N0 + T/tau - N
    double worst_t1 = 0.0;         // interval realising worst_slack, closed on the right
    double worst_t2 = 0.0;
    bool admissible = true;
};

struct AdmissibilityReport {
    Scheme scheme = Scheme::sbasdt;
    bool admissible = true;
    std::vector<KeyVerdict> keys;  // observed keys only; unobserved keys hold vacuously
};

/// Slack below this counts as a violation; absorbs rounding in T/tau.
inline constexpr double admissibility_tolerance = 1e-9;

/// Checks the counting inequality of the policy's scheme over every interval.
/// For a fixed key only intervals [e_i, e_j] between two of its own events
/// need checking: N is piecewise constant in both endpoints while the budget
/// shrinks as t1 grows and grows with t2, so the extremal intervals start at
/// an event and end just after one.
inline AdmissibilityReport check_admissible(const SwitchingSignal& signal, const DwellPolicy& policy) {
    policy.validate();
    const DwellLedger ledger(signal);
    AdmissibilityReport report;
    report.scheme = policy.scheme;

    std::map<DwellKey, std::vector<double>> events;
    for (const auto& ev : switch_times(signal)) events[key_for(policy.scheme, ev.pair())].push_back(ev.time);

    for (const auto& [key, times] : events) {
        KeyVerdict v;
        v.key = key;
        v.tau = policy.threshold_for(key);
        v.chatter = policy.chatter_for(key);
        v.events = static_cast<int>(times.size());
        if (v.tau > 0.0) {
            std::vector<double> budget(times.size());
            for (std::size_t i = 0; i < times.size(); ++i) budget[i] = ledger.budget_until(policy.scheme, key, times[i]);
            for (std::size_t i = 0; i < times.size(); ++i) {
                for (std::size_t j = i; j < times.size(); ++j) {
                    const double n = static_cast<double>(j - i + 1);
                    const double slack = v.chatter + (budget[j] - budget[i]) / v.tau - n;
                    if (slack < v.worst_slack) {
                        v.worst_slack = slack;
                        v.worst_t1 = times[i];
                        v.worst_t2 = times[j];
                    }
                }
            }
        }
        v.admissible = !(v.worst_slack < -admissibility_tolerance);
        report.admissible = report.admissible && v.admissible;
        report.keys.push_back(v);
    }
    return report;
}

}  // namespace seqdwell
