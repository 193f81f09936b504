#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace seqdwell {

enum class TimeDomain { continuous, discrete };

inline std::string_view to_string(TimeDomain d) { return d == TimeDomain::continuous ? "continuous" : "discrete"; }

inline TimeDomain parse_time_domain(std::string_view s) {
    if (s == "continuous") return TimeDomain::continuous;
    if (s == "discrete") return TimeDomain::discrete;
    throw InputError("time_domain: expected \"continuous\" or \"discrete\", got \"" + std::string(s) + "\"");
}

/// The switch event p|q: mode p is activated immediately after mode q.
struct OrderedPair {
    int p = 0;
    int q = 0;

    friend auto operator<=>(const OrderedPair&, const OrderedPair&) = default;

    [[nodiscard]] std::string to_string() const { return std::to_string(p) + "|" + std::to_string(q); }

    static OrderedPair parse(std::string_view key) {
        const auto bar = key.find('|');
        if (bar == std::string_view::npos) throw InputError("pair key \"" + std::string(key) + "\": expected \"p|q\"");
        try {
            std::size_t used_p = 0;
            std::size_t used_q = 0;
            const std::string ps(key.substr(0, bar));
            const std::string qs(key.substr(bar + 1));
            OrderedPair pair{std::stoi(ps, &used_p), std::stoi(qs, &used_q)};
            if (used_p != ps.size() || used_q != qs.size()) throw std::invalid_argument("trailing");
            if (pair.p == pair.q) throw InputError("pair key \"" + std::string(key) + "\": p and q must differ");
            return pair;
        } catch (const InputError&) {
            throw;
        } catch (const std::exception&) {
            throw InputError("pair key \"" + std::string(key) + "\": expected integer mode ids \"p|q\"");
        }
    }
};

struct LinearDynamics {
    Matrix a;  // n x n
    Matrix b;  // n x m
};

/// State -> derivative (continuous) or state -> next state (discrete). Must be pure.
using VectorField = std::function<Vector(const Vector&)>;

struct NonlinearDynamics {
    VectorField f;
};

struct Mode {
    int id = 0;
    std::variant<LinearDynamics, NonlinearDynamics> dynamics;

    [[nodiscard]] bool is_linear() const { return std::holds_alternative<LinearDynamics>(dynamics); }

    [[nodiscard]] const LinearDynamics& linear() const {
        if (!is_linear()) throw InputError("mode " + std::to_string(id) + " is nonlinear; linear dynamics required");
        return std::get<LinearDynamics>(dynamics);
    }

    [[nodiscard]] const NonlinearDynamics& nonlinear() const { return std::get<NonlinearDynamics>(dynamics); }
};

class SwitchedSystem {
public:
    /// Validates mode count, id contiguity and matrix conformity. Modes may be given in any order.
    SwitchedSystem(TimeDomain domain, int state_dim, int input_dim, std::vector<Mode> modes)
        : domain_(domain), n_(state_dim), m_(input_dim) {
        if (n_ <= 0) throw InputError("state_dim: must be positive");
        if (m_ < 0) throw InputError("input_dim: must be non-negative");
        if (modes.size() < 2) throw InputError("modes: a switched system needs at least two modes");
        const auto s = static_cast<int>(modes.size());
        modes_.resize(modes.size());
        std::vector<bool> seen(modes.size(), false);
        for (std::size_t i = 0; i < modes.size(); ++i) {
            auto& mode = modes[i];
            const std::string path = "modes[" + std::to_string(i) + "]";
            if (mode.id < 1 || mode.id > s)
                throw InputError(path + ".id: mode ids must be contiguous 1.." + std::to_string(s) + ", got " +
                                 std::to_string(mode.id));
            if (seen[static_cast<std::size_t>(mode.id - 1)])
                throw InputError(path + ".id: duplicate mode id " + std::to_string(mode.id));
            seen[static_cast<std::size_t>(mode.id - 1)] = true;
            if (mode.is_linear()) {
                auto& lin = std::get<LinearDynamics>(mode.dynamics);
                if (lin.a.rows() != n_ || lin.a.cols() != n_)
                    throw InputError(path + ".A: expected " + std::to_string(n_) + "x" + std::to_string(n_) +
                                     ", got " + detail::shape(lin.a));
                if (lin.b.size() == 0) lin.b = Matrix::Zero(n_, m_);
                if (lin.b.rows() != n_ || lin.b.cols() != m_)
                    throw InputError(path + ".B: expected " + std::to_string(n_) + "x" + std::to_string(m_) +
                                     ", got " + detail::shape(lin.b));
                require_finite(lin.a, path + ".A");
                require_finite(lin.b, path + ".B");
            } else if (!mode.nonlinear().f) {
                throw InputError(path + ": nonlinear mode without a vector field");
            }
            modes_[static_cast<std::size_t>(mode.id - 1)] = std::move(mode);
        }
    }

    [[nodiscard]] TimeDomain time_domain() const { return domain_; }
    [[nodiscard]] int state_dim() const { return n_; }
    [[nodiscard]] int input_dim() const { return m_; }
    [[nodiscard]] int num_modes() const { return static_cast<int>(modes_.size()); }
    [[nodiscard]] const std::vector<Mode>& modes() const { return modes_; }

    [[nodiscard]] const Mode& mode(int id) const {
        if (id < 1 || id > num_modes())
            throw InputError("mode id " + std::to_string(id) + " outside 1.." + std::to_string(num_modes()));
        return modes_[static_cast<std::size_t>(id - 1)];
    }

    [[nodiscard]] bool all_linear() const {
        for (const auto& m : modes_)
            if (!m.is_linear()) return false;
        return true;
    }

    /// Structural equality; nonlinear modes never compare equal.
    friend bool operator==(const SwitchedSystem& a, const SwitchedSystem& b) {
        if (a.domain_ != b.domain_ || a.n_ != b.n_ || a.m_ != b.m_ || a.modes_.size() != b.modes_.size())
            return false;
        for (std::size_t i = 0; i < a.modes_.size(); ++i) {
            if (!a.modes_[i].is_linear() || !b.modes_[i].is_linear()) return false;
            const auto& la = a.modes_[i].linear();
            const auto& lb = b.modes_[i].linear();
            if (la.a != lb.a || la.b != lb.b) return false;
        }
        return true;
    }

private:
    TimeDomain domain_;
    int n_;
    int m_;
    std::vector<Mode> modes_;
};

struct Segment {
    int mode = 0;
    double dwell = 0.0;  // seconds (continuous) or steps (discrete)

    friend bool operator==(const Segment&, const Segment&) = default;
};

struct SwitchEvent {
    double time = 0.0;
    int from = 0;
    int to = 0;

    [[nodiscard]] OrderedPair pair() const { return {to, from}; }
};

/// Piecewise-constant switching signal starting at t = 0. Stores durations;
/// absolute switch instants are always derived.
class SwitchingSignal {
public:
    SwitchingSignal() = default;

    explicit SwitchingSignal(std::vector<Segment> segments) : segments_(std::move(segments)) { validate(); }

    SwitchingSignal(int initial_mode, std::vector<Segment> segments) : segments_(std::move(segments)) {
        validate();
        if (segments_.front().mode != initial_mode)
            throw InputError("initial_mode " + std::to_string(initial_mode) + " differs from segments[0] mode " +
                             std::to_string(segments_.front().mode));
    }

    [[nodiscard]] int initial_mode() const { return segments_.front().mode; }
    [[nodiscard]] const std::vector<Segment>& segments() const { return segments_; }
    [[nodiscard]] std::size_t size() const { return segments_.size(); }

    [[nodiscard]] double horizon() const {
        double t = 0.0;
        for (const auto& s : segments_) t += s.dwell;
        return t;
    }

    /// Segment start times followed by the horizon (size() + 1 entries).
    [[nodiscard]] std::vector<double> boundaries() const {
        std::vector<double> b;
        b.reserve(segments_.size() + 1);
        double t = 0.0;
        b.push_back(t);
        for (const auto& s : segments_) {
            t += s.dwell;
            b.push_back(t);
        }
        return b;
    }

    /// Index of the segment active at t (right-continuous; t = horizon maps to the last segment).
    [[nodiscard]] std::size_t segment_at(double t) const {
        double start = 0.0;
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const double end = start + segments_[i].dwell;
            if (t < end) return i;
            start = end;
        }
        return segments_.size() - 1;
    }

    [[nodiscard]] int mode_at(double t) const { return segments_[segment_at(t)].mode; }

    /// Checks mode ids against the system and integer dwell for discrete systems.
    void validate_for(const SwitchedSystem& system) const {
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const auto& s = segments_[i];
            if (s.mode < 1 || s.mode > system.num_modes())
                throw InputError("segments[" + std::to_string(i) + "]: mode " + std::to_string(s.mode) +
                                 " not in system");
            if (system.time_domain() == TimeDomain::discrete && s.dwell != std::round(s.dwell))
                throw InputError("segments[" + std::to_string(i) + "]: discrete dwell must be an integer step count");
        }
    }

    friend bool operator==(const SwitchingSignal&, const SwitchingSignal&) = default;

private:
    void validate() const {
        if (segments_.empty()) throw InputError("segments: a signal needs at least one segment");
        for (std::size_t i = 0; i < segments_.size(); ++i) {
            const auto& s = segments_[i];
            const std::string path = "segments[" + std::to_string(i) + "]";
            if (!(std::isfinite(s.dwell) && s.dwell > 0.0)) throw InputError(path + ": dwell must be positive");
            if (s.mode < 1) throw InputError(path + ": mode ids start at 1");
            if (i > 0 && segments_[i - 1].mode == s.mode)
                throw InputError(path + ": consecutive segments must switch to a different mode");
        }
    }

    std::vector<Segment> segments_;
};

/// One entry per internal segment boundary.
inline std::vector<SwitchEvent> switch_times(const SwitchingSignal& signal) {
    std::vector<SwitchEvent> out;
    const auto& segs = signal.segments();
    double t = 0.0;
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
        t += segs[i].dwell;
        out.push_back({t, segs[i].mode, segs[i + 1].mode});
    }
    return out;
}

}  // namespace seqdwell
