#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "certify.hpp"
#include "dwell.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace seqdwell {

/// Per-mode Lyapunov evaluators, indexed by mode id - 1.
struct LyapunovFunctions {
    std::vector<std::function<double(const Vector&)>> v;

    [[nodiscard]] bool empty() const { return v.empty(); }

    static LyapunovFunctions quadratic(const StabilityCertificate& cert) {
        LyapunovFunctions out;
        for (const auto& [mode, p] : cert.p) {
            const Matrix pm = p.matrix();
            out.v.emplace_back([pm](const Vector& x) { return x.dot(pm * x); });
        }
        return out;
    }
};

struct Sample {
    double t = 0.0;
    int mode = 0;           // sigma(t), right-continuous at switch instants
    Vector x;
    std::vector<double> v;  // V_p(x) for p = 1..s, empty when no evaluators were attached
};

struct Trajectory {
    TimeDomain domain = TimeDomain::continuous;
    double step = 0.0;
    std::vector<Sample> samples;
    bool diverged = false;
};

inline constexpr double divergence_norm = 1e12;

namespace detail {

inline Vector rk4_step(const VectorField& f, const Vector& x, double h) {
    const Vector k1 = f(x);
    const Vector k2 = f(x + 0.5 * h * k1);
    const Vector k3 = f(x + 0.5 * h * k2);
    const Vector k4 = f(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline Vector checked(const Vector& x, int mode) {
    if (!x.allFinite()) throw NumericError("simulate: mode " + std::to_string(mode) + " produced a non-finite state");
    return x;
}

}  // namespace detail

/// Samples the switched trajectory from x0. Continuous linear segments are
/// propagated with exact matrix exponentials, nonlinear ones with RK4 at the
/// sample step. Grid points k*h closer than 1e-9 to a switch instant snap to it,
/// and every switch instant is a sample. Discrete systems require step 1.
inline Trajectory simulate(const SwitchedSystem& system, const SwitchingSignal& signal, const Vector& x0, double step,
                           const LyapunovFunctions& lyapunov = {}) {
    signal.validate_for(system);
    if (x0.size() != system.state_dim())
        throw InputError("simulate: x0 has dimension " + std::to_string(x0.size()) + ", expected " +
                         std::to_string(system.state_dim()));
    if (!x0.allFinite()) throw InputError("simulate: x0 has non-finite entries");
    if (!(std::isfinite(step) && step > 0.0)) throw InputError("simulate: sample step must be positive");
    if (system.time_domain() == TimeDomain::discrete && step != 1.0)
        throw InputError("simulate: discrete systems are sampled every step (step = 1)");
    if (!lyapunov.empty() && static_cast<int>(lyapunov.v.size()) != system.num_modes())
        throw InputError("simulate: need one Lyapunov evaluator per mode");

    Trajectory traj;
    traj.domain = system.time_domain();
    traj.step = step;

    auto record = [&](double t, int mode, const Vector& x) {
        Sample s{t, mode, x, {}};
        for (const auto& v : lyapunov.v) s.v.push_back(v(x));
        traj.samples.push_back(std::move(s));
    };
    // Returns false when the run has diverged and must stop.
    auto accept = [&](const Vector& x) {
        if (x.allFinite() && x.norm() <= divergence_norm) return true;
        traj.diverged = true;
        return false;
    };

    const auto& segs = signal.segments();
    const auto bounds = signal.boundaries();
    Vector x = x0;
    record(0.0, segs.front().mode, x);

    if (system.time_domain() == TimeDomain::discrete) {
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const Mode& mode = system.mode(segs[i].mode);
            const auto steps = static_cast<long>(std::llround(segs[i].dwell));
            for (long k = 0; k < steps; ++k) {
                x = mode.is_linear() ? Vector(mode.linear().a * x) : detail::checked(mode.nonlinear().f(x), mode.id);
                const double t = bounds[i] + static_cast<double>(k + 1);
                const int active = (k + 1 == steps && i + 1 < segs.size()) ? segs[i + 1].mode : segs[i].mode;
                if (!accept(x)) {
                    if (x.allFinite()) record(t, active, x);
                    return traj;
                }
                record(t, active, x);
            }
        }
        return traj;
    }

    const double horizon = bounds.back();
    const double snap = 1e-9 * std::max(1.0, horizon);
    std::map<int, Matrix> step_propagator;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const Mode& mode = system.mode(segs[i].mode);
        const double start = bounds[i];
        const double end = bounds[i + 1];
        double t = start;
        bool on_grid = std::abs(start - std::round(start / step) * step) <= snap;
        auto k = static_cast<long long>(std::floor(start / step));
        while (static_cast<double>(k) * step <= start + snap) ++k;
        while (true) {
            double target = static_cast<double>(k) * step;
            bool target_on_grid = true;
            if (target >= end - snap) {
                target = end;
                target_on_grid = false;
            }
            const double dt = target - t;
            if (dt > 0.0) {
                if (mode.is_linear()) {
                    const Matrix& a = mode.linear().a;
                    if (on_grid && target_on_grid) {
                        auto it = step_propagator.find(mode.id);
                        if (it == step_propagator.end()) it = step_propagator.emplace(mode.id, expm(a, step)).first;
                        x = it->second * x;
                    } else {
                        x = expm(a, dt) * x;
                    }
                } else {
                    x = detail::checked(detail::rk4_step(mode.nonlinear().f, x, dt), mode.id);
                }
            }
            const bool boundary = target == end;
            const int active = (boundary && i + 1 < segs.size()) ? segs[i + 1].mode : segs[i].mode;
            if (!accept(x)) {
                if (x.allFinite()) record(target, active, x);
                return traj;
            }
            if (dt > 0.0) record(target, active, x);
            if (boundary) break;
            t = target;
            on_grid = true;
            ++k;
        }
    }
    return traj;
}

/// Exponential envelope |x(t)| <= eta |x(t0)| e^{-gamma (t - t0)} fitted to a trajectory.
struct GuesFit {
    double eta = 0.0;
    double gamma = 0.0;     // continuous rate; for discrete runs gamma = -ln(varsigma) per step
    double varsigma = 1.0;  // e^{-gamma}, meaningful for discrete runs
    double residual = 0.0;  // max_i |x_i| - bound(t_i), <= 0
};

/// gamma is the steepest decay of a line through the log-norm peak that stays
/// above every later sample; eta is the smallest amplitude making the bound
/// dominate all samples. Runs that peak at their final sample (including
/// flagged divergent runs) get the non-positive average rate instead.
inline GuesFit fit_gues(const Trajectory& traj) {
    const auto& s = traj.samples;
    if (s.size() < 10) throw InputError("fit_gues: need at least 10 samples");
    const double norm0 = s.front().x.norm();
    if (!(norm0 > 0.0)) throw InputError("fit_gues: x(t0) must be non-zero");
    const double t0 = s.front().t;

    std::vector<double> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double nrm = s[i].x.norm();
        y[i] = nrm > 0.0 ? std::log(nrm) : -std::numeric_limits<double>::infinity();
    }
    const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());

    GuesFit fit;
    if (traj.diverged || peak + 1 == s.size()) {
        const std::size_t last = s.size() - 1;
        fit.gamma = std::min(0.0, -(y[last] - y[0]) / (s[last].t - t0));
    } else {
        fit.gamma = std::numeric_limits<double>::infinity();
        for (std::size_t j = peak + 1; j < s.size(); ++j) {
            if (!std::isfinite(y[j])) continue;
            fit.gamma = std::min(fit.gamma, (y[peak] - y[j]) / (s[j].t - s[peak].t));
        }
        // every later sample is exactly zero: any rate dominates
        if (!std::isfinite(fit.gamma)) fit.gamma = std::numeric_limits<double>::max();
    }

    double log_amp = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.size(); ++i)
        if (std::isfinite(y[i])) log_amp = std::max(log_amp, y[i] + fit.gamma * (s[i].t - t0));
    fit.eta = std::exp(log_amp) / norm0 * (1.0 + 1e-12);
    fit.varsigma = std::exp(-fit.gamma);

    fit.residual = -std::numeric_limits<double>::infinity();
    for (const auto& smp : s)
        fit.residual = std::max(fit.residual, smp.x.norm() - fit.eta * norm0 * std::exp(-fit.gamma * (smp.t - t0)));
    return fit;
}

struct EnvelopeReport {
    double max_excess = -1.0;  // max over samples of V / envelope - 1
    double worst_time = 0.0;
    bool pass = false;
};

inline constexpr double envelope_tolerance = 1e-6;

/// Compares V_{sigma(t)}(x(t)) with the certificate's envelope at every sample.
inline EnvelopeReport check_envelope(const Trajectory& traj, const StabilityCertificate& cert,
                                     const SwitchingSignal& signal) {
    if (traj.samples.empty()) throw InputError("check_envelope: empty trajectory");
    const auto& first = traj.samples.front();
    if (first.v.empty()) throw InputError("check_envelope: trajectory carries no Lyapunov values");
    const double v0 = first.v.at(static_cast<std::size_t>(first.mode - 1));
    if (!(v0 > 0.0)) throw InputError("check_envelope: V(x0) must be positive");

    EnvelopeReport report;
    report.max_excess = -std::numeric_limits<double>::infinity();
    for (const auto& s : traj.samples) {
        if (s.v.empty()) throw InputError("check_envelope: sample without Lyapunov values");
        const double v = s.v.at(static_cast<std::size_t>(s.mode - 1));
        const double excess = v > 0.0 ? std::expm1(std::log(v) - log_envelope_bound(cert, signal, v0, s.t)) : -1.0;
        if (excess > report.max_excess) {
            report.max_excess = excess;
            report.worst_time = s.t;
        }
    }
    report.pass = report.max_excess <= envelope_tolerance;
    return report;
}

struct SignalGenSpec {
    DwellPolicy policy;
    double horizon = 10.0;
    std::uint64_t seed = 0;
    double multiplier_min = 1.0;
    double multiplier_max = 2.0;
    std::optional<double> violation_factor;  // in (0, 1): shrink every dwell to provoke violations
    double min_dwell = 0.1;                  // continuous floor for keys with tau = 0; discrete floor is 1 step
};

/// Random switching signal whose every committed dwell covers its key's
/// threshold, dwell >= tau * multiplier, so the counting inequality holds with
/// N0 = 1. SBASDT/MDADT budget the entered segment, SBAPDT budgets the segment
/// being left, so there the successor is drawn before the dwell. The final
/// segment is cut at the horizon.
inline SwitchingSignal generate_signal(const SignalGenSpec& spec) {
    const auto& policy = spec.policy;
    policy.validate();
    const int s = policy.num_modes();
    if (s < 2) throw InputError("generate_signal: policy must cover at least two modes");
    if (!(std::isfinite(spec.horizon) && spec.horizon > 0.0)) throw InputError("generate_signal: horizon must be positive");
    if (!(spec.multiplier_min >= 1.0 && spec.multiplier_max >= spec.multiplier_min))
        throw InputError("generate_signal: need 1 <= multiplier_min <= multiplier_max");
    if (spec.violation_factor && !(*spec.violation_factor > 0.0 && *spec.violation_factor < 1.0))
        throw InputError("generate_signal: violation factor must lie in (0, 1)");
    const bool discrete = policy.domain == TimeDomain::discrete;
    if (discrete && spec.horizon != std::round(spec.horizon))
        throw InputError("generate_signal: discrete horizon must be a whole number of steps");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> multiplier(spec.multiplier_min, spec.multiplier_max);
    std::uniform_int_distribution<int> other(1, s - 1);

    auto next_mode = [&](int current) {
        const int m = other(rng);
        return m >= current ? m + 1 : m;
    };
    auto dwell_for = [&](double tau) {
        const double floor = discrete ? 1.0 : spec.min_dwell;
        double d = std::max(tau, floor) * multiplier(rng);
        if (spec.violation_factor) d *= *spec.violation_factor;
        if (discrete) d = spec.violation_factor ? std::max(1.0, std::floor(d)) : std::max(1.0, std::ceil(d));
        return d;
    };
    auto tau = [&](OrderedPair pq) { return policy.threshold_for(key_for(policy.scheme, pq)); };

    std::uniform_int_distribution<int> any(1, s);
    int current = any(rng);
    std::vector<Segment> segs;
    double start = 0.0;

    if (policy.scheme == Scheme::sbapdt) {
        while (start < spec.horizon) {
            const int successor = next_mode(current);
            const double d = dwell_for(tau({successor, current}));
            segs.push_back({current, d});
            start += d;
            current = successor;
        }
    } else {
        double first_tau = 0.0;
        for (int q = 1; q <= s; ++q)
            if (q != current) first_tau = std::max(first_tau, tau({current, q}));
        segs.push_back({current, dwell_for(first_tau)});
        start = segs.back().dwell;
        while (start < spec.horizon) {
            const int successor = next_mode(current);
            const double d = dwell_for(tau({successor, current}));
            segs.push_back({successor, d});
            start += d;
            current = successor;
        }
    }
    const double overshoot = start - spec.horizon;
    segs.back().dwell -= overshoot;
    if (!(segs.back().dwell > 0.0)) segs.pop_back();
    return SwitchingSignal(std::move(segs));
}

}  // namespace seqdwell
