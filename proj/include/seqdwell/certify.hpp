#pragma once

// Multiple-Lyapunov-function certificates for switched linear systems.
//
// The decay condition A^T P + P A <= -lambda P has a solution P > 0 exactly
// when A + (lambda/2) I is Hurwitz; we take P from the shifted Lyapunov
// equation with Q = I. The discrete analogue A^T P A - P <= -lambda P uses
// A / sqrt(1 - lambda). Jump gains mu_{p|q} are then the smallest scalings
// with P_p <= mu P_q, floored at 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dwell.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace seqdwell {

/// k1 |x|^2 <= x^T P x <= k2 |x|^2.
struct QuadraticBounds {
    double k1 = 0.0;
    double k2 = 0.0;
};

struct StabilityCertificate {
    Scheme scheme = Scheme::sbasdt;
    TimeDomain domain = TimeDomain::continuous;
    std::map<int, double> lambda;
    std::map<int, SymmetricMatrix> p;
    std::map<OrderedPair, double> mu;
    std::map<DwellKey, double> thresholds;
    std::map<int, double> decay_margin;       // max eig of the decay expression, <= 0 expected
    std::map<OrderedPair, double> jump_margin;  // max eig of P_p - mu P_q, <= 0 expected
    std::map<int, QuadraticBounds> bounds;
    double q_scale = 1.0;    // Lyapunov right-hand side is q_scale * I
    double tolerance = 1e-8;

    [[nodiscard]] int num_modes() const { return static_cast<int>(p.size()); }

    [[nodiscard]] double lyapunov_value(int mode, const Vector& x) const {
        const auto it = p.find(mode);
        if (it == p.end()) throw InputError("certificate: no Lyapunov matrix for mode " + std::to_string(mode));
        return x.dot(it->second.matrix() * x);
    }

    [[nodiscard]] double mu_for(OrderedPair pq) const {
        const auto it = mu.find(pq);
        if (it == mu.end()) throw InputError("certificate: no jump gain for pair " + pq.to_string());
        return it->second;
    }

    /// Dwell policy implied by the certificate. MDADT takes mu_p = max_q mu_{p|q};
    /// ADT shares the worst mu and the slowest lambda across modes.
    [[nodiscard]] DwellPolicy policy() const {
        DwellPolicy pol;
        pol.scheme = scheme;
        pol.domain = domain;
        pol.lambda = lambda;
        if (is_sequence_based(scheme)) {
            pol.pair_mu = mu;
            return pol;
        }
        for (const auto& [pq, value] : mu) pol.mode_mu[pq.p] = std::max(pol.mode_mu[pq.p], value);
        if (scheme == Scheme::adt) {
            double worst_mu = 1.0;
            double slowest = std::numeric_limits<double>::infinity();
            for (const auto& [mode, v] : pol.mode_mu) worst_mu = std::max(worst_mu, v);
            for (const auto& [mode, l] : lambda) slowest = std::min(slowest, l);
            for (auto& [mode, v] : pol.mode_mu) v = worst_mu;
            for (auto& [mode, l] : pol.lambda) l = slowest;
        }
        return pol;
    }
};

namespace detail {

inline void check_decay_rates(const SwitchedSystem& system, const std::map<int, double>& lambda) {
    for (int p = 1; p <= system.num_modes(); ++p) {
        const auto it = lambda.find(p);
        if (it == lambda.end()) throw InputError("lambda: missing decay rate for mode " + std::to_string(p));
        const double l = it->second;
        if (system.time_domain() == TimeDomain::continuous && !(std::isfinite(l) && l > 0.0))
            throw InputError("lambda[" + std::to_string(p) + "]: continuous decay rate must be > 0");
        if (system.time_domain() == TimeDomain::discrete && !(l > 0.0 && l < 1.0))
            throw InputError("lambda[" + std::to_string(p) + "]: discrete decay rate must lie in (0, 1)");
    }
    if (static_cast<int>(lambda.size()) != system.num_modes())
        throw InputError("lambda: expected " + std::to_string(system.num_modes()) + " entries");
}

/// Max eigenvalue of the decay expression: A^T P + P A + lambda P, or A^T P A - P + lambda P.
inline double decay_expression_max(TimeDomain domain, const Matrix& a, const SymmetricMatrix& p, double lambda) {
    const Matrix& pm = p.matrix();
    const Matrix expr = domain == TimeDomain::continuous ? Matrix(a.transpose() * pm + pm * a + lambda * pm)
                                                         : Matrix(a.transpose() * pm * a - pm + lambda * pm);
    return max_eigenvalue(SymmetricMatrix(expr));
}

inline std::complex<double> worst_eigenvalue(TimeDomain domain, const Matrix& a) {
    const auto ev = eigenvalues(a);
    return *std::max_element(ev.begin(), ev.end(), [&](const auto& x, const auto& y) {
        return domain == TimeDomain::continuous ? x.real() < y.real() : std::abs(x) < std::abs(y);
    });
}

}  // namespace detail

/// Builds a certificate for the (autonomous or already closed-loop) linear system.
inline StabilityCertificate certify_linear(const SwitchedSystem& system, const std::map<int, double>& lambda,
                                           Scheme scheme) {
    if (!system.all_linear()) throw InputError("certify_linear: every mode must be linear");
    detail::check_decay_rates(system, lambda);

    StabilityCertificate cert;
    cert.scheme = scheme;
    cert.domain = system.time_domain();
    cert.lambda = lambda;
    const auto n = static_cast<Eigen::Index>(system.state_dim());
    const SymmetricMatrix q = SymmetricMatrix::identity(n) * cert.q_scale;

    for (int p = 1; p <= system.num_modes(); ++p) {
        const Matrix& a = system.mode(p).linear().a;
        const double l = lambda.at(p);
        if (cert.domain == TimeDomain::continuous) {
            const Matrix shifted = a + 0.5 * l * Matrix::Identity(n, n);
            const auto worst = detail::worst_eigenvalue(cert.domain, shifted);
            if (!(worst.real() < 0.0)) {
                std::ostringstream os;
                os << "mode " << p << ": A + (lambda/2) I has eigenvalue " << worst.real() << (worst.imag() < 0 ? "-" : "+")
                   << std::abs(worst.imag()) << "i with non-negative real part; decay rate " << l
                   << " is too aggressive for this mode";
                throw InfeasibleError(os.str());
            }
            cert.p[p] = solve_lyapunov_continuous(shifted, q);
        } else {
            const Matrix scaled = a / std::sqrt(1.0 - l);
            const auto worst = detail::worst_eigenvalue(cert.domain, scaled);
            if (!(std::abs(worst) < 1.0)) {
                std::ostringstream os;
                os << "mode " << p << ": A / sqrt(1 - lambda) has eigenvalue of modulus " << std::abs(worst)
                   << " >= 1; decay rate " << l << " is too aggressive for this mode";
                throw InfeasibleError(os.str());
            }
            cert.p[p] = solve_lyapunov_discrete(scaled, q);
        }
        const auto ev = sym_eig(cert.p[p]).eigenvalues;
        cert.bounds[p] = {ev.minCoeff(), ev.maxCoeff()};
        cert.decay_margin[p] = detail::decay_expression_max(cert.domain, a, cert.p[p], l);
    }

    for (int p = 1; p <= system.num_modes(); ++p) {
        for (int qm = 1; qm <= system.num_modes(); ++qm) {
            if (p == qm) continue;
            const OrderedPair pq{p, qm};
            const double mu = std::max(1.0, min_scaling_mu(cert.p[p], cert.p[qm]));
            cert.mu[pq] = mu;
            cert.jump_margin[pq] = max_eigenvalue(SymmetricMatrix(cert.p[p].matrix() - mu * cert.p[qm].matrix()));
        }
    }
    cert.thresholds = threshold_table(cert.policy());
    return cert;
}

struct ConditionMargin {
    std::string condition;  // "positive-definite", "decay", "jump", "mu-floor", "threshold"
    int mode = 0;
    std::optional<OrderedPair> pair;
    double value = 0.0;    // most violated eigenvalue (or deviation); must not exceed `allowed`
    double allowed = 0.0;
    bool ok = true;
};

struct MarginReport {
    std::vector<ConditionMargin> conditions;
    bool passed = true;

    [[nodiscard]] std::vector<ConditionMargin> failures() const {
        std::vector<ConditionMargin> out;
        for (const auto& c : conditions)
            if (!c.ok) out.push_back(c);
        return out;
    }
};

/// Recomputes every certificate inequality from scratch. Eigenvalue tolerances
/// are `tol` scaled by max(1, |P|).
inline MarginReport verify_certificate(const SwitchedSystem& system, const StabilityCertificate& cert,
                                       double tol = 1e-8) {
    if (!system.all_linear()) throw InputError("verify_certificate: every mode must be linear");
    if (cert.num_modes() != system.num_modes())
        throw InputError("verify_certificate: certificate has " + std::to_string(cert.num_modes()) +
                         " Lyapunov matrices, system has " + std::to_string(system.num_modes()) + " modes");
    if (cert.domain != system.time_domain()) throw InputError("verify_certificate: time domain mismatch");
    MarginReport report;
    auto add = [&](ConditionMargin c) {
        c.ok = c.condition == "positive-definite" ? c.value < c.allowed : c.value <= c.allowed;
        report.passed = report.passed && c.ok;
        report.conditions.push_back(std::move(c));
    };

    std::map<int, double> scale;
    for (int p = 1; p <= system.num_modes(); ++p) {
        const auto it = cert.p.find(p);
        if (it == cert.p.end()) throw InputError("verify_certificate: no Lyapunov matrix for mode " + std::to_string(p));
        if (it->second.order() != system.state_dim())
            throw InputError("verify_certificate: P[" + std::to_string(p) + "] has order " +
                             std::to_string(it->second.order()) + ", state dimension is " +
                             std::to_string(system.state_dim()));
        const auto lit = cert.lambda.find(p);
        if (lit == cert.lambda.end()) throw InputError("verify_certificate: no decay rate for mode " + std::to_string(p));
        scale[p] = std::max(1.0, norm2(it->second));
        add({"positive-definite", p, std::nullopt, -min_eigenvalue(it->second), 0.0, true});
        add({"decay", p, std::nullopt,
             detail::decay_expression_max(cert.domain, system.mode(p).linear().a, it->second, lit->second),
             tol * scale[p], true});
    }
    for (int p = 1; p <= system.num_modes(); ++p) {
        for (int q = 1; q <= system.num_modes(); ++q) {
            if (p == q) continue;
            const OrderedPair pq{p, q};
            const double mu = cert.mu_for(pq);
            add({"mu-floor", p, pq, 1.0 - mu, 1e-9, true});
            const double jump = max_eigenvalue(SymmetricMatrix(cert.p.at(p).matrix() - mu * cert.p.at(q).matrix()));
            add({"jump", p, pq, jump, tol * std::max(scale[p], scale[q]), true});
        }
    }
    if (!cert.thresholds.empty()) {
        const auto expected = threshold_table(cert.policy());
        for (const auto& [key, tau] : cert.thresholds) {
            const auto it = expected.find(key);
            const double dev = it == expected.end() ? std::numeric_limits<double>::infinity() : std::abs(it->second - tau);
            add({"threshold", key.mode, key.pair, dev, 1e-12 * std::max(1.0, std::abs(tau)), true});
        }
    }
    return report;
}

/// log of the piecewise-exponential envelope on V_{sigma(t)}(x(t)):
/// V0 * prod_{switches <= t} mu_{p|q} * exp(-sum lambda_mode * elapsed), with
/// (1 - lambda)^steps in place of the exponential for discrete time.
inline double log_envelope_bound(const StabilityCertificate& cert, const SwitchingSignal& signal, double v0, double t) {
    if (!(v0 > 0.0)) throw InputError("envelope_bound: V0 must be positive");
    const double horizon = signal.horizon();
    if (!(t >= 0.0 && t <= horizon + 1e-9 * std::max(1.0, horizon)))
        throw InputError("envelope_bound: t outside the signal horizon");
    const auto& segs = signal.segments();
    double log_bound = std::log(v0);
    double start = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i > 0) {
            if (t < start) break;
            log_bound += std::log(cert.mu_for({segs[i].mode, segs[i - 1].mode}));
        }
        const double end = start + segs[i].dwell;
        const double elapsed = std::max(0.0, std::min(t, end) - start);
        const auto lit = cert.lambda.find(segs[i].mode);
        if (lit == cert.lambda.end())
            throw InputError("envelope_bound: no decay rate for mode " + std::to_string(segs[i].mode));
        log_bound += cert.domain == TimeDomain::continuous ? -lit->second * elapsed
                                                           : elapsed * std::log(1.0 - lit->second);
        start = end;
    }
    return log_bound;
}

inline double envelope_bound(const StabilityCertificate& cert, const SwitchingSignal& signal, double v0, double t) {
    return std::exp(log_envelope_bound(cert, signal, v0, t));
}

}  // namespace seqdwell
