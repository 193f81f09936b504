#pragma once

// State-feedback synthesis for single-input switched linear systems.
//
// Each mode is placed with Ackermann's formula at real, distinct poles that
// clear the decay requirement, and the closed loop is certified as in
// certify.hpp. The LMI variables are recovered afterwards as U = P^{-1} and
// T = K U, so K = T U^{-1} holds by construction.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "certify.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace seqdwell {

using GainMap = std::map<int, Matrix>;  // mode -> K (m x n), u = K x

/// Target pole layout. Continuous mode p gets -(lambda_p/2 + delta) * (1 + spread*k),
/// discrete mode p gets sqrt(1 - lambda_p) * shrink * ratio^k, for k = 0..n-1.
struct PlacementConstants {
    double delta = 0.5;
    double spread = 0.5;
    double shrink = 0.8;
    double ratio = 0.9;
};

struct SynthesisResult {
    GainMap gains;
    std::map<int, Matrix> u;  // P_p^{-1}
    std::map<int, Matrix> t;  // K_p U_p
    StabilityCertificate certificate;  // of the closed loop A_p + B_p K_p
    std::map<int, std::vector<double>> target_poles;
    PlacementConstants constants;
};

/// A_p + B_p K_p for every mode; B is kept so the result still describes the plant inputs.
inline SwitchedSystem closed_loop(const SwitchedSystem& system, const GainMap& gains) {
    std::vector<Mode> modes;
    for (const auto& mode : system.modes()) {
        const auto& lin = mode.linear();
        const auto it = gains.find(mode.id);
        if (it == gains.end()) throw InputError("gains: missing gain for mode " + std::to_string(mode.id));
        const Matrix& k = it->second;
        if (k.rows() != system.input_dim() || k.cols() != system.state_dim())
            throw InputError("gains[" + std::to_string(mode.id) + "]: expected " + std::to_string(system.input_dim()) +
                             "x" + std::to_string(system.state_dim()) + ", got " + detail::shape(k));
        modes.push_back({mode.id, LinearDynamics{lin.a + lin.b * k, lin.b}});
    }
    return {system.time_domain(), system.state_dim(), system.input_dim(), std::move(modes)};
}

/// Single-input Ackermann: K such that eig(A + B K) = poles (u = K x sign convention).
inline Matrix ackermann(const Matrix& a, const Matrix& b, const std::vector<double>& poles) {
    const Eigen::Index n = a.rows();
    if (b.cols() != 1) throw UnsupportedError("ackermann: only single-input systems are supported");
    if (static_cast<Eigen::Index>(poles.size()) != n) throw InputError("ackermann: need one target pole per state");
    Matrix ctrb(n, n);
    Matrix col = b;
    for (Eigen::Index k = 0; k < n; ++k) {
        ctrb.col(k) = col;
        col = a * col;
    }
    Eigen::FullPivLU<Matrix> lu(ctrb);
    if (lu.rank() < n) throw InfeasibleError("(A, B) is not controllable");
    Matrix phi = Matrix::Identity(n, n);
    for (double r : poles) phi = phi * (a - r * Matrix::Identity(n, n));
    Matrix last = Matrix::Zero(1, n);
    last(0, n - 1) = 1.0;
    // e_n^T C^{-1} = (C^{-T} e_n)^T
    const Matrix row = ctrb.transpose().fullPivLu().solve(last.transpose()).transpose();
    return -row * phi;
}

inline std::vector<double> target_poles(TimeDomain domain, int n, double lambda, const PlacementConstants& c) {
    std::vector<double> poles;
    for (int k = 0; k < n; ++k) {
        if (domain == TimeDomain::continuous)
            poles.push_back(-(0.5 * lambda + c.delta) * (1.0 + c.spread * k));
        else
            poles.push_back(std::sqrt(1.0 - lambda) * c.shrink * std::pow(c.ratio, k));
    }
    return poles;
}

inline SynthesisResult synthesize(const SwitchedSystem& system, const std::map<int, double>& lambda, Scheme scheme,
                                  const PlacementConstants& constants = {}) {
    if (!system.all_linear()) throw InputError("synthesize: every mode must be linear");
    if (system.input_dim() != 1)
        throw UnsupportedError("synthesize: pole placement supports single-input systems only (input_dim = " +
                               std::to_string(system.input_dim()) + ")");
    detail::check_decay_rates(system, lambda);

    SynthesisResult result;
    result.constants = constants;
    for (const auto& mode : system.modes()) {
        const auto& lin = mode.linear();
        auto poles = target_poles(system.time_domain(), system.state_dim(), lambda.at(mode.id), constants);
        try {
            result.gains[mode.id] = ackermann(lin.a, lin.b, poles);
        } catch (const InfeasibleError& e) {
            throw InfeasibleError("synthesize: mode " + std::to_string(mode.id) + ": " + e.what());
        }
        result.target_poles[mode.id] = std::move(poles);
    }
    result.certificate = certify_linear(closed_loop(system, result.gains), lambda, scheme);
    for (const auto& [id, p] : result.certificate.p) {
        result.u[id] = p.matrix().inverse();
        result.t[id] = result.gains[id] * result.u[id];
    }
    return result;
}

struct GainCheck {
    int mode = 0;
    double measure = 0.0;  // spectral abscissa (continuous) or radius (discrete) of A + B K
    double bound = 0.0;    // -lambda/2 or sqrt(1 - lambda)
    bool pass = false;
};

struct GainReport {
    std::vector<GainCheck> modes;
    bool passed = true;
};

/// Checks whether each closed-loop mode admits a Lyapunov matrix with decay rate lambda_p.
inline GainReport validate_gains(const SwitchedSystem& system, const GainMap& gains, const std::map<int, double>& lambda) {
    detail::check_decay_rates(system, lambda);
    const auto cl = closed_loop(system, gains);
    GainReport report;
    for (const auto& mode : cl.modes()) {
        GainCheck c;
        c.mode = mode.id;
        const double l = lambda.at(mode.id);
        if (system.time_domain() == TimeDomain::continuous) {
            c.measure = spectral_abscissa(mode.linear().a);
            c.bound = -0.5 * l;
        } else {
            c.measure = spectral_radius(mode.linear().a);
            c.bound = std::sqrt(1.0 - l);
        }
        c.pass = c.measure < c.bound;
        report.passed = report.passed && c.pass;
        report.modes.push_back(c);
    }
    return report;
}

}  // namespace seqdwell
