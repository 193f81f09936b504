#pragma once

// The three-mode, two-state, single-input benchmark system with its published
// decay rates, jump gains and state-feedback gains.

#include <algorithm>
#include <initializer_list>
#include <map>

#include "dwell.hpp"
#include "model.hpp"
#include "synth.hpp"

namespace seqdwell {

struct ExampleBundle {
    SwitchedSystem system;
    std::map<int, double> lambda;
    std::map<OrderedPair, double> pair_mu;  // sequence-based schemes
    std::map<int, double> mode_mu;          // MDADT
    GainMap mdadt_gains;
    GainMap sbasdt_gains;

    /// Policy for `scheme`: pair-keyed mu for SBASDT/SBAPDT, mode-keyed for MDADT/ADT.
    [[nodiscard]] DwellPolicy policy(Scheme scheme) const {
        DwellPolicy pol;
        pol.scheme = scheme;
        pol.domain = system.time_domain();
        if (scheme == Scheme::adt) {
            double worst = 1.0, slowest = lambda.begin()->second;
            for (const auto& [p, m] : mode_mu) worst = std::max(worst, m);
            for (const auto& [p, l] : lambda) slowest = std::min(slowest, l);
            for (const auto& [p, l] : lambda) {
                pol.lambda[p] = slowest;
                pol.mode_mu[p] = worst;
            }
            return pol;
        }
        pol.lambda = lambda;
        if (is_sequence_based(scheme))
            pol.pair_mu = pair_mu;
        else
            pol.mode_mu = mode_mu;
        return pol;
    }
};

namespace detail {

inline Matrix row(std::initializer_list<double> values) {
    Matrix m(1, static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) m(0, i++) = v;
    return m;
}

}  // namespace detail

inline ExampleBundle bundled_example() {
    Matrix a1(2, 2), a2(2, 2), a3(2, 2), b1(2, 1), b2(2, 1), b3(2, 1);
    a1 << 100.3, -20.1, -10.1, -10.2;
    a2 << 10.8, -10.2, 2.0, 10.5;
    a3 << 0.2, -3.59, 12.0, 10.4;
    b1 << -0.5, -0.8;
    b2 << -10.1, 10.0;
    b3 << 5.1, -10.1;

    ExampleBundle ex{SwitchedSystem(TimeDomain::continuous, 2, 1,
                                    {{1, LinearDynamics{a1, b1}}, {2, LinearDynamics{a2, b2}}, {3, LinearDynamics{a3, b3}}}),
                     {{1, 3.0}, {2, 1.5}, {3, 2.5}},
                     {{{1, 2}, 18.0}, {{2, 1}, 2.3}, {{3, 1}, 41.0}, {{1, 3}, 13.0}, {{2, 3}, 1.0}, {{3, 2}, 17.0}},
                     {{1, 18.0}, {2, 2.3}, {3, 41.0}},
                     {{1, detail::row({403.6393, -107.2597})}, {2, detail::row({2.8646, -0.6579})}, {3, detail::row({-9.4055, -2.6831})}},
                     {{1, detail::row({371.7662, -100.0154})}, {2, detail::row({2.8330, -0.4917})}, {3, detail::row({-7.9922, -2.0744})}}};
    return ex;
}

}  // namespace seqdwell
