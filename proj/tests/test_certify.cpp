#include <gtest/gtest.h>

#include <cmath>

#include <seqdwell/certify.hpp>
#include <seqdwell/example.hpp>
#include <seqdwell/synth.hpp>

#include "generators.hpp"

using namespace seqdwell;

namespace {

SwitchedSystem scalar_system(TimeDomain domain, std::vector<double> a) {
    std::vector<Mode> modes;
    for (std::size_t i = 0; i < a.size(); ++i)
        modes.push_back({static_cast<int>(i + 1), LinearDynamics{Matrix::Constant(1, 1, a[i]), Matrix()}});
    return {domain, 1, 0, modes};
}

SwitchedSystem random_system(gen::Source& src, TimeDomain domain, int s, int n) {
    std::vector<Mode> modes;
    for (int p = 1; p <= s; ++p)
        modes.push_back({p, LinearDynamics{domain == TimeDomain::continuous ? src.hurwitz(n) : src.schur(n), Matrix()}});
    return {domain, n, 0, modes};
}

// Decay rates each mode can afford: half its continuous stability margin,
// or half of 1 - rho^2 in discrete time.
std::map<int, double> affordable_lambda(const SwitchedSystem& sys) {
    std::map<int, double> lambda;
    for (const auto& m : sys.modes()) {
        const Matrix& a = m.linear().a;
        if (sys.time_domain() == TimeDomain::continuous)
            lambda[m.id] = -spectral_abscissa(a);
        else
            lambda[m.id] = 0.5 * (1.0 - std::pow(spectral_radius(a), 2));
    }
    return lambda;
}

}  // namespace

TEST(Certify, ScalarOracle) {
    const auto sys = scalar_system(TimeDomain::continuous, {-2.0, -3.0});
    const auto cert = certify_linear(sys, {{1, 1.0}, {2, 1.0}}, Scheme::sbasdt);
    // (a + l/2) 2 P = -1
    EXPECT_NEAR(cert.p.at(1)(0, 0), 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(cert.p.at(2)(0, 0), 1.0 / 5.0, 1e-14);
    EXPECT_NEAR(cert.mu.at({1, 2}), 5.0 / 3.0, 1e-13);
    EXPECT_EQ(cert.mu.at({2, 1}), 1.0);
    EXPECT_NEAR(cert.thresholds.at(key_for(Scheme::sbasdt, {1, 2})), std::log(5.0 / 3.0), 1e-13);
    EXPECT_EQ(cert.thresholds.at(key_for(Scheme::sbasdt, {2, 1})), 0.0);
    EXPECT_NEAR(cert.bounds.at(1).k1, 1.0 / 3.0, 1e-14);
}

TEST(Certify, DiscreteScalarOracle) {
    const auto sys = scalar_system(TimeDomain::discrete, {0.5, -0.25});
    const auto cert = certify_linear(sys, {{1, 0.5}, {2, 0.5}}, Scheme::mdadt);
    // scaled a^2/(1-l) p - p = -1 -> p = 1 / (1 - a^2/(1-l))
    EXPECT_NEAR(cert.p.at(1)(0, 0), 2.0, 1e-13);
    EXPECT_NEAR(cert.p.at(2)(0, 0), 1.0 / (1.0 - 0.125), 1e-13);
    const auto md = cert.policy();
    EXPECT_NEAR(md.mode_mu.at(1), 2.0 / (1.0 / 0.875), 1e-12);
    EXPECT_EQ(md.mode_mu.at(2), 1.0);
    EXPECT_TRUE(verify_certificate(sys, cert).passed);
}

TEST(Certify, InfeasibleNamesTheMode) {
    const auto sys = scalar_system(TimeDomain::continuous, {-2.0, 0.0});
    try {
        certify_linear(sys, {{1, 1.0}, {2, 1.0}}, Scheme::sbasdt);
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        EXPECT_NE(std::string(e.what()).find("mode 2"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("0.5"), std::string::npos);
    }
    const auto dsys = scalar_system(TimeDomain::discrete, {0.9, 0.1});
    EXPECT_THROW(certify_linear(dsys, {{1, 0.5}, {2, 0.5}}, Scheme::sbasdt), InfeasibleError);
}

TEST(Certify, RejectsBadDecayRates) {
    const auto sys = scalar_system(TimeDomain::continuous, {-2.0, -3.0});
    EXPECT_THROW(certify_linear(sys, {{1, 1.0}}, Scheme::sbasdt), InputError);
    EXPECT_THROW(certify_linear(sys, {{1, 1.0}, {2, -1.0}}, Scheme::sbasdt), InputError);
    const auto dsys = scalar_system(TimeDomain::discrete, {0.2, 0.1});
    EXPECT_THROW(certify_linear(dsys, {{1, 1.0}, {2, 0.5}}, Scheme::sbasdt), InputError);
}

TEST(Certify, RandomSystemsPassVerification) {
    gen::Source src(314);
    for (int trial = 0; trial < 100; ++trial) {
        const auto domain = trial % 2 ? TimeDomain::discrete : TimeDomain::continuous;
        const auto sys = random_system(src, domain, src.integer(2, 4), src.integer(1, 5));
        const auto scheme = std::array{Scheme::adt, Scheme::mdadt, Scheme::sbasdt, Scheme::sbapdt}[trial % 4];
        const auto cert = certify_linear(sys, affordable_lambda(sys), scheme);
        const auto report = verify_certificate(sys, cert);
        EXPECT_TRUE(report.passed) << "trial " << trial;
        for (const auto& [pq, mu] : cert.mu) EXPECT_GE(mu, 1.0);
        for (const auto& [p, margin] : cert.decay_margin) EXPECT_LE(margin, 1e-8 * std::max(1.0, norm2(cert.p.at(p))));
    }
}

TEST(Certify, JumpGainIsMinimal) {
    gen::Source src(2);
    const auto sys = random_system(src, TimeDomain::continuous, 3, 3);
    const auto cert = certify_linear(sys, affordable_lambda(sys), Scheme::sbasdt);
    for (const auto& [pq, mu] : cert.mu) {
        if (mu == 1.0) continue;
        const Matrix shrunk = cert.p.at(pq.p).matrix() - mu * (1 - 1e-6) * cert.p.at(pq.q).matrix();
        EXPECT_GT(max_eigenvalue(SymmetricMatrix(shrunk)), 0.0);
    }
}

TEST(Certify, PublishedGainsCertify) {
    const auto ex = bundled_example();
    for (const auto* gains : {&ex.mdadt_gains, &ex.sbasdt_gains}) {
        const auto cl = closed_loop(ex.system, *gains);
        const auto cert = certify_linear(cl, ex.lambda, Scheme::sbasdt);
        EXPECT_TRUE(verify_certificate(cl, cert).passed);
        EXPECT_EQ(cert.thresholds.size(), 6u);
    }
}

TEST(Verify, DetectsTampering) {
    gen::Source src(5);
    const auto sys = random_system(src, TimeDomain::continuous, 3, 2);
    const auto good = certify_linear(sys, affordable_lambda(sys), Scheme::sbasdt);
    ASSERT_TRUE(verify_certificate(sys, good).passed);

    auto inflated = good;
    for (auto& [p, l] : inflated.lambda) l *= 2.0;
    inflated.thresholds.clear();
    const auto r1 = verify_certificate(sys, inflated);
    EXPECT_FALSE(r1.passed);
    for (const auto& f : r1.failures()) EXPECT_EQ(f.condition, "decay");

    auto cheap = good;
    bool tampered = false;
    for (auto& [pq, mu] : cheap.mu)
        if (mu > 1.5) {
            mu = 1.0 + 0.5 * (mu - 1.0);
            tampered = true;
        }
    cheap.thresholds.clear();
    if (tampered) {
        const auto r2 = verify_certificate(sys, cheap);
        EXPECT_FALSE(r2.passed);
        for (const auto& f : r2.failures()) EXPECT_EQ(f.condition, "jump");
    }

    auto floor = good;
    floor.mu.begin()->second = 0.5;
    floor.thresholds.clear();
    bool saw_floor = false;
    for (const auto& f : verify_certificate(sys, floor).failures()) saw_floor = saw_floor || f.condition == "mu-floor";
    EXPECT_TRUE(saw_floor);

    auto stale = good;
    stale.thresholds.begin()->second += 0.1;
    const auto r3 = verify_certificate(sys, stale);
    ASSERT_EQ(r3.failures().size(), 1u);
    EXPECT_EQ(r3.failures()[0].condition, "threshold");

    auto indefinite = good;
    indefinite.p[1] = -indefinite.p[1];
    EXPECT_FALSE(verify_certificate(sys, indefinite).passed);
}

TEST(Verify, RejectsMismatchedShapes) {
    const auto sys = scalar_system(TimeDomain::continuous, {-2.0, -3.0});
    auto cert = certify_linear(sys, {{1, 1.0}, {2, 1.0}}, Scheme::sbasdt);
    const auto three = scalar_system(TimeDomain::continuous, {-2.0, -3.0, -4.0});
    EXPECT_THROW(verify_certificate(three, cert), InputError);
    cert.domain = TimeDomain::discrete;
    EXPECT_THROW(verify_certificate(sys, cert), InputError);
}

TEST(CertificatePolicy, ModeDependentTakesWorstPredecessor) {
    StabilityCertificate cert;
    cert.scheme = Scheme::mdadt;
    cert.lambda = {{1, 1.0}, {2, 2.0}, {3, 3.0}};
    cert.mu = {{{1, 2}, 2.0}, {{1, 3}, 5.0}, {{2, 1}, 1.0}, {{2, 3}, 1.5}, {{3, 1}, 4.0}, {{3, 2}, 3.0}};
    const auto md = cert.policy();
    EXPECT_EQ(md.mode_mu.at(1), 5.0);
    EXPECT_EQ(md.mode_mu.at(2), 1.5);
    EXPECT_EQ(md.mode_mu.at(3), 4.0);
    cert.scheme = Scheme::adt;
    const auto adt = cert.policy();
    for (int p = 1; p <= 3; ++p) {
        EXPECT_EQ(adt.mode_mu.at(p), 5.0);
        EXPECT_EQ(adt.lambda.at(p), 1.0);
    }
}

// Unrolls V0 * e^{-l1 d1} * mu_{2|1} * e^{-l2 d2} * mu_{1|2} * e^{-l1 (t - d1 - d2)} by hand.
TEST(Envelope, RecursionUnroll) {
    StabilityCertificate cert;
    cert.domain = TimeDomain::continuous;
    cert.lambda = {{1, 3.0}, {2, 1.5}};
    cert.mu = {{{1, 2}, 18.0}, {{2, 1}, 2.3}};
    const SwitchingSignal sig({{1, 0.7}, {2, 1.1}, {1, 2.0}});
    const double v0 = 4.0;
    EXPECT_DOUBLE_EQ(envelope_bound(cert, sig, v0, 0.0), v0);
    EXPECT_NEAR(envelope_bound(cert, sig, v0, 0.5), v0 * std::exp(-1.5), 1e-12);
    const double at_first = v0 * std::exp(-3.0 * 0.7) * 2.3;
    EXPECT_NEAR(envelope_bound(cert, sig, v0, 0.7), at_first, 1e-12);
    const double at_second = at_first * std::exp(-1.5 * 1.1) * 18.0;
    EXPECT_NEAR(envelope_bound(cert, sig, v0, 1.8), at_second, 1e-12);
    EXPECT_NEAR(envelope_bound(cert, sig, v0, 3.0), at_second * std::exp(-3.0 * 1.2), 1e-12);
    EXPECT_NEAR(envelope_bound(cert, sig, v0, 3.8), at_second * std::exp(-3.0 * 2.0), 1e-12);
}

TEST(Envelope, DiscreteUsesContractionPowers) {
    StabilityCertificate cert;
    cert.domain = TimeDomain::discrete;
    cert.lambda = {{1, 0.5}, {2, 0.2}};
    cert.mu = {{{1, 2}, 3.0}, {{2, 1}, 2.0}};
    const SwitchingSignal sig({{1, 3.0}, {2, 2.0}});
    EXPECT_NEAR(envelope_bound(cert, sig, 1.0, 2.0), 0.25, 1e-14);
    EXPECT_NEAR(envelope_bound(cert, sig, 1.0, 5.0), 0.125 * 2.0 * 0.64, 1e-14);
}

TEST(Envelope, RejectsBadArguments) {
    StabilityCertificate cert;
    cert.lambda = {{1, 1.0}, {2, 1.0}};
    cert.mu = {{{1, 2}, 3.0}};
    const SwitchingSignal sig({{1, 1.0}, {2, 1.0}});
    EXPECT_THROW(envelope_bound(cert, sig, 0.0, 0.5), InputError);
    EXPECT_THROW(envelope_bound(cert, sig, 1.0, 2.5), InputError);
    EXPECT_THROW(envelope_bound(cert, sig, 1.0, 1.5), InputError);  // mu_{2|1} missing
}
