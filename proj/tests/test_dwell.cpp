#include <gtest/gtest.h>

#include <cmath>

#include <seqdwell/dwell.hpp>
#include <seqdwell/example.hpp>

#include "generators.hpp"
#include "recount.hpp"

using namespace seqdwell;

namespace {

DwellKey sk(int p, int q) { return key_for(Scheme::sbasdt, {p, q}); }
DwellKey pk(int p, int q) { return key_for(Scheme::sbapdt, {p, q}); }

double budget(Scheme scheme, const DwellKey& key, const DwellStatistics& st) {
    switch (scheme) {
        case Scheme::sbasdt: return st.successor(*key.pair);
        case Scheme::sbapdt: return st.predecessor(*key.pair);
        default: return st.time(key.mode);
    }
}

int key_events(Scheme scheme, const DwellKey& key, const DwellStatistics& st) {
    if (is_sequence_based(scheme)) return st.events(*key.pair);
    int n = 0;
    for (const auto& [pq, count] : st.pair_events)
        if (key_for(scheme, pq) == key) n += count;
    return n;
}

DwellPolicy random_policy(gen::Source& src, Scheme scheme, int s) {
    DwellPolicy pol;
    pol.scheme = scheme;
    for (int p = 1; p <= s; ++p) {
        pol.lambda[p] = src.uniform(0.5, 3.0);
        pol.mode_mu[p] = src.uniform(1.0, 5.0);
        for (int q = 1; q <= s; ++q)
            if (p != q) pol.pair_mu[{p, q}] = src.uniform(1.0, 5.0);
    }
    for (const auto& key : scheme_keys(scheme, s)) pol.chatter[key] = src.integer(1, 2);
    return pol;
}

}  // namespace

TEST(Scheme, ParseIsCaseInsensitive) {
    EXPECT_EQ(parse_scheme("SBASDT"), Scheme::sbasdt);
    EXPECT_EQ(parse_scheme("sbapdt"), Scheme::sbapdt);
    EXPECT_EQ(parse_scheme("MdAdT"), Scheme::mdadt);
    EXPECT_EQ(parse_scheme("adt"), Scheme::adt);
    EXPECT_THROW(parse_scheme("pdt"), InputError);
}

TEST(DwellKey, ResolutionPerScheme) {
    EXPECT_EQ(key_for(Scheme::mdadt, {2, 1}).to_string(), "2");
    EXPECT_EQ(key_for(Scheme::sbasdt, {2, 1}).to_string(), "(2,2|1)");
    EXPECT_EQ(key_for(Scheme::sbapdt, {2, 1}).to_string(), "(1,2|1)");
    EXPECT_EQ(scheme_keys(Scheme::sbasdt, 3).size(), 6u);
    EXPECT_EQ(scheme_keys(Scheme::mdadt, 3).size(), 3u);
}

TEST(Threshold, ContinuousValues) {
    EXPECT_NEAR(threshold(Scheme::sbasdt, TimeDomain::continuous, 18, 3), 0.9634572526320548, 1e-15);
    EXPECT_NEAR(threshold(Scheme::sbapdt, TimeDomain::continuous, 18, 1.5), 1.9269145052641097, 1e-15);
    EXPECT_DOUBLE_EQ(threshold(Scheme::sbasdt, TimeDomain::continuous, 18, 3), std::log(18.0) / 3.0);
}

TEST(Threshold, UnitGainGivesZero) {
    for (auto domain : {TimeDomain::continuous, TimeDomain::discrete})
        for (auto scheme : {Scheme::adt, Scheme::mdadt, Scheme::sbasdt, Scheme::sbapdt})
            EXPECT_EQ(threshold(scheme, domain, 1.0, 0.5), 0.0);
}

TEST(Threshold, DiscreteUsesLogOfContraction) {
    EXPECT_EQ(threshold(Scheme::sbasdt, TimeDomain::discrete, 2.0, 0.5), 1.0);
    EXPECT_EQ(threshold(Scheme::mdadt, TimeDomain::discrete, 2.0, 0.5), 1.0);
    // -ln(mu)/ln(1-lambda), not -ln(mu)/(1-lambda)
    const double mu = 3.0, lambda = 0.2;
    const double tau = threshold(Scheme::mdadt, TimeDomain::discrete, mu, lambda);
    EXPECT_DOUBLE_EQ(tau, -std::log(mu) / std::log(1.0 - lambda));
    EXPECT_GT(std::abs(tau - (-std::log(mu) / (1.0 - lambda))), 1.0);
}

TEST(Threshold, RejectsOutOfRange) {
    EXPECT_THROW(threshold(Scheme::sbasdt, TimeDomain::continuous, 0.5, 1.0), InputError);
    EXPECT_THROW(threshold(Scheme::sbasdt, TimeDomain::continuous, 2.0, 0.0), InputError);
    EXPECT_THROW(threshold(Scheme::sbasdt, TimeDomain::discrete, 2.0, 1.0), InputError);
    EXPECT_THROW(threshold(Scheme::sbasdt, TimeDomain::discrete, 2.0, 0.0), InputError);
    EXPECT_THROW(threshold(Scheme::sbasdt, TimeDomain::continuous, std::nan(""), 1.0), InputError);
}

TEST(ThresholdTable, SuccessorScheme) {
    const auto table = threshold_table(bundled_example().policy(Scheme::sbasdt));
    ASSERT_EQ(table.size(), 6u);
    EXPECT_NEAR(table.at(sk(1, 2)), 0.963457, 1e-6);
    EXPECT_NEAR(table.at(sk(2, 1)), 0.555273, 1e-6);
    EXPECT_NEAR(table.at(sk(3, 1)), 1.485429, 1e-6);
    EXPECT_NEAR(table.at(sk(1, 3)), 0.854983, 1e-6);
    EXPECT_EQ(table.at(sk(2, 3)), 0.0);
    EXPECT_NEAR(table.at(sk(3, 2)), 1.133285, 1e-6);
}

TEST(ThresholdTable, PredecessorScheme) {
    const auto table = threshold_table(bundled_example().policy(Scheme::sbapdt));
    ASSERT_EQ(table.size(), 6u);
    EXPECT_NEAR(table.at(pk(1, 2)), 1.926915, 1e-6);
    EXPECT_NEAR(table.at(pk(2, 1)), 0.277636, 1e-6);
    EXPECT_NEAR(table.at(pk(3, 1)), 1.237857, 1e-6);
    EXPECT_NEAR(table.at(pk(1, 3)), 1.025980, 1e-6);
    EXPECT_EQ(table.at(pk(2, 3)), 0.0);
    EXPECT_NEAR(table.at(pk(3, 2)), 1.888809, 1e-6);
}

TEST(ThresholdTable, CollapsesToModeDependent) {
    const auto ex = bundled_example();
    DwellPolicy seq = ex.policy(Scheme::sbasdt);
    for (auto& [pq, mu] : seq.pair_mu) mu = ex.mode_mu.at(pq.p);
    const auto collapsed = threshold_table(seq);
    const auto md = threshold_table(ex.policy(Scheme::mdadt));
    for (const auto& [key, tau] : collapsed) EXPECT_EQ(tau, md.at(DwellKey{key.mode, std::nullopt}));
}

TEST(ThresholdTable, MissingKeyIsNamed) {
    DwellPolicy pol = bundled_example().policy(Scheme::sbasdt);
    pol.pair_mu.erase({3, 2});
    try {
        threshold_table(pol);
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("(3,3|2)"), std::string::npos);
    }
}

TEST(Statistics, SingleSwitch) {
    const SwitchingSignal sig({{1, 1.0}, {2, 1.0}});
    const auto st = compute_statistics(sig, 0.0, 2.0);
    EXPECT_EQ(st.events(OrderedPair{2, 1}), 1);
    EXPECT_DOUBLE_EQ(st.successor({2, 1}), 1.0);
    EXPECT_DOUBLE_EQ(st.predecessor({2, 1}), 1.0);
    EXPECT_DOUBLE_EQ(st.time(1), 1.0);
    EXPECT_DOUBLE_EQ(st.time(2), 1.0);
    EXPECT_EQ(st.events(1), 0);
}

TEST(Statistics, AlternatingSignal) {
    const SwitchingSignal sig({{1, 1.0}, {2, 1.0}, {1, 1.0}, {2, 1.0}});
    const auto st = compute_statistics(sig, 0.0, 4.0);
    EXPECT_EQ(st.events(OrderedPair{2, 1}), 2);
    EXPECT_EQ(st.events(OrderedPair{1, 2}), 1);
    EXPECT_DOUBLE_EQ(st.successor({2, 1}), 2.0);
    EXPECT_DOUBLE_EQ(st.successor({1, 2}), 1.0);
}

TEST(Statistics, IntervalWithoutSwitch) {
    const auto st = compute_statistics(SwitchingSignal({{1, 1.0}, {2, 1.0}}), 0.0, 0.5);
    EXPECT_EQ(st.events(OrderedPair{2, 1}), 0);
    EXPECT_TRUE(st.observed_pairs.empty());
    EXPECT_DOUBLE_EQ(st.time(1), 0.5);
}

TEST(Statistics, RejectsBadInterval) {
    const SwitchingSignal sig({{1, 1.0}, {2, 1.0}});
    EXPECT_THROW(compute_statistics(sig, 1.0, 1.0), InputError);
    EXPECT_THROW(compute_statistics(sig, -0.1, 1.0), InputError);
    EXPECT_THROW(compute_statistics(sig, 0.0, 2.5), InputError);
}

TEST(Statistics, MatchesBruteForceRecount) {
    gen::Source src(42);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto sig = src.signal(src.integer(2, 4), src.integer(1, 30), 0.05, 2.0);
        const double h = sig.horizon();
        double t1 = src.uniform(0.0, h), t2 = src.uniform(0.0, h);
        if (trial % 5 == 0) t1 = sig.boundaries()[static_cast<std::size_t>(src.integer(0, static_cast<int>(sig.size()) - 1))];
        if (t1 > t2) std::swap(t1, t2);
        if (t2 - t1 < 1e-6) continue;
        const auto fast = compute_statistics(sig, t1, t2);
        const auto slow = oracle::recount(sig, t1, t2);
        for (int p = 1; p <= 4; ++p) {
            EXPECT_EQ(fast.events(p), slow.events(p));
            EXPECT_NEAR(fast.time(p), slow.time(p), 1e-12);
            for (int q = 1; q <= 4; ++q) {
                if (p == q) continue;
                EXPECT_EQ(fast.events(OrderedPair{p, q}), slow.events(OrderedPair{p, q}));
                EXPECT_NEAR(fast.successor({p, q}), slow.successor({p, q}), 1e-12);
                EXPECT_NEAR(fast.predecessor({p, q}), slow.predecessor({p, q}), 1e-12);
            }
        }
    }
}

TEST(Statistics, AdditiveOverSplits) {
    gen::Source src(43);
    for (int trial = 0; trial < 300; ++trial) {
        const auto sig = src.signal(src.integer(2, 4), src.integer(1, 20), 0.05, 2.0);
        const double h = sig.horizon();
        std::array<double, 3> t{src.uniform(0, h), src.uniform(0, h), src.uniform(0, h)};
        std::sort(t.begin(), t.end());
        if (t[1] - t[0] < 1e-6 || t[2] - t[1] < 1e-6) continue;
        const auto whole = compute_statistics(sig, t[0], t[2]);
        const auto left = compute_statistics(sig, t[0], t[1]);
        const auto right = compute_statistics(sig, t[1], t[2]);
        for (int p = 1; p <= 4; ++p) {
            EXPECT_EQ(whole.events(p), left.events(p) + right.events(p));
            EXPECT_NEAR(whole.time(p), left.time(p) + right.time(p), 1e-12);
            for (int q = 1; q <= 4; ++q) {
                if (p == q) continue;
                EXPECT_EQ(whole.events(OrderedPair{p, q}), left.events(OrderedPair{p, q}) + right.events(OrderedPair{p, q}));
                EXPECT_NEAR(whole.successor({p, q}), left.successor({p, q}) + right.successor({p, q}), 1e-12);
                EXPECT_NEAR(whole.predecessor({p, q}), left.predecessor({p, q}) + right.predecessor({p, q}), 1e-12);
            }
        }
    }
}

TEST(Admissibility, SingleSegmentAlwaysAdmissible) {
    for (auto scheme : {Scheme::mdadt, Scheme::sbasdt, Scheme::sbapdt}) {
        const auto r = check_admissible(SwitchingSignal({{2, 0.01}}), bundled_example().policy(scheme));
        EXPECT_TRUE(r.admissible);
        EXPECT_TRUE(r.keys.empty());
    }
}

TEST(Admissibility, DwellAboveThresholdIsAdmissible) {
    const auto pol = bundled_example().policy(Scheme::sbasdt);
    std::vector<Segment> segs;
    const std::array<int, 6> modes{1, 2, 3, 1, 3, 2};
    for (int rep = 0; rep < 4; ++rep)
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const int p = modes[i];
            const int q = segs.empty() ? modes.back() : segs.back().mode;
            segs.push_back({p, std::max(0.05, pol.threshold_for(sk(p, q)))});
        }
    const auto r = check_admissible(SwitchingSignal(segs), pol);
    EXPECT_TRUE(r.admissible);
    for (const auto& k : r.keys) EXPECT_GE(k.worst_slack, -1e-9);
}

TEST(Admissibility, ChatteringIsReported) {
    DwellPolicy pol;
    pol.scheme = Scheme::sbasdt;
    pol.lambda = {{1, 1.0}, {2, 1.0}};
    pol.pair_mu = {{{1, 2}, std::exp(1.0)}, {{2, 1}, std::exp(1.0)}};
    pol.chatter = {{sk(1, 2), 0}, {sk(2, 1), 0}};
    std::vector<Segment> segs;
    for (int i = 0; i < 20; ++i) segs.push_back({i % 2 + 1, 0.5});
    const auto r = check_admissible(SwitchingSignal(segs), pol);
    EXPECT_FALSE(r.admissible);
    bool located = false;
    for (const auto& k : r.keys) {
        EXPECT_FALSE(k.admissible);
        EXPECT_LT(k.worst_slack, 0.0);
        located = located || k.worst_t2 > k.worst_t1;
    }
    EXPECT_TRUE(located);
}

TEST(Admissibility, UnitGainKeyNeverViolates) {
    const auto pol = bundled_example().policy(Scheme::sbasdt);
    std::vector<Segment> segs;
    for (int i = 0; i < 30; ++i) segs.push_back({i % 2 == 0 ? 3 : 2, i % 2 == 0 ? 10.0 : 0.001});
    const auto r = check_admissible(SwitchingSignal(segs), pol);
    for (const auto& k : r.keys)
        if (k.key == sk(2, 3)) {
            EXPECT_TRUE(k.admissible);
        }
}

TEST(Admissibility, ScalingDwellsUpPreservesAdmissibility) {
    gen::Source src(61);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const int s = src.integer(2, 4);
        const auto scheme = std::array{Scheme::mdadt, Scheme::sbasdt, Scheme::sbapdt}[trial % 3];
        const auto pol = random_policy(src, scheme, s);
        const auto sig = src.signal(s, src.integer(2, 15), 0.1, 2.0);
        if (!check_admissible(sig, pol).admissible) continue;
        ++checked;
        auto segs = sig.segments();
        const double c = src.uniform(1.0, 3.0);
        for (auto& seg : segs) seg.dwell *= c;
        EXPECT_TRUE(check_admissible(SwitchingSignal(segs), pol).admissible);
    }
    EXPECT_GT(checked, 30);
}

// Verdict from event-to-event intervals equals the verdict from a dense grid of
// endpoints (10 points per shortest dwell, plus right limits at every switch).
TEST(Admissibility, SwitchInstantsSufficeAgainstDenseSampling) {
    gen::Source src(77);
    int violated = 0, held = 0;
    for (int trial = 0; trial < 150; ++trial) {
        const int s = src.integer(2, 3);
        const auto scheme = std::array{Scheme::mdadt, Scheme::sbasdt, Scheme::sbapdt}[trial % 3];
        const auto pol = random_policy(src, scheme, s);
        const auto sig = src.signal(s, src.integer(2, 8), 0.1, 1.5);
        const double h = sig.horizon();
        double shortest = h;
        for (const auto& seg : sig.segments()) shortest = std::min(shortest, seg.dwell);
        std::vector<double> points;
        const double dt = shortest / 10.0;
        for (double t = 0.0; t < h; t += dt) points.push_back(t);
        for (double b : sig.boundaries()) {
            points.push_back(b);
            points.push_back(std::min(h, b + 1e-9));
        }
        std::sort(points.begin(), points.end());

        bool dense_ok = true;
        for (std::size_t i = 0; i < points.size() && dense_ok; ++i)
            for (std::size_t j = i + 1; j < points.size() && dense_ok; ++j) {
                if (points[j] - points[i] <= 0.0) continue;
                const auto st = oracle::recount(sig, points[i], points[j]);
                for (const auto& key : scheme_keys(scheme, s)) {
                    const int n = key_events(scheme, key, st);
                    if (n == 0) continue;
                    const double tau = pol.threshold_for(key);
                    if (tau == 0.0) continue;
                    if (n > pol.chatter_for(key) + budget(scheme, key, st) / tau + 1e-7) dense_ok = false;
                }
            }
        const bool fast_ok = check_admissible(sig, pol).admissible;
        EXPECT_EQ(fast_ok, dense_ok) << "trial " << trial;
        (dense_ok ? held : violated) += 1;
    }
    EXPECT_GT(violated, 10);
    EXPECT_GT(held, 10);
}

TEST(Policy, ValidatesStructure) {
    DwellPolicy pol = bundled_example().policy(Scheme::sbasdt);
    pol.chatter[sk(1, 2)] = -1;
    EXPECT_THROW(pol.validate(), InputError);
    DwellPolicy gap = bundled_example().policy(Scheme::sbasdt);
    gap.lambda.erase(2);
    EXPECT_THROW(gap.validate(), InputError);
    DwellPolicy adt = bundled_example().policy(Scheme::mdadt);
    adt.scheme = Scheme::adt;
    EXPECT_THROW(adt.validate(), InputError);
    EXPECT_NO_THROW(bundled_example().policy(Scheme::adt).validate());
}
