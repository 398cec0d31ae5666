#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace rcs;

namespace {

template <class F>
ErrorKind kind_of(F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::Usage;
}

constexpr double kT = 0.0015;

}  // namespace

TEST(OscillationProbe, CleggWithDelayOscillates) {
    const OscillationProbe p = sign_oscillation_probe(fixtures::msd_ci_loop(), kT, {1e4, 1e5});
    ASSERT_TRUE(p.applicable);
    EXPECT_GE(p.sign_changes_x, 10);
    EXPECT_GE(p.sign_changes_y, 10);
    EXPECT_TRUE(p.envelope_decay_x);
    EXPECT_TRUE(p.envelope_decay_y);
    EXPECT_TRUE(p.both_oscillate(10));
    // 64 samples per delay period at least
    const double periods = (1e5 - 1e4) * kT / (2 * kPi);
    EXPECT_GE(static_cast<double>(p.samples.size()), periods * 64.0);
}

TEST(OscillationProbe, NotApplicableWithoutDelay) {
    const OscillationProbe p = sign_oscillation_probe(fixtures::msd_ci_loop(), 0.0, {1e4, 1e5});
    EXPECT_FALSE(p.applicable);
    EXPECT_TRUE(p.samples.empty());
}

TEST(OscillationProbe, NarrowWindowIsWidened) {
    const OscillationProbe p = sign_oscillation_probe(fixtures::msd_ci_loop(), kT, {1e4, 1e4 + 10.0});
    EXPECT_GE(p.window.hi - p.window.lo, 10.0 * kPi / kT - 1e-9);
}

TEST(DelayPrecheck, Examples) {
    const FeasibilityVerdict ci = ci_delay_precheck(fixtures::msd_ci_loop(kT), kT);
    EXPECT_FALSE(ci.feasible);
    EXPECT_EQ(ci.kind(), "infeasible-by-delay");
    EXPECT_TRUE(ci.evidence.applicable);

    EXPECT_TRUE(ci_delay_precheck(fixtures::msd_ci_loop(), 0.0).feasible);
    EXPECT_TRUE(ci_delay_precheck(fixtures::msd_loop(kT), kT).feasible);
}

TEST(DelayPrecheck, AnyCleggLoopWithDelayIsInfeasible) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ut(1e-4, 1e-1);
    for (int i = 0; i < 20; ++i) {
        RandomSystem s = random_admissible_system(rng);
        s.lc.reset = ResetElement::ci(s.lc.reset.omega_k(), s.lc.reset.gamma, s.lc.reset.B_r);
        const double T = ut(rng);
        EXPECT_FALSE(ci_delay_precheck(s.lc, T).feasible) << "trial " << i;
    }
}

TEST(NyLimit, Values) {
    EXPECT_DOUBLE_EQ(ny_highfreq_limit(1.0, 1.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(ny_highfreq_limit(0.0, 1.0, 3.0), 0.0);
    const double a = ny_highfreq_limit(42.66, 42.66, 1e4);
    const double b = ny_highfreq_limit(42.66, 42.66, 2e4);
    EXPECT_NEAR(a / b, 4.0, 1e-4);
    EXPECT_EQ(kind_of([] { ny_highfreq_limit(1.0, 1.0, 0.0); }), ErrorKind::BadParams);
}

TEST(NyLimit, GforeNySignStable) {
    const OscillationProbe p = sign_oscillation_probe(fixtures::msd_loop(kT), kT, {1e4, 1e5});
    const NySignStability st = ny_sign_stability(p, fixtures::msd_loop().reset);
    ASSERT_TRUE(st.omega_star.has_value());
    EXPECT_TRUE(st.positive_above);
}

TEST(NyLimit, ResidualDecaysFasterThanLimit) {
    // N_y - limit falls off faster than the omega^-2 limit itself.
    const LoopComponents lc = fixtures::msd_loop(kT);
    auto ratio = [&](double w) {
        const NsvSample s = nsv(lc, w);
        const double lim = ny_highfreq_limit(42.66, 42.66, w);
        return std::abs(s.ny - lim) / lim;
    };
    EXPECT_LT(ratio(1e6), ratio(1e4));
}

TEST(PadeOrder, Examples) {
    EXPECT_EQ(choose_pade_order(kT, 1e3, 0.017), 2);
    EXPECT_EQ(kind_of([] { choose_pade_order(kT, 1e6, 0.017); }), ErrorKind::OrderExceeded);
    EXPECT_EQ(kind_of([] { choose_pade_order(0.0, 1e3, 0.017); }), ErrorKind::BadParams);
}

TEST(PadeOrder, FirstOrderSufficesForSmallPhase) {
    // (1,1) phase error grows like (wT)^3 / 12, so 0.01 rad holds up to wT ~ 0.49.
    for (double x : {0.05, 0.1, 0.2, 0.3, 0.4, 0.45}) {
        for (double T : {1e-4, 1e-3, 1e-2}) {
            EXPECT_EQ(choose_pade_order(T, x / T, 0.01), 1) << "wT = " << x << " T = " << T;
        }
    }
}

TEST(PadeOrder, ErrorShrinksWithOrder) {
    double prev = pade_phase_error(kT, 1, 2e3);
    for (int k = 2; k <= 8; ++k) {
        const double e = pade_phase_error(kT, k, 2e3);
        EXPECT_LT(e, prev) << "k = " << k;
        prev = e;
    }
}

TEST(PadeOrder, ReturnedOrderMeetsTolerance) {
    for (double wmax : {1e2, 1e3, 3e3, 1e4}) {
        const int k = choose_pade_order(kT, wmax, 0.01745);
        EXPECT_LT(pade_phase_error(kT, k, wmax), 0.01745);
        if (k > 1) {
            EXPECT_GE(pade_phase_error(kT, k - 1, wmax), 0.01745);
        }
    }
}

TEST(ZlFunction, Identities) {
    const ZlFunction a{1.0, 1.0, 2.0, 0.3};
    ZlFunction b = a;
    EXPECT_TRUE(b.same_as(a));
    b.phi = 0.3 + kPi;
    EXPECT_TRUE(b.negation_of(a));
    EXPECT_NEAR(a(5.0) + b(5.0), 0.0, 1e-15);
}

TEST(ZlFunction, SingleFunctionDecays) {
    const ZlFunction a{1.5, 2.0, 1.7, 0.0};
    const ZlWindowStats w1 = zl_window(a, 100.0);
    const ZlWindowStats w2 = zl_window(a, 1000.0);
    EXPECT_LT(w2.max_abs, w1.max_abs);
    EXPECT_GE(w1.zero_crossings, kZlMinCrossings);
}

TEST(ZlFunction, PairExamples) {
    EXPECT_TRUE(zl_check_pair({1.0, 1.0, 1.0, 0.0}, {2.0, 2.0, 2.5, 1.0}));
    std::string why;
    // A negated copy sums to zero: no crossings survive.
    EXPECT_FALSE(zl_check_pair({1.0, 1.0, 1.0, 0.0}, {1.0, 1.0, 1.0, kPi}, &why));
    EXPECT_FALSE(why.empty());
}

TEST(ZlFunction, ClosureSampleAndDeterminism) {
    const ZlClosureReport a = zl_closure_property(60, 5);
    EXPECT_EQ(a.failures, 0u) << (a.failure_notes.empty() ? "" : a.failure_notes.front());
    const ZlClosureReport b = zl_closure_property(60, 5);
    EXPECT_EQ(a.failure_notes, b.failure_notes);
    EXPECT_EQ(kind_of([] { zl_closure_property(0, 1); }), ErrorKind::Usage);
}
