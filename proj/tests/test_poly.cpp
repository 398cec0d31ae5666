#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace rcs;

namespace {

RationalTf tf(std::vector<double> num_desc, std::vector<double> den_desc) {
    return {Polynomial::from_descending(std::move(num_desc)), Polynomial::from_descending(std::move(den_desc))};
}

void expect_near(cplx a, cplx b, double tol) {
    EXPECT_NEAR(a.real(), b.real(), tol);
    EXPECT_NEAR(a.imag(), b.imag(), tol);
}

// Routh array; true iff all first-column entries share the leading sign.
bool routh_stable(const std::vector<double>& ascending) {
    std::vector<double> d(ascending.rbegin(), ascending.rend());
    const std::size_t n = d.size() - 1;
    if (n == 0) return false;
    std::vector<std::vector<double>> rows(n + 1);
    for (std::size_t i = 0; i < d.size(); i += 2) rows[0].push_back(d[i]);
    for (std::size_t i = 1; i < d.size(); i += 2) rows[1].push_back(d[i]);
    const std::size_t width = rows[0].size() + 1;
    for (auto& r : rows) r.resize(width, 0.0);
    for (std::size_t k = 2; k <= n; ++k) {
        if (rows[k - 1][0] == 0.0) return false;
        for (std::size_t j = 0; j + 1 < width; ++j) {
            rows[k][j] = (rows[k - 1][0] * rows[k - 2][j + 1] - rows[k - 2][0] * rows[k - 1][j + 1]) / rows[k - 1][0];
        }
    }
    for (std::size_t k = 0; k <= n; ++k)
        if (!(rows[k][0] * d[0] > 0.0)) return false;
    return true;
}

}  // namespace

TEST(Polynomial, TrimsOnlyExactLeadingZeros) {
    const Polynomial p{1.0, 2.0, 0.0, 0.0};
    EXPECT_EQ(p.degree(), 1);
    EXPECT_TRUE(Polynomial{0.0}.is_zero());
    EXPECT_EQ(Polynomial::from_descending({3.0, 2.0, 1.0}).coeffs(), (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Polynomial, CancellationIsTrimmedRelativeToOperands) {
    const Polynomial a{1.0, 1e-3, 1.0};
    const Polynomial b{0.0, 0.0, 1.0};
    const Polynomial d = a - b;
    EXPECT_EQ(d.degree(), 1);
    // scaling does not change the degree
    const Polynomial e = (1e-20 * a) - (1e-20 * b);
    EXPECT_EQ(e.degree(), 1);
}

TEST(RationalEval, MsdPlantValues) {
    const RationalTf g = fixtures::msd_plant();
    expect_near(rational_eval(g, 0.0), {1.0, 0.0}, 1e-15);
    expect_near(rational_eval(g, 30.0), {0.0, -2.5}, 1e-12);
}

TEST(RationalEval, IntegratorAndPoleOnAxis) {
    const RationalTf integ = tf({1.0}, {1.0, 0.0});
    expect_near(rational_eval(integ, 2.0), {0.0, -0.5}, 1e-15);
    try {
        rational_eval(integ, 0.0);
        FAIL() << "expected PoleOnAxis";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PoleOnAxis);
    }
    const RationalTf osc = tf({1.0}, {1.0, 0.0, 4.0});
    EXPECT_THROW(rational_eval(osc, 2.0), Error);
}

TEST(Compose, SeriesParallelFeedback) {
    const RationalTf integ = tf({1.0}, {1.0, 0.0});
    const RationalTf s2 = compose(Compose::Series, integ, integ);
    EXPECT_EQ(s2.num().coeffs(), (std::vector<double>{1.0}));
    EXPECT_EQ(s2.den().coeffs(), (std::vector<double>{0.0, 0.0, 1.0}));

    const RationalTf par = compose(Compose::Parallel, tf({1.0}, {1.0, 1.0}), RationalTf::gain(1.0));
    EXPECT_EQ(par.num().coeffs(), (std::vector<double>{2.0, 1.0}));
    EXPECT_EQ(par.den().coeffs(), (std::vector<double>{1.0, 1.0}));

    const double k = 3.0;
    const RationalTf fb = compose(Compose::Feedback, tf({k}, {1.0, 0.0}), RationalTf::gain(1.0));
    // k/(s+k), possibly with a common factor left in place
    for (double w : {0.1, 1.0, 7.0}) expect_near(rational_eval(fb, w), k / cplx(k, w), 1e-14);
}

TEST(Compose, NoCancellation) {
    const RationalTf a = tf({1.0, 1.0}, {1.0, 2.0});
    const RationalTf b = tf({1.0}, {1.0, 1.0});
    const RationalTf ab = a * b;
    EXPECT_EQ(ab.den().degree(), 2);
    EXPECT_EQ(ab.num().degree(), 1);
}

TEST(Compose, ZeroDenominatorIsDegenerate) {
    try {
        RationalTf(Polynomial{1.0}, Polynomial{0.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateResult);
    }
}

TEST(RelativeDegree, Examples) {
    EXPECT_EQ(relative_degree(fixtures::msd_plant()), 2);
    const LoopComponents lc = fixtures::msd_loop();
    EXPECT_EQ(relative_degree(lc.loop_tf() * lc.cs), 2);
    EXPECT_EQ(relative_degree(tf({1.0, 1.0}, {1.0, 2.0})), 0);
    EXPECT_EQ(relative_degree(tf({1.0, 0.0, 0.0}, {1.0, 2.0})), -1);
}

TEST(Hurwitz, Examples) {
    auto r = is_hurwitz(Polynomial{1.0, 1.0});
    EXPECT_TRUE(r.hurwitz);
    EXPECT_NEAR(r.margin, -1.0, 1e-14);
    r = is_hurwitz(Polynomial{-1.0, 0.0, 1.0});
    EXPECT_FALSE(r.hurwitz);
    EXPECT_NEAR(r.margin, 1.0, 1e-12);
    EXPECT_THROW(is_hurwitz(Polynomial{2.0}), Error);
}

TEST(Hurwitz, MsdBaseLinearCharacteristic) {
    const Polynomial p = base_linear_characteristic(fixtures::msd_loop());
    EXPECT_EQ(p.degree(), 6);
    EXPECT_TRUE(is_hurwitz(p).hurwitz);
    EXPECT_TRUE(routh_stable(p.coeffs()));
}

TEST(Hurwitz, AgreesWithRouthTable) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(0.1, 2.0), any(-2.0, 2.0);
    std::uniform_int_distribution<int> deg(1, 5);
    int disagreements = 0, stable = 0;
    for (int t = 0; t < 1000; ++t) {
        const int n = deg(rng);
        std::vector<double> c(static_cast<std::size_t>(n) + 1);
        for (auto& v : c) v = t % 2 ? pos(rng) : any(rng);
        const Polynomial p(c);
        const bool a = is_hurwitz(p).hurwitz;
        const bool b = routh_stable(c);
        stable += b;
        if (a != b) ++disagreements;
    }
    EXPECT_EQ(disagreements, 0);
    EXPECT_GT(stable, 100);
}

TEST(Roots, HighDynamicRange) {
    // (s + 1e-3)(s + 1)(s + 1e4)
    const Polynomial p = Polynomial{1e-3, 1.0} * Polynomial{1.0, 1.0} * Polynomial{1e4, 1.0};
    auto rs = roots(p);
    std::vector<double> re;
    for (auto r : rs) re.push_back(r.real());
    std::sort(re.begin(), re.end());
    EXPECT_NEAR(re[0], -1e4, 1e-6);
    EXPECT_NEAR(re[1], -1.0, 1e-9);
    EXPECT_NEAR(re[2], -1e-3, 1e-12);
}

TEST(Pade, FirstOrderCanonical) {
    const RationalTf p = pade_delay(0.0015, 1);
    EXPECT_DOUBLE_EQ(p.num()[0], 1.0);
    EXPECT_DOUBLE_EQ(p.num()[1], -0.00075);
    EXPECT_DOUBLE_EQ(p.den()[0], 1.0);
    EXPECT_DOUBLE_EQ(p.den()[1], 0.00075);
}

TEST(Pade, ThirdOrderPhaseAtLowFrequency) {
    const cplx v = rational_eval(pade_delay(0.0015, 3), 100.0);
    EXPECT_NEAR(std::arg(v), -0.15, 1e-6);
}

TEST(Pade, ZeroDelayIsIdentity) {
    for (int k : {1, 4, 9}) {
        const RationalTf p = pade_delay(0.0, k);
        EXPECT_EQ(p.num().coeffs(), (std::vector<double>{1.0}));
        EXPECT_EQ(p.den().coeffs(), (std::vector<double>{1.0}));
    }
}

TEST(Pade, AllPassAndStable) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lw(-3.0, 5.0);
    for (int k = 1; k <= 10; ++k) {
        const RationalTf p = pade_delay(0.0015, k);
        EXPECT_TRUE(is_hurwitz(p.den()).hurwitz) << "k = " << k;
        for (int i = 0; i < 100; ++i) {
            const double w = std::pow(10.0, lw(rng));
            EXPECT_NEAR(std::abs(rational_eval(p, w)), 1.0, 1e-12);
        }
    }
}

TEST(StateSpace, FirstOrder) {
    const StateSpace ss = to_state_space(tf({1.0}, {1.0, 2.0}));
    EXPECT_EQ(ss.A(0, 0), -2.0);
    EXPECT_EQ(ss.B(0, 0), 1.0);
    EXPECT_EQ(ss.C(0, 0), 1.0);
    EXPECT_EQ(ss.D(0, 0), 0.0);
}

TEST(StateSpace, Biproper) {
    const RationalTf g = tf({1.0, 1.0}, {1.0, 3.0});
    const StateSpace ss = to_state_space(g);
    EXPECT_EQ(ss.D(0, 0), 1.0);
    EXPECT_EQ(ss.C(0, 0), -2.0);
    for (double w : {0.0, 0.5, 10.0}) expect_near(ss.response(w), rational_eval(g, w), 1e-14);
}

TEST(StateSpace, ImproperRejected) {
    try {
        to_state_space(tf({1.0, 0.0, 0.0}, {1.0, 1.0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ImproperTf);
    }
}

TEST(StateSpace, RandomFourthOrderMatchesEvaluation) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> num(5), den(5);
        for (auto& v : num) v = u(rng);
        for (auto& v : den) v = u(rng);
        den.back() = 1.0 + std::abs(den.back());
        const RationalTf g{Polynomial(num), Polynomial(den)};
        for (const StateSpace& ss : {to_state_space(g), to_scaled_state_space(g)}) {
            const FrequencyGrid grid = make_log_grid(1e-2, 1e2, 100);
            for (double w : grid.points) {
                cplx ref;
                try {
                    ref = rational_eval(g, w);
                } catch (const Error&) {
                    continue;
                }
                const cplx got = ss.response(w);
                EXPECT_LE(std::abs(got - ref), 1e-10 * std::max(1.0, std::abs(ref)));
            }
        }
    }
}

TEST(Properties, SeriesEvaluatesAsProduct) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0), lw(-2.0, 3.0);
    for (int t = 0; t < 200; ++t) {
        const RationalTf a{Polynomial{u(rng), u(rng)}, Polynomial{u(rng), u(rng), 1.0}};
        const RationalTf b{Polynomial{u(rng), u(rng), u(rng)}, Polynomial{u(rng), 1.0}};
        const double w = std::pow(10.0, lw(rng));
        const cplx prod = rational_eval(a, w) * rational_eval(b, w);
        EXPECT_LE(std::abs(rational_eval(a * b, w) - prod), 1e-12 * std::abs(prod));
    }
}

TEST(Properties, ConjugateSymmetry) {
    const RationalTf g = fixtures::msd_plant() * pade_delay(0.0015, 4);
    for (double w : {0.3, 3.0, 30.0, 3000.0}) {
        EXPECT_EQ(rational_eval(g, -w), std::conj(rational_eval(g, w)));
    }
}
