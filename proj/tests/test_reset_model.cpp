#include <gtest/gtest.h>

#include <algorithm>
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

PlantModel msd_plant_model() {
    PlantModel p;
    p.model = fixtures::msd_plant();
    return p;
}

}  // namespace

TEST(BaseLinearTf, GforeMsd) {
    const RationalTf r = base_linear_tf(ResetElement::gfore(42.66, 42.66, 0.0, 0.0));
    EXPECT_NEAR(std::abs(rational_eval(r, 0.0) - 1.0), 0.0, 1e-15);
    const cplx v = rational_eval(r, 10.0);
    EXPECT_NEAR(std::abs(v - 42.66 / cplx(42.66, 10.0)), 0.0, 1e-15);
}

TEST(BaseLinearTf, CleggIsIntegrator) {
    const RationalTf r = base_linear_tf(ResetElement::ci(1.0, 0.0));
    EXPECT_EQ(r.num().degree(), 0);
    EXPECT_EQ(r.den().degree(), 1);
    EXPECT_NEAR(std::abs(rational_eval(r, 2.0) - cplx(0.0, -0.5)), 0.0, 1e-15);
}

TEST(BaseLinearTf, FeedthroughAddsAtDc) {
    const RationalTf r = base_linear_tf(ResetElement::gfore(1.0, 1.0, 2.0, 0.0));
    EXPECT_NEAR(std::abs(rational_eval(r, 0.0) - 3.0), 0.0, 1e-15);
}

TEST(ResetElement, Kinds) {
    EXPECT_EQ(ResetElement::gfore(1.0, 1.0, 0.0, 0.0).kind(), "GFORE");
    EXPECT_EQ(ResetElement::ci(1.0, 0.0).kind(), "CI");
    EXPECT_EQ(ResetElement::pci(1.0, 0.5, 0.0).kind(), "PCI");
    const ResetElement r = ResetElement::gfore(3.0, 6.0, 0.0, 0.0, 2.0);
    EXPECT_EQ(r.C_r, 3.0);
    EXPECT_EQ(r.omega_k(), 6.0);
    EXPECT_EQ(kind_of([] { ResetElement::gfore(-1.0, 1.0, 0.0, 0.0); }), ErrorKind::BadParams);
}

TEST(ComputeKg, MatchesIndependentFormula) {
    EXPECT_NEAR(compute_kg(0.0, 42.66), fixtures::msd_kg(), 1e-15);
    EXPECT_NEAR(compute_kg(0.0, 42.66), 0.0144788519652803, 1e-13);
}

TEST(ComputeKg, GammaOneRemovesDescribingFunctionTerm) {
    for (double wr : {0.1, 1.0, 42.66, 1e4}) EXPECT_NEAR(compute_kg(1.0, wr), 1.0 / wr, 1e-15 / wr);
}

TEST(ComputeKg, SecondTableRow) {
    const double wr = 67.5e-4;
    const double expected = 1.0 / (wr * std::sqrt(1.0 + std::pow(4.0 / std::numbers::pi, 2)));
    EXPECT_NEAR(compute_kg(0.0, wr), expected, 1e-12 * expected);
    EXPECT_NEAR(compute_kg(0.0, wr), 91.506, 1e-3);
}

TEST(ComputeKg, DomainErrors) {
    EXPECT_EQ(kind_of([] { compute_kg(-1.0, 1.0); }), ErrorKind::DomainError);
    EXPECT_EQ(kind_of([] { compute_kg(0.0, 0.0); }), ErrorKind::DomainError);
}

TEST(ExampleController, MsdComponents) {
    const LoopComponents lc = fixtures::msd_loop();
    const double kg = fixtures::msd_kg();
    EXPECT_NEAR(std::abs(rational_eval(lc.c3, 0.0)), 0.0, 1e-15);
    EXPECT_NEAR(lc.c3.high_frequency_gain(), 1.0 / (kg * 38.71), 1e-9);
    EXPECT_EQ(rational_eval(lc.c1, 5.0), cplx(1.0));
    EXPECT_EQ(rational_eval(lc.cs, 5.0), cplx(1.0));
    const double w = 20.0;
    const cplx s(0.0, w);
    const cplx c2 = 6.5 * 38.71 * (kg + 1.0 / s) * (s / 50.0 + 1.0) / (s / 450.0 + 1.0);
    EXPECT_LT(std::abs(rational_eval(lc.c2, w) - c2), 1e-12 * std::abs(c2));
}

TEST(ExampleController, SecondTableRowValidates) {
    ControllerParams p;
    p.k_p = 3518300;
    p.omega_i = 61.25e-4;
    p.omega_d = 79.167e-4;
    p.omega_t = 356.25e-4;
    p.omega_r = 67.5e-4;
    p.omega_k = 67.5e-4;
    const LoopComponents lc = build_example_controller(p, msd_plant_model());
    EXPECT_TRUE(lc.reset.is_gfore());
    EXPECT_NEAR(lc.c3.high_frequency_gain(), 1.0 / (compute_kg(0.0, 67.5e-4) * 61.25e-4), 1e-6);
}

TEST(ExampleController, BadParams) {
    ControllerParams p = fixtures::msd_params();
    p.gamma = 1.0;
    EXPECT_EQ(kind_of([&] { build_example_controller(p, msd_plant_model()); }), ErrorKind::BadParams);
    p = fixtures::msd_params();
    p.k_p = 0.0;
    EXPECT_EQ(kind_of([&] { build_example_controller(p, msd_plant_model()); }), ErrorKind::BadParams);
    p = fixtures::msd_params();
    p.omega_r = 0.0;
    EXPECT_EQ(kind_of([&] { build_example_controller(p, msd_plant_model()); }), ErrorKind::BadParams);
}

TEST(ClosedLoop, MsdDimensionAndLayout) {
    const ClosedLoopHybrid h = assemble_closed_loop(fixtures::msd_loop());
    EXPECT_EQ(h.dim(), 6);
    ASSERT_FALSE(h.layout.empty());
    EXPECT_EQ(h.layout[0].name, "x_r");
    Eigen::Index total = 0;
    for (const auto& b : h.layout) total += b.size;
    EXPECT_EQ(total, 6);
}

TEST(ClosedLoop, ResetMapIsDiagonal) {
    LoopComponents lc = fixtures::msd_loop();
    lc.reset.gamma = 0.3;
    const ClosedLoopHybrid h = assemble_closed_loop(lc);
    Eigen::MatrixXd expected = Eigen::MatrixXd::Identity(6, 6);
    expected(0, 0) = 0.3;
    EXPECT_EQ(h.A_rho, expected);
}

TEST(ClosedLoop, ResetSignalHasNoResetStateComponent) {
    const ClosedLoopHybrid h = assemble_closed_loop(fixtures::msd_loop());
    EXPECT_EQ(h.Ce_bar(0), 0.0);
    EXPECT_EQ(h.Cu_bar(0), 0.0);
    EXPECT_EQ(h.C_bar(0), 0.0);
    // Cs = 1, so e_r and u_1 coincide.
    EXPECT_EQ(h.Ce_bar, h.Cu_bar);
    EXPECT_EQ(h.De_bar, h.Du);
}

TEST(ClosedLoop, UrToU1MatchesLoopAlgebra) {
    const LoopComponents lc = fixtures::msd_loop();
    const LtiPart lti = assemble_lti(lc);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lw(-2.0, 5.0);
    for (int i = 0; i < 50; ++i) {
        const double w = std::pow(10.0, lw(rng));
        const cplx L = lc.loop_eval(w);
        const cplx expected = -L / (1.0 + L * rational_eval(lc.c3, w));
        EXPECT_LT(std::abs(lti.ur_to_u1(w) - expected), 1e-9 * std::abs(expected)) << "omega " << w;
    }
}

TEST(ClosedLoop, BaseLinearEigenvaluesMatchCharacteristicRoots) {
    for (double T : {0.0, 0.0015}) {
        const LoopComponents lc = fixtures::msd_loop(T);
        const ClosedLoopHybrid h = assemble_closed_loop(lc);
        Eigen::VectorXcd ev = h.A_bar.eigenvalues();
        std::vector<cplx> eig(ev.data(), ev.data() + ev.size());
        std::vector<cplx> rts = roots(base_linear_characteristic(lc));
        ASSERT_EQ(eig.size(), rts.size()) << "T = " << T;
        for (const cplx& r : rts) {
            double best = 1e300;
            for (const cplx& e : eig) best = std::min(best, std::abs(e - r));
            EXPECT_LT(best, 1e-6 * std::max(1.0, std::abs(r))) << "root " << r << " T = " << T;
        }
    }
}

TEST(ClosedLoop, ShapingFilterStatesAppear) {
    LoopComponents lc = fixtures::msd_loop();
    lc.cs = RationalTf{Polynomial{100.0}, Polynomial{100.0, 1.0}};
    const ClosedLoopHybrid h = assemble_closed_loop(lc);
    EXPECT_EQ(h.dim(), 7);
    EXPECT_NE(h.Ce_bar, h.Cu_bar);
}

TEST(ClosedLoop, Errors) {
    LoopComponents lc = fixtures::msd_loop();
    lc.plant.model = parse_frf("omega_rad_s,real,imag\n1,1,0\n2,1,0\n");
    EXPECT_EQ(kind_of([&] { assemble_closed_loop(lc); }), ErrorKind::NotRealizable);

    lc = fixtures::msd_loop();
    lc.c3 = RationalTf{Polynomial{0.0, 0.0, 1.0}, Polynomial{1.0, 1.0}};
    EXPECT_EQ(kind_of([&] { assemble_closed_loop(lc); }), ErrorKind::ImproperComponent);

    lc = fixtures::msd_loop();
    lc.plant.model = RationalTf{Polynomial{1.0}, Polynomial{1.0}};
    EXPECT_EQ(kind_of([&] { assemble_closed_loop(lc); }), ErrorKind::ImproperComponent);
}
