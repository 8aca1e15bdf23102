#include <gtest/gtest.h>

#include "sct/carnot.hpp"
#include "sct/testbed.hpp"

using namespace sct;

namespace {

TwoBathSetup optimal_engine(double g) { return build_optimal_cycle(qubit_engine(g)).setup; }

} // namespace

TEST(TwoBathSetup, Validation) {
    const auto sys = qubit_testbed(0.1);
    const auto h = pauli::z();
    EXPECT_THROW(TwoBathSetup(sys, sys, 1.0, 0.5, h, h, h, h), DomainError);
    EXPECT_THROW(TwoBathSetup(sys, sys, 1.0, 1.0, h, h, h, h), DomainError);
    EXPECT_THROW(TwoBathSetup(sys, sys, -1.0, 1.0, h, h, h, h), DomainError);
    EXPECT_THROW(TwoBathSetup(sys, sys, 0.5, 1.0, HermitianOperator::identity(3), h, h, h), DimensionError);
}

TEST(BuildOptimalCycle, WeakCouplingRescaling) {
    const auto b = build_optimal_cycle(qubit_engine(0.0));
    EXPECT_TRUE(b.converged_a);
    EXPECT_TRUE(b.converged_c);
    // h_C = (beta_h / beta_c) h_B and h_A = (beta_c / beta_h) h_D, up to a constant
    EXPECT_TRUE(b.setup.h_c.approx_equal(traceless(pauli::z() * 0.25), 1e-8));
    EXPECT_TRUE(b.setup.h_a.approx_equal(traceless(pauli::z() * 2.0), 1e-8));
}

TEST(BuildOptimalCycle, MarginalsMatchAtModerateCoupling) {
    const auto b = build_optimal_cycle(qubit_engine(0.1));
    EXPECT_TRUE(b.converged_a && b.converged_c);
    EXPECT_LE(b.mismatch_a, 1e-7);
    EXPECT_LE(b.mismatch_c, 1e-7);
}

TEST(BuildOptimalCycle, RelabelingSymmetry) {
    // matching the hot marginal at h_B from the cold side, then the cold marginal at h_C from the
    // hot side, returns h_B
    const auto b = build_optimal_cycle(qubit_engine(0.3));
    const auto& s = b.setup;
    const auto back = solve_irr(s.sys_hot, reduced_gibbs(s.sys_cold, s.h_c, s.cold()), s.hot());
    EXPECT_TRUE(back.h_s_opt.approx_equal(traceless(s.h_b), 1e-7));
}

TEST(RunCycle, WeakCouplingReachesCarnot) {
    const auto setup = optimal_engine(0.0);
    const auto r = run_cycle(setup, kQuasistatic);
    ASSERT_TRUE(r.is_engine);
    EXPECT_NEAR(r.eta, r.eta_carnot, 1e-10);
    EXPECT_NEAR(r.eta_carnot, 0.5, 0.0);
    double prev_gap = std::numeric_limits<double>::infinity();
    for (std::size_t n : {10u, 40u, 160u}) {
        const auto f = run_cycle(setup, n);
        ASSERT_TRUE(f.is_engine);
        const double gap = r.eta_carnot - f.eta;
        EXPECT_GT(gap, 0.0);
        EXPECT_LT(gap, prev_gap);
        prev_gap = gap;
    }
    EXPECT_LT(prev_gap, 5e-3);
}

TEST(RunCycle, StrongCouplingLosesEfficiency) {
    const auto r = run_cycle(optimal_engine(0.1), kQuasistatic);
    ASSERT_TRUE(r.is_engine);
    EXPECT_LT(r.eta, r.eta_carnot);
    EXPECT_NEAR(r.eta, 1.0 - std::abs(r.q_cold) / std::abs(r.q_hot), 1e-9);
    EXPECT_NEAR(r.first_law_residual, 0.0, 1e-8);
    EXPECT_GE(r.x_hot, -1e-12);
    EXPECT_GE(r.x_cold, -1e-12);
    EXPECT_NEAR(efficiency_from_fractions(r, 0.5, 1.0), r.eta, 1e-8);
}

TEST(RunCycle, EfficiencyGapScalesAsGSquared) {
    std::vector<double> gs{0.02, 0.04, 0.08, 0.12, 0.2}, gap;
    for (double g : gs) {
        const auto r = run_cycle(optimal_engine(g), kQuasistatic);
        ASSERT_TRUE(r.is_engine);
        gap.push_back(r.eta_carnot - r.eta);
    }
    EXPECT_NEAR(loglog_fit(gs, gap).slope, 2.0, 0.15);
}

TEST(RunCycle, FiniteStepsInvariants) {
    for (double g : {0.05, 0.3, 0.8}) {
        const auto setup = optimal_engine(g);
        for (std::size_t n : {8u, 64u}) {
            const auto r = run_cycle(setup, n);
            EXPECT_NEAR(r.first_law_residual, 0.0, 1e-8);
            // strong coupling with few steps can stop the engine altogether
            if (g < 0.5) {
                ASSERT_TRUE(r.is_engine) << "g = " << g;
            }
            if (!r.is_engine) continue;
            EXPECT_LT(r.eta, r.eta_carnot);
            EXPECT_NEAR(efficiency_from_fractions(r, setup.beta_h, setup.beta_c), r.eta, 1e-8);
            EXPECT_GE(r.x_hot, -1e-12);
            EXPECT_GE(r.x_cold, -1e-12);
        }
    }
}

TEST(RunCycle, NonEngineIsFlagged) {
    const auto sys = qubit_testbed(0.1);
    const auto h = pauli::z() * 0.5;
    const TwoBathSetup idle(sys, sys, 0.5, 1.0, h, h, h, h);
    const auto r = run_cycle(idle, 10);
    EXPECT_FALSE(r.is_engine);
    EXPECT_TRUE(std::isnan(r.eta));
    const auto p = power_bound(idle, r);
    EXPECT_EQ(p.power, 0.0);
}

TEST(PowerBound, CommutingCouplingHasNoExchange) {
    const auto sys = qubit_testbed_commuting(0.2);
    const auto base = qubit_engine(0.2);
    const TwoBathSetup setup(sys, sys, 0.5, 1.0, base.h_a, base.h_b, base.h_c, base.h_d);
    const auto r = run_cycle(setup, kQuasistatic);
    const auto p = power_bound(setup, r);
    EXPECT_EQ(p.r_hot, 0.0);
    EXPECT_EQ(p.bound_tight, 0.0);
    EXPECT_EQ(p.bound_loose, 0.0);
    EXPECT_TRUE(std::isinf(p.tau_hot));
    EXPECT_TRUE(std::isinf(p.tau_cold));
}

TEST(PowerBound, OrderingAndExpansion) {
    std::vector<double> gs{0.025, 0.05, 0.1, 0.2}, diff;
    for (double g : gs) {
        const auto setup = optimal_engine(g);
        const auto r = run_cycle(setup, kQuasistatic);
        const auto p = power_bound(setup, r);
        EXPECT_NEAR(p.r_hot, 1.0, 1e-12);
        EXPECT_LE(p.bound_tight, p.bound_loose);
        EXPECT_LE(p.power, p.bound_tight * (1.0 + 1e-12));
        EXPECT_GT(p.tau_hot, 0.0);
        diff.push_back(p.bound_carnot - p.bound_tight);
        EXPECT_GT(diff.back(), 0.0);
    }
    EXPECT_GE(loglog_fit(gs, diff).slope, 1.9);
}

TEST(HeatCorrection, RespectsLowerBound) {
    RealVector p(2);
    p << 0.3, 0.7;
    const auto rho_s = HermitianOperator::diagonal(p);
    const auto fit = heat_correction_coefficient(qubit_testbed(1.0), rho_s, pauli::z(), {0.02, 0.04, 0.06, 0.08, 0.1},
                                                 ThermalContext(1.0));
    EXPECT_GE(fit.k_q, fit.lower_bound * 0.95);
    EXPECT_GT(fit.lower_bound, 0.0);
    for (double pen : fit.penalty) EXPECT_GT(pen, 0.0);
}
