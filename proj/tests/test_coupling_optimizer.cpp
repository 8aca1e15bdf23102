#include <gtest/gtest.h>

#include <array>
#include <random>

#include "sct/coupling_optimizer.hpp"
#include "sct/fit.hpp"
#include "sct/protocol.hpp"
#include "sct/testbed.hpp"

using namespace sct;

namespace {

const ThermalContext kBeta1(1.0);

HermitianOperator excited_state() {
    RealVector p(2);
    p << 0.3, 0.7;
    return HermitianOperator::diagonal(p);
}

HermitianOperator qubit(const std::array<double, 3>& c) {
    return pauli::x() * c[0] + pauli::y() * c[1] + pauli::z() * c[2];
}

std::array<double, 3> bloch(const HermitianOperator& h) {
    return {0.5 * h.trace_product(pauli::x()), 0.5 * h.trace_product(pauli::y()), 0.5 * h.trace_product(pauli::z())};
}

// Minimum of f over traceless qubit Hamiltonians by repeated 21^3 grid refinement.
double grid_minimum(const std::function<double(const HermitianOperator&)>& f, std::array<double, 3> center,
                    double half_width) {
    const int n = 21;
    double best = std::numeric_limits<double>::infinity();
    for (int level = 0; level < 9; ++level) {
        std::array<double, 3> arg = center;
        const double h = 2.0 * half_width / (n - 1);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const std::array<double, 3> c{center[0] - half_width + i * h, center[1] - half_width + j * h,
                                                  center[2] - half_width + k * h};
                    const double v = f(qubit(c));
                    if (v < best) {
                        best = v;
                        arg = c;
                    }
                }
        center = arg;
        half_width = 3.0 * h;
    }
    return best;
}

double irr_direct(const CompositeSystem& sys, const HermitianOperator& rho_s, const HermitianOperator& x) {
    return kBeta1.temperature() *
           relative_entropy(product_initial_state(sys, rho_s, kBeta1), gibbs_state(sys.total(x), kBeta1));
}

double res_direct(const CompositeSystem& sys, const HermitianOperator& z) {
    return kBeta1.temperature() *
           relative_entropy(gibbs_state(sys.total(z), kBeta1), gibbs_state(sys.free_hamiltonian(), kBeta1));
}

} // namespace

TEST(SolveIrr, DecoupledIsMinusTLogRho) {
    const auto sys = qubit_testbed(0.0);
    const auto rho_s = excited_state();
    const auto sol = solve_irr(sys, rho_s, kBeta1);
    EXPECT_TRUE(sol.converged);
    EXPECT_NEAR(sol.objective, 0.0, 1e-12);
    const auto expected = traceless(matrix_function(rho_s, MatrixFunction::Log) * -1.0);
    EXPECT_TRUE(sol.h_s_opt.approx_equal(expected, 1e-8));
}

TEST(SolveIrr, MatchesGridSearch) {
    const auto sys = qubit_testbed(0.2);
    const auto rho_s = excited_state();
    const auto sol = solve_irr(sys, rho_s, kBeta1);
    ASSERT_TRUE(sol.converged);
    const double grid = grid_minimum([&](const HermitianOperator& x) { return irr_direct(sys, rho_s, x); },
                                     bloch(traceless(matrix_function(rho_s, MatrixFunction::Log) * -1.0)), 1.0);
    EXPECT_NEAR(sol.objective, grid, 1e-5);
    EXPECT_LE(sol.objective, grid + 1e-12);
    EXPECT_NEAR(sol.objective, irr_direct(sys, rho_s, sol.h_s_opt), 1e-12);
    EXPECT_LE(sol.residual_norm, 1e-8 * 2);
}

TEST(SolveIrr, FixedPointCondition) {
    std::mt19937_64 rng(31);
    SolverOptions opt;
    opt.tolerance = 0.5e-8 / 2.0;
    for (int i = 0; i < 5; ++i) {
        const auto rho_s = random_density(2, rng);
        const auto sys = qubit_testbed(0.3 + 0.2 * i);
        const auto sol = solve_irr(sys, rho_s, kBeta1, opt);
        ASSERT_TRUE(sol.converged);
        const auto marginal = partial_trace(gibbs_state(sys.total(sol.h_s_opt), kBeta1), Side::S, sys);
        EXPECT_LE(frobenius_norm(rho_s - marginal), 1e-8);
    }
}

TEST(SolveIrr, RejectsRankDeficient) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(2);
    psi(1) = 1.0;
    EXPECT_THROW(solve_irr(qubit_testbed(0.2), pure_state(psi), kBeta1), DomainError);
    EXPECT_THROW(solve_irr(qubit_testbed(0.2), HermitianOperator::identity(3) * (1.0 / 3.0), kBeta1), DimensionError);
}

TEST(SolveRes, DecoupledIsBareHamiltonian) {
    const auto sys = qubit_testbed(0.0);
    const auto sol = solve_res(sys, kBeta1);
    EXPECT_TRUE(sol.converged);
    EXPECT_NEAR(sol.objective, 0.0, 1e-12);
    EXPECT_TRUE(sol.h_s_opt.approx_equal(traceless(sys.h_s()), 1e-8));
}

TEST(SolveRes, MatchesGridSearch) {
    const auto sys = qubit_testbed(0.2);
    const auto sol = solve_res(sys, kBeta1);
    ASSERT_TRUE(sol.converged);
    const double grid = grid_minimum([&](const HermitianOperator& z) { return res_direct(sys, z); },
                                     bloch(sys.h_s()), 1.0);
    EXPECT_NEAR(sol.objective, grid, 1e-5);
    EXPECT_LE(sol.objective, grid + 1e-12);
    EXPECT_NEAR(sol.objective, res_direct(sys, sol.h_s_opt), 1e-12);
}

TEST(SolveRes, StationarityResidual) {
    // tr_B(omega) tr((H0_{Z,beta} - Z) omega) - tr_B(omega (H0_{Z,beta} - Z)), written out with the
    // plain Kubo-Mori map
    const auto sys = qubit_testbed(0.7);
    const auto sol = solve_res(sys, kBeta1);
    ASSERT_TRUE(sol.converged);
    const auto hz = sys.total(sol.h_s_opt);
    const auto omega = gibbs_state(hz, kBeta1);
    const Matrix a = kubo_mori_map(sys.free_hamiltonian() - hz, hz, kBeta1);
    const Matrix wa = omega.matrix() * a;
    const cplx mean = wa.trace();
    const Matrix res = partial_trace(omega.matrix(), Side::S, 2, 2) * mean - partial_trace(wa, Side::S, 2, 2);
    EXPECT_LE(res.norm(), 1e-7);
}

TEST(Gradients, MatchFiniteDifferences) {
    std::mt19937_64 rng(32);
    const ThermalContext ctx(0.8);
    for (int i = 0; i < 5; ++i) {
        const CompositeSystem sys(random_hermitian(3, rng), random_hermitian(2, rng), random_hermitian(6, rng), 0.6);
        const auto rho_s = random_density(3, rng);
        const auto x = random_hermitian(3, rng);
        const auto ev = irr_evaluate(sys, rho_s, x, ctx);
        const auto evr = res_evaluate(sys, x, ctx);
        const double h = 1e-5;
        for (const auto& e : hermitian_basis(3)) {
            const double fd = (irr_evaluate(sys, rho_s, x + h * e, ctx).value -
                               irr_evaluate(sys, rho_s, x - h * e, ctx).value) /
                              (2 * h);
            EXPECT_NEAR(fd, ev.gradient.trace_product(e), 1e-5);
            const double fdr = (res_evaluate(sys, x + h * e, ctx).value - res_evaluate(sys, x - h * e, ctx).value) / (2 * h);
            EXPECT_NEAR(fdr, evr.gradient.trace_product(e), 1e-5);
        }
        const double direct = ctx.temperature() * relative_entropy(product_initial_state(sys, rho_s, ctx),
                                                                   gibbs_state(sys.total(x), ctx));
        EXPECT_NEAR(ev.value, direct, 1e-12);
    }
}

TEST(Optimizer, AcceptedStepsDecreaseObjective) {
    std::mt19937_64 rng(33);
    const CompositeSystem sys(random_hermitian(3, rng), random_hermitian(2, rng), random_hermitian(6, rng), 1.0);
    const auto rho_s = random_density(3, rng);
    for (const auto& sol : {solve_irr(sys, rho_s, kBeta1), solve_res(sys, kBeta1)}) {
        EXPECT_TRUE(sol.converged);
        ASSERT_GE(sol.history.size(), 2u);
        for (std::size_t k = 1; k < sol.history.size(); ++k)
            // accepted steps may rise only at the roundoff level of the objective
            EXPECT_LE(sol.history[k], sol.history[k - 1] + 1e-12 * (1.0 + std::abs(sol.history[k - 1])))
                << "step " << k << " rise " << sol.history[k] - sol.history[k - 1];
        EXPECT_LE(sol.residual_norm, 3e-8);
    }
}

TEST(Optimizer, ObjectivesAreQuadraticInG) {
    const auto rho_s = excited_state();
    std::vector<double> gs{1e-1, 3e-2, 1e-2, 3e-3, 1e-3}, irr, res;
    for (double g : gs) {
        irr.push_back(solve_irr(qubit_testbed(g), rho_s, kBeta1).objective);
        res.push_back(solve_res(qubit_testbed(g), kBeta1).objective);
    }
    EXPECT_NEAR(loglog_fit(gs, irr).slope, 2.0, 0.1);
    EXPECT_NEAR(loglog_fit(gs, res).slope, 2.0, 0.1);
}

TEST(Optimizer, SmallCouplingCoefficients) {
    const auto rho_s = excited_state();
    const double g = 0.01;
    const auto sys = qubit_testbed(g);
    const auto pert = perturbative_endpoints(sys, rho_s, kBeta1);
    EXPECT_NEAR(solve_irr(sys, rho_s, kBeta1).objective / (g * g), pert.coefficient_irr, 0.05 * pert.coefficient_irr);
    EXPECT_NEAR(solve_res(sys, kBeta1).objective / (g * g), pert.coefficient_res, 0.05 * pert.coefficient_res);
}

TEST(Perturbative, FirstOrderShiftVanishesForOffDiagonalCoupling) {
    const auto pert = perturbative_endpoints(qubit_testbed(0.4), excited_state(), kBeta1);
    EXPECT_LT(frobenius_norm(pert.first_order_shift), 1e-15);
    EXPECT_GE(pert.coefficient_irr, 0.0);
    EXPECT_GE(pert.coefficient_res, 0.0);
}

TEST(Perturbative, CommutingCouplingClassicalCovariance) {
    const ThermalContext ctx(0.7);
    const auto sys = qubit_testbed_commuting(1.0);
    const auto rho_s = excited_state();
    const auto pert = perturbative_endpoints(sys, rho_s, ctx);
    // omega(H~_S + H_B) is diagonal; V~ = sz (x) (sz - <sz>_B)
    const auto w = gibbs_state(sys.free_hamiltonian(matrix_function(rho_s, MatrixFunction::Log) * -ctx.temperature()), ctx);
    const auto vt = pert.v_tilde;
    double mean = 0.0, second = 0.0;
    for (int k = 0; k < 4; ++k) {
        mean += w(k, k).real() * vt(k, k).real();
        second += w(k, k).real() * vt(k, k).real() * vt(k, k).real();
    }
    EXPECT_NEAR(pert.coefficient_irr, 0.5 * ctx.beta() * (second - mean * mean), 1e-12);
    // the shift is -g <sz>_B sz
    const double mb = -std::tanh(0.5 * ctx.beta());
    EXPECT_TRUE(pert.first_order_shift.approx_equal(pauli::z() * -mb, 1e-14));
}

TEST(Perturbative, EndpointsAreSecondOrderAccurate) {
    const RealVector diag = (RealVector(2) << 0.35, 0.65).finished();
    const auto rho_s = HermitianOperator::diagonal(diag);
    const CompositeSystem base(pauli::z() * 0.5, pauli::z() * 0.5,
                               kron(pauli::x(), pauli::x()) + kron(pauli::z(), pauli::z()), 1.0);
    std::vector<double> gs{0.2, 0.1, 0.05, 0.025}, diff;
    for (double g : gs) {
        const auto sys = base.with_g(g);
        const auto pert = perturbative_endpoints(sys, rho_s, kBeta1);
        const auto w_pert = optimal_work_protocol(sys, rho_s, pert.h1_s, pert.hN_s, kQuasistatic, kBeta1);
        const auto w_opt = optimal_work_protocol(sys, rho_s, solve_irr(sys, rho_s, kBeta1).h_s_opt,
                                                 solve_res(sys, kBeta1).h_s_opt, kQuasistatic, kBeta1);
        diff.push_back(w_opt.report.w_total - w_pert.report.w_total);
        EXPECT_GE(diff.back(), -1e-12);
    }
    EXPECT_GE(loglog_fit(gs, diff).slope, 2.9);
}

TEST(Perturbative, GaugeKernelLeavesCoefficientUnchanged) {
    std::mt19937_64 rng(34);
    const CompositeSystem sys(random_hermitian(3, rng), random_hermitian(2, rng), random_hermitian(6, rng), 1.0);
    const auto h_s = random_hermitian(3, rng);
    const auto basis = hermitian_basis(3);
    // real matrix of the gauge map in the Hermitian basis
    Eigen::MatrixXd l(9, 9);
    for (std::size_t j = 0; j < 9; ++j) {
        const auto img = gauge_map(sys, h_s, basis[j], kBeta1);
        for (std::size_t i = 0; i < 9; ++i)
            l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = img.trace_product(basis[i]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(l, Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    EXPECT_LT(sv(8), 1e-12 * sv(0));
    EXPECT_GT(sv(7), 1e-6 * sv(0));
    HermitianOperator m = HermitianOperator::zero(3);
    for (std::size_t j = 0; j < 9; ++j) m = m + basis[j] * svd.matrixV()(static_cast<Eigen::Index>(j), 8);
    // the kernel is the identity direction
    EXPECT_LT(frobenius_norm(traceless(m)), 1e-10);
    const auto vt = perturbative_endpoints(sys, HermitianOperator::identity(3) * (1.0 / 3.0), kBeta1).v_tilde;
    EXPECT_NEAR(perturbative_coefficient(sys, h_s + m * 0.7, vt, kBeta1),
                perturbative_coefficient(sys, h_s, vt, kBeta1), 1e-9);
}

TEST(BoundCheck, TrivialAtZeroCoupling) {
    const auto sys = qubit_testbed(0.0);
    const auto b = bound_check(sys, solve_irr(sys, excited_state(), kBeta1), solve_res(sys, kBeta1), kBeta1);
    EXPECT_EQ(b.violations, 0);
    EXPECT_EQ(b.bound, 0.0);
    EXPECT_NEAR(b.irr_margin, 0.0, 1e-12);
}

TEST(BoundCheck, SweepHasNoViolations) {
    const auto rho_s = excited_state();
    for (int i = 0; i <= 20; ++i) {
        const auto sys = qubit_testbed(0.1 * i);
        const auto b = bound_check(sys, solve_irr(sys, rho_s, kBeta1), solve_res(sys, kBeta1), kBeta1);
        EXPECT_EQ(b.violations, 0) << "g = " << 0.1 * i;
    }
}

TEST(BoundCheck, IrreversibleLossGrowsWithCoupling) {
    const auto rho_s = excited_state();
    double prev = -1.0;
    for (double g = 0.5; g <= 5.0 + 1e-12; g += 0.5) {
        const auto sol = solve_irr(qubit_testbed(g), rho_s, kBeta1);
        EXPECT_TRUE(sol.converged) << "g = " << g;
        EXPECT_GT(sol.objective, prev) << "g = " << g;
        prev = sol.objective;
    }
}
