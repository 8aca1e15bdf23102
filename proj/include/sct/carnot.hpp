// carnot.hpp: two-bath Carnot-like cycles, efficiency corrections and power bounds
//
// Cycle (S Hamiltonians A, B, C, D; S starts decoupled at h_D in the state left by the cold bath):
//   quench D->A, hot contact A->B, quench B->C, cold contact C->D.
// Every contact starts with a fresh thermal bath. Heats are reported as energy
// absorbed by the bath, so q_hot < 0 for a working engine.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "sct/coupling_optimizer.hpp"
#include "sct/fit.hpp"
#include "sct/gibbs_thermo.hpp"
#include "sct/protocol.hpp"

namespace sct {

struct TwoBathSetup {
    CompositeSystem sys_hot;
    CompositeSystem sys_cold;
    double beta_h;
    double beta_c;
    HermitianOperator h_a, h_b, h_c, h_d;

    TwoBathSetup(CompositeSystem hot, CompositeSystem cold, double beta_hot, double beta_cold, HermitianOperator a,
                 HermitianOperator b, HermitianOperator c, HermitianOperator d)
        : sys_hot(std::move(hot)), sys_cold(std::move(cold)), beta_h(beta_hot), beta_c(beta_cold), h_a(std::move(a)),
          h_b(std::move(b)), h_c(std::move(c)), h_d(std::move(d)) {
        if (!(beta_h > 0.0) || !(beta_c > 0.0)) throw DomainError("TwoBathSetup: betas must be > 0");
        if (!(beta_h < beta_c)) throw DomainError("TwoBathSetup: beta_h must be < beta_c (T_h > T_c)");
        const std::size_t ds = sys_hot.dim_s();
        if (sys_cold.dim_s() != ds || h_a.dim() != ds || h_b.dim() != ds || h_c.dim() != ds || h_d.dim() != ds)
            throw DimensionError("TwoBathSetup: inconsistent system dimensions");
    }

    ThermalContext hot() const { return ThermalContext(beta_h); }
    ThermalContext cold() const { return ThermalContext(beta_c); }
};

/// tr_B omega_beta(h_s + H_B + gV)
inline HermitianOperator reduced_gibbs(const CompositeSystem& sys, const HermitianOperator& h_s,
                                       const ThermalContext& ctx) {
    return partial_trace(gibbs_state(sys.total(h_s), ctx), Side::S, sys);
}

struct CycleBuild {
    TwoBathSetup setup;
    bool converged_a = false;
    bool converged_c = false;
    /// Frobenius mismatch of the two marginal-matching conditions
    double mismatch_a = 0.0;
    double mismatch_c = 0.0;
};

/// Given h_B and h_D, chooses h_A and h_C so that the S marginal entering each bath
/// equals the one the other bath left behind.
inline CycleBuild build_optimal_cycle(const TwoBathSetup& setup, const SolverOptions& opt = {}) {
    const ThermalContext hot = setup.hot();
    const ThermalContext cold = setup.cold();
    const HermitianOperator rho1 = reduced_gibbs(setup.sys_hot, setup.h_b, hot);
    const HermitianOperator rho2 = reduced_gibbs(setup.sys_cold, setup.h_d, cold);
    const OptimumSolution sc = solve_irr(setup.sys_cold, rho1, cold, opt);
    const OptimumSolution sa = solve_irr(setup.sys_hot, rho2, hot, opt);
    CycleBuild out{setup, sa.converged, sc.converged, 0.0, 0.0};
    out.setup.h_a = sa.h_s_opt;
    out.setup.h_c = sc.h_s_opt;
    out.mismatch_a = frobenius_norm(reduced_gibbs(setup.sys_hot, sa.h_s_opt, hot) - rho2);
    out.mismatch_c = frobenius_norm(reduced_gibbs(setup.sys_cold, sc.h_s_opt, cold) - rho1);
    return out;
}

struct CycleReport {
    double q_hot = 0.0;
    double q_cold = 0.0;
    double w_net = 0.0;
    /// w_net / (-q_hot); NaN when the cycle is not an engine
    double eta = std::numeric_limits<double>::quiet_NaN();
    double eta_carnot = 0.0;
    double x_hot = 0.0;
    double x_cold = 0.0;
    /// T_h (Delta S(g) - Delta S_weak) / g, the first-order entropy coefficient
    double k_s_first_order = 0.0;
    bool is_engine = false;
    /// w_net + q_hot + q_cold
    double first_law_residual = 0.0;
    /// S(rho_1) - S(rho_2): entropy taken by S from the hot bath
    double entropy_change = 0.0;
    double entropy_change_weak = 0.0;
    double dissipation = 0.0;
    StrokeReport hot_stroke;
    StrokeReport cold_stroke;
};

/// n_steps == kQuasistatic runs reversible isothermal strokes.
inline CycleReport run_cycle(const TwoBathSetup& setup, std::size_t n_steps) {
    const ThermalContext hot = setup.hot();
    const ThermalContext cold = setup.cold();
    const double th = hot.temperature();
    const double tc = cold.temperature();
    const HermitianOperator rho2 = reduced_gibbs(setup.sys_cold, setup.h_d, cold);

    CycleReport r;
    const double w_da = rho2.trace_product(setup.h_d - setup.h_a);
    r.hot_stroke = contact_stroke(setup.sys_hot.with_h_s(setup.h_a), rho2, setup.h_b, n_steps, hot);
    const HermitianOperator& rho1 = r.hot_stroke.rho_s_out;
    const double w_bc = rho1.trace_product(setup.h_b - setup.h_c);
    r.cold_stroke = contact_stroke(setup.sys_cold.with_h_s(setup.h_c), rho1, setup.h_d, n_steps, cold);

    r.w_net = w_da + r.hot_stroke.work + w_bc + r.cold_stroke.work;
    r.q_hot = r.hot_stroke.q_bath;
    r.q_cold = r.cold_stroke.q_bath;
    // nonzero when the S state fails to close: w + q = -(E_S final - E_S initial)
    r.first_law_residual = r.w_net + r.q_hot + r.q_cold;
    r.eta_carnot = 1.0 - setup.beta_h / setup.beta_c;
    r.entropy_change = von_neumann_entropy(rho1) - von_neumann_entropy(rho2);
    r.entropy_change_weak = von_neumann_entropy(gibbs_state(setup.h_b, hot)) -
                            von_neumann_entropy(gibbs_state(setup.h_d, cold));
    r.dissipation = r.hot_stroke.dissipation + r.cold_stroke.dissipation;
    r.is_engine = r.w_net > 0.0 && r.q_hot < 0.0 && r.entropy_change > 0.0;
    if (r.is_engine) {
        r.eta = r.w_net / (-r.q_hot);
        const auto lost = [](const StrokeReport& s) {
            return s.penalty.res_b + s.penalty.mutual + s.penalty.irr + s.dissipation;
        };
        r.x_hot = lost(r.hot_stroke) / (th * r.entropy_change);
        r.x_cold = lost(r.cold_stroke) / (tc * r.entropy_change);
    }
    const double g = setup.sys_hot.g();
    r.k_s_first_order = g > 0.0 ? th * (r.entropy_change - r.entropy_change_weak) / g : 0.0;
    return r;
}

/// 1 - T_c (1 + x_c) / (T_h (1 - x_h))
inline double efficiency_from_fractions(const CycleReport& r, double beta_h, double beta_c) {
    return 1.0 - (beta_h / beta_c) * (1.0 + r.x_cold) / (1.0 - r.x_hot);
}

struct PowerBoundReport {
    double r_hot = 0.0;
    double r_cold = 0.0;
    double bound_tight = 0.0;
    double bound_loose = 0.0;
    /// g r_c eta_C / (1 - eta_C + r_c / r_h)
    double bound_carnot = 0.0;
    double tau_hot = 0.0;
    double tau_cold = 0.0;
    /// w_net / (tau_hot + tau_cold)
    double power = 0.0;
};

/// ||i [H_B, V]|| on the full space (unscaled V).
inline double energy_exchange_rate(const CompositeSystem& sys) {
    return operator_norm(i_commutator(embed(sys.h_b(), Side::B, sys), sys.v()));
}

inline PowerBoundReport power_bound(const TwoBathSetup& setup, const CycleReport& report) {
    PowerBoundReport p;
    const double g = setup.sys_hot.g();
    p.r_hot = energy_exchange_rate(setup.sys_hot);
    p.r_cold = energy_exchange_rate(setup.sys_cold);
    const double inf = std::numeric_limits<double>::infinity();
    p.tau_hot = g * p.r_hot > 0.0 ? std::abs(report.q_hot) / (g * p.r_hot) : inf;
    p.tau_cold = g * p.r_cold > 0.0 ? std::abs(report.q_cold) / (g * p.r_cold) : inf;
    if (p.r_hot == 0.0 || p.r_cold == 0.0 || g == 0.0) return p;
    const double eta = report.is_engine ? report.eta : 0.0;
    const double eta_c = report.eta_carnot;
    p.bound_tight = g * p.r_cold * eta / (1.0 - eta + p.r_cold / p.r_hot);
    p.bound_loose = g * p.r_hot * eta;
    p.bound_carnot = g * p.r_cold * eta_c / (1.0 - eta_c + p.r_cold / p.r_hot);
    p.power = report.is_engine ? report.w_net / (p.tau_hot + p.tau_cold) : 0.0;
    return p;
}

/// The reference engine on qubits: qubit baths sigma_z/2 coupled through sigma_x (x) sigma_x,
/// beta_h = 0.5, beta_c = 1, h_B = sigma_z/2, h_D = sigma_z; h_A, h_C from the weak-coupling rescaling.
inline TwoBathSetup qubit_engine(double g, double beta_h = 0.5, double beta_c = 1.0) {
    const HermitianOperator half_z = pauli::z() * 0.5;
    const HermitianOperator v = kron(pauli::x(), pauli::x());
    const CompositeSystem bath(half_z, half_z, v, g);
    const HermitianOperator h_b = half_z;
    const HermitianOperator h_d = pauli::z();
    return TwoBathSetup(bath, bath, beta_h, beta_c, h_d * (beta_c / beta_h), h_b, h_b * (beta_h / beta_c), h_d);
}

struct HeatCorrectionFit {
    /// coefficient of g^2 in q_bath + T Delta S
    double k_q = 0.0;
    double k_cubic = 0.0;
    /// (beta/2) cov_{omega(H~_S + H_B)}(V~, V~)
    double lower_bound = 0.0;
    std::vector<double> g;
    std::vector<double> penalty;
};

/// Fits q_bath(g) + T Delta S(g) = K_q g^2 + c g^3 over `g_grid` for the heat-minimizing
/// protocol (optimal coupling Hamiltonian, reversible contact ending at hN_s).
inline HeatCorrectionFit heat_correction_coefficient(const CompositeSystem& sys, const HermitianOperator& rho_s,
                                                     const HermitianOperator& hN_s, const std::vector<double>& g_grid,
                                                     const ThermalContext& ctx, const SolverOptions& opt = {}) {
    HeatCorrectionFit f;
    for (double g : g_grid) {
        const CompositeSystem s = sys.with_g(g);
        const OptimumSolution irr = solve_irr(s, rho_s, ctx, opt);
        const HeatReport h = heat_report(s, rho_s, irr.h_s_opt, hN_s, kQuasistatic, ctx);
        f.g.push_back(g);
        f.penalty.push_back(h.q_bath + ctx.temperature() * h.entropy_change);
    }
    const auto c = power_series_fit(f.g, f.penalty, {2, 3});
    f.k_q = c[0];
    f.k_cubic = c[1];
    f.lower_bound = perturbative_endpoints(sys.with_g(1.0), rho_s, ctx).coefficient_irr;
    return f;
}

} // namespace sct
