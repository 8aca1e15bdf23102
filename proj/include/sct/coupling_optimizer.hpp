// coupling_optimizer.hpp: optimal coupling / decoupling system Hamiltonians
//
// Both problems minimize a relative entropy over traceless Hermitian X on S:
//   irr:  T S(rho_S (x) omega_B || omega(X + H_B + gV))      gradient rho_S - tr_B omega
//   res:  T S(omega(Z + H_B + gV) || omega(H_S + H_B))        gradient beta * (stationarity residual)
// The additive constant of X is a gauge (objectives are invariant), fixed by tracelessness.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "sct/gibbs_thermo.hpp"
#include "sct/operator_core.hpp"
#include "sct/protocol.hpp"

namespace sct {

struct OptimumSolution {
    HermitianOperator h_s_opt;
    double residual_norm = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// objective after every accepted step of the winning start (first entry: initial point)
    std::vector<double> history;
};

struct SolverOptions {
    /// convergence when ||gradient||_F <= tolerance * dim_S
    double tolerance = 1e-8;
    std::size_t max_iterations = 10000;
    /// additional randomly perturbed starts besides the anchor
    std::size_t n_restarts = 5;
    double restart_scale = 0.3;
    std::uint64_t seed = 1;
};

/// Objective value and gradient at one point.
struct Evaluation {
    double value = 0.0;
    HermitianOperator gradient;
    /// roundoff scale of `value`, used to tolerate noise-level increases in the line search
    double noise = 0.0;
};

using Objective = std::function<Evaluation(const HermitianOperator&)>;

namespace detail {

inline double frob_inner(const HermitianOperator& a, const HermitianOperator& b) { return a.trace_product(b); }

inline HermitianOperator random_traceless(std::size_t dim, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = cplx(nd(rng), nd(rng));
    return traceless(HermitianOperator(0.5 * (m + m.adjoint()))) * scale;
}

struct DescentResult {
    HermitianOperator x;
    Evaluation eval;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

/// Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.
inline DescentResult descend(const Objective& f, HermitianOperator x, const SolverOptions& opt) {
    const double tol = opt.tolerance * static_cast<double>(x.dim());
    DescentResult r{traceless(x), {}, 0, false, {}};
    r.eval = f(r.x);
    r.history.push_back(r.eval.value);
    double step = 1.0;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        const HermitianOperator& grad = r.eval.gradient;
        const double g2 = frob_inner(grad, grad);
        if (std::sqrt(g2) <= tol) {
            r.converged = true;
            break;
        }
        bool accepted = false;
        double alpha = step;
        HermitianOperator x_new;
        Evaluation e_new;
        for (int bt = 0; bt < 60; ++bt) {
            x_new = traceless(r.x - alpha * grad);
            e_new = f(x_new);
            const double allowed = r.eval.value - 1e-4 * alpha * g2 + r.eval.noise + e_new.noise;
            if (std::isfinite(e_new.value) && e_new.value <= allowed) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
        // Barzilai-Borwein step for the next trial
        const HermitianOperator s = x_new - r.x;
        const HermitianOperator y = e_new.gradient - grad;
        const double sy = frob_inner(s, y);
        step = sy > 0.0 ? frob_inner(s, s) / sy : 2.0 * alpha;
        step = std::clamp(step, 1e-8, 1e8);
        r.x = x_new;
        r.eval = e_new;
        r.iterations = it + 1;
        r.history.push_back(r.eval.value);
    }
    if (!r.converged) r.converged = std::sqrt(frob_inner(r.eval.gradient, r.eval.gradient)) <= tol;
    return r;
}

inline double noise_scale(double magnitude) { return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + magnitude); }

} // namespace detail

/// Multi-start minimization: the anchor plus `n_restarts` seeded perturbations;
/// returns the lowest objective.
inline OptimumSolution minimize_hermitian(const Objective& f, const HermitianOperator& anchor,
                                          const SolverOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    detail::DescentResult best = detail::descend(f, anchor, opt);
    for (std::size_t k = 0; k < opt.n_restarts; ++k) {
        const double scale = opt.restart_scale * std::max(1.0, frobenius_norm(traceless(anchor)));
        HermitianOperator start = anchor + detail::random_traceless(anchor.dim(), scale, rng);
        detail::DescentResult cand = detail::descend(f, start, opt);
        const bool better = cand.eval.value < best.eval.value - 1e-13 ||
                            (cand.converged && !best.converged && cand.eval.value <= best.eval.value + 1e-13);
        if (better) best = std::move(cand);
    }
    OptimumSolution sol;
    sol.h_s_opt = best.x;
    sol.objective = best.eval.value;
    sol.iterations = best.iterations;
    sol.converged = best.converged;
    sol.history = std::move(best.history);
    return sol;
}

/// X_S + H_B + g V on the full space.
inline HermitianOperator coupled_hamiltonian(const CompositeSystem& sys, const HermitianOperator& x_s) {
    return sys.total(x_s);
}

/// Objective and gradient of T S(rho_S (x) omega_B || omega(X + H_B + gV)).
inline Evaluation irr_evaluate(const CompositeSystem& sys, const HermitianOperator& rho_s,
                               const HermitianOperator& x_s, const ThermalContext& ctx) {
    const double temp = ctx.temperature();
    const HermitianOperator rho0 = product_initial_state(sys, rho_s, ctx);
    const HermitianOperator h = coupled_hamiltonian(sys, x_s);
    const Spectrum sp = h.spectrum();
    const double e = rho0.trace_product(h);
    const double lnz = log_partition(sp.values, ctx.beta());
    // T S(rho0 || omega) = E_rho0(H) + T ln Z - T S(rho0)
    const double s0 = von_neumann_entropy(rho0);
    Evaluation ev;
    ev.value = e + temp * lnz - temp * s0;
    ev.gradient = rho_s - partial_trace(gibbs_state(sp, ctx), Side::S, sys);
    ev.noise = detail::noise_scale(std::abs(e) + std::abs(temp * lnz) + std::abs(temp * s0));
    return ev;
}

/// Objective and gradient of T S(omega(Z + H_B + gV) || omega(H_S + H_B)).
inline Evaluation res_evaluate(const CompositeSystem& sys, const HermitianOperator& z_s, const ThermalContext& ctx) {
    const double temp = ctx.temperature();
    const HermitianOperator h0 = sys.free_hamiltonian();
    const HermitianOperator hz = coupled_hamiltonian(sys, z_s);
    const Spectrum sp = hz.spectrum();
    const HermitianOperator omega = gibbs_state(sp, ctx);
    const double lnz0 = log_partition(h0.spectrum().values, ctx.beta());
    const double e0 = omega.trace_product(h0);
    const double s = shannon_entropy(gibbs_populations(sp.values, ctx.beta()));
    Evaluation ev;
    // F(omega_Z, H0) - F(omega_0, H0)
    ev.value = e0 - temp * s + temp * lnz0;
    const HermitianOperator a = h0 - hz;
    const HermitianOperator weighted = gibbs_weighted_kubo_mori(a, sp, ctx);
    const double mean_a = omega.trace_product(a);
    const HermitianOperator residual =
        partial_trace(omega, Side::S, sys) * mean_a - partial_trace(weighted, Side::S, sys);
    ev.gradient = residual * ctx.beta();
    ev.noise = detail::noise_scale(std::abs(e0) + std::abs(temp * s) + std::abs(temp * lnz0));
    return ev;
}

/// H_S^(1): minimizes Delta F^(irr). Starts at -T log rho_S.
inline OptimumSolution solve_irr(const CompositeSystem& sys, const HermitianOperator& rho_s, const ThermalContext& ctx,
                                 const SolverOptions& opt = {}) {
    require_full_rank(rho_s, "solve_irr");
    if (rho_s.dim() != sys.dim_s()) throw DimensionError("solve_irr: rho_S dimension mismatch");
    const HermitianOperator anchor =
        traceless(matrix_function(rho_s, MatrixFunction::Log) * -ctx.temperature());
    Objective f = [&](const HermitianOperator& x) { return irr_evaluate(sys, rho_s, x, ctx); };
    OptimumSolution sol = minimize_hermitian(f, anchor, opt);
    sol.residual_norm = frobenius_norm(f(sol.h_s_opt).gradient);
    return sol;
}

/// H_S^(N): minimizes Delta F^(res). Starts at H_S.
inline OptimumSolution solve_res(const CompositeSystem& sys, const ThermalContext& ctx, const SolverOptions& opt = {}) {
    Objective f = [&](const HermitianOperator& z) { return res_evaluate(sys, z, ctx); };
    OptimumSolution sol = minimize_hermitian(f, traceless(sys.h_s()), opt);
    sol.residual_norm = frobenius_norm(f(sol.h_s_opt).gradient) / ctx.beta();
    return sol;
}

struct PerturbativeReport {
    /// -g tr_B(V omega_beta(H_B))
    HermitianOperator first_order_shift;
    /// H~_S + shift, H_S + shift
    HermitianOperator h1_s;
    HermitianOperator hN_s;
    /// V - tr_B(V omega_B) (x) 1
    HermitianOperator v_tilde;
    /// (beta/2) cov_{omega(H~_S + H_B)}(V~, V~)
    double coefficient_irr = 0.0;
    /// (beta/2) cov_{omega(H_S + H_B)}(V~, V~)
    double coefficient_res = 0.0;
};

/// tr_B(V (1 (x) omega_B)) as an operator on S.
inline HermitianOperator bath_averaged_interaction(const CompositeSystem& sys, const ThermalContext& ctx) {
    const HermitianOperator wb = embed(gibbs_state(sys.h_b(), ctx), Side::B, sys);
    Matrix m = partial_trace(Matrix(sys.v().matrix() * wb.matrix()), Side::S, sys.dim_s(), sys.dim_b());
    return HermitianOperator(m);
}

/// (beta/2) cov_{omega_beta(h_s + H_B)}(V~, V~)
inline double perturbative_coefficient(const CompositeSystem& sys, const HermitianOperator& h_s,
                                       const HermitianOperator& v_tilde, const ThermalContext& ctx) {
    const HermitianOperator h = sys.free_hamiltonian(h_s);
    return 0.5 * ctx.beta() * generalized_covariance(v_tilde, v_tilde, h, ctx);
}

inline PerturbativeReport perturbative_endpoints(const CompositeSystem& sys, const HermitianOperator& rho_s,
                                                 const ThermalContext& ctx) {
    require_full_rank(rho_s, "perturbative_endpoints");
    PerturbativeReport r;
    const HermitianOperator vb = bath_averaged_interaction(sys, ctx);
    r.first_order_shift = vb * -sys.g();
    const HermitianOperator h_tilde = matrix_function(rho_s, MatrixFunction::Log) * -ctx.temperature();
    r.h1_s = h_tilde + r.first_order_shift;
    r.hN_s = sys.h_s() + r.first_order_shift;
    r.v_tilde = sys.v() - embed(vb, Side::S, sys);
    r.coefficient_irr = perturbative_coefficient(sys, h_tilde, r.v_tilde, ctx);
    r.coefficient_res = perturbative_coefficient(sys, sys.h_s(), r.v_tilde, ctx);
    return r;
}

/// Linear response of the reduced Gibbs state of h_s + H_B to h_s -> h_s + t M
/// (up to a factor -beta). Its kernel is the gauge freedom M of the first-order shift.
inline HermitianOperator gauge_map(const CompositeSystem& sys, const HermitianOperator& h_s,
                                   const HermitianOperator& m, const ThermalContext& ctx) {
    const Spectrum sp = sys.free_hamiltonian(h_s).spectrum();
    const HermitianOperator me = embed(m, Side::S, sys);
    const HermitianOperator omega = gibbs_state(sp, ctx);
    const HermitianOperator w = gibbs_weighted_kubo_mori(me, sp, ctx);
    return partial_trace(w, Side::S, sys) - partial_trace(omega, Side::S, sys) * omega.trace_product(me);
}

struct BoundReport {
    /// 2 ||g V||
    double bound = 0.0;
    double irr = 0.0;
    double res = 0.0;
    /// T I(omega^(N); S:B) at the res optimum
    double mutual = 0.0;
    double irr_margin = 0.0;
    double res_margin = 0.0;
    double mutual_margin = 0.0;
    int violations = 0;
};

inline BoundReport bound_check(const CompositeSystem& sys, const OptimumSolution& irr, const OptimumSolution& res,
                               const ThermalContext& ctx) {
    BoundReport b;
    b.bound = 2.0 * operator_norm(sys.interaction());
    b.irr = irr.objective;
    b.res = res.objective;
    const HermitianOperator omega_n = gibbs_state(sys.total(res.h_s_opt), ctx);
    b.mutual = ctx.temperature() * mutual_information(omega_n, sys.dim_s(), sys.dim_b());
    // tolerate roundoff at g = 0 where all quantities vanish
    const double slack = 1e-12;
    b.irr_margin = b.bound - b.irr;
    b.res_margin = b.bound - b.res;
    b.mutual_margin = b.bound - b.mutual;
    for (double m : {b.irr_margin, b.res_margin, b.mutual_margin})
        if (m < -slack) ++b.violations;
    return b;
}

} // namespace sct
