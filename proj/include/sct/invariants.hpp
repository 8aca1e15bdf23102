// invariants.hpp: named property checks for every module, with pass/fail tallies

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "sct/carnot.hpp"
#include "sct/coupling_optimizer.hpp"
#include "sct/fit.hpp"
#include "sct/gaussian_cl.hpp"
#include "sct/gibbs_thermo.hpp"
#include "sct/operator_core.hpp"
#include "sct/protocol.hpp"
#include "sct/testbed.hpp"

namespace sct {

/// Outcome of one named property over all its cases. `worst_excess` is the largest
/// (measured - limit) seen; a case fails when it is positive.
struct InvariantCheck {
    std::string module;
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    double worst_excess = -std::numeric_limits<double>::infinity();
    std::string error;

    bool passed() const { return failures == 0 && cases > 0 && error.empty(); }

    void record(double measured, double limit) {
        ++cases;
        const double excess = std::isnan(measured) ? std::numeric_limits<double>::infinity() : measured - limit;
        worst_excess = std::max(worst_excess, excess);
        if (excess > 0.0) ++failures;
    }
};

struct InvariantSummary {
    std::vector<InvariantCheck> checks;

    std::size_t passed() const {
        return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); }));
    }
    std::size_t failed() const { return checks.size() - passed(); }
    bool all_passed() const { return failed() == 0; }
};

struct InvariantDefinition {
    std::string module;
    std::string name;
    std::function<void(InvariantCheck&, std::mt19937_64&)> body;
};

namespace invariant_detail {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    return m;
}

inline std::size_t random_dim(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline CompositeSystem random_system(std::size_t ds, std::size_t db, double g, std::mt19937_64& rng) {
    const auto h_s = random_hermitian(ds, rng);
    const auto h_b = random_hermitian(db, rng);
    const auto v = random_hermitian_bounded(ds * db, rng, 1.0);
    return {h_s, h_b, v, g};
}

inline RMatrix random_positive_definite(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    RMatrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = nd(rng);
    return a * a.transpose() / static_cast<double>(n) + 0.3 * RMatrix::Identity(n, n);
}

} // namespace invariant_detail

/// A random quadratic Hamiltonian on `modes` modes with a mixed, displaced Gaussian state.
struct GaussianInstance {
    QuadraticHamiltonian h;
    GaussianState state;
};

inline GaussianInstance random_gaussian_instance(Eigen::Index modes, std::mt19937_64& rng) {
    using namespace invariant_detail;
    const QuadraticHamiltonian h(random_positive_definite(2 * modes, rng));
    const QuadraticHamiltonian h_prep(random_positive_definite(2 * modes, rng));
    GaussianState st = thermal_gaussian(h_prep, ThermalContext(uniform(rng, 0.3, 3.0)));
    std::normal_distribution<double> nd(0.0, 0.5);
    for (Eigen::Index i = 0; i < st.mean.size(); ++i) st.mean(i) = nd(rng);
    return {h, st};
}

/// Evolves `inst` for time t and records the four conservation properties.
struct EvolutionCheck {
    double det_error = 0.0;
    double nu_error = 0.0;
    double energy_error = 0.0;
    double uncertainty_min = 0.0;
};

inline EvolutionCheck check_evolution(const GaussianInstance& inst, double t) {
    const WilliamsonDecomposition w = williamson(inst.h);
    const RMatrix e = evolution_matrix(w, t);
    const GaussianState out = evolve(inst.state, e);
    EvolutionCheck c;
    c.det_error = std::abs(e.determinant() - 1.0);
    c.nu_error = (symplectic_eigenvalues(out.cov) - symplectic_eigenvalues(inst.state.cov)).cwiseAbs().maxCoeff();
    c.energy_error = std::abs(gaussian_energy(out, inst.h) - gaussian_energy(inst.state, inst.h));
    c.uncertainty_min = uncertainty_min_eigenvalue(out);
    return c;
}

// ---------------------------------------------------------------------------

inline std::vector<InvariantDefinition> invariant_definitions() {
    using namespace invariant_detail;
    std::vector<InvariantDefinition> defs;
    auto add = [&](std::string module, std::string name, std::function<void(InvariantCheck&, std::mt19937_64&)> f) {
        defs.push_back({std::move(module), std::move(name), std::move(f)});
    };

    // operator-core
    add("operator-core", "partial_trace_preserves_trace", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 1000; ++i) {
            const std::size_t ds = random_dim(rng, 1, 4), db = random_dim(rng, 1, 4);
            const auto n = static_cast<Eigen::Index>(ds * db);
            const Matrix m = random_matrix(n, n, rng);
            const cplx full = m.trace();
            for (Side keep : {Side::S, Side::B}) {
                const cplx part = partial_trace(m, keep, ds, db).trace();
                c.record(std::abs(part - full), 1e-10);
            }
        }
    });
    add("operator-core", "exp_log_round_trip", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 100; ++i) {
            const auto a = random_hermitian_bounded(random_dim(rng, 1, 8), rng, 5.0);
            const auto back = matrix_function(matrix_function(a, MatrixFunction::Exp), MatrixFunction::Log);
            c.record((back.matrix() - a.matrix()).cwiseAbs().maxCoeff(), 1e-8);
        }
    });
    add("operator-core", "embed_partial_trace_adjoint", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 200; ++i) {
            const std::size_t ds = random_dim(rng, 1, 4), db = random_dim(rng, 1, 4);
            const auto m = random_hermitian(ds * db, rng);
            for (Side side : {Side::S, Side::B}) {
                const auto a = random_hermitian(side == Side::S ? ds : db, rng);
                const double lhs = embed(a, side, ds, db).trace_product(m);
                const double rhs = a.trace_product(partial_trace(m, side, ds, db));
                c.record(std::abs(lhs - rhs), 1e-10);
            }
        }
    });
    add("operator-core", "commutator_norm_bound", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 200; ++i) {
            const std::size_t d = random_dim(rng, 1, 6);
            const auto a = random_hermitian(d, rng), b = random_hermitian(d, rng);
            const double bound = 2.0 * operator_norm(a) * operator_norm(b);
            c.record(operator_norm(i_commutator(a, b)), bound * (1.0 + 1e-12));
        }
    });

    // gibbs-thermo
    add("gibbs-thermo", "gibbs_state_minimizes_free_energy", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 100; ++i) {
            const std::size_t d = random_dim(rng, 2, 6);
            const ThermalContext ctx(uniform(rng, 0.2, 3.0));
            const auto h = random_hermitian(d, rng);
            const auto omega = gibbs_state(h, ctx);
            const auto rho = random_density(d, rng);
            const double gap = free_energy(rho, h, ctx) - free_energy(omega, h, ctx);
            // strict for rho != omega
            if ((rho.matrix() - omega.matrix()).norm() > 1e-9) c.record(-gap, 0.0);
            else c.record(-gap, 1e-12);
        }
    });
    add("gibbs-thermo", "free_energy_gap_is_relative_entropy", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 100; ++i) {
            const std::size_t d = random_dim(rng, 2, 6);
            const ThermalContext ctx(uniform(rng, 0.2, 3.0));
            // ln omega is rebuilt from omega's spectrum, so keep its populations well above roundoff
            const auto h = random_hermitian_bounded(d, rng, 2.0);
            const auto omega = gibbs_state(h, ctx);
            const auto rho = random_density(d, rng);
            const double gap = free_energy(rho, h, ctx) - free_energy(omega, h, ctx);
            c.record(std::abs(gap - ctx.temperature() * relative_entropy(rho, omega)), 1e-9);
        }
    });
    add("gibbs-thermo", "covariance_nonnegative", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 200; ++i) {
            const std::size_t d = random_dim(rng, 1, 6);
            const ThermalContext ctx(uniform(rng, 0.1, 10.0));
            const auto h = random_hermitian(d, rng);
            const auto a = random_hermitian(d, rng);
            c.record(-generalized_covariance(a, a, h, ctx), 1e-12);
        }
    });
    add("gibbs-thermo", "kubo_mori_linear_and_self_adjoint", [](InvariantCheck& c, std::mt19937_64& rng) {
        // tr(omega X_H Y) through the Gibbs-weighted form, which stays bounded for wide spectra
        for (int i = 0; i < 100; ++i) {
            const std::size_t d = random_dim(rng, 2, 6);
            const ThermalContext ctx(uniform(rng, 0.2, 3.0));
            const Spectrum sp = random_hermitian(d, rng).spectrum();
            const auto x = random_hermitian(d, rng), y = random_hermitian(d, rng);
            const auto wx = gibbs_weighted_kubo_mori(x, sp, ctx), wy = gibbs_weighted_kubo_mori(y, sp, ctx);
            c.record(std::abs(wx.trace_product(y) - wy.trace_product(x)), 1e-9);
            const double a = uniform(rng, -2.0, 2.0), b = uniform(rng, -2.0, 2.0);
            const auto comb = gibbs_weighted_kubo_mori(a * x + b * y, sp, ctx);
            c.record((comb - a * wx - b * wy).matrix().cwiseAbs().maxCoeff(), 1e-9);
        }
    });
    add("gibbs-thermo", "dyson_first_order", [](InvariantCheck& c, std::mt19937_64& rng) {
        const std::vector<double> gs{1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3};
        for (int i = 0; i < 5; ++i) {
            const std::size_t d = random_dim(rng, 2, 6);
            const ThermalContext ctx(uniform(rng, 0.3, 2.0));
            const auto h = random_hermitian(d, rng);
            const auto v = random_hermitian(d, rng);
            const Spectrum sp = h.spectrum();
            const Matrix omega = gibbs_state(sp, ctx).matrix();
            const double mean_v = (omega * v.matrix()).trace().real();
            const auto n = static_cast<Eigen::Index>(d);
            const Matrix shifted = kubo_mori_map(v.matrix(), sp, ctx) - mean_v * Matrix::Identity(n, n);
            std::vector<double> err;
            for (double g : gs) {
                const Matrix first = omega * (Matrix::Identity(n, n) - ctx.beta() * g * shifted);
                err.push_back((gibbs_state(h + g * v, ctx).matrix() - first).norm());
            }
            c.record(1.9 - loglog_fit(gs, err).slope, 0.0);
        }
    });

    // protocol-engine
    add("protocol-engine", "second_law_optimal_protocol", [](InvariantCheck& c, std::mt19937_64& rng) {
        const ThermalContext ctx(1.0);
        for (int i = 0; i < 8; ++i) {
            const double g = i == 0 ? 0.0 : uniform(rng, 0.05, 1.5);
            const CompositeSystem sys = qubit_testbed(g);
            const auto rho_s = random_density(2, rng);
            const auto irr = solve_irr(sys, rho_s, ctx);
            const auto res = solve_res(sys, ctx);
            const auto run = optimal_work_protocol(sys, rho_s, irr.h_s_opt, res.h_s_opt, kQuasistatic, ctx);
            const double w = run.ledger.total();
            if (g == 0.0) c.record(std::abs(w - run.report.w_weak), 1e-9);
            else c.record(w - run.report.w_weak, 1e-9);
        }
    });
    add("protocol-engine", "free_energy_terms_nonnegative", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 20; ++i) {
            const ThermalContext ctx(uniform(rng, 0.3, 2.0));
            const auto sys = random_system(2, 2, uniform(rng, 0.0, 1.0), rng);
            const auto rho_s = random_density(2, rng);
            const auto run = optimal_work_protocol(sys, rho_s, random_hermitian(2, rng), random_hermitian(2, rng),
                                                   kQuasistatic, ctx);
            c.record(-run.report.delta_f_irr, 1e-12);
            c.record(-run.report.delta_f_res, 1e-12);
        }
    });
    add("protocol-engine", "first_law_closes", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 12; ++i) {
            const ThermalContext ctx(uniform(rng, 0.3, 2.0));
            const auto sys = random_system(2, random_dim(rng, 2, 3), uniform(rng, 0.0, 1.0), rng);
            const auto rho_s = random_density(2, rng);
            const auto h1 = random_hermitian(2, rng), hn = random_hermitian(2, rng);
            for (std::size_t n : {kQuasistatic, std::size_t{3}, std::size_t{17}}) {
                c.record(std::abs(optimal_work_protocol(sys, rho_s, h1, hn, n, ctx).ledger.first_law_residual()),
                         1e-9);
                c.record(std::abs(heat_report(sys, rho_s, h1, hn, n, ctx).ledger.first_law_residual()), 1e-9);
            }
        }
    });
    add("protocol-engine", "clausius_inequality", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 12; ++i) {
            const ThermalContext ctx(uniform(rng, 0.3, 2.0));
            const auto sys = random_system(2, random_dim(rng, 2, 3), uniform(rng, 0.0, 1.0), rng);
            const auto rho_s = random_density(2, rng);
            const auto h1 = random_hermitian(2, rng), hn = random_hermitian(2, rng);
            for (std::size_t n : {kQuasistatic, std::size_t{5}}) {
                const auto r = heat_report(sys, rho_s, h1, hn, n, ctx);
                c.record(r.q_system - ctx.temperature() * r.entropy_change, 1e-9);
            }
        }
    });
    add("protocol-engine", "optimal_corrections_bounded_by_coupling", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 10; ++i) {
            const ThermalContext ctx(uniform(rng, 0.3, 2.0));
            const auto sys = random_system(2, 2, uniform(rng, 0.0, 2.0), rng);
            const auto rho_s = random_density(2, rng);
            const auto b = bound_check(sys, solve_irr(sys, rho_s, ctx), solve_res(sys, ctx), ctx);
            for (double v : {b.irr, b.res, b.mutual}) c.record(v, b.bound + 1e-12);
        }
    });

    // coupling-optimizer
    add("coupling-optimizer", "gradient_matches_finite_differences", [](InvariantCheck& c, std::mt19937_64& rng) {
        const double step = 1e-5;
        for (int i = 0; i < 3; ++i) {
            const ThermalContext ctx(uniform(rng, 0.5, 1.5));
            const auto sys = random_system(3, 2, uniform(rng, 0.1, 1.0), rng);
            const auto rho_s = random_density(3, rng);
            const auto x = random_hermitian(3, rng);
            const auto ev = irr_evaluate(sys, rho_s, x, ctx);
            for (const auto& e : hermitian_basis(3)) {
                const double fd = (irr_evaluate(sys, rho_s, x + step * e, ctx).value -
                                   irr_evaluate(sys, rho_s, x - step * e, ctx).value) /
                                  (2.0 * step);
                c.record(std::abs(fd - ev.gradient.trace_product(e)), 1e-5);
            }
        }
    });
    add("coupling-optimizer", "accepted_steps_decrease_objective", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 5; ++i) {
            const ThermalContext ctx(uniform(rng, 0.5, 1.5));
            const auto sys = random_system(2, 2, uniform(rng, 0.2, 1.5), rng);
            const auto irr = solve_irr(sys, random_density(2, rng), ctx);
            const auto res = solve_res(sys, ctx);
            for (const auto* sol : {&irr, &res})
                for (std::size_t k = 1; k < sol->history.size(); ++k) {
                    const double prev = sol->history[k - 1];
                    c.record(sol->history[k] - prev, 1e-12 * (1.0 + std::abs(prev)));
                }
        }
    });
    add("coupling-optimizer", "objectives_quadratic_in_g", [](InvariantCheck& c, std::mt19937_64& rng) {
        const std::vector<double> gs{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
        const ThermalContext ctx(1.0);
        for (int i = 0; i < 2; ++i) {
            const auto rho_s = random_density(2, rng);
            std::vector<double> irr, res;
            for (double g : gs) {
                const auto sys = qubit_testbed(g);
                irr.push_back(solve_irr(sys, rho_s, ctx).objective);
                res.push_back(solve_res(sys, ctx).objective);
            }
            c.record(std::abs(loglog_fit(gs, irr).slope - 2.0), 0.1);
            c.record(std::abs(loglog_fit(gs, res).slope - 2.0), 0.1);
        }
    });
    add("coupling-optimizer", "gauge_direction_leaves_coefficient", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 3; ++i) {
            const ThermalContext ctx(uniform(rng, 0.5, 1.5));
            const auto sys = random_system(3, 2, 1.0, rng);
            const auto h_s = random_hermitian(3, rng);
            const auto basis = hermitian_basis(3);
            const auto nb = static_cast<Eigen::Index>(basis.size());
            Eigen::MatrixXd l(nb, nb);
            for (Eigen::Index j = 0; j < nb; ++j) {
                const auto img = gauge_map(sys, h_s, basis[static_cast<std::size_t>(j)], ctx);
                for (Eigen::Index k = 0; k < nb; ++k) l(k, j) = img.trace_product(basis[static_cast<std::size_t>(k)]);
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(l, Eigen::ComputeFullV);
            HermitianOperator m = HermitianOperator::zero(3);
            for (Eigen::Index j = 0; j < nb; ++j) m = m + basis[static_cast<std::size_t>(j)] * svd.matrixV()(j, nb - 1);
            const auto vt = perturbative_endpoints(sys, random_density(3, rng), ctx).v_tilde;
            const double base = perturbative_coefficient(sys, h_s, vt, ctx);
            c.record(std::abs(perturbative_coefficient(sys, h_s + m * uniform(rng, -2.0, 2.0), vt, ctx) - base), 1e-9);
        }
    });
    add("coupling-optimizer", "irr_solution_is_fixed_point", [](InvariantCheck& c, std::mt19937_64& rng) {
        SolverOptions opt;
        opt.tolerance = 2.5e-9;
        for (int i = 0; i < 5; ++i) {
            const ThermalContext ctx(uniform(rng, 0.5, 1.5));
            const auto sys = random_system(2, 2, uniform(rng, 0.1, 1.0), rng);
            const auto rho_s = random_density(2, rng);
            const auto sol = solve_irr(sys, rho_s, ctx, opt);
            c.record(frobenius_norm(rho_s - reduced_gibbs(sys, sol.h_s_opt, ctx)), 1e-8);
        }
    });

    // carnot-engine
    add("carnot-engine", "efficiency_below_carnot", [](InvariantCheck& c, std::mt19937_64&) {
        for (double g : {0.02, 0.05, 0.1, 0.2, 0.4})
            for (std::size_t n : {kQuasistatic, std::size_t{64}}) {
                const auto r = run_cycle(build_optimal_cycle(qubit_engine(g)).setup, n);
                if (!r.is_engine) continue;
                // strictly below
                c.record(r.eta - r.eta_carnot, -std::numeric_limits<double>::min());
            }
    });
    add("carnot-engine", "loss_fractions", [](InvariantCheck& c, std::mt19937_64&) {
        for (double g : {0.02, 0.1, 0.3})
            for (std::size_t n : {kQuasistatic, std::size_t{16}}) {
                const auto setup = build_optimal_cycle(qubit_engine(g)).setup;
                const auto r = run_cycle(setup, n);
                if (!r.is_engine) continue;
                c.record(-r.x_hot, 1e-12);
                c.record(-r.x_cold, 1e-12);
                c.record(std::abs(efficiency_from_fractions(r, setup.beta_h, setup.beta_c) - r.eta), 1e-8);
            }
    });
    add("carnot-engine", "heat_coefficient_lower_bound", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 2; ++i) {
            const auto rho_s = random_density(2, rng);
            const auto fit = heat_correction_coefficient(qubit_testbed(1.0), rho_s, pauli::z(),
                                                         {0.02, 0.04, 0.06, 0.08, 0.1}, ThermalContext(1.0));
            c.record(0.95 * fit.lower_bound - fit.k_q, 0.0);
        }
    });
    add("carnot-engine", "cycle_first_law", [](InvariantCheck& c, std::mt19937_64&) {
        for (double g : {0.0, 0.05, 0.3, 0.8})
            for (std::size_t n : {kQuasistatic, std::size_t{8}, std::size_t{64}})
                c.record(std::abs(run_cycle(build_optimal_cycle(qubit_engine(g)).setup, n).first_law_residual), 1e-8);
    });

    // gaussian-cl
    add("gaussian-cl", "evolution_is_symplectic", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 25; ++i) {
            const auto inst = random_gaussian_instance(static_cast<Eigen::Index>(random_dim(rng, 1, 6)), rng);
            const auto r = check_evolution(inst, uniform(rng, 0.0, 50.0));
            c.record(r.det_error, 1e-8);
            c.record(r.nu_error, 1e-8);
        }
    });
    add("gaussian-cl", "energy_conserved", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 25; ++i) {
            const auto inst = random_gaussian_instance(static_cast<Eigen::Index>(random_dim(rng, 1, 6)), rng);
            c.record(check_evolution(inst, uniform(rng, 0.0, 50.0)).energy_error, 1e-8);
        }
    });
    add("gaussian-cl", "uncertainty_relation", [](InvariantCheck& c, std::mt19937_64& rng) {
        for (int i = 0; i < 25; ++i) {
            const auto inst = random_gaussian_instance(static_cast<Eigen::Index>(random_dim(rng, 1, 6)), rng);
            c.record(-uncertainty_min_eigenvalue(inst.state), 1e-8);
            c.record(-check_evolution(inst, uniform(rng, 0.0, 50.0)).uncertainty_min, 1e-8);
            const auto th = thermal_gaussian(inst.h, ThermalContext(uniform(rng, 0.1, 10.0)));
            c.record(-uncertainty_min_eigenvalue(th), 1e-8);
        }
    });
    add("gaussian-cl", "time_average_identity", [](InvariantCheck& c, std::mt19937_64& rng) {
        const OscillatorParams unit{1.0, 1.0};
        const OhmicBathSpec bath{12, 2.1};
        for (int i = 0; i < 2; ++i) {
            const auto h = build_cl_hamiltonian(unit, bath, uniform(rng, 0.3, 1.0));
            GaussianState st = cl_product_state(unit, 1.0, bath, 3.5);
            st.mean(0) = uniform(rng, -0.5, 0.5);
            const auto sig = equilibration_time(h, st, oscillator_energy_form(unit, h.n_modes()));
            const int n = 40000;
            const double t_max = 8000.0;
            double acc = 0.0;
            for (int k = 0; k < n; ++k) {
                const double d = sig.value(t_max * k / n) - sig.equilibrium;
                acc += d * d;
            }
            const double msd = sig.mean_square_deviation();
            c.record(std::abs(acc / n - msd), 0.05 * msd);
        }
    });
    add("gaussian-cl", "gibbs_replacement_second_law", [](InvariantCheck& c, std::mt19937_64&) {
        const OscillatorParams unit{1.0, 1.0};
        const OhmicBathSpec bath{40, 1.2};
        const double beta = 3.5, beta_s = 1.0;
        const double w_weak = oscillator_weak_work(unit, beta_s, beta);
        const auto sched = weak_optimal_schedule(unit, beta, beta_s, 40);
        for (int k = 0; k <= 10; ++k)
            c.record(cl_work_protocol(bath, 0.1 * k, sched, GibbsReplacement{}, beta, beta_s).work, w_weak + 1e-9);
    });
    return defs;
}

/// Per-check seed derived from the suite seed and the check's position.
inline std::uint64_t invariant_seed(std::uint64_t seed, std::size_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline InvariantCheck run_invariant(const InvariantDefinition& def, std::uint64_t seed) {
    InvariantCheck c;
    c.module = def.module;
    c.name = def.name;
    std::mt19937_64 rng(seed);
    try {
        def.body(c, rng);
    } catch (const std::exception& e) {
        c.error = e.what();
    }
    return c;
}

/// Runs every check sequentially.
inline InvariantSummary run_invariant_suite(std::uint64_t seed) {
    InvariantSummary s;
    const auto defs = invariant_definitions();
    for (std::size_t i = 0; i < defs.size(); ++i) s.checks.push_back(run_invariant(defs[i], invariant_seed(seed, i)));
    return s;
}

} // namespace sct
