// experiments.hpp: sweep recipes over the coupling grid and their hard checks

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sct/bench/config.hpp"
#include "sct/bench/csv.hpp"
#include "sct/bench/pool.hpp"
#include "sct/carnot.hpp"
#include "sct/coupling_optimizer.hpp"
#include "sct/gaussian_cl.hpp"
#include "sct/invariants.hpp"
#include "sct/protocol.hpp"
#include "sct/testbed.hpp"

namespace sct::bench {

/// A hard invariant that failed on one row: measured - limit > 0.
struct HardViolation {
    std::size_t row = 0;
    std::string check;
    double excess = 0.0;
};

struct SweepResult {
    Table table;
    std::size_t hard_checks = 0;
    std::vector<HardViolation> violations;
    std::optional<InvariantSummary> invariants;

    bool ok() const { return violations.empty(); }
};

namespace experiment_detail {

struct PointResult {
    std::vector<Cell> row;
    /// (check name, measured - limit)
    std::vector<std::pair<std::string, double>> checks;

    void add(double x) { row.emplace_back(x); }
    void add_flag(bool b) { row.emplace_back(std::int64_t{b ? 1 : 0}); }
    void check(std::string name, double measured, double limit) {
        checks.emplace_back(std::move(name), std::isnan(measured) ? std::numeric_limits<double>::infinity()
                                                                  : measured - limit);
    }
};

inline CompositeSystem exact_model(const ExperimentConfig& cfg, double g) {
    return cfg.model == "qubit_commuting" ? qubit_testbed_commuting(g) : qubit_testbed(g);
}

inline HermitianOperator initial_rho_s(const ExperimentConfig& cfg) {
    RealVector p(2);
    p << cfg.rho_s[0], cfg.rho_s[1];
    return HermitianOperator::diagonal(p);
}

inline SolverOptions solver_options(const ExperimentConfig& cfg) {
    SolverOptions opt;
    opt.seed = cfg.seed;
    return opt;
}

inline std::size_t isothermal_steps(const ExperimentConfig& cfg) {
    return cfg.n_steps == 0 ? kQuasistatic : static_cast<std::size_t>(cfg.n_steps);
}

struct OptimalEndpoints {
    CompositeSystem sys;
    OptimumSolution irr;
    OptimumSolution res;
};

inline OptimalEndpoints optimal_endpoints(const ExperimentConfig& cfg, double g, const ThermalContext& ctx) {
    const CompositeSystem sys = exact_model(cfg, g);
    const SolverOptions opt = solver_options(cfg);
    OptimumSolution irr = solve_irr(sys, initial_rho_s(cfg), ctx, opt);
    OptimumSolution res = solve_res(sys, ctx, opt);
    return {sys, std::move(irr), std::move(res)};
}

inline PointResult work_point(const ExperimentConfig& cfg, double g) {
    const ThermalContext ctx(cfg.beta);
    const auto ep = optimal_endpoints(cfg, g, ctx);
    const auto run = optimal_work_protocol(ep.sys, initial_rho_s(cfg), ep.irr.h_s_opt, ep.res.h_s_opt,
                                           isothermal_steps(cfg), ctx);
    const auto bounds = bound_check(ep.sys, ep.irr, ep.res, ctx);
    const CorrectionReport& r = run.report;
    const double w = run.ledger.total();
    PointResult p;
    for (double x : {g, w, r.w_weak, r.delta_f_irr, r.delta_f_res, r.dissipation, bounds.mutual, bounds.bound,
                     run.ledger.first_law_residual()})
        p.add(x);
    p.add_flag(ep.irr.converged && ep.res.converged);
    p.check("second_law", w, r.w_weak + 1e-9);
    p.check("decomposition", std::abs(w - (r.w_weak - r.delta_f_irr - r.delta_f_res - r.dissipation)), 1e-8);
    p.check("first_law", std::abs(run.ledger.first_law_residual()), 1e-9);
    p.check("coupling_bounds", static_cast<double>(bounds.violations), 0.0);
    return p;
}

inline PointResult heat_point(const ExperimentConfig& cfg, double g) {
    const ThermalContext ctx(cfg.beta);
    const auto ep = optimal_endpoints(cfg, g, ctx);
    const auto h = heat_report(ep.sys, initial_rho_s(cfg), ep.irr.h_s_opt, ep.res.h_s_opt, isothermal_steps(cfg), ctx);
    const double t_ds = ctx.temperature() * h.entropy_change;
    PointResult p;
    for (double x : {g, h.work, h.q_bath, h.q_system, t_ds, h.penalty.res_b, h.penalty.mutual, h.penalty.irr,
                     h.dissipation, h.q_system_formula, h.ledger.first_law_residual()})
        p.add(x);
    p.check("clausius", h.q_system, t_ds + 1e-9);
    p.check("heat_formula", std::abs(h.q_system - h.q_system_formula), 1e-8);
    p.check("first_law", std::abs(h.ledger.first_law_residual()), 1e-9);
    return p;
}

inline std::pair<TwoBathSetup, CycleReport> engine_cycle(const ExperimentConfig& cfg, double g) {
    const CycleBuild b = build_optimal_cycle(qubit_engine(g, cfg.beta_hot, cfg.beta_cold), solver_options(cfg));
    CycleReport r = run_cycle(b.setup, isothermal_steps(cfg));
    return {b.setup, std::move(r)};
}

inline PointResult carnot_point(const ExperimentConfig& cfg, double g) {
    const auto [setup, r] = engine_cycle(cfg, g);
    PointResult p;
    for (double x : {g, r.eta, r.eta_carnot, r.w_net, r.q_hot, r.q_cold, r.x_hot, r.x_cold, r.dissipation,
                     r.first_law_residual})
        p.add(x);
    p.add_flag(r.is_engine);
    if (r.is_engine) {
        p.check("carnot_bound", r.eta, r.eta_carnot + 1e-9);
        p.check("loss_fractions",
                std::abs(efficiency_from_fractions(r, setup.beta_h, setup.beta_c) - r.eta), 1e-8);
    }
    p.check("first_law", std::abs(r.first_law_residual), 1e-8);
    return p;
}

inline PointResult power_point(const ExperimentConfig& cfg, double g) {
    const auto [setup, r] = engine_cycle(cfg, g);
    const PowerBoundReport b = power_bound(setup, r);
    PointResult p;
    for (double x : {g, r.eta, r.w_net, b.power, b.bound_tight, b.bound_loose, b.bound_carnot, b.tau_hot, b.tau_cold})
        p.add(x);
    p.add_flag(r.is_engine);
    p.check("tight_below_loose", b.bound_tight, b.bound_loose * (1.0 + 1e-12));
    p.check("power_below_bound", b.power, b.bound_tight * (1.0 + 1e-12));
    return p;
}

inline PointResult cl_fig1_point(const ExperimentConfig& cfg, double g) {
    const OscillatorParams unit{cfg.mass, cfg.omega};
    const OhmicBathSpec bath{cfg.n_osc, cfg.omega_max};
    const auto sched = weak_optimal_schedule(unit, cfg.beta, cfg.beta_s, cfg.n_steps);
    const double w_weak = oscillator_weak_work(unit, cfg.beta_s, cfg.beta);
    const auto gibbs = cl_work_protocol(bath, g, sched, GibbsReplacement{}, cfg.beta, cfg.beta_s, cfg.lamb);
    const double contact =
        g > 0.0 ? (cfg.n_steps + 1) * cfg.t_wait_factor / (g * g) : std::numeric_limits<double>::infinity();
    PointResult p;
    for (double x : {g, gibbs.work, w_weak, gibbs.ledger.first_law_residual()}) p.add(x);
    p.check("second_law", gibbs.work, w_weak + 1e-9);
    p.check("first_law_gibbs", std::abs(gibbs.ledger.first_law_residual()), 1e-9);
    if (cfg.exact_dynamics) {
        const auto exact = cl_work_protocol(bath, g, sched, ExactUnitary{cfg.t_wait_factor / (g * g)}, cfg.beta,
                                            cfg.beta_s, cfg.lamb);
        p.add(exact.work);
        p.add(std::abs(exact.work - gibbs.work) / std::abs(gibbs.work));
        p.add(exact.ledger.first_law_residual());
        p.add(exact.elapsed);
        p.add(gibbs.work / contact);
        p.add(exact.work / exact.elapsed);
        p.check("first_law_exact", std::abs(exact.ledger.first_law_residual()), 1e-9);
    } else {
        p.add(contact);
        p.add(std::isinf(contact) ? 0.0 : gibbs.work / contact);
    }
    return p;
}

inline PointResult cl_equilibration_point(const ExperimentConfig& cfg, double g) {
    const OscillatorParams unit{cfg.mass, cfg.omega};
    const OhmicBathSpec bath{cfg.n_osc, cfg.omega_max};
    const auto h = build_cl_hamiltonian(unit, bath, g, cfg.lamb);
    const auto st = cl_product_state(unit, cfg.beta_s, bath, cfg.beta);
    const RMatrix q = oscillator_energy_form(unit, h.n_modes());
    const TimeSignal sig = equilibration_time(h, st, q);
    const double window = std::min(cfg.window_max, cfg.window_factor / (g * g));
    const BandEntry band = band_entry_time(observable_series(h, st, q, window, cfg.dt));
    PointResult p;
    for (double x : {g, 1.0 / (g * g), sig.tau_estimate, sig.dispersion, sig.mean_square_deviation(), sig.equilibrium,
                     band.band_center, band.entered ? band.entry_time : std::nan(""), window})
        p.add(x);
    p.add_flag(band.entered);
    return p;
}

inline std::vector<std::string> columns(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
    case Experiment::WorkSweep:
        return {"g", "W", "W_weak", "dF_irr", "dF_res", "dissipation", "T_mutual", "bound_2gV", "first_law_residual",
                "converged"};
    case Experiment::HeatSweep:
        return {"g", "W", "Q_bath", "Q_system", "T_dS", "res_b", "T_mutual", "irr", "dissipation", "Q_system_formula",
                "first_law_residual"};
    case Experiment::CarnotSweep:
        return {"g", "eta", "eta_carnot", "W", "Q_hot", "Q_cold", "x_hot", "x_cold", "dissipation",
                "first_law_residual", "is_engine"};
    case Experiment::PowerSweep:
        return {"g", "eta", "W", "P", "bound_tight", "bound_loose", "bound_carnot", "tau_hot", "tau_cold",
                "is_engine"};
    case Experiment::ClFig1:
        if (cfg.exact_dynamics)
            return {"g", "W_gibbs", "W_weak", "first_law_gibbs", "W_exact", "rel_diff", "first_law_exact",
                    "contact_time", "P_gibbs", "P_exact"};
        return {"g", "W_gibbs", "W_weak", "first_law_gibbs", "contact_time", "P_gibbs"};
    case Experiment::ClEquilibration:
        return {"g", "inv_g2", "tau", "dispersion", "msd", "equilibrium", "band_center", "band_entry", "window",
                "entered"};
    case Experiment::Invariants:
        return {"module", "check", "cases", "failures", "worst_excess", "status", "error"};
    }
    return {};
}

inline PointResult sweep_point(const ExperimentConfig& cfg, double g) {
    switch (cfg.experiment) {
    case Experiment::WorkSweep: return work_point(cfg, g);
    case Experiment::HeatSweep: return heat_point(cfg, g);
    case Experiment::CarnotSweep: return carnot_point(cfg, g);
    case Experiment::PowerSweep: return power_point(cfg, g);
    case Experiment::ClFig1: return cl_fig1_point(cfg, g);
    case Experiment::ClEquilibration: return cl_equilibration_point(cfg, g);
    case Experiment::Invariants: break;
    }
    throw std::logic_error("sweep_point: not a sweep experiment");
}

} // namespace experiment_detail

inline SweepResult run_invariants(const ExperimentConfig& cfg, unsigned threads) {
    const auto defs = invariant_definitions();
    InvariantSummary summary;
    summary.checks = parallel_map(defs.size(), threads,
                                  [&](std::size_t i) { return run_invariant(defs[i], invariant_seed(cfg.seed, i)); });
    SweepResult out;
    out.table.columns = experiment_detail::columns(cfg);
    for (std::size_t i = 0; i < summary.checks.size(); ++i) {
        const auto& c = summary.checks[i];
        out.table.rows.push_back({c.module, c.name, static_cast<std::int64_t>(c.cases),
                                  static_cast<std::int64_t>(c.failures), c.worst_excess,
                                  std::string(c.passed() ? "pass" : "fail"), c.error});
        ++out.hard_checks;
        if (!c.passed()) out.violations.push_back({i, c.module + "/" + c.name, c.worst_excess});
    }
    out.invariants = std::move(summary);
    return out;
}

/// Runs the configured experiment; sweep points are spread over `threads` workers and
/// collected in grid order.
inline SweepResult run_experiment(const ExperimentConfig& cfg, unsigned threads) {
    if (cfg.experiment == Experiment::Invariants) return run_invariants(cfg, threads);
    const auto points = parallel_map(cfg.g_grid.size(), threads, [&](std::size_t i) {
        return experiment_detail::sweep_point(cfg, cfg.g_grid[i]);
    });
    SweepResult out;
    out.table.columns = experiment_detail::columns(cfg);
    for (std::size_t i = 0; i < points.size(); ++i) {
        out.table.rows.push_back(points[i].row);
        for (const auto& [name, excess] : points[i].checks) {
            ++out.hard_checks;
            if (excess > 0.0) out.violations.push_back({i, name, excess});
        }
    }
    return out;
}

} // namespace sct::bench
