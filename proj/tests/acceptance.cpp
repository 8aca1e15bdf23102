// acceptance.cpp: end-to-end acceptance run, one PASS/FAIL line per criterion

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sct/carnot.hpp"
#include "sct/coupling_optimizer.hpp"
#include "sct/fit.hpp"
#include "sct/gaussian_cl.hpp"
#include "sct/gibbs_thermo.hpp"
#include "sct/invariants.hpp"
#include "sct/protocol.hpp"
#include "sct/testbed.hpp"

using namespace sct;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok) { pass = pass && ok; }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const ThermalContext kBeta1(1.0);

HermitianOperator excited_state() {
    RealVector p(2);
    p << 0.3, 0.7;
    return HermitianOperator::diagonal(p);
}

// 1. ledger work against the closed-form decomposition
void work_identity(Outcome& o) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> ug(0.05, 1.0);
    const std::array<std::size_t, 4> steps{kQuasistatic, 4, 16, 64};
    double worst = 0.0, worst_first_law = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto rho_s = random_density(2, rng);
        const auto sys = qubit_testbed(ug(rng));
        const std::size_t n = steps[static_cast<std::size_t>(i) % steps.size()];
        const auto h1 = solve_irr(sys, rho_s, kBeta1).h_s_opt;
        const auto hn = solve_res(sys, kBeta1).h_s_opt;
        const auto run = optimal_work_protocol(sys, rho_s, h1, hn, n, kBeta1);
        const auto& r = run.report;
        const double predicted = r.w_weak - r.delta_f_irr - r.delta_f_res - r.dissipation;
        worst = std::max(worst, std::abs(run.ledger.total() - predicted));
        worst_first_law = std::max(worst_first_law, std::abs(run.ledger.first_law_residual()));
    }
    o.require(worst <= 1e-8);
    o.require(worst_first_law <= 1e-8);
    o.detail << "20 instances (g in [0.05, 1]), max |W - decomposition| = " << worst << ", max first-law residual = " << worst_first_law;
}

// 2. g^2 scaling of both minimal penalties and their perturbative coefficients
void quadratic_corrections(Outcome& o) {
    std::mt19937_64 rng(202);
    std::vector<HermitianOperator> states{excited_state(), random_density(2, rng), random_density(2, rng)};
    const std::vector<double> gs{1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1};
    double worst_slope = 0.0, worst_rel = 0.0;
    for (const auto& rho_s : states) {
        std::vector<double> irr, res;
        for (double g : gs) {
            irr.push_back(solve_irr(qubit_testbed(g), rho_s, kBeta1).objective);
            res.push_back(solve_res(qubit_testbed(g), kBeta1).objective);
        }
        const auto pert = perturbative_endpoints(qubit_testbed(1.0), rho_s, kBeta1);
        const double s_irr = loglog_fit(gs, irr).slope;
        const double s_res = loglog_fit(gs, res).slope;
        const double c_irr = power_series_fit(gs, irr, {2, 3})[0];
        const double c_res = power_series_fit(gs, res, {2, 3})[0];
        worst_slope = std::max({worst_slope, std::abs(s_irr - 2.0), std::abs(s_res - 2.0)});
        worst_rel = std::max({worst_rel, std::abs(c_irr - pert.coefficient_irr) / pert.coefficient_irr,
                              std::abs(c_res - pert.coefficient_res) / pert.coefficient_res});
    }
    o.require(worst_slope <= 0.1);
    o.require(worst_rel <= 0.05);
    o.detail << "3 states, max |slope - 2| = " << worst_slope << ", max coefficient rel. error = " << worst_rel;
}

// 3. cubic vanishing of the relative-entropy asymmetry between nearby Gibbs states
void asymmetry_scaling(Outcome& o) {
    std::mt19937_64 rng(303);
    const std::vector<double> ts{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    double min_slope = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10; ++i) {
        const std::size_t d = 2 + static_cast<std::size_t>(i % 4);
        const auto h = random_hermitian(d, rng);
        const auto dir = random_hermitian(d, rng);
        const ThermalContext ctx(0.5 + 0.25 * (i % 5));
        std::vector<double> gap;
        for (double t : ts) gap.push_back(lemma1_gap(h, dir, t, ctx));
        min_slope = std::min(min_slope, loglog_fit(ts, gap).slope);
    }
    o.require(min_slope >= 2.9);
    o.detail << "10 families (dim 2-5), min exponent = " << min_slope;
}

HermitianOperator qubit(const std::array<double, 3>& c) {
    return pauli::x() * c[0] + pauli::y() * c[1] + pauli::z() * c[2];
}

std::array<double, 3> bloch(const HermitianOperator& h) {
    return {0.5 * h.trace_product(pauli::x()), 0.5 * h.trace_product(pauli::y()), 0.5 * h.trace_product(pauli::z())};
}

// 61^3 grid around `center`, re-centred on the best node with a shrinking window.
double grid_minimum(const std::function<double(const HermitianOperator&)>& f, std::array<double, 3> center,
                    double half_width, int levels) {
    const int n = 61;
    double best = std::numeric_limits<double>::infinity();
    for (int level = 0; level < levels; ++level) {
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

// 4. optimizer against brute-force grids
void optimizer_vs_grid(Outcome& o) {
    std::mt19937_64 rng(404);
    const std::array<double, 5> gs{0.1, 0.3, 0.5, 0.8, 1.2};
    double worst = 0.0, worst_above = -std::numeric_limits<double>::infinity();
    for (double g : gs) {
        const auto sys = qubit_testbed(g);
        const auto rho_s = random_density(2, rng, 0.2);
        const auto irr = solve_irr(sys, rho_s, kBeta1);
        const auto res = solve_res(sys, kBeta1);
        const HermitianOperator rho0 = product_initial_state(sys, rho_s, kBeta1);
        const HermitianOperator omega0 = gibbs_state(sys.free_hamiltonian(), kBeta1);
        const double grid_irr = grid_minimum(
            [&](const HermitianOperator& x) { return relative_entropy(rho0, gibbs_state(sys.total(x), kBeta1)); },
            bloch(traceless(matrix_function(rho_s, MatrixFunction::Log) * -1.0)), 1.5, 3);
        const double grid_res = grid_minimum(
            [&](const HermitianOperator& z) { return relative_entropy(gibbs_state(sys.total(z), kBeta1), omega0); },
            bloch(sys.h_s()), 1.5, 3);
        worst = std::max({worst, std::abs(irr.objective - grid_irr), std::abs(res.objective - grid_res)});
        worst_above = std::max({worst_above, irr.objective - grid_irr, res.objective - grid_res});
    }
    o.require(worst <= 1e-5);
    o.detail << "5 instances, max |solver - grid| = " << worst << ", max (solver - grid) = " << worst_above;
}

// 5. 2||gV|| bounds over coupling sweeps
void upper_bounds(Outcome& o) {
    std::mt19937_64 rng(505);
    std::vector<HermitianOperator> states{excited_state(), random_density(2, rng), random_density(2, rng)};
    int points = 0, violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& rho_s : states)
        for (int k = 0; k <= 30; ++k) {
            const auto sys = qubit_testbed(0.1 * k);
            for (const ThermalContext& ctx : {ThermalContext(0.3), ThermalContext(1.0), ThermalContext(3.0)}) {
                const auto b = bound_check(sys, solve_irr(sys, rho_s, ctx), solve_res(sys, ctx), ctx);
                ++points;
                violations += b.violations;
                worst_margin = std::min({worst_margin, b.irr_margin, b.res_margin, b.mutual_margin});
            }
        }
    for (int i = 0; i < 20; ++i) {
        const auto sys = invariant_detail::random_system(2, 3, invariant_detail::uniform(rng, 0.0, 2.0), rng);
        const auto rho_s = random_density(2, rng);
        const auto b = bound_check(sys, solve_irr(sys, rho_s, kBeta1), solve_res(sys, kBeta1), kBeta1);
        ++points;
        violations += b.violations;
        worst_margin = std::min({worst_margin, b.irr_margin, b.res_margin, b.mutual_margin});
    }
    o.require(violations == 0);
    o.detail << points << " sweep points, " << violations << " violations, smallest margin = " << worst_margin;
}

TwoBathSetup optimal_engine(double g, double beta_h = 0.5) {
    return build_optimal_cycle(qubit_engine(g, beta_h)).setup;
}

// 6. Carnot efficiency gap
void carnot_correction(Outcome& o) {
    const std::vector<double> gs{0.02, 0.04, 0.06, 0.08, 0.12, 0.16, 0.2};
    std::vector<double> gap;
    double worst_first_law = 0.0, max_excess = -std::numeric_limits<double>::infinity();
    int cycles = 0;
    for (double g : gs) {
        const auto setup = optimal_engine(g);
        for (std::size_t n : {kQuasistatic, std::size_t{8}, std::size_t{64}}) {
            const auto r = run_cycle(setup, n);
            ++cycles;
            worst_first_law = std::max(worst_first_law, std::abs(r.first_law_residual));
            if (r.is_engine) max_excess = std::max(max_excess, r.eta - r.eta_carnot);
            if (n == kQuasistatic) {
                o.require(r.is_engine);
                gap.push_back(r.eta_carnot - r.eta);
            }
        }
    }
    const double slope = loglog_fit(gs, gap).slope;
    o.require(std::abs(slope - 2.0) <= 0.15);
    o.require(max_excess <= 0.0);
    o.require(worst_first_law <= 1e-8);
    o.detail << "slope = " << slope << ", max (eta - eta_C) = " << max_excess << " over " << cycles
             << " cycles, max first-law residual = " << worst_first_law;
}

// 7. Caldeira-Leggett work curve, Gibbs replacement against unitary waiting
void cl_fig1(Outcome& o) {
    const OscillatorParams unit{1.0, 1.0};
    const OhmicBathSpec bath{165, 1.2};
    const double beta = 3.5, beta_s = 1.0, wait = 10.0;
    const auto sched = weak_optimal_schedule(unit, beta, beta_s, 200);
    std::vector<double> gs, w_gibbs, w_exact, power;
    double worst_rel = 0.0;
    for (int k = 1; k <= 10; ++k) {
        const double g = 0.1 * k;
        const auto gibbs = cl_work_protocol(bath, g, sched, GibbsReplacement{}, beta, beta_s);
        const auto exact = cl_work_protocol(bath, g, sched, ExactUnitary{wait / (g * g)}, beta, beta_s);
        gs.push_back(g);
        w_gibbs.push_back(gibbs.work);
        w_exact.push_back(exact.work);
        power.push_back(exact.work / exact.elapsed);
        worst_rel = std::max(worst_rel, std::abs(exact.work - gibbs.work) / std::abs(gibbs.work));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < gs.size(); ++i) monotone = monotone && w_gibbs[i] < w_gibbs[i - 1] && w_exact[i] < w_exact[i - 1];
    const auto peak = static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());
    const bool interior = peak > 0 && peak + 1 < power.size();
    o.require(monotone);
    o.require(worst_rel <= 0.05);
    o.require(interior);
    o.detail << "monotone = " << (monotone ? "yes" : "no") << ", max rel. diff = " << worst_rel
             << ", power peak at g = " << gs[peak] << (interior ? " (interior)" : " (endpoint)");
}

// 8. equilibration time scaling
void cl_equilibration(Outcome& o) {
    const OscillatorParams unit{1.0, 1.0};
    const OhmicBathSpec bath{300, 2.1};
    const double beta = 3.5, beta_s = 1.0;
    std::vector<double> gs, tau, inv_g2, entry;
    int missed = 0;
    for (int k = 2; k <= 10; ++k) {
        const double g = 0.1 * k;
        const auto h = build_cl_hamiltonian(unit, bath, g);
        const auto st = cl_product_state(unit, beta_s, bath, beta);
        const RMatrix q = oscillator_energy_form(unit, h.n_modes());
        gs.push_back(g);
        tau.push_back(equilibration_time(h, st, q).tau_estimate);
        const double window = std::min(800.0, 60.0 / (g * g));
        const BandEntry band = band_entry_time(observable_series(h, st, q, window, 0.2));
        if (band.entered) {
            inv_g2.push_back(1.0 / (g * g));
            entry.push_back(band.entry_time);
        } else {
            ++missed;
        }
    }
    const double r2 = inv_g2.size() >= 2 ? linear_fit(inv_g2, entry).r_squared : 0.0;
    const double slope = loglog_fit(gs, tau).slope;
    o.require(missed == 0);
    o.require(r2 >= 0.95);
    o.require(std::abs(slope + 2.0) <= 0.3);
    o.detail << "band entered at " << inv_g2.size() << "/" << gs.size() << " couplings, R^2 = " << r2
             << ", tau slope = " << slope;
}

// 9. Gaussian evolution invariants
void gaussian_invariants(Outcome& o) {
    std::mt19937_64 rng(909);
    double nu = 0.0, energy = 0.0, uncertainty = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        const auto modes = static_cast<Eigen::Index>(invariant_detail::random_dim(rng, 1, 8));
        const auto inst = random_gaussian_instance(modes, rng);
        const auto c = check_evolution(inst, invariant_detail::uniform(rng, 0.0, 50.0));
        nu = std::max(nu, c.nu_error);
        energy = std::max(energy, c.energy_error);
        uncertainty = std::min(uncertainty, c.uncertainty_min);
    }
    o.require(nu <= 1e-8);
    o.require(energy <= 1e-8);
    o.require(uncertainty >= -1e-8);
    o.detail << "100 evolutions, max nu drift = " << nu << ", max energy drift = " << energy
             << ", min uncertainty eigenvalue = " << uncertainty;
}

// 10. power bound ordering
void power_bounds(Outcome& o) {
    int instances = 0, order_violations = 0, power_violations = 0;
    for (double beta_h : {0.3, 0.5, 0.7})
        for (double g : {0.025, 0.05, 0.1, 0.2, 0.3, 0.5}) {
            const auto setup = optimal_engine(g, beta_h);
            for (std::size_t n : {kQuasistatic, std::size_t{16}, std::size_t{64}}) {
                const auto r = run_cycle(setup, n);
                const auto p = power_bound(setup, r);
                ++instances;
                if (p.bound_tight > p.bound_loose * (1.0 + 1e-12)) ++order_violations;
                if (p.power > p.bound_tight * (1.0 + 1e-12)) ++power_violations;
            }
        }
    o.require(order_violations == 0 && power_violations == 0);
    o.detail << instances << " instances, tight > loose: " << order_violations << ", P > tight: " << power_violations;
}

struct Criterion {
    const char* name;
    void (*run)(Outcome&);
    double time_limit_s;
};

} // namespace

int main() {
    const double none = std::numeric_limits<double>::infinity();
    const std::array<Criterion, 10> criteria{{
        {"work decomposition identity", work_identity, 60.0},
        {"quadratic corrections", quadratic_corrections, 120.0},
        {"relative-entropy asymmetry", asymmetry_scaling, 60.0},
        {"optimizer vs grid oracle", optimizer_vs_grid, 600.0},
        {"upper bounds", upper_bounds, none},
        {"Carnot correction", carnot_correction, none},
        {"Caldeira-Leggett work curve", cl_fig1, 1800.0},
        {"equilibration scaling", cl_equilibration, none},
        {"Gaussian invariants", gaussian_invariants, none},
        {"power bound", power_bounds, none},
    }};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        Outcome o;
        const auto t0 = Clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        const double elapsed = seconds_since(t0);
        if (elapsed > c.time_limit_s) {
            o.pass = false;
            o.detail << ", over time limit " << c.time_limit_s << " s";
        }
        if (!o.pass) ++failed;
        std::printf("%s [%zu] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.str().c_str(),
                    elapsed);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
