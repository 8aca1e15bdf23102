// protocol.hpp: couple / quench / equilibrate protocols and their work ledger
//
// Sign convention: work W > 0 means work extracted from SB. Heat reported by
// the `q_bath` fields is the energy absorbed by the bath (positive when
// dissipated); `q_system = -q_bath` is the heat absorbed by S.

#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sct/gibbs_thermo.hpp"
#include "sct/operator_core.hpp"

namespace sct {

class ProtocolError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

struct CoupleOn {};
struct CoupleOff {};
struct Quench {
    HermitianOperator new_h_s;
};
struct Equilibrate {};

using ProtocolStep = std::variant<CoupleOn, CoupleOff, Quench, Equilibrate>;

enum class StepKind { CoupleOn, CoupleOff, Quench, Equilibrate };

inline const char* to_string(StepKind k) {
    switch (k) {
    case StepKind::CoupleOn: return "couple_on";
    case StepKind::CoupleOff: return "couple_off";
    case StepKind::Quench: return "quench";
    case StepKind::Equilibrate: return "equilibrate";
    }
    return "?";
}

inline StepKind kind_of(const ProtocolStep& step) {
    return std::visit(
        [](const auto& s) -> StepKind {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CoupleOn>) return StepKind::CoupleOn;
            else if constexpr (std::is_same_v<T, CoupleOff>) return StepKind::CoupleOff;
            else if constexpr (std::is_same_v<T, Quench>) return StepKind::Quench;
            else return StepKind::Equilibrate;
        },
        step);
}

/// Which part of a single-contact protocol an entry belongs to: preparation
/// (quenches and coupling, W1), the isothermal contact (W2) or the closing
/// decoupling and quenches (W3).
enum class Phase { Preparation, Isothermal, Closing };

struct LedgerEntry {
    std::size_t step_index = 0;
    StepKind kind = StepKind::Quench;
    Phase phase = Phase::Preparation;
    double work = 0.0;
    /// tr(rho_after H_after) - tr(rho_before H_before)
    double energy_change = 0.0;
};

struct WorkLedger {
    std::vector<LedgerEntry> entries;

    double total() const {
        double w = 0.0;
        for (const auto& e : entries) w += e.work;
        return w;
    }
    double total(Phase p) const {
        double w = 0.0;
        for (const auto& e : entries)
            if (e.phase == p) w += e.work;
        return w;
    }
    double w1() const { return total(Phase::Preparation); }
    double w2() const { return total(Phase::Isothermal); }
    double w3() const { return total(Phase::Closing); }

    /// Energy handed to SB by the equilibration steps (the bath's heat input).
    double equilibration_energy() const {
        double q = 0.0;
        for (const auto& e : entries)
            if (e.kind == StepKind::Equilibrate) q += e.energy_change;
        return q;
    }
    double total_energy_change() const {
        double de = 0.0;
        for (const auto& e : entries) de += e.energy_change;
        return de;
    }
    /// W + Delta E_SB - (energy from equilibrations); zero when the bookkeeping closes.
    double first_law_residual() const {
        return total() + total_energy_change() - equilibration_energy();
    }

    void append(const WorkLedger& other) {
        entries.insert(entries.end(), other.entries.begin(), other.entries.end());
    }
};

/// State of SB during a protocol: rho lives on the full space, `sys.h_s()` is the
/// current system Hamiltonian.
struct ProtocolState {
    CompositeSystem sys;
    HermitianOperator rho;
    bool coupled = false;
    std::size_t step_index = 0;

    HermitianOperator hamiltonian() const { return coupled ? sys.total() : sys.free_hamiltonian(); }
    double energy() const { return rho.trace_product(hamiltonian()); }
    HermitianOperator rho_s() const { return partial_trace(rho, Side::S, sys); }
    HermitianOperator rho_b() const { return partial_trace(rho, Side::B, sys); }
};

struct StepOutcome {
    ProtocolState state;
    double work = 0.0;
};

/// Applies one elementary operation.
///   CoupleOn:    work -tr(rho g V), state unchanged
///   CoupleOff:   work +tr(rho g V)
///   Quench:      work tr(rho_S (H_S_old - H_S_new)), h_s replaced
///   Equilibrate: rho <- omega_beta(H) of the full current Hamiltonian, no work
inline StepOutcome apply_step(const ProtocolState& state, const ProtocolStep& step,
                              const ThermalContext& ctx) {
    StepOutcome out{state, 0.0};
    out.state.step_index = state.step_index + 1;
    switch (kind_of(step)) {
    case StepKind::CoupleOn:
        if (state.coupled) throw ProtocolError("CoupleOn while already coupled");
        out.state.coupled = true;
        out.work = -state.rho.trace_product(state.sys.interaction());
        break;
    case StepKind::CoupleOff:
        if (!state.coupled) throw ProtocolError("CoupleOff while decoupled");
        out.state.coupled = false;
        out.work = state.rho.trace_product(state.sys.interaction());
        break;
    case StepKind::Quench: {
        const auto& h_new = std::get<Quench>(step).new_h_s;
        if (h_new.dim() != state.sys.dim_s()) throw DimensionError("Quench: wrong system dimension");
        out.work = state.rho_s().trace_product(state.sys.h_s() - h_new);
        out.state.sys = state.sys.with_h_s(h_new);
        break;
    }
    case StepKind::Equilibrate:
        if (!state.coupled) throw ProtocolError("Equilibrate requires the interaction to be on");
        out.state.rho = gibbs_state(state.hamiltonian(), ctx);
        break;
    }
    return out;
}

/// Runs steps while recording a ledger.
class LedgerRecorder {
  public:
    LedgerRecorder(ProtocolState state, const ThermalContext& ctx) : state_(std::move(state)), ctx_(ctx) {}

    double apply(const ProtocolStep& step, Phase phase) {
        const double e_before = state_.energy();
        StepOutcome out = apply_step(state_, step, ctx_);
        const double e_after = out.state.energy();
        ledger_.entries.push_back({out.state.step_index, kind_of(step), phase, out.work, e_after - e_before});
        state_ = std::move(out.state);
        return out.work;
    }

    const ProtocolState& state() const { return state_; }
    const WorkLedger& ledger() const { return ledger_; }
    WorkLedger& ledger() { return ledger_; }
    void reset_state(ProtocolState s) { state_ = std::move(s); }

  private:
    ProtocolState state_;
    ThermalContext ctx_;
    WorkLedger ledger_;
};

/// H_S along the isothermal path at fraction s in [0, 1].
using HamiltonianPath =
    std::function<HermitianOperator(const HermitianOperator& from, const HermitianOperator& to, double s)>;

inline HermitianOperator linear_path(const HermitianOperator& from, const HermitianOperator& to, double s) {
    return from + s * (to - from);
}

struct IsothermalResult {
    ProtocolState state;
    double work = 0.0;
    /// T * sum_i S(omega^(i) || omega^(i+1)), energy units
    double dissipation = 0.0;
    /// F(omega_start, H_start) - F(omega_end, H_end)
    double free_energy_drop = 0.0;
    WorkLedger ledger;
};

/// Isothermal contact: equilibrates at the current Hamiltonian, then performs
/// n_steps (Quench, Equilibrate) pairs along `path` to target_h_s.
/// The work satisfies  work = free_energy_drop - dissipation  exactly (telescoping).
inline IsothermalResult isothermal_process(const ProtocolState& state, const HermitianOperator& target_h_s,
                                           std::size_t n_steps, const ThermalContext& ctx,
                                           const HamiltonianPath& path = linear_path) {
    if (!state.coupled) throw ProtocolError("isothermal_process requires the interaction to be on");
    if (n_steps < 1) throw ProtocolError("isothermal_process: n_steps must be >= 1");
    if (target_h_s.dim() != state.sys.dim_s()) throw DimensionError("isothermal_process: target dimension");

    LedgerRecorder rec(state, ctx);
    rec.apply(Equilibrate{}, Phase::Isothermal);
    const HermitianOperator start = state.sys.h_s();
    const double f_start = free_energy(rec.state().rho, rec.state().hamiltonian(), ctx);

    IsothermalResult res{rec.state(), 0.0, 0.0, 0.0, {}};
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n_steps);
        const HermitianOperator omega_prev = rec.state().rho;
        res.work += rec.apply(Quench{i == n_steps ? target_h_s : path(start, target_h_s, s)}, Phase::Isothermal);
        rec.apply(Equilibrate{}, Phase::Isothermal);
        res.dissipation += ctx.temperature() * relative_entropy(omega_prev, rec.state().rho);
    }
    res.state = rec.state();
    res.free_energy_drop = f_start - free_energy(res.state.rho, res.state.hamiltonian(), ctx);
    res.ledger = rec.ledger();
    return res;
}

/// The n_steps -> infinity limit: work = F(omega_start, H_start) - F(omega_end, H_end),
/// no dissipation. The ledger holds a single Quench entry carrying the whole work
/// and a closing Equilibrate entry.
inline IsothermalResult quasistatic_process(const ProtocolState& state, const HermitianOperator& target_h_s,
                                            const ThermalContext& ctx) {
    if (!state.coupled) throw ProtocolError("quasistatic_process requires the interaction to be on");
    LedgerRecorder rec(state, ctx);
    rec.apply(Equilibrate{}, Phase::Isothermal);
    const double f_start = free_energy(rec.state().rho, rec.state().hamiltonian(), ctx);
    const double e_start = rec.state().energy();

    ProtocolState end = rec.state();
    end.sys = end.sys.with_h_s(target_h_s);
    end.rho = gibbs_state(end.hamiltonian(), ctx);
    end.step_index += 1;
    const double f_end = free_energy(end.rho, end.hamiltonian(), ctx);

    IsothermalResult res{end, f_start - f_end, 0.0, f_start - f_end, rec.ledger()};
    // Split the reversible limit into its work part and its heat part so that the
    // ledger still closes: Delta E = -W + Q.
    const double de = end.energy() - e_start;
    res.ledger.entries.push_back({end.step_index, StepKind::Quench, Phase::Isothermal, res.work, -res.work});
    res.ledger.entries.push_back({end.step_index, StepKind::Equilibrate, Phase::Isothermal, 0.0, de + res.work});
    return res;
}

/// n_steps == 0 selects the quasistatic limit in the protocol drivers below.
inline constexpr std::size_t kQuasistatic = 0;

inline IsothermalResult run_isothermal(const ProtocolState& state, const HermitianOperator& target,
                                       std::size_t n_steps, const ThermalContext& ctx) {
    return n_steps == kQuasistatic ? quasistatic_process(state, target, ctx)
                                   : isothermal_process(state, target, n_steps, ctx);
}

struct CorrectionReport {
    double w_weak = 0.0;
    double delta_f_irr = 0.0;
    double delta_f_res = 0.0;
    /// w_weak - delta_f_irr - delta_f_res (the n -> infinity work)
    double w_total = 0.0;
    /// Finite-n isothermal loss; the ledger total is w_total - dissipation.
    double dissipation = 0.0;
};

struct WorkProtocolRun {
    WorkLedger ledger;
    CorrectionReport report;
    ProtocolState final_state;
};

/// Smallest eigenvalue below which rho_S counts as rank deficient.
inline constexpr double kFullRankFloor = 1e-12;

inline void require_full_rank(const HermitianOperator& rho_s, const char* where) {
    if (rho_s.spectrum().values.minCoeff() <= kFullRankFloor) {
        throw DomainError(std::string(where) + ": rho_S must be full rank");
    }
}

/// rho_S (x) omega_beta(H_B)
inline HermitianOperator product_initial_state(const CompositeSystem& sys, const HermitianOperator& rho_s,
                                               const ThermalContext& ctx) {
    if (rho_s.dim() != sys.dim_s()) throw DimensionError("rho_S dimension mismatch");
    return kron(rho_s, gibbs_state(sys.h_b(), ctx));
}

/// W_weak = F(rho_S, H_S) - F(omega_beta(H_S), H_S)
inline double weak_coupling_work(const HermitianOperator& rho_s, const HermitianOperator& h_s,
                                 const ThermalContext& ctx) {
    return ctx.temperature() * relative_entropy(rho_s, gibbs_state(h_s, ctx));
}

/// Single-contact cyclic protocol starting from rho_S (x) omega_beta(H_B) with the
/// non-interacting Hamiltonian sys.h_s() + H_B:
///   (i) quench to h1_s, (ii) couple, (iii) isothermal to hN_s, (iv) decouple and quench back.
/// n_steps == kQuasistatic runs the reversible limit of (iii).
inline WorkProtocolRun optimal_work_protocol(const CompositeSystem& sys, const HermitianOperator& rho_s,
                                             const HermitianOperator& h1_s, const HermitianOperator& hN_s,
                                             std::size_t n_steps, const ThermalContext& ctx) {
    require_full_rank(rho_s, "optimal_work_protocol");
    const HermitianOperator h_s = sys.h_s();
    const HermitianOperator rho0 = product_initial_state(sys, rho_s, ctx);

    LedgerRecorder rec(ProtocolState{sys, rho0, false, 0}, ctx);
    rec.apply(Quench{h1_s}, Phase::Preparation);
    rec.apply(CoupleOn{}, Phase::Preparation);
    IsothermalResult iso = run_isothermal(rec.state(), hN_s, n_steps, ctx);
    rec.ledger().append(iso.ledger);
    rec.reset_state(iso.state);
    rec.apply(CoupleOff{}, Phase::Closing);
    rec.apply(Quench{h_s}, Phase::Closing);

    WorkProtocolRun run{rec.ledger(), {}, rec.state()};
    const double temp = ctx.temperature();
    const HermitianOperator h1_full = sys.total(h1_s);
    const HermitianOperator hn_full = sys.total(hN_s);
    const HermitianOperator h0_full = sys.free_hamiltonian();
    CorrectionReport& r = run.report;
    r.w_weak = weak_coupling_work(rho_s, h_s, ctx);
    r.delta_f_irr = temp * relative_entropy(rho0, gibbs_state(h1_full, ctx));
    r.delta_f_res = temp * relative_entropy(gibbs_state(hn_full, ctx), gibbs_state(h0_full, ctx));
    r.w_total = r.w_weak - r.delta_f_irr - r.delta_f_res;
    r.dissipation = iso.dissipation;
    return run;
}

struct PenaltyTerms {
    /// T S(rho_B^(N) || omega_beta(H_B))
    double res_b = 0.0;
    /// T I(omega^(N); S:B)
    double mutual = 0.0;
    /// T S(rho^(0) || omega^(1))
    double irr = 0.0;
};

/// One contact with a bath: couple at h_start, isothermal to h_end, decouple.
/// S enters in rho_s, uncorrelated with a thermal bath.
struct StrokeReport {
    double work = 0.0;
    /// energy absorbed by the bath: -Delta E_S - W
    double q_bath = 0.0;
    double q_system = 0.0;
    /// S(rho_S out) - S(rho_S in)
    double entropy_change = 0.0;
    PenaltyTerms penalty;
    double dissipation = 0.0;
    /// -T Delta S + res_b + mutual + irr + dissipation; equals q_bath
    double q_bath_formula = 0.0;
    HermitianOperator rho_s_out;
    WorkLedger ledger;
};

inline StrokeReport contact_stroke(const CompositeSystem& sys_at_start, const HermitianOperator& rho_s,
                                   const HermitianOperator& h_end, std::size_t n_steps,
                                   const ThermalContext& ctx) {
    const double temp = ctx.temperature();
    const HermitianOperator rho0 = product_initial_state(sys_at_start, rho_s, ctx);
    LedgerRecorder rec(ProtocolState{sys_at_start, rho0, false, 0}, ctx);
    rec.apply(CoupleOn{}, Phase::Preparation);
    IsothermalResult iso = run_isothermal(rec.state(), h_end, n_steps, ctx);
    rec.ledger().append(iso.ledger);
    rec.reset_state(iso.state);
    const HermitianOperator omega_n = rec.state().rho;
    rec.apply(CoupleOff{}, Phase::Closing);

    StrokeReport r;
    r.ledger = rec.ledger();
    r.work = r.ledger.total();
    r.rho_s_out = partial_trace(omega_n, Side::S, sys_at_start);
    const double e_in = rho_s.trace_product(sys_at_start.h_s());
    const double e_out = r.rho_s_out.trace_product(h_end);
    r.q_bath = -(e_out - e_in) - r.work;
    r.q_system = -r.q_bath;
    r.entropy_change = von_neumann_entropy(r.rho_s_out) - von_neumann_entropy(rho_s);

    const HermitianOperator rho_b_out = partial_trace(omega_n, Side::B, sys_at_start);
    r.penalty.res_b = temp * relative_entropy(rho_b_out, gibbs_state(sys_at_start.h_b(), ctx));
    r.penalty.mutual = temp * mutual_information(omega_n, sys_at_start.dim_s(), sys_at_start.dim_b());
    r.penalty.irr = temp * relative_entropy(rho0, gibbs_state(sys_at_start.total(), ctx));
    r.dissipation = iso.dissipation;
    r.q_bath_formula = -temp * r.entropy_change + r.penalty.res_b + r.penalty.mutual + r.penalty.irr +
                       r.dissipation;
    return r;
}

struct HeatReport {
    /// Heat absorbed by the bath (first law: -Delta E_S - W).
    double q_bath = 0.0;
    /// Heat absorbed by S, -q_bath; Clausius: q_system <= T Delta S.
    double q_system = 0.0;
    double entropy_change = 0.0;
    PenaltyTerms penalty;
    double dissipation = 0.0;
    double work = 0.0;
    /// T Delta S - (res_b + mutual + irr) - dissipation; equals q_system.
    double q_system_formula = 0.0;
    WorkLedger ledger;
};

/// Non-cyclic protocol: quench H_S -> h1_s, couple, isothermal to hN_s, decouple.
inline HeatReport heat_report(const CompositeSystem& sys, const HermitianOperator& rho_s,
                              const HermitianOperator& h1_s, const HermitianOperator& hN_s,
                              std::size_t n_steps, const ThermalContext& ctx) {
    require_full_rank(rho_s, "heat_report");
    const double quench_work = rho_s.trace_product(sys.h_s() - h1_s);
    StrokeReport st = contact_stroke(sys.with_h_s(h1_s), rho_s, hN_s, n_steps, ctx);

    HeatReport r;
    r.ledger.entries.push_back({1, StepKind::Quench, Phase::Preparation, quench_work, -quench_work});
    for (auto e : st.ledger.entries) {
        e.step_index += 1;
        r.ledger.entries.push_back(e);
    }
    r.work = quench_work + st.work;
    // the quench does not exchange heat, so the stroke's heat is the protocol's heat
    r.q_bath = st.q_bath;
    r.q_system = -r.q_bath;
    r.entropy_change = st.entropy_change;
    r.penalty = st.penalty;
    r.dissipation = st.dissipation;
    r.q_system_formula = ctx.temperature() * r.entropy_change -
                         (r.penalty.res_b + r.penalty.mutual + r.penalty.irr) - r.dissipation;
    return r;
}

} // namespace sct
