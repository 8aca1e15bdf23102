// gaussian_cl.hpp: Gaussian bosonic states and the discretized Caldeira-Leggett model
//
// Phase-space ordering r = (x_0 .. x_{L-1}, p_0 .. p_{L-1}); mode 0 is S unless stated.
// H = 1/2 r^T H_r r, sigma = [[0, -1], [1, 0]], covariance
// gamma_ij = <{r_i, r_j}> - 2 m_i m_j (vacuum of 1/2(x^2 + p^2) has gamma = 1).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sct/gibbs_thermo.hpp"
#include "sct/operator_core.hpp"
#include "sct/protocol.hpp"

namespace sct {

using RMatrix = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline RMatrix symplectic_form(Eigen::Index n_modes) {
    RMatrix s = RMatrix::Zero(2 * n_modes, 2 * n_modes);
    s.topRightCorner(n_modes, n_modes) = -RMatrix::Identity(n_modes, n_modes);
    s.bottomLeftCorner(n_modes, n_modes) = RMatrix::Identity(n_modes, n_modes);
    return s;
}

class QuadraticHamiltonian {
  public:
    QuadraticHamiltonian(RMatrix h, Eigen::Index system_mode = 0) : h_(std::move(h)), system_mode_(system_mode) {
        if (h_.rows() != h_.cols() || h_.rows() == 0 || h_.rows() % 2 != 0)
            throw DimensionError("QuadraticHamiltonian: matrix must be 2L x 2L");
        const double scale = std::max(1.0, h_.cwiseAbs().maxCoeff());
        if ((h_ - h_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw DomainError("QuadraticHamiltonian: matrix is not symmetric");
        h_ = 0.5 * (h_ + h_.transpose()).eval();
        Eigen::LLT<RMatrix> llt(h_);
        if (llt.info() != Eigen::Success) throw DomainError("QuadraticHamiltonian: matrix is not positive definite");
        if (system_mode_ < 0 || system_mode_ >= n_modes()) throw DimensionError("QuadraticHamiltonian: bad system mode");
    }

    Eigen::Index n_modes() const { return h_.rows() / 2; }
    const RMatrix& matrix() const { return h_; }
    Eigen::Index system_mode() const { return system_mode_; }
    /// true when H_r has no x-p cross terms
    bool separable() const { return h_.topRightCorner(n_modes(), n_modes()).cwiseAbs().maxCoeff() == 0.0; }

  private:
    RMatrix h_;
    Eigen::Index system_mode_;
};

struct GaussianState {
    RVec mean;
    RMatrix cov;

    Eigen::Index n_modes() const { return mean.size() / 2; }
};

/// H_r = S^T (D (+) D) S with S sigma S^T = sigma.
struct WilliamsonDecomposition {
    RVec d;
    RMatrix s;
    RMatrix s_inv;
};

namespace detail {

inline RMatrix sym_sqrt(const RMatrix& a, bool inverse) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(a);
    const RVec ev = es.eigenvalues().cwiseMax(0.0);
    RVec f = ev.cwiseSqrt();
    if (inverse) f = f.cwiseInverse();
    return es.eigenvectors() * f.asDiagonal() * es.eigenvectors().transpose();
}

/// Positive-frequency eigenpairs of i M^{1/2} sigma M^{1/2} for symmetric positive M.
/// With eigenvectors u_k = (a_k + i b_k)/sqrt 2, O = [a_1..a_L | b_1..b_L] is orthogonal and
/// M^{1/2} sigma M^{1/2} = O sigma (D (+) D) O^T.
inline void positive_modes(const RMatrix& m_half, RVec& d, RMatrix& o) {
    const Eigen::Index n2 = m_half.rows();
    const Eigen::Index l = n2 / 2;
    const RMatrix a = m_half * symplectic_form(l) * m_half;
    const Eigen::MatrixXcd ia = cplx(0.0, 1.0) * a.cast<cplx>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ia);
    if (es.info() != Eigen::Success) throw DomainError("williamson: eigendecomposition failed");
    d.resize(l);
    o.resize(n2, n2);
    for (Eigen::Index k = 0; k < l; ++k) {
        const Eigen::Index col = l + k; // ascending order: the last L are positive
        d(k) = es.eigenvalues()(col);
        const Eigen::VectorXcd u = es.eigenvectors().col(col) * std::sqrt(2.0);
        o.col(k) = u.real();
        o.col(l + k) = u.imag();
    }
}

} // namespace detail

/// Williamson normal form of H_r. Uses a real block factorization when H_r has no
/// x-p cross terms, the general complex route otherwise.
inline WilliamsonDecomposition williamson(const QuadraticHamiltonian& h) {
    const RMatrix& hr = h.matrix();
    const Eigen::Index l = h.n_modes();
    Eigen::SelfAdjointEigenSolver<RMatrix> check(hr, Eigen::EigenvaluesOnly);
    const double lo = check.eigenvalues().minCoeff();
    const double hi = check.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * hi)) throw DomainError("williamson: H_r is (near) singular");

    WilliamsonDecomposition w;
    if (h.separable()) {
        // H_r = Vx (+) Vp; P = Vp^{1/2}, P Vx P = U Om^2 U^T, S = A (+) A^{-T}, A = Om^{1/2} U^T P^{-1}
        const RMatrix vx = hr.topLeftCorner(l, l);
        const RMatrix vp = hr.bottomRightCorner(l, l);
        const RMatrix p = detail::sym_sqrt(vp, false);
        const RMatrix p_inv = detail::sym_sqrt(vp, true);
        const RMatrix m = p * vx * p;
        Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (m + m.transpose()));
        w.d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        const RMatrix& u = es.eigenvectors();
        const RVec rt = w.d.cwiseSqrt();
        const RMatrix a = rt.asDiagonal() * u.transpose() * p_inv;
        const RMatrix a_inv = p * u * rt.cwiseInverse().asDiagonal();
        w.s = RMatrix::Zero(2 * l, 2 * l);
        w.s.topLeftCorner(l, l) = a;
        w.s.bottomRightCorner(l, l) = a_inv.transpose();
        w.s_inv = RMatrix::Zero(2 * l, 2 * l);
        w.s_inv.topLeftCorner(l, l) = a_inv;
        w.s_inv.bottomRightCorner(l, l) = a.transpose();
        return w;
    }
    const RMatrix h_half = detail::sym_sqrt(hr, false);
    const RMatrix h_half_inv = detail::sym_sqrt(hr, true);
    RMatrix o;
    detail::positive_modes(h_half, w.d, o);
    RVec lam(2 * l);
    lam << w.d, w.d;
    w.s = lam.cwiseSqrt().cwiseInverse().asDiagonal() * o.transpose() * h_half;
    w.s_inv = h_half_inv * o * lam.cwiseSqrt().asDiagonal();
    return w;
}

/// Symplectic eigenvalues nu_k (ascending) of a positive definite covariance matrix.
inline RVec symplectic_eigenvalues(const RMatrix& cov) {
    RVec nu;
    RMatrix o;
    detail::positive_modes(detail::sym_sqrt(cov, false), nu, o);
    std::sort(nu.data(), nu.data() + nu.size());
    return nu;
}

/// Smallest eigenvalue of gamma + i sigma (>= 0 for physical states).
inline double uncertainty_min_eigenvalue(const GaussianState& st) {
    const Eigen::MatrixXcd m =
        st.cov.cast<cplx>() + cplx(0.0, 1.0) * symplectic_form(st.n_modes()).cast<cplx>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double coth(double x) { return 1.0 / std::tanh(x); }

inline GaussianState thermal_gaussian(const WilliamsonDecomposition& w, const ThermalContext& ctx) {
    const Eigen::Index l = w.d.size();
    RVec nu(2 * l);
    for (Eigen::Index k = 0; k < l; ++k) nu(k) = nu(l + k) = coth(0.5 * ctx.beta() * w.d(k));
    GaussianState st;
    st.mean = RVec::Zero(2 * l);
    st.cov = w.s_inv * nu.asDiagonal() * w.s_inv.transpose();
    st.cov = 0.5 * (st.cov + st.cov.transpose()).eval();
    return st;
}

inline GaussianState thermal_gaussian(const QuadraticHamiltonian& h, const ThermalContext& ctx) {
    return thermal_gaussian(williamson(h), ctx);
}

/// e^{-sigma H_r t} = S^{-1} [[cos Dt, sin Dt], [-sin Dt, cos Dt]] S
inline RMatrix evolution_matrix(const WilliamsonDecomposition& w, double t) {
    const Eigen::Index l = w.d.size();
    const RVec c = (w.d * t).array().cos().matrix();
    const RVec s = (w.d * t).array().sin().matrix();
    // R S computed row-block-wise without forming R
    RMatrix rs(2 * l, 2 * l);
    const auto top = w.s.topRows(l);
    const auto bot = w.s.bottomRows(l);
    rs.topRows(l) = c.asDiagonal() * top + s.asDiagonal() * bot;
    rs.bottomRows(l) = -(s.asDiagonal() * top) + c.asDiagonal() * bot;
    return w.s_inv * rs;
}

inline GaussianState evolve(const GaussianState& st, const RMatrix& e) {
    GaussianState out;
    out.mean = e * st.mean;
    out.cov = e * st.cov * e.transpose();
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

inline GaussianState evolve(const GaussianState& st, const QuadraticHamiltonian& h, double t) {
    return evolve(st, evolution_matrix(williamson(h), t));
}

/// 1/4 tr(H_r gamma) + 1/2 m^T H_r m
inline double gaussian_energy(const GaussianState& st, const RMatrix& hr) {
    return 0.25 * (hr.cwiseProduct(st.cov)).sum() + 0.5 * st.mean.dot(hr * st.mean);
}

inline double gaussian_energy(const GaussianState& st, const QuadraticHamiltonian& h) {
    return gaussian_energy(st, h.matrix());
}

/// Entropy of one mode with symplectic eigenvalue nu (nats); 0 at nu = 1.
inline double mode_entropy(double nu) {
    if (nu <= 1.0 + 1e-12) return 0.0;
    const double a = 0.5 * (nu + 1.0);
    const double b = 0.5 * (nu - 1.0);
    return a * std::log(a) - b * std::log(b);
}

inline double gaussian_entropy(const GaussianState& st) {
    const RVec nu = symplectic_eigenvalues(st.cov);
    if (nu.minCoeff() < 1.0 - 1e-9) throw DomainError("gaussian_entropy: unphysical covariance (nu < 1)");
    double s = 0.0;
    for (Eigen::Index k = 0; k < nu.size(); ++k) s += mode_entropy(nu(k));
    return s;
}

inline double gaussian_free_energy(const GaussianState& st, const QuadraticHamiltonian& h, const ThermalContext& ctx) {
    return gaussian_energy(st, h) - ctx.temperature() * gaussian_entropy(st);
}

/// Marginal of a subset of modes.
inline GaussianState reduced_state(const GaussianState& st, const std::vector<Eigen::Index>& modes) {
    const Eigen::Index l = st.n_modes();
    const auto k = static_cast<Eigen::Index>(modes.size());
    std::vector<Eigen::Index> idx;
    for (auto m : modes) idx.push_back(m);
    for (auto m : modes) idx.push_back(l + m);
    GaussianState out;
    out.mean.resize(2 * k);
    out.cov.resize(2 * k, 2 * k);
    for (Eigen::Index i = 0; i < 2 * k; ++i) {
        out.mean(i) = st.mean(idx[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < 2 * k; ++j)
            out.cov(i, j) = st.cov(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Caldeira-Leggett model

struct OscillatorParams {
    double mass = 1.0;
    double omega = 1.0;
};

/// n oscillators of unit mass, omega_mu = (mu/n) Omega, g_mu = omega_mu sqrt(2 Omega / (pi n)).
struct OhmicBathSpec {
    int n_osc = 1;
    double omega_max = 1.0;

    double frequency(int mu) const { return omega_max * mu / n_osc; }
    double coupling(int mu) const {
        return frequency(mu) * std::sqrt(2.0 * omega_max / (std::numbers::pi * n_osc));
    }
    /// sum_mu g_mu^2 / (m_mu omega_mu^2)
    double lamb_sum() const { return 2.0 * omega_max / std::numbers::pi; }
    void validate() const {
        if (n_osc < 1) throw DomainError("OhmicBathSpec: n_osc must be >= 1");
        if (!(omega_max > 0.0)) throw DomainError("OhmicBathSpec: omega_max must be > 0");
    }
};

/// H_S + H_B + g x sum_mu g_mu x_mu + lamb * g^2 x^2 sum_mu g_mu^2/(m_mu omega_mu^2).
/// lamb = 1 is the counterterm as written for this model; lamb = 1/2 exactly cancels the
/// static softening of x by the coupling; lamb = 0 drops it.
inline QuadraticHamiltonian build_cl_hamiltonian(const OscillatorParams& s, const OhmicBathSpec& bath, double g,
                                                 double lamb = 1.0) {
    if (!(s.mass > 0.0) || !(s.omega > 0.0)) throw DomainError("build_cl_hamiltonian: m and omega must be > 0");
    if (!(g >= 0.0)) throw DomainError("build_cl_hamiltonian: g must be >= 0");
    bath.validate();
    const Eigen::Index l = bath.n_osc + 1;
    RMatrix h = RMatrix::Zero(2 * l, 2 * l);
    h(0, 0) = s.mass * s.omega * s.omega;
    h(l, l) = 1.0 / s.mass;
    double lamb_sum = 0.0;
    for (int mu = 1; mu <= bath.n_osc; ++mu) {
        const double w = bath.frequency(mu);
        const double c = bath.coupling(mu);
        h(mu, mu) = w * w;
        h(l + mu, l + mu) = 1.0;
        h(0, mu) = h(mu, 0) = g * c;
        lamb_sum += c * c / (w * w);
    }
    h(0, 0) += 2.0 * lamb * g * g * lamb_sum;
    return QuadraticHamiltonian(h, 0);
}

/// 2x2 covariance of omega_beta(1/2 (m w^2 x^2 + p^2 / m)).
inline RMatrix oscillator_thermal_cov(const OscillatorParams& s, double beta) {
    const double n = coth(0.5 * beta * s.omega);
    RMatrix c = RMatrix::Zero(2, 2);
    c(0, 0) = n / (s.mass * s.omega);
    c(1, 1) = n * s.mass * s.omega;
    return c;
}

/// omega_{beta_s}(H_S) (x) omega_beta(H_B), zero means.
inline GaussianState cl_product_state(const OscillatorParams& s, double beta_s, const OhmicBathSpec& bath,
                                      double beta) {
    const Eigen::Index l = bath.n_osc + 1;
    GaussianState st;
    st.mean = RVec::Zero(2 * l);
    st.cov = RMatrix::Zero(2 * l, 2 * l);
    const RMatrix cs = oscillator_thermal_cov(s, beta_s);
    st.cov(0, 0) = cs(0, 0);
    st.cov(l, l) = cs(1, 1);
    for (int mu = 1; mu <= bath.n_osc; ++mu) {
        const RMatrix cb = oscillator_thermal_cov({1.0, bath.frequency(mu)}, beta);
        st.cov(mu, mu) = cb(0, 0);
        st.cov(l + mu, l + mu) = cb(1, 1);
    }
    return st;
}

/// F(omega_{beta_s}(H_S), H_S) - F(omega_beta(H_S), H_S) for one oscillator.
inline double oscillator_weak_work(const OscillatorParams& s, double beta_s, double beta) {
    const ThermalContext ctx(beta);
    RMatrix hr = RMatrix::Zero(2, 2);
    hr(0, 0) = s.mass * s.omega * s.omega;
    hr(1, 1) = 1.0 / s.mass;
    const QuadraticHamiltonian h(hr);
    const GaussianState a{RVec::Zero(2), oscillator_thermal_cov(s, beta_s)};
    const GaussianState b{RVec::Zero(2), oscillator_thermal_cov(s, beta)};
    return gaussian_free_energy(a, h, ctx) - gaussian_free_energy(b, h, ctx);
}

/// [H_S, (beta_s/beta) H_S, ..., H_S]: the initial quench to the Hamiltonian whose
/// Gibbs state at beta equals the initial S state, then n_steps points interpolating
/// the H_r coefficients (m w^2, 1/m) linearly back to H_S.
inline std::vector<OscillatorParams> weak_optimal_schedule(const OscillatorParams& s, double beta, double beta_s,
                                                           int n_steps) {
    if (n_steps < 1) throw DomainError("weak_optimal_schedule: n_steps must be >= 1");
    std::vector<OscillatorParams> out{s};
    const double lam0 = beta_s / beta;
    for (int i = 0; i <= n_steps; ++i) {
        const double lam = lam0 + (1.0 - lam0) * i / n_steps;
        // lam H_S: m w'^2 -> lam m w^2 and 1/m' -> lam / m
        out.push_back(i == n_steps ? s : OscillatorParams{s.mass / lam, s.omega * lam});
    }
    return out;
}

struct GibbsReplacement {};
struct ExactUnitary {
    double t_wait = 0.0;
};
using ClEquilibration = std::variant<GibbsReplacement, ExactUnitary>;

struct ClProtocolResult {
    WorkLedger ledger;
    double work = 0.0;
    /// total contact time (ExactUnitary only)
    double elapsed = 0.0;
    GaussianState final_state;
};

/// Weak-coupling-optimal protocol on the CL model:
/// quench schedule[0] -> schedule[1], couple, equilibrate, then (quench, equilibrate) through
/// schedule[2..], decouple. The interaction gV and the Lamb term are switched together.
inline ClProtocolResult cl_work_protocol(const OhmicBathSpec& bath, double g,
                                         const std::vector<OscillatorParams>& schedule, const ClEquilibration& mode,
                                         double beta, double beta_s, double lamb = 1.0) {
    if (schedule.size() < 3) throw DomainError("cl_work_protocol: schedule needs at least 3 points");
    const auto& first = schedule.front();
    const auto& last = schedule.back();
    if (first.mass != last.mass || first.omega != last.omega)
        throw DomainError("cl_work_protocol: schedule is not cyclic");
    const ThermalContext ctx(beta);
    const auto* exact = std::get_if<ExactUnitary>(&mode);
    if (exact && !(exact->t_wait > 0.0)) throw DomainError("cl_work_protocol: t_wait must be > 0");

    ClProtocolResult res;
    GaussianState st = cl_product_state(first, beta_s, bath, beta);
    OscillatorParams cur = first;
    bool coupled = false;
    std::size_t step = 0;
    auto ham = [&](const OscillatorParams& s, bool on) {
        return build_cl_hamiltonian(s, bath, on ? g : 0.0, on ? lamb : 0.0);
    };
    auto record = [&](StepKind kind, Phase phase, double work, double de) {
        res.ledger.entries.push_back({++step, kind, phase, work, de});
    };
    auto quadratic = [&](const RMatrix& dh) { return gaussian_energy(st, dh); };
    auto quench = [&](const OscillatorParams& next, Phase phase) {
        const RMatrix dh = ham(cur, coupled).matrix() - ham(next, coupled).matrix();
        const double w = quadratic(dh);
        record(StepKind::Quench, phase, w, -w);
        cur = next;
    };
    auto switch_coupling = [&](bool on, Phase phase) {
        const RMatrix dh = ham(cur, true).matrix() - ham(cur, false).matrix();
        const double w = on ? -quadratic(dh) : quadratic(dh);
        record(on ? StepKind::CoupleOn : StepKind::CoupleOff, phase, w, -w);
        coupled = on;
    };
    auto equilibrate = [&](Phase phase) {
        const QuadraticHamiltonian h = ham(cur, true);
        const double e0 = gaussian_energy(st, h);
        const WilliamsonDecomposition w = williamson(h);
        if (exact) {
            st = evolve(st, evolution_matrix(w, exact->t_wait));
            res.elapsed += exact->t_wait;
        } else {
            st = thermal_gaussian(w, ctx);
        }
        record(StepKind::Equilibrate, phase, 0.0, gaussian_energy(st, h) - e0);
    };

    quench(schedule[1], Phase::Preparation);
    switch_coupling(true, Phase::Preparation);
    equilibrate(Phase::Isothermal);
    for (std::size_t i = 2; i < schedule.size(); ++i) {
        quench(schedule[i], Phase::Isothermal);
        equilibrate(Phase::Isothermal);
    }
    switch_coupling(false, Phase::Closing);
    res.work = res.ledger.total();
    res.final_state = std::move(st);
    return res;
}

// ---------------------------------------------------------------------------
// Equilibration of quadratic observables

/// A(t) = Abar + sum_alpha v_alpha e^{-i w_alpha t}
struct TimeSignal {
    std::vector<double> frequencies;
    std::vector<cplx> weights;
    double equilibrium = 0.0;
    double dispersion = 0.0;
    double tau_estimate = 0.0;

    double value(double t) const {
        cplx f = 0.0;
        for (std::size_t a = 0; a < weights.size(); ++a) f += weights[a] * std::exp(cplx(0.0, -frequencies[a] * t));
        return equilibrium + f.real();
    }
    /// sum |v_alpha|^2, the long-time average of |A(t) - Abar|^2
    double mean_square_deviation() const {
        double s = 0.0;
        for (const auto& v : weights) s += std::norm(v);
        return s;
    }
};

/// Quadratic form for H_S of mode `mode`: A = r^T Q r with Q = 1/2 H_r restricted to that mode.
inline RMatrix mode_energy_form(const QuadraticHamiltonian& h, Eigen::Index mode) {
    const Eigen::Index l = h.n_modes();
    RMatrix q = RMatrix::Zero(2 * l, 2 * l);
    for (Eigen::Index i : {mode, l + mode})
        for (Eigen::Index j : {mode, l + mode}) q(i, j) = 0.5 * h.matrix()(i, j);
    return q;
}

/// Same form for an explicit single-oscillator Hamiltonian placed on `mode`.
inline RMatrix oscillator_energy_form(const OscillatorParams& s, Eigen::Index n_modes, Eigen::Index mode = 0) {
    RMatrix q = RMatrix::Zero(2 * n_modes, 2 * n_modes);
    q(mode, mode) = 0.5 * s.mass * s.omega * s.omega;
    q(n_modes + mode, n_modes + mode) = 0.5 / s.mass;
    return q;
}

/// Frequencies closer than this are merged (weights summed).
inline constexpr double kFrequencyMergeTolerance = 1e-10;
inline constexpr double kNegligibleWeight = 1e-12;

inline TimeSignal equilibration_time(const QuadraticHamiltonian& h, const GaussianState& initial, const RMatrix& q) {
    const Eigen::Index l = h.n_modes();
    const Eigen::Index n2 = 2 * l;
    if (q.rows() != n2 || q.cols() != n2 || initial.mean.size() != n2)
        throw DimensionError("equilibration_time: dimension mismatch");
    const WilliamsonDecomposition w = williamson(h);

    const double r2 = 1.0 / std::sqrt(2.0);
    const cplx i1(0.0, 1.0);
    Eigen::MatrixXcd om = Eigen::MatrixXcd::Zero(n2, n2);
    Eigen::MatrixXcd om_inv = Eigen::MatrixXcd::Zero(n2, n2);
    for (Eigen::Index k = 0; k < l; ++k) {
        om(k, k) = r2;
        om(k, l + k) = r2;
        om(l + k, k) = -i1 * r2;
        om(l + k, l + k) = i1 * r2;
        om_inv(k, k) = r2;
        om_inv(k, l + k) = i1 * r2;
        om_inv(l + k, k) = r2;
        om_inv(l + k, l + k) = -i1 * r2;
    }
    // observable and moments in normal-mode coordinates q_n = S r
    const RMatrix q_hat = w.s_inv.transpose() * q * w.s_inv;
    const Eigen::MatrixXcd a_t = om.transpose() * q_hat.cast<cplx>() * om;
    const RMatrix gamma_q = w.s * initial.cov * w.s.transpose();
    const RVec m_q = w.s * initial.mean;
    const Eigen::MatrixXcd k2 = 0.5 * gamma_q.cast<cplx>() - 0.5 * i1 * symplectic_form(l).cast<cplx>() +
                                (m_q * m_q.transpose()).cast<cplx>();
    const Eigen::MatrixXcd c = om_inv * k2 * om_inv.transpose();

    RVec eps(n2);
    eps << w.d, -w.d;
    struct Term {
        double freq;
        cplx weight;
    };
    std::vector<Term> terms;
    terms.reserve(static_cast<std::size_t>(n2 * (n2 + 1) / 2));
    for (Eigen::Index j = 0; j < n2; ++j) {
        for (Eigen::Index k = j; k < n2; ++k) {
            const cplx v = j == k ? a_t(j, k) * c(j, k) : a_t(j, k) * c(j, k) + a_t(k, j) * c(k, j);
            terms.push_back({eps(j) + eps(k), v});
        }
    }
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.freq < b.freq; });

    TimeSignal sig;
    cplx zero_part = 0.0;
    std::size_t i = 0;
    while (i < terms.size()) {
        std::size_t j = i;
        cplx v = 0.0;
        double fsum = 0.0;
        while (j < terms.size() && terms[j].freq - terms[i].freq < kFrequencyMergeTolerance) {
            v += terms[j].weight;
            fsum += terms[j].freq;
            ++j;
        }
        const double f = fsum / static_cast<double>(j - i);
        if (std::abs(f) < kFrequencyMergeTolerance) {
            zero_part += v;
        } else {
            sig.frequencies.push_back(f);
            sig.weights.push_back(v);
        }
        i = j;
    }
    sig.equilibrium = zero_part.real();

    // weights at roundoff level relative to the signal are cancellation residue
    double scale = std::abs(zero_part);
    for (const auto& v : sig.weights) scale = std::max(scale, std::abs(v));
    std::size_t kept = 0;
    for (std::size_t a = 0; a < sig.weights.size(); ++a) {
        if (std::abs(sig.weights[a]) <= kNegligibleWeight * scale) continue;
        sig.frequencies[kept] = sig.frequencies[a];
        sig.weights[kept] = sig.weights[a];
        ++kept;
    }
    sig.frequencies.resize(kept);
    sig.weights.resize(kept);

    double total = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t a = 0; a < sig.weights.size(); ++a) {
        const double p = std::norm(sig.weights[a]);
        total += p;
        m1 += p * sig.frequencies[a];
        m2 += p * sig.frequencies[a] * sig.frequencies[a];
    }
    if (total > 0.0) {
        m1 /= total;
        m2 /= total;
        sig.dispersion = std::sqrt(std::max(0.0, m2 - m1 * m1));
        sig.tau_estimate = sig.dispersion > 0.0 ? 1.0 / sig.dispersion : std::numeric_limits<double>::infinity();
    }
    return sig;
}

/// <A>(t) sampled on a uniform grid for a quadratic form supported on few coordinates.
struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> values;
};

inline ObservableSeries observable_series(const QuadraticHamiltonian& h, const GaussianState& initial,
                                          const RMatrix& q, double t_max, double dt) {
    const Eigen::Index l = h.n_modes();
    const Eigen::Index n2 = 2 * l;
    if (!(dt > 0.0) || !(t_max >= 0.0)) throw DomainError("observable_series: need dt > 0, t_max >= 0");
    const WilliamsonDecomposition w = williamson(h);
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < n2; ++i)
        if (q.row(i).cwiseAbs().maxCoeff() > 0.0) support.push_back(i);
    const auto ns = static_cast<Eigen::Index>(support.size());
    RMatrix rows(ns, n2); // rows of S^{-1} on the support
    RMatrix qs(ns, ns);
    for (Eigen::Index a = 0; a < ns; ++a) {
        rows.row(a) = w.s_inv.row(support[static_cast<std::size_t>(a)]);
        for (Eigen::Index b = 0; b < ns; ++b)
            qs(a, b) = q(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
    }
    const RMatrix gamma_q = w.s * initial.cov * w.s.transpose();
    const RVec m_q = w.s * initial.mean;

    ObservableSeries out;
    const auto n_t = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9)) + 1;
    RMatrix u(ns, n2);
    for (std::size_t it = 0; it < n_t; ++it) {
        const double t = static_cast<double>(it) * dt;
        const RVec c = (w.d * t).array().cos().matrix();
        const RVec s = (w.d * t).array().sin().matrix();
        // u = rows * R(t)
        u.leftCols(l) = rows.leftCols(l) * c.asDiagonal() - rows.rightCols(l) * s.asDiagonal();
        u.rightCols(l) = rows.leftCols(l) * s.asDiagonal() + rows.rightCols(l) * c.asDiagonal();
        const RMatrix g_sub = u * gamma_q * u.transpose();
        const RVec m_sub = u * m_q;
        const double val = 0.5 * qs.cwiseProduct(g_sub).sum() + m_sub.dot(qs * m_sub);
        out.times.push_back(t);
        out.values.push_back(val);
    }
    return out;
}

struct BandEntry {
    /// time after which the signal stays inside (0.99 a, 1.01 a)
    double entry_time = 0.0;
    /// mean over the final quarter of the window
    double band_center = 0.0;
    bool entered = false;
};

inline BandEntry band_entry_time(const ObservableSeries& s, double rel_width = 0.01) {
    BandEntry b;
    const std::size_t n = s.values.size();
    if (n < 4) throw DomainError("band_entry_time: series too short");
    const std::size_t start = n - n / 4;
    double sum = 0.0;
    for (std::size_t i = start; i < n; ++i) sum += s.values[i];
    b.band_center = sum / static_cast<double>(n - start);
    const double lo = b.band_center - rel_width * std::abs(b.band_center);
    const double hi = b.band_center + rel_width * std::abs(b.band_center);
    std::size_t last_out = n; // none
    for (std::size_t i = 0; i < n; ++i)
        if (s.values[i] <= lo || s.values[i] >= hi) last_out = i;
    if (last_out == n) {
        b.entered = true;
        b.entry_time = s.times.front();
    } else if (last_out + 1 < n) {
        b.entered = true;
        b.entry_time = s.times[last_out + 1];
    }
    return b;
}

} // namespace sct
