// gibbs_thermo.hpp: Gibbs states, free energies, entropies and the Kubo-Mori map
//
// Units: k_B = hbar = 1, entropies in nats.

#pragma once

#include <cmath>
#include <limits>

#include "sct/operator_core.hpp"

namespace sct {

/// Inverse temperature holder; beta must be finite and positive.
class ThermalContext {
  public:
    explicit ThermalContext(double beta) : beta_(beta) {
        if (!(beta > 0.0) || !std::isfinite(beta)) {
            throw DomainError("ThermalContext: beta must be finite and > 0");
        }
    }
    double beta() const { return beta_; }
    double temperature() const { return 1.0 / beta_; }

  private:
    double beta_;
};

struct FreeEnergyReport {
    double energy = 0.0;
    double entropy = 0.0;
    double free_energy = 0.0;
    double partition_log = 0.0; // ln Z
};

/// Thermal state of an already diagonalized Hamiltonian, as populations.
/// The spectrum is shifted by its minimum before exponentiating.
inline RealVector gibbs_populations(const RealVector& energies, double beta) {
    const double e0 = energies.minCoeff();
    RealVector p = ((energies.array() - e0) * -beta).exp().matrix();
    return p / p.sum();
}

inline double log_partition(const RealVector& energies, double beta) {
    const double e0 = energies.minCoeff();
    return -beta * e0 + std::log(((energies.array() - e0) * -beta).exp().sum());
}

/// exp(-beta H) / tr exp(-beta H)
inline HermitianOperator gibbs_state(const Spectrum& sp, const ThermalContext& ctx) {
    const RealVector p = gibbs_populations(sp.values, ctx.beta());
    Matrix rho = sp.vectors * p.cast<cplx>().asDiagonal() * sp.vectors.adjoint();
    return HermitianOperator::from_hermitian(0.5 * (rho + rho.adjoint()));
}

inline HermitianOperator gibbs_state(const HermitianOperator& h, const ThermalContext& ctx) {
    return gibbs_state(h.spectrum(), ctx);
}

/// -sum p ln p over a probability vector (0 ln 0 = 0; tiny negative roundoff ignored).
inline double shannon_entropy(const RealVector& p) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) > 0.0) s -= p(i) * std::log(p(i));
    }
    return s;
}

/// -tr(rho ln rho)
inline double von_neumann_entropy(const HermitianOperator& rho) {
    return shannon_entropy(rho.spectrum().values);
}

/// F(rho, H) = tr(rho H) - T S(rho)
inline double free_energy(const HermitianOperator& rho, const HermitianOperator& h,
                          const ThermalContext& ctx) {
    return rho.trace_product(h) - ctx.temperature() * von_neumann_entropy(rho);
}

/// Equilibrium functionals of omega_beta(h).
inline FreeEnergyReport thermal_report(const HermitianOperator& h, const ThermalContext& ctx) {
    const Spectrum sp = h.spectrum();
    const RealVector p = gibbs_populations(sp.values, ctx.beta());
    FreeEnergyReport r;
    r.energy = p.dot(sp.values);
    r.entropy = shannon_entropy(p);
    r.partition_log = log_partition(sp.values, ctx.beta());
    r.free_energy = -r.partition_log / ctx.beta();
    return r;
}

/// Eigenvalues of sigma below this floor count as outside its support.
inline constexpr double kSupportFloor = 1e-14;

/// S(rho || sigma) = tr rho (ln rho - ln sigma); +infinity when supp(rho) is not
/// inside supp(sigma).
inline double relative_entropy(const HermitianOperator& rho, const HermitianOperator& sigma) {
    if (rho.dim() != sigma.dim()) throw DimensionError("relative_entropy: dimension mismatch");
    const Spectrum ss = sigma.spectrum();
    // diagonal of rho in sigma's eigenbasis
    const RealVector rho_diag =
        (ss.vectors.adjoint() * rho.matrix() * ss.vectors).diagonal().real();
    double cross = 0.0;
    for (Eigen::Index k = 0; k < ss.values.size(); ++k) {
        if (ss.values(k) < kSupportFloor) {
            if (rho_diag(k) > kSupportFloor) return std::numeric_limits<double>::infinity();
            continue;
        }
        cross += rho_diag(k) * std::log(ss.values(k));
    }
    const double value = -von_neumann_entropy(rho) - cross;
    return value;
}

/// S(rho_S) + S(rho_B) - S(rho_SB)
inline double mutual_information(const HermitianOperator& rho_sb, std::size_t dim_s,
                                 std::size_t dim_b) {
    if (rho_sb.dim() != dim_s * dim_b) throw DimensionError("mutual_information: dimension mismatch");
    const auto rs = partial_trace(rho_sb, Side::S, dim_s, dim_b);
    const auto rb = partial_trace(rho_sb, Side::B, dim_s, dim_b);
    return von_neumann_entropy(rs) + von_neumann_entropy(rb) - von_neumann_entropy(rho_sb);
}

namespace detail {

/// (e^x - 1)/x with the removable singularity at 0.
inline double expm1_over_x(double x) {
    if (std::abs(x) < 1e-300) return 1.0;
    return std::expm1(x) / x;
}

/// Returns true when two levels count as degenerate for the Kubo-Mori filter.
inline bool degenerate(double ej, double ek, double scale) {
    return std::abs(ej - ek) < 1e-10 * std::max(scale, 1e-300);
}

} // namespace detail

/// Y_{H,beta} = int_0^1 dtau e^{beta tau H} Y e^{-beta tau H}, evaluated in the
/// eigenbasis of H: element (j,k) is multiplied by (e^{beta(E_j-E_k)} - 1)/(beta(E_j-E_k)).
inline Matrix kubo_mori_map(const Matrix& y, const Spectrum& sp, const ThermalContext& ctx) {
    const double scale = sp.values.cwiseAbs().maxCoeff();
    Matrix yt = sp.vectors.adjoint() * y * sp.vectors;
    const auto n = yt.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (j == k || detail::degenerate(sp.values(j), sp.values(k), scale)) continue;
            yt(j, k) *= detail::expm1_over_x(ctx.beta() * (sp.values(j) - sp.values(k)));
        }
    }
    return sp.vectors * yt * sp.vectors.adjoint();
}

/// Y_{H,beta} is generally not Hermitian, so the result is a plain matrix.
inline Matrix kubo_mori_map(const HermitianOperator& y, const HermitianOperator& h,
                            const ThermalContext& ctx) {
    if (y.dim() != h.dim()) throw DimensionError("kubo_mori_map: dimension mismatch");
    return kubo_mori_map(y.matrix(), h.spectrum(), ctx);
}

/// omega_beta(H) * Y_{H,beta}, which is Hermitian. In the eigenbasis its elements are
/// Y_jk (p_k - p_j) / (beta (E_j - E_k)), with limit p_j Y_jj on degenerate pairs.
inline HermitianOperator gibbs_weighted_kubo_mori(const HermitianOperator& y, const Spectrum& sp,
                                                  const ThermalContext& ctx) {
    const RealVector p = gibbs_populations(sp.values, ctx.beta());
    const double scale = sp.values.cwiseAbs().maxCoeff();
    Matrix yt = sp.vectors.adjoint() * y.matrix() * sp.vectors;
    const auto n = yt.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double ej = sp.values(j);
            const double ek = sp.values(k);
            double kernel;
            if (j == k || detail::degenerate(ej, ek, scale)) {
                kernel = 0.5 * (p(j) + p(k));
            } else {
                const double x = ctx.beta() * (ej - ek);
                // p_j (e^x - 1)/x == p_k (1 - e^{-x})/x; pick the branch that cannot overflow
                kernel = x <= 0.0 ? p(j) * detail::expm1_over_x(x) : p(k) * detail::expm1_over_x(-x);
            }
            yt(j, k) *= kernel;
        }
    }
    Matrix out = sp.vectors * yt * sp.vectors.adjoint();
    return HermitianOperator::from_hermitian(0.5 * (out + out.adjoint()));
}

/// cov_{omega_beta(H)}(A, B) = tr(omega A_{H,beta} B) - tr(omega A) tr(omega B).
inline double generalized_covariance(const HermitianOperator& a, const HermitianOperator& b,
                                     const Spectrum& sp, const ThermalContext& ctx) {
    const HermitianOperator weighted = gibbs_weighted_kubo_mori(a, sp, ctx);
    const HermitianOperator omega = gibbs_state(sp, ctx);
    return weighted.trace_product(b) - omega.trace_product(a) * omega.trace_product(b);
}

inline double generalized_covariance(const HermitianOperator& a, const HermitianOperator& b,
                                     const HermitianOperator& h, const ThermalContext& ctx) {
    if (a.dim() != h.dim() || b.dim() != h.dim()) {
        throw DimensionError("generalized_covariance: dimension mismatch");
    }
    return generalized_covariance(a, b, h.spectrum(), ctx);
}

/// S(omega(h0) || omega(h0 + t d)) - S(omega(h0 + t d) || omega(h0)); O(t^3) for small t.
inline double lemma1_gap(const HermitianOperator& h0, const HermitianOperator& direction, double t,
                         const ThermalContext& ctx) {
    const auto w0 = gibbs_state(h0, ctx);
    const auto wt = gibbs_state(h0 + t * direction, ctx);
    return relative_entropy(w0, wt) - relative_entropy(wt, w0);
}

} // namespace sct
