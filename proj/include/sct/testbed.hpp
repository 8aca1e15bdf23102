// testbed.hpp: the qubit (x) qubit reference model and seeded random instances

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sct/operator_core.hpp"

namespace sct {

/// h_s = h_b = sigma_z / 2, v = sigma_x (x) sigma_x.
inline CompositeSystem qubit_testbed(double g) {
    const HermitianOperator half_z = pauli::z() * 0.5;
    return {half_z, half_z, kron(pauli::x(), pauli::x()), g};
}

/// Same testbed with a commuting interaction sigma_z (x) sigma_z.
inline CompositeSystem qubit_testbed_commuting(double g) {
    const HermitianOperator half_z = pauli::z() * 0.5;
    return {half_z, half_z, kron(pauli::z(), pauli::z()), g};
}

/// Random Hermitian matrix with independent Gaussian entries (GUE-like), scaled.
inline HermitianOperator random_hermitian(std::size_t dim, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    return HermitianOperator::from_hermitian(0.5 * scale * (m + m.adjoint()));
}

/// Random Hermitian matrix with spectrum rescaled into [-bound, bound].
inline HermitianOperator random_hermitian_bounded(std::size_t dim, std::mt19937_64& rng, double bound) {
    const HermitianOperator h = random_hermitian(dim, rng);
    const double n = operator_norm(h);
    return n > 0.0 ? h * (bound / n) : h;
}

/// Random full-rank density matrix: A A^dagger / tr, mixed with the maximally
/// mixed state so the smallest eigenvalue is at least min_weight / dim.
inline HermitianOperator random_density(std::size_t dim, std::mt19937_64& rng, double min_weight = 0.05) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(dim);
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(nd(rng), nd(rng));
    Matrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    rho = (1.0 - min_weight) * rho + min_weight / static_cast<double>(dim) * Matrix::Identity(n, n);
    return HermitianOperator(rho);
}

/// Density matrix of a pure state vector.
inline HermitianOperator pure_state(const Eigen::VectorXcd& psi) {
    const Eigen::VectorXcd u = psi / psi.norm();
    return HermitianOperator::from_hermitian(u * u.adjoint());
}

/// Orthogonal basis of the d x d Hermitian matrices: symmetric unit pairs and
/// antisymmetric imaginary pairs, d^2 elements.
inline std::vector<HermitianOperator> hermitian_basis(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    std::vector<HermitianOperator> out;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            Matrix m = Matrix::Zero(n, n);
            m(i, j) = 1.0;
            m(j, i) = 1.0;
            out.push_back(HermitianOperator::from_hermitian(m));
            if (i != j) {
                Matrix a = Matrix::Zero(n, n);
                a(i, j) = cplx(0, 1);
                a(j, i) = cplx(0, -1);
                out.push_back(HermitianOperator::from_hermitian(a));
            }
        }
    return out;
}

} // namespace sct
