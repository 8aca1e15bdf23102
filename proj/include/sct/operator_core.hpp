// operator_core.hpp: dense Hermitian operators on finite tensor-product spaces
//
// Tensor index convention (used everywhere in the library): for a composite
// space S (dimension dS) times B (dimension dB) the basis index of |s>|b> is
//
//     index = s * dB + b
//
// so the S factor is the slow (major) index. Partial traces are then sums of
// dB x dB blocks (keep = S) or sums over the block diagonal (keep = B).

#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace sct {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

namespace detail {

inline std::atomic<long>& hermiticity_warning_count() {
    static std::atomic<long> count{0};
    return count;
}

inline void warn_asymmetry(double asym) {
    // Print only the first few; callers can query the counter.
    const long n = hermiticity_warning_count().fetch_add(1) + 1;
    if (n <= 3) {
        std::cerr << "sct: warning: symmetrizing operator with asymmetry " << asym << '\n';
    }
}

} // namespace detail

/// Number of times a HermitianOperator was constructed from input whose
/// anti-Hermitian part exceeded the 1e-12 threshold.
inline long hermiticity_warnings() { return detail::hermiticity_warning_count().load(); }

/// Eigen-decomposition of a Hermitian matrix: op = vectors * diag(values) * vectors^dagger,
/// eigenvalues ascending.
struct Spectrum {
    RealVector values;
    Matrix vectors;
};

/// Dense self-adjoint matrix. Construction symmetrizes (A + A^dagger)/2.
class HermitianOperator {
  public:
    static constexpr double kAsymmetryTolerance = 1e-12;

    HermitianOperator() : m_(Matrix::Zero(1, 1)) {}

    explicit HermitianOperator(const Matrix& entries) : m_(entries) {
        if (m_.rows() != m_.cols() || m_.rows() < 1) {
            throw DimensionError("HermitianOperator: matrix must be square with dim >= 1");
        }
        const double asym = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
        if (asym > kAsymmetryTolerance * scale) detail::warn_asymmetry(asym);
        m_ = 0.5 * (m_ + m_.adjoint()).eval();
    }

    static HermitianOperator identity(std::size_t dim) {
        return HermitianOperator(Matrix::Identity(static_cast<Eigen::Index>(dim),
                                                  static_cast<Eigen::Index>(dim)));
    }
    static HermitianOperator zero(std::size_t dim) {
        return HermitianOperator(Matrix::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim)));
    }
    static HermitianOperator diagonal(const RealVector& d) {
        return HermitianOperator(d.cast<cplx>().asDiagonal().toDenseMatrix());
    }

    std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    cplx operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    double trace() const { return m_.trace().real(); }

    Spectrum spectrum() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_);
        if (es.info() != Eigen::Success) throw DomainError("eigendecomposition failed");
        return {es.eigenvalues(), es.eigenvectors()};
    }

    HermitianOperator operator+(const HermitianOperator& o) const {
        check_same_dim(o);
        return from_hermitian(m_ + o.m_);
    }
    HermitianOperator operator-(const HermitianOperator& o) const {
        check_same_dim(o);
        return from_hermitian(m_ - o.m_);
    }
    HermitianOperator operator-() const { return from_hermitian(-m_); }
    HermitianOperator operator*(double s) const { return from_hermitian(m_ * s); }
    friend HermitianOperator operator*(double s, const HermitianOperator& a) { return a * s; }

    /// tr(A B) for Hermitian A, B (real).
    double trace_product(const HermitianOperator& o) const {
        check_same_dim(o);
        // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
        return (m_.array() * o.m_.conjugate().array()).sum().real();
    }

    bool approx_equal(const HermitianOperator& o, double tol) const {
        return dim() == o.dim() && (m_ - o.m_).cwiseAbs().maxCoeff() <= tol;
    }

    /// Wraps a matrix already known to be exactly Hermitian (no checks, no warning).
    static HermitianOperator from_hermitian(Matrix m) {
        HermitianOperator h;
        h.m_ = std::move(m);
        return h;
    }

  private:
    void check_same_dim(const HermitianOperator& o) const {
        if (o.dim() != dim()) throw DimensionError("operator dimension mismatch");
    }
    Matrix m_;
};

/// Which tensor factor an operation refers to.
enum class Side { S, B };

/// H(g) = h_s (x) 1 + 1 (x) h_b + g v on C^{dim_S} (x) C^{dim_B}.
class CompositeSystem {
  public:
    CompositeSystem(HermitianOperator h_s, HermitianOperator h_b, HermitianOperator v, double g)
        : h_s_(std::move(h_s)), h_b_(std::move(h_b)), v_(std::move(v)), g_(g) {
        if (v_.dim() != h_s_.dim() * h_b_.dim()) {
            throw DimensionError("CompositeSystem: v dimension must equal dim_S * dim_B");
        }
        if (!(g_ >= 0.0) || !std::isfinite(g_)) throw DomainError("CompositeSystem: g must be >= 0");
    }

    std::size_t dim_s() const { return h_s_.dim(); }
    std::size_t dim_b() const { return h_b_.dim(); }
    std::size_t dim() const { return dim_s() * dim_b(); }
    const HermitianOperator& h_s() const { return h_s_; }
    const HermitianOperator& h_b() const { return h_b_; }
    const HermitianOperator& v() const { return v_; }
    double g() const { return g_; }

    CompositeSystem with_h_s(HermitianOperator h) const { return {std::move(h), h_b_, v_, g_}; }
    CompositeSystem with_g(double g) const { return {h_s_, h_b_, v_, g}; }

    /// g * v
    HermitianOperator interaction() const { return g_ * v_; }
    /// h_s (x) 1 + 1 (x) h_b
    HermitianOperator free_hamiltonian() const;
    HermitianOperator free_hamiltonian(const HermitianOperator& h_s) const;
    /// h_s (x) 1 + 1 (x) h_b + g v
    HermitianOperator total() const { return free_hamiltonian() + interaction(); }
    HermitianOperator total(const HermitianOperator& h_s) const {
        return free_hamiltonian(h_s) + interaction();
    }

  private:
    HermitianOperator h_s_;
    HermitianOperator h_b_;
    HermitianOperator v_;
    double g_;
};

/// Kronecker product A (x) B with the S-major convention.
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b) {
    return HermitianOperator::from_hermitian(kron(a.matrix(), b.matrix()));
}

/// op (x) 1_B (side S) or 1_S (x) op (side B) on the space with factor dims (dim_s, dim_b).
inline HermitianOperator embed(const HermitianOperator& op, Side side, std::size_t dim_s,
                               std::size_t dim_b) {
    const std::size_t expected = side == Side::S ? dim_s : dim_b;
    if (op.dim() != expected) throw DimensionError("embed: operator does not match chosen side");
    if (side == Side::S) return kron(op, HermitianOperator::identity(dim_b));
    return kron(HermitianOperator::identity(dim_s), op);
}

inline HermitianOperator embed(const HermitianOperator& op, Side side, const CompositeSystem& sys) {
    return embed(op, side, sys.dim_s(), sys.dim_b());
}

/// Partial trace of a (not necessarily Hermitian) matrix.
inline Matrix partial_trace(const Matrix& op, Side keep, std::size_t dim_s, std::size_t dim_b) {
    const auto ds = static_cast<Eigen::Index>(dim_s);
    const auto db = static_cast<Eigen::Index>(dim_b);
    if (op.rows() != ds * db || op.cols() != ds * db) {
        throw DimensionError("partial_trace: operator dimension != dim_S * dim_B");
    }
    if (keep == Side::S) {
        Matrix out(ds, ds);
        for (Eigen::Index s = 0; s < ds; ++s)
            for (Eigen::Index t = 0; t < ds; ++t) out(s, t) = op.block(s * db, t * db, db, db).trace();
        return out;
    }
    Matrix out = Matrix::Zero(db, db);
    for (Eigen::Index s = 0; s < ds; ++s) out += op.block(s * db, s * db, db, db);
    return out;
}

inline HermitianOperator partial_trace(const HermitianOperator& op, Side keep, std::size_t dim_s,
                                       std::size_t dim_b) {
    return HermitianOperator(partial_trace(op.matrix(), keep, dim_s, dim_b));
}

inline HermitianOperator partial_trace(const HermitianOperator& op, Side keep,
                                       const CompositeSystem& sys) {
    return partial_trace(op, keep, sys.dim_s(), sys.dim_b());
}

inline HermitianOperator CompositeSystem::free_hamiltonian(const HermitianOperator& h_s) const {
    return embed(h_s, Side::S, *this) + embed(h_b_, Side::B, *this);
}
inline HermitianOperator CompositeSystem::free_hamiltonian() const { return free_hamiltonian(h_s_); }

/// V diag(f(lambda)) V^dagger
inline HermitianOperator apply_spectral(const Spectrum& sp, const std::function<double(double)>& f) {
    RealVector fv = sp.values.unaryExpr(f);
    Matrix out = sp.vectors * fv.cast<cplx>().asDiagonal() * sp.vectors.adjoint();
    return HermitianOperator::from_hermitian(0.5 * (out + out.adjoint()));
}

enum class MatrixFunction { Exp, Log, Power };

/// f(op) via the eigendecomposition. `exponent` is used by Power only; non-integer
/// powers require a non-negative spectrum.
inline HermitianOperator matrix_function(const HermitianOperator& op, MatrixFunction f,
                                         double exponent = 1.0) {
    const Spectrum sp = op.spectrum();
    switch (f) {
    case MatrixFunction::Exp:
        return apply_spectral(sp, [](double x) { return std::exp(x); });
    case MatrixFunction::Log:
        if (sp.values.minCoeff() <= 0.0) {
            throw DomainError("matrix log: operator is not strictly positive definite");
        }
        return apply_spectral(sp, [](double x) { return std::log(x); });
    case MatrixFunction::Power:
        if (exponent != std::floor(exponent) && sp.values.minCoeff() < 0.0) {
            throw DomainError("matrix power: fractional power of an operator with negative spectrum");
        }
        return apply_spectral(sp, [exponent](double x) { return std::pow(x, exponent); });
    }
    throw DomainError("unknown matrix function");
}

/// Largest |eigenvalue|.
inline double operator_norm(const HermitianOperator& op) {
    return op.spectrum().values.cwiseAbs().maxCoeff();
}

/// Spectral norm of an arbitrary square matrix (largest singular value).
inline double operator_norm(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

/// i [A, B], which is Hermitian for Hermitian A, B.
inline HermitianOperator i_commutator(const HermitianOperator& a, const HermitianOperator& b) {
    Matrix c = cplx(0.0, 1.0) * (a.matrix() * b.matrix() - b.matrix() * a.matrix());
    return HermitianOperator(c);
}

/// Traceless part op - tr(op)/dim * 1.
inline HermitianOperator traceless(const HermitianOperator& op) {
    return op - HermitianOperator::identity(op.dim()) * (op.trace() / static_cast<double>(op.dim()));
}

/// Frobenius norm.
inline double frobenius_norm(const HermitianOperator& op) { return op.matrix().norm(); }

namespace pauli {
inline HermitianOperator x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return HermitianOperator(m);
}
inline HermitianOperator y() {
    Matrix m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return HermitianOperator(m);
}
inline HermitianOperator z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return HermitianOperator(m);
}
} // namespace pauli

} // namespace sct
