#pragma once

// Dense real linear algebra for the small matrices that appear in switched
// system certification: definiteness tests, Lyapunov equations, the matrix
// exponential and the minimal congruence scaling between two SPD matrices.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace seqdwell {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline std::string shape(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

}  // namespace detail

inline void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) throw InputError(what + ": matrix has non-finite entries");
}

inline void require_square(const Matrix& m, const std::string& what) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw InputError(what + ": expected a non-empty square matrix, got " + detail::shape(m));
}

/// Real symmetric matrix. Input is symmetrized on construction, so
/// max |S - S^T| is exactly zero for every stored value.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;

    explicit SymmetricMatrix(const Matrix& m) {
        require_square(m, "SymmetricMatrix");
        require_finite(m, "SymmetricMatrix");
        data_ = 0.5 * (m + m.transpose());
    }

    static SymmetricMatrix identity(Eigen::Index n) { return SymmetricMatrix(Matrix::Identity(n, n)); }

    static SymmetricMatrix diagonal(std::initializer_list<double> d) {
        Vector v(static_cast<Eigen::Index>(d.size()));
        Eigen::Index i = 0;
        for (double x : d) v(i++) = x;
        return SymmetricMatrix(Matrix(v.asDiagonal()));
    }

    [[nodiscard]] Eigen::Index order() const { return data_.rows(); }
    [[nodiscard]] const Matrix& matrix() const { return data_; }
    [[nodiscard]] double operator()(Eigen::Index r, Eigen::Index c) const { return data_(r, c); }

    [[nodiscard]] SymmetricMatrix operator*(double s) const { return SymmetricMatrix(data_ * s); }
    [[nodiscard]] SymmetricMatrix operator-() const { return SymmetricMatrix(Matrix(-data_)); }

    friend bool operator==(const SymmetricMatrix& a, const SymmetricMatrix& b) {
        return a.data_.rows() == b.data_.rows() && a.data_ == b.data_;
    }

private:
    Matrix data_;
};

struct EigenDecomposition {
    Vector eigenvalues;  // ascending
    Matrix eigenvectors; // orthonormal columns, same order as eigenvalues
};

inline EigenDecomposition sym_eig(const SymmetricMatrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s.matrix());
    if (solver.info() != Eigen::Success) throw NumericError("sym_eig: eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double min_eigenvalue(const SymmetricMatrix& s) {
    return Eigen::SelfAdjointEigenSolver<Matrix>(s.matrix(), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

inline double max_eigenvalue(const SymmetricMatrix& s) {
    return Eigen::SelfAdjointEigenSolver<Matrix>(s.matrix(), Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

/// True iff the smallest eigenvalue exceeds `margin`.
inline bool is_positive_definite(const SymmetricMatrix& s, double margin = 0.0) {
    return min_eigenvalue(s) > margin;
}

/// Spectral 2-norm of a symmetric matrix.
inline double norm2(const SymmetricMatrix& s) {
    const auto ev = Eigen::SelfAdjointEigenSolver<Matrix>(s.matrix(), Eigen::EigenvaluesOnly).eigenvalues();
    return std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
}

/// Eigenvalues of a general real square matrix.
inline std::vector<std::complex<double>> eigenvalues(const Matrix& a) {
    require_square(a, "eigenvalues");
    require_finite(a, "eigenvalues");
    Eigen::EigenSolver<Matrix> solver(a, false);
    if (solver.info() != Eigen::Success) throw NumericError("eigenvalues: QR iteration did not converge");
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

/// Largest real part over the spectrum.
inline double spectral_abscissa(const Matrix& a) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& z : eigenvalues(a)) best = std::max(best, z.real());
    return best;
}

inline double spectral_radius(const Matrix& a) {
    double best = 0.0;
    for (const auto& z : eigenvalues(a)) best = std::max(best, std::abs(z));
    return best;
}

namespace detail {

// Column-major vec: vec(X) stacks the columns of X.
inline Vector vec(const Matrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

inline Matrix unvec(const Vector& v, Eigen::Index n) { return Eigen::Map<const Matrix>(v.data(), n, n); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Solves op * vec(P) = rhs with one step of iterative refinement.
inline Matrix solve_vectorized(const Matrix& op, const Vector& rhs, Eigen::Index n, const char* who) {
    Eigen::FullPivLU<Matrix> lu(op);
    if (!lu.isInvertible()) throw NumericError(std::string(who) + ": singular Kronecker system");
    Vector x = lu.solve(rhs);
    x += lu.solve(rhs - op * x);
    if (!x.allFinite()) throw NumericError(std::string(who) + ": non-finite solution");
    return unvec(x, n);
}

inline void check_lyapunov_inputs(const Matrix& a, const SymmetricMatrix& q, const char* who) {
    require_square(a, who);
    require_finite(a, who);
    if (q.order() != a.rows())
        throw InputError(std::string(who) + ": Q order " + std::to_string(q.order()) + " does not match A " +
                         shape(a));
}

}  // namespace detail

/// Solves A^T P + P A = -Q for Hurwitz A by vectorization:
/// (I (x) A^T + A^T (x) I) vec(P) = -vec(Q).
inline SymmetricMatrix solve_lyapunov_continuous(const Matrix& a, const SymmetricMatrix& q) {
    detail::check_lyapunov_inputs(a, q, "solve_lyapunov_continuous");
    const double abscissa = spectral_abscissa(a);
    if (!(abscissa < 0.0)) {
        std::ostringstream os;
        os << "solve_lyapunov_continuous: A is not Hurwitz (spectral abscissa " << abscissa << ")";
        throw InfeasibleError(os.str());
    }
    const Eigen::Index n = a.rows();
    const Matrix id = Matrix::Identity(n, n);
    const Matrix at = a.transpose();
    const Matrix op = detail::kron(id, at) + detail::kron(at, id);
    return SymmetricMatrix(detail::solve_vectorized(op, -detail::vec(q.matrix()), n, "solve_lyapunov_continuous"));
}

/// Solves A^T P A - P = -Q for Schur-stable A:
/// (A^T (x) A^T - I) vec(P) = -vec(Q).
inline SymmetricMatrix solve_lyapunov_discrete(const Matrix& a, const SymmetricMatrix& q) {
    detail::check_lyapunov_inputs(a, q, "solve_lyapunov_discrete");
    const double radius = spectral_radius(a);
    if (!(radius < 1.0)) {
        std::ostringstream os;
        os << "solve_lyapunov_discrete: A is not Schur stable (spectral radius " << radius << ")";
        throw InfeasibleError(os.str());
    }
    const Eigen::Index n = a.rows();
    const Matrix at = a.transpose();
    const Matrix op = detail::kron(at, at) - Matrix::Identity(n * n, n * n);
    return SymmetricMatrix(detail::solve_vectorized(op, -detail::vec(q.matrix()), n, "solve_lyapunov_discrete"));
}

/// e^{A t}.
inline Matrix expm(const Matrix& a, double t) {
    require_square(a, "expm");
    require_finite(a, "expm");
    if (!std::isfinite(t)) throw InputError("expm: non-finite time");
    if (t == 0.0) return Matrix::Identity(a.rows(), a.cols());
    const Matrix at = a * t;
    return at.exp();
}

/// Smallest mu with P_p <= mu * P_q, i.e. the largest eigenvalue of
/// L^{-1} P_p L^{-T} where P_q = L L^T.
inline double min_scaling_mu(const SymmetricMatrix& p_p, const SymmetricMatrix& p_q) {
    if (p_p.order() != p_q.order())
        throw InputError("min_scaling_mu: order mismatch " + std::to_string(p_p.order()) + " vs " +
                         std::to_string(p_q.order()));
    if (!is_positive_definite(p_p)) throw InputError("min_scaling_mu: P_p is not positive definite");
    if (!is_positive_definite(p_q)) throw InputError("min_scaling_mu: P_q is not positive definite");
    Eigen::LLT<Matrix> llt(p_q.matrix());
    if (llt.info() != Eigen::Success) throw InputError("min_scaling_mu: Cholesky of P_q failed");
    const Matrix l = llt.matrixL();
    // X = L^{-1} P_p, then M = X L^{-T} = (L^{-1} X^T)^T.
    const Matrix x = l.triangularView<Eigen::Lower>().solve(p_p.matrix());
    const Matrix m = l.triangularView<Eigen::Lower>().solve(x.transpose()).transpose();
    return max_eigenvalue(SymmetricMatrix(m));
}

}  // namespace seqdwell
