#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace picardkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Frobenius scalar product <A|B> = sum_ij A_ij B_ij.
double frobenius_dot(const Matrix& a, const Matrix& b);

/// max_ij |M_ij|.
double sup_norm(const Matrix& m);

/// Throws ContractError when any entry is NaN or Inf.
void require_finite(const Matrix& m, std::string_view what);

/// Throws DimensionError unless m is square.
void require_square(const Matrix& m, std::string_view what);

/// Matrix exponential by scaling and squaring around a degree-13 Pade
/// approximant. Accurate to ~1e-15 relative for moderate norms.
Matrix matrix_exp(const Matrix& m);

struct SymEig {
    Vector eigenvalues;   // ascending
    Matrix eigenvectors;  // orthonormal columns, eigenvectors.col(k) <-> eigenvalues(k)
};

/// Symmetric eigendecomposition. Cyclic Jacobi rotations up to
/// kJacobiMaxDim rows; larger operators go through Householder
/// tridiagonalization (Eigen) since Jacobi is cubic per sweep.
SymEig sym_eig(const Matrix& s);

inline constexpr Index kJacobiMaxDim = 256;

/// Cyclic Jacobi eigensolver regardless of size. Exposed for tests.
SymEig jacobi_eig(const Matrix& s);

/// Lower Cholesky factor L with S = L L^T. Throws NotSpdError on a
/// non-positive pivot.
Matrix cholesky_lower(const Matrix& s);

Vector solve_spd(const Matrix& s, const Vector& b);
Matrix solve_spd(const Matrix& s, const Matrix& b);

/// Empirical covariance (1/T) X X^T without centering.
Matrix second_moment(const Matrix& x);

/// True when (1/T) X X^T is within tol of the identity (sup-norm).
bool is_white(const Matrix& x, double tol);

struct WhiteningResult {
    Matrix whitener;                // symmetric C^{-1/2}
    Vector mean;                    // removed before whitening
    Vector covariance_eigenvalues;  // descending, all positive
};

struct Whitened {
    Matrix z;
    WhiteningResult result;
};

/// Centers X and applies the ZCA whitener C^{-1/2}. Rank-deficient
/// covariances (smallest eigenvalue <= 1e-12 x largest) are rejected with
/// DegenerateDataError.
Whitened whiten(const Matrix& x);

/// whitener * (X - mean), for data not used to fit the whitener.
Matrix apply_whitening(const WhiteningResult& w, const Matrix& x);

/// Projection of centered X onto its top-k covariance eigenvectors.
Matrix pca_reduce(const Matrix& x, Index k);

}  // namespace picardkit
