#pragma once

#include <vector>

#include "picardkit/linalg.hpp"
#include "picardkit/score.hpp"

namespace picardkit {

/// Average negative log-likelihood
///   L(W) = -log|det W| + sum_i mean_t[-log p(y_it)],  Y = W X.
/// Throws SingularityError when |det W| <= 1e-300.
double loss(const Matrix& w, const Matrix& x, const ScoreModel& score);

/// sum_i mean_t[-log p(y_it)], the data part of the loss.
double sample_loss(const Matrix& y, const ScoreModel& score);

/// log|det W| through an LU factorization.
double log_abs_det(const Matrix& w);

/// Relative gradient G_ij = mean_t[psi(y_it) y_jt] - delta_ij.
Matrix relative_gradient(const Matrix& y, const ScoreModel& score);

/// Same quantity evaluated at Y = W X.
Matrix relative_gradient(const Matrix& w, const Matrix& x, const ScoreModel& score);

/// Relative Hessian
///   H_ijkl = delta_il delta_jk kappa_i + delta_ik m_ijl
/// with kappa_i = mean[psi_i y_i] and m_ijl = mean[psi'_i y_j y_l].
/// Costs O(N^3 T); diagnostics only.
struct HessianTensor {
    Vector kappa;
    std::vector<Matrix> moments;  // moments[i](j, l) = m_ijl, symmetric in (j, l)

    Index size() const { return kappa.size(); }
    double entry(Index i, Index j, Index k, Index l) const;
};

HessianTensor full_hessian(const Matrix& y, const ScoreModel& score);

/// Coefficients of the independence approximation
///   H~_ijkl = delta_il delta_jk kappa_i + delta_ik delta_jl h_ij,
/// h_ij = mean[psi'_i(y_i) y_j^2]. O(N^2 T).
struct ApproxHessianCoeffs {
    Vector kappa;
    Matrix h;

    Index size() const { return kappa.size(); }
};

ApproxHessianCoeffs approx_hessian(const Matrix& y, const ScoreModel& score);

/// One pass over Y producing both G and the H~ coefficients.
struct GradientAndCurvature {
    Matrix gradient;
    ApproxHessianCoeffs coeffs;
};

GradientAndCurvature gradient_and_approx_hessian(const Matrix& y, const ScoreModel& score);

/// The regularized H~ block acting on coordinates ((i,j), (j,i)), i != j:
/// [[h_ij, kbar], [kbar, h_ji]] with kbar = (kappa_i + kappa_j)/2 and
/// eigenvalues clamped from below at lambda_floor.
Eigen::Matrix2d regularized_pair_block(const ApproxHessianCoeffs& coeffs, Index i, Index j,
                                       double lambda_floor);

/// max(h_ii + kappa_i, lambda_floor), the (i,i) coordinate of H~_reg.
double regularized_diagonal(const ApproxHessianCoeffs& coeffs, Index i, double lambda_floor);

/// D = -H~_reg^{-1} G, solved block by block.
Matrix solve_regularized(const ApproxHessianCoeffs& coeffs, const Matrix& g, double lambda_floor);

}  // namespace picardkit
