#pragma once

#include <optional>

#include "picardkit/lbfgs.hpp"
#include "picardkit/likelihood.hpp"
#include "picardkit/linalg.hpp"
#include "picardkit/solver.hpp"

namespace picardkit {

/// Largest N for which N^2 x N^2 Hessians are materialized.
inline constexpr Index kMaxHessianSources = 64;
/// Largest N for which H_P^{-1} is materialized (N^2 two-loop applications).
inline constexpr Index kMaxPreconditionerSources = 16;

/// Flat index of matrix coordinate (i, j) in the N^2-dimensional space.
inline Index pair_index(Index n, Index i, Index j) { return i * n + j; }

/// Symmetrized relative Hessian: entry ((i,j),(k,l)) = (H_ijkl + H_klij)/2.
Matrix materialize_full_hessian(const HessianTensor& h);

/// H~_reg as a dense block-diagonal matrix, blocks as in solve_regularized.
Matrix materialize_simple_hessian(const ApproxHessianCoeffs& coeffs, double lambda_floor);

/// H_P^{-1}: column k is -two_loop_direction(E_k). Symmetrized.
Matrix materialize_preconditioner_inverse(const LbfgsMemory& mem, const ApproxHessianCoeffs& coeffs,
                                          double lambda_floor);

/// Same as above without the final symmetrization, for auditing.
Matrix materialize_preconditioner_inverse_raw(const LbfgsMemory& mem, const ApproxHessianCoeffs& coeffs,
                                              double lambda_floor);

struct SpectrumReport {
    Vector eigenvalues;  // ascending
    double lambda_m = 0.0;
    double lambda_M = 0.0;
    double kappa = 0.0;  // lambda_M / lambda_m, +inf when lambda_m <= 0
};

/// Spectrum of H_hat^{-1/2} H H_hat^{-1/2}, via H_hat = L L^T and the
/// eigenvalues of L^{-1} H L^{-T}.
SpectrumReport preconditioned_spectrum(const Matrix& h, const Matrix& h_hat);

/// Orthonormal basis (E_ij - E_ji)/sqrt(2), i < j, of antisymmetric N x N
/// matrices, as columns of an N^2 x N(N-1)/2 matrix.
Matrix antisymmetric_basis(Index n);

/// preconditioned_spectrum restricted to the antisymmetric subspace.
SpectrumReport constrained_spectrum(const Matrix& h, const Matrix& h_hat);

/// Empirical contraction factor r = 1 - median over the last half of the
/// trace of (L_{n+1} - L*)/(L_n - L*). Gaps are accumulated from the
/// records' loss_decrease when every step carries one, and from raw loss
/// values otherwise. Returns nullopt when fewer than 5 records sit above L*.
std::optional<double> measure_rate(const Trace& trace, double l_star);

}  // namespace picardkit
