#include "picardkit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "picardkit/errors.hpp"

namespace picardkit {
namespace {

void guard(Index n, Index limit, const char* what) {
    if (n > limit) {
        std::ostringstream msg;
        msg << what << ": refusing to materialize for N = " << n << " (limit " << limit << ")";
        throw SizeGuardError(msg.str());
    }
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

Matrix materialize_full_hessian(const HessianTensor& h) {
    const Index n = h.size();
    guard(n, kMaxHessianSources, "materialize_full_hessian");
    const Index dim = n * n;
    Matrix out(dim, dim);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            for (Index k = 0; k < n; ++k) {
                for (Index l = 0; l < n; ++l) {
                    out(pair_index(n, i, j), pair_index(n, k, l)) =
                        0.5 * (h.entry(i, j, k, l) + h.entry(k, l, i, j));
                }
            }
        }
    }
    return out;
}

Matrix materialize_simple_hessian(const ApproxHessianCoeffs& coeffs, double lambda_floor) {
    const Index n = coeffs.size();
    guard(n, kMaxHessianSources, "materialize_simple_hessian");
    Matrix out = Matrix::Zero(n * n, n * n);
    for (Index i = 0; i < n; ++i) {
        out(pair_index(n, i, i), pair_index(n, i, i)) = regularized_diagonal(coeffs, i, lambda_floor);
        for (Index j = i + 1; j < n; ++j) {
            const Eigen::Matrix2d b = regularized_pair_block(coeffs, i, j, lambda_floor);
            const Index a = pair_index(n, i, j);
            const Index c = pair_index(n, j, i);
            out(a, a) = b(0, 0);
            out(a, c) = b(0, 1);
            out(c, a) = b(0, 1);
            out(c, c) = b(1, 1);
        }
    }
    return out;
}

Matrix materialize_preconditioner_inverse_raw(const LbfgsMemory& mem, const ApproxHessianCoeffs& coeffs,
                                              double lambda_floor) {
    const Index n = coeffs.size();
    guard(n, kMaxPreconditionerSources, "materialize_preconditioner_inverse");
    const Index dim = n * n;
    Matrix out(dim, dim);
    Matrix basis = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            basis(i, j) = 1.0;
            const Matrix col = -two_loop_direction(mem, basis, coeffs, lambda_floor);
            basis(i, j) = 0.0;
            for (Index k = 0; k < n; ++k) {
                for (Index l = 0; l < n; ++l) out(pair_index(n, k, l), pair_index(n, i, j)) = col(k, l);
            }
        }
    }
    return out;
}

Matrix materialize_preconditioner_inverse(const LbfgsMemory& mem, const ApproxHessianCoeffs& coeffs,
                                          double lambda_floor) {
    const Matrix raw = materialize_preconditioner_inverse_raw(mem, coeffs, lambda_floor);
    return 0.5 * (raw + raw.transpose());
}

SpectrumReport preconditioned_spectrum(const Matrix& h, const Matrix& h_hat) {
    require_square(h, "preconditioned_spectrum");
    if (h_hat.rows() != h.rows() || h_hat.cols() != h.cols()) {
        throw DimensionError("preconditioned_spectrum: H and H_hat differ in size");
    }
    const Matrix l = cholesky_lower(h_hat);
    const auto lower = l.triangularView<Eigen::Lower>();
    // C = L^{-1} H L^{-T}
    const Matrix left = lower.solve(h);
    Matrix c = lower.solve(left.transpose()).transpose();
    c = 0.5 * (c + c.transpose());

    SpectrumReport r;
    r.eigenvalues = sym_eig(c).eigenvalues;
    r.lambda_m = r.eigenvalues(0);
    r.lambda_M = r.eigenvalues(r.eigenvalues.size() - 1);
    r.kappa = r.lambda_m > 0.0 ? r.lambda_M / r.lambda_m : std::numeric_limits<double>::infinity();
    return r;
}

Matrix antisymmetric_basis(Index n) {
    const Index dim = n * (n - 1) / 2;
    Matrix b = Matrix::Zero(n * n, dim);
    const double w = 1.0 / std::sqrt(2.0);
    Index col = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j, ++col) {
            b(pair_index(n, i, j), col) = w;
            b(pair_index(n, j, i), col) = -w;
        }
    }
    return b;
}

SpectrumReport constrained_spectrum(const Matrix& h, const Matrix& h_hat) {
    require_square(h, "constrained_spectrum");
    const Index n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(h.rows()))));
    if (n * n != h.rows() || n < 2) {
        throw DimensionError("constrained_spectrum: operator size must be N^2 with N >= 2");
    }
    const Matrix b = antisymmetric_basis(n);
    Matrix hc = b.transpose() * h * b;
    Matrix hhc = b.transpose() * h_hat * b;
    hc = 0.5 * (hc + hc.transpose());
    hhc = 0.5 * (hhc + hhc.transpose());
    return preconditioned_spectrum(hc, hhc);
}

std::optional<double> measure_rate(const Trace& trace, double l_star) {
    const std::size_t len = trace.size();
    if (len < 2) return std::nullopt;

    const bool use_decrease = std::all_of(trace.begin() + 1, trace.end(),
                                          [](const IterationRecord& r) { return r.loss_decrease > 0.0; });
    std::vector<double> gap(len);
    gap[len - 1] = trace[len - 1].loss - l_star;
    for (std::size_t k = len - 1; k-- > 0;) {
        gap[k] = use_decrease ? gap[k + 1] + trace[k + 1].loss_decrease : trace[k].loss - l_star;
    }

    const auto above = std::count_if(gap.begin(), gap.end(), [](double g) { return g > 0.0; });
    if (above < 5) return std::nullopt;

    std::vector<double> ratios;
    for (std::size_t k = len / 2; k + 1 < len; ++k) {
        if (gap[k] > 0.0) ratios.push_back(gap[k + 1] / gap[k]);
    }
    if (ratios.empty()) return std::nullopt;
    return 1.0 - median_of(std::move(ratios));
}

}  // namespace picardkit
