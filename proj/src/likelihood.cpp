#include "picardkit/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "picardkit/errors.hpp"
#include "picardkit/parallel.hpp"

namespace picardkit {
namespace {

constexpr double kLogDetFloor = -690.7755278982137;  // log(1e-300)

// Eigen-decomposition of the symmetric 2x2 [[a, b], [b, d]].
// Eigenvector of `hi` is (c, s); eigenvector of `lo` is (-s, c).
struct Eig2 {
    double lo;
    double hi;
    double c;
    double s;
};

Eig2 eig2(double a, double b, double d) {
    const double mean = 0.5 * (a + d);
    const double half = 0.5 * (a - d);
    const double r = std::hypot(half, b);
    const double theta = 0.5 * std::atan2(b, half);
    return {mean - r, mean + r, std::cos(theta), std::sin(theta)};
}

void require_samples(const Matrix& y) {
    if (y.rows() < 1 || y.cols() < 1) throw DimensionError("signal matrix must be non-empty");
}

}  // namespace

double HessianTensor::entry(Index i, Index j, Index k, Index l) const {
    double v = 0.0;
    if (i == l && j == k) v += kappa(i);
    if (i == k) v += moments[static_cast<std::size_t>(i)](j, l);
    return v;
}

double log_abs_det(const Matrix& w) {
    require_square(w, "log_abs_det");
    Eigen::PartialPivLU<Matrix> lu(w);
    const Matrix& packed = lu.matrixLU();
    double acc = 0.0;
    for (Index k = 0; k < packed.rows(); ++k) {
        const double u = std::abs(packed(k, k));
        if (u == 0.0) throw SingularityError("unmixing matrix is singular");
        acc += std::log(u);
    }
    if (!(acc > kLogDetFloor)) {
        std::ostringstream msg;
        msg << "unmixing matrix is numerically singular (log|det W| = " << acc << ")";
        throw SingularityError(msg.str());
    }
    return acc;
}

double sample_loss(const Matrix& y, const ScoreModel& score) {
    require_samples(y);
    const double total = parallel::reduce_columns<double>(y.cols(), [&](Index b, Index len) {
        Matrix r(y.rows(), len);
        score.neglogp(y.middleCols(b, len), r);
        return r.sum();
    });
    return total / static_cast<double>(y.cols());
}

double loss(const Matrix& w, const Matrix& x, const ScoreModel& score) {
    require_square(w, "loss");
    if (w.cols() != x.rows()) throw DimensionError("loss: W and X have incompatible shapes");
    require_finite(x, "signal matrix");
    const double logdet = log_abs_det(w);
    return -logdet + sample_loss(w * x, score);
}

Matrix relative_gradient(const Matrix& y, const ScoreModel& score) {
    require_samples(y);
    const Index n = y.rows();
    Matrix acc = parallel::reduce_columns<Matrix>(y.cols(), [&](Index b, Index len) {
        const auto yc = y.middleCols(b, len);
        Matrix p(y.rows(), len);
        score.psi(yc, p);
        return Matrix(p * yc.transpose());
    });
    acc /= static_cast<double>(y.cols());
    acc -= Matrix::Identity(n, n);
    return acc;
}

Matrix relative_gradient(const Matrix& w, const Matrix& x, const ScoreModel& score) {
    require_square(w, "relative_gradient");
    if (w.cols() != x.rows()) throw DimensionError("relative_gradient: W and X have incompatible shapes");
    return relative_gradient(Matrix(w * x), score);
}

GradientAndCurvature gradient_and_approx_hessian(const Matrix& y, const ScoreModel& score) {
    require_samples(y);
    const Index n = y.rows();
    Matrix acc = parallel::reduce_columns<Matrix>(y.cols(), [&](Index b, Index len) {
        const auto yc = y.middleCols(b, len);
        Matrix p(n, len);
        Matrix q(n, len);
        score.psi_and_prime(yc, p, q);
        const Matrix y2 = yc.cwiseProduct(yc);
        Matrix out(n, 2 * n);
        out.leftCols(n).noalias() = p * yc.transpose();
        out.rightCols(n).noalias() = q * y2.transpose();
        return out;
    });
    acc /= static_cast<double>(y.cols());

    GradientAndCurvature out;
    out.gradient = acc.leftCols(n) - Matrix::Identity(n, n);
    out.coeffs.kappa = acc.leftCols(n).diagonal();
    out.coeffs.h = acc.rightCols(n);
    return out;
}

ApproxHessianCoeffs approx_hessian(const Matrix& y, const ScoreModel& score) {
    return gradient_and_approx_hessian(y, score).coeffs;
}

HessianTensor full_hessian(const Matrix& y, const ScoreModel& score) {
    require_samples(y);
    const Index n = y.rows();
    Matrix acc = parallel::reduce_columns<Matrix>(y.cols(), [&](Index b, Index len) {
        const auto yc = y.middleCols(b, len);
        Matrix q(n, len);
        score.psi_prime(yc, q);
        Matrix out(n, n * n);
        for (Index i = 0; i < n; ++i) {
            const Matrix weighted = (yc.array().rowwise() * q.row(i).array()).matrix();
            out.middleCols(i * n, n).noalias() = weighted * yc.transpose();
        }
        return out;
    });
    acc /= static_cast<double>(y.cols());

    // The j == l moments are exactly the H~ coefficients; reuse them so the
    // two operators agree bit for bit on that diagonal.
    const ApproxHessianCoeffs simple = approx_hessian(y, score);

    HessianTensor out;
    out.kappa = simple.kappa;
    out.moments.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        Matrix m = acc.middleCols(i * n, n);
        for (Index j = 0; j < n; ++j) {
            m(j, j) = simple.h(i, j);
            for (Index l = j + 1; l < n; ++l) m(l, j) = m(j, l);
        }
        out.moments.push_back(std::move(m));
    }
    return out;
}

Eigen::Matrix2d regularized_pair_block(const ApproxHessianCoeffs& coeffs, Index i, Index j,
                                       double lambda_floor) {
    const double kbar = 0.5 * (coeffs.kappa(i) + coeffs.kappa(j));
    const Eig2 e = eig2(coeffs.h(i, j), kbar, coeffs.h(j, i));
    const double lo = std::max(e.lo, lambda_floor);
    const double hi = std::max(e.hi, lambda_floor);
    Eigen::Matrix2d v;
    v << e.c, -e.s, e.s, e.c;
    return v * Eigen::Vector2d(hi, lo).asDiagonal() * v.transpose();
}

double regularized_diagonal(const ApproxHessianCoeffs& coeffs, Index i, double lambda_floor) {
    return std::max(coeffs.h(i, i) + coeffs.kappa(i), lambda_floor);
}

Matrix solve_regularized(const ApproxHessianCoeffs& coeffs, const Matrix& g, double lambda_floor) {
    const Index n = coeffs.size();
    if (g.rows() != n || g.cols() != n || coeffs.h.rows() != n || coeffs.h.cols() != n) {
        throw DimensionError("solve_regularized: shape mismatch");
    }
    if (!(lambda_floor > 0.0)) throw ContractError("solve_regularized: lambda_floor must be positive");

    Matrix d(n, n);
    for (Index i = 0; i < n; ++i) {
        d(i, i) = -g(i, i) / regularized_diagonal(coeffs, i, lambda_floor);
        for (Index j = i + 1; j < n; ++j) {
            const double kbar = 0.5 * (coeffs.kappa(i) + coeffs.kappa(j));
            const Eig2 e = eig2(coeffs.h(i, j), kbar, coeffs.h(j, i));
            const double inv_hi = 1.0 / std::max(e.hi, lambda_floor);
            const double inv_lo = 1.0 / std::max(e.lo, lambda_floor);
            const double g1 = g(i, j);
            const double g2 = g(j, i);
            const double p_hi = (e.c * g1 + e.s * g2) * inv_hi;
            const double p_lo = (-e.s * g1 + e.c * g2) * inv_lo;
            d(i, j) = -(e.c * p_hi - e.s * p_lo);
            d(j, i) = -(e.s * p_hi + e.c * p_lo);
        }
    }
    return d;
}

}  // namespace picardkit
