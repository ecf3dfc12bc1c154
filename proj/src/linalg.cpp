#include "picardkit/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "picardkit/errors.hpp"

namespace picardkit {
namespace {

// Degree-13 Pade coefficients and the matching norm bound (Higham 2005).
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};
constexpr double kTheta13 = 5.371920351148152;

constexpr double kRankTolerance = 1e-12;

double symmetry_defect(const Matrix& s) {
    return (s - s.transpose()).cwiseAbs().maxCoeff();
}

SymEig sorted(Vector values, Matrix vectors) {
    const Index n = values.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return values(a) < values(b); });
    SymEig out{Vector(n), Matrix(vectors.rows(), n)};
    for (Index k = 0; k < n; ++k) {
        out.eigenvalues(k) = values(order[static_cast<std::size_t>(k)]);
        out.eigenvectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

struct CovarianceEig {
    Vector mean;
    Matrix centered;
    Vector values;   // descending
    Matrix vectors;  // matching columns
};

CovarianceEig covariance_eig(const Matrix& x) {
    require_finite(x, "signal matrix");
    const double t = static_cast<double>(x.cols());
    CovarianceEig out;
    out.mean = x.rowwise().sum() / t;
    out.centered = x.colwise() - out.mean;
    Matrix c = out.centered * out.centered.transpose() / t;
    c = 0.5 * (c + c.transpose());
    SymEig eig = sym_eig(c);
    out.values = eig.eigenvalues.reverse();
    out.vectors = eig.eigenvectors.rowwise().reverse();
    return out;
}

}  // namespace

double frobenius_dot(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("frobenius_dot: shape mismatch");
    }
    return a.cwiseProduct(b).sum();
}

double sup_norm(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

void require_finite(const Matrix& m, std::string_view what) {
    if (!m.allFinite()) {
        throw ContractError(std::string(what) + " contains NaN or Inf");
    }
}

void require_square(const Matrix& m, std::string_view what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        std::ostringstream msg;
        msg << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
        throw DimensionError(msg.str());
    }
}

Matrix matrix_exp(const Matrix& m) {
    require_square(m, "matrix_exp");
    require_finite(m, "matrix_exp input");
    const Index n = m.rows();
    const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 == 0.0) return Matrix::Identity(n, n);

    int squarings = 0;
    if (norm1 > kTheta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    }
    const Matrix a = m / std::ldexp(1.0, squarings);
    const Matrix id = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const auto& b = kPade13;

    const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                           b[3] * a2 + b[1] * id;
    const Matrix u = a * u_inner;
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                     b[2] * a2 + b[0] * id;

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) r = r * r;
    return r;
}

SymEig jacobi_eig(const Matrix& s) {
    require_square(s, "sym_eig");
    const Index n = s.rows();
    Matrix a = 0.5 * (s + s.transpose());
    Matrix v = Matrix::Identity(n, n);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Index p = 0; p < n; ++p) {
            for (Index q = p + 1; q < n; ++q) off += std::abs(a(p, q));
        }
        if (off == 0.0) break;

        for (Index p = 0; p < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                const double g = 100.0 * std::abs(apq);
                // Entries below the diagonals' resolution are dropped once the
                // quadratic phase has started.
                if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
                    std::abs(a(q, q)) + g == std::abs(a(q, q))) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                if (apq == 0.0) continue;

                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;

                for (Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    return sorted(a.diagonal(), std::move(v));
}

SymEig sym_eig(const Matrix& s) {
    require_square(s, "sym_eig");
    require_finite(s, "sym_eig input");
    const double scale = std::max(1.0, sup_norm(s));
    const double defect = symmetry_defect(s);
    if (defect > 1e-10 * scale) {
        std::ostringstream msg;
        msg << "sym_eig: input is not symmetric (max |S - S^T| = " << defect << ")";
        throw ContractError(msg.str());
    }
    if (s.rows() <= kJacobiMaxDim) return jacobi_eig(s);

    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (s + s.transpose()));
    return sorted(solver.eigenvalues(), solver.eigenvectors());
}

Matrix cholesky_lower(const Matrix& s) {
    require_square(s, "cholesky");
    const Index n = s.rows();
    Matrix l = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        double pivot = s(j, j);
        for (Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        if (!(pivot > 0.0)) {
            std::ostringstream msg;
            msg << "matrix is not positive definite (pivot " << pivot << " at row " << j << ")";
            throw NotSpdError(msg.str());
        }
        const double ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        for (Index i = j + 1; i < n; ++i) {
            double acc = s(i, j);
            for (Index k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
            l(i, j) = acc / ljj;
        }
    }
    return l;
}

Matrix solve_spd(const Matrix& s, const Matrix& b) {
    if (b.rows() != s.rows()) throw DimensionError("solve_spd: right-hand side has wrong length");
    const Matrix l = cholesky_lower(s);
    const auto lower = l.triangularView<Eigen::Lower>();
    Matrix y = lower.solve(b);
    return lower.transpose().solve(y);
}

Vector solve_spd(const Matrix& s, const Vector& b) {
    return solve_spd(s, Matrix(b)).col(0);
}

Matrix second_moment(const Matrix& x) {
    return x * x.transpose() / static_cast<double>(x.cols());
}

bool is_white(const Matrix& x, double tol) {
    const Matrix c = second_moment(x);
    return sup_norm(c - Matrix::Identity(c.rows(), c.cols())) <= tol;
}

Whitened whiten(const Matrix& x) {
    if (x.cols() <= x.rows()) {
        std::ostringstream msg;
        msg << "whiten: need more samples than channels (got " << x.rows() << "x" << x.cols() << ")";
        throw DimensionError(msg.str());
    }
    CovarianceEig eig = covariance_eig(x);
    const Index n = x.rows();
    const double largest = eig.values(0);
    const double smallest = eig.values(n - 1);
    if (!(largest > 0.0) || !(smallest > kRankTolerance * largest)) {
        std::ostringstream msg;
        msg << "whiten: covariance is rank-deficient (eigenvalue " << smallest << " vs largest "
            << largest << ")";
        throw DegenerateDataError(msg.str());
    }
    Whitened out;
    const Vector inv_sqrt = eig.values.cwiseSqrt().cwiseInverse();
    out.result.whitener = eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
    out.result.whitener = 0.5 * (out.result.whitener + out.result.whitener.transpose());
    out.result.mean = std::move(eig.mean);
    out.result.covariance_eigenvalues = std::move(eig.values);
    out.z = out.result.whitener * eig.centered;
    return out;
}

Matrix apply_whitening(const WhiteningResult& w, const Matrix& x) {
    if (x.rows() != w.whitener.cols()) throw DimensionError("apply_whitening: channel count mismatch");
    return w.whitener * (x.colwise() - w.mean);
}

Matrix pca_reduce(const Matrix& x, Index k) {
    if (k < 1 || k > x.rows()) {
        std::ostringstream msg;
        msg << "pca_reduce: k=" << k << " outside [1, " << x.rows() << "]";
        throw DimensionError(msg.str());
    }
    CovarianceEig eig = covariance_eig(x);
    return eig.vectors.leftCols(k).transpose() * eig.centered;
}

}  // namespace picardkit
