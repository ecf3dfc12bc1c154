#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "helpers.hpp"
#include "picardkit/errors.hpp"
#include "picardkit/linalg.hpp"

using namespace picardkit;
using namespace testing_util;

TEST(MatrixExp, ZeroIsIdentity) {
    EXPECT_LE(sup_norm(matrix_exp(Matrix::Zero(4, 4)) - Matrix::Identity(4, 4)), 1e-16);
}

TEST(MatrixExp, Diagonal) {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 2.0;
    const Matrix e = matrix_exp(d);
    EXPECT_NEAR(e(0, 0), std::exp(1.0), 1e-14);
    EXPECT_NEAR(e(1, 1), std::exp(2.0), 1e-13);
    EXPECT_EQ(e(0, 1), 0.0);
    EXPECT_EQ(e(1, 0), 0.0);
}

TEST(MatrixExp, QuarterRotation) {
    Matrix m(2, 2);
    m << 0.0, std::numbers::pi / 2, -std::numbers::pi / 2, 0.0;
    Matrix expected(2, 2);
    expected << 0.0, 1.0, -1.0, 0.0;
    EXPECT_LT((matrix_exp(m) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MatrixExp, RejectsNonSquare) { EXPECT_THROW(matrix_exp(Matrix::Zero(2, 3)), DimensionError); }

// Taylor series in long double on a matrix small enough for fast convergence,
// scaled back up by repeated squaring.
static Matrix series_exp(const Matrix& m) {
    using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    int squarings = 0;
    long double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.05L) {
        norm /= 2;
        ++squarings;
    }
    const LMat a = m.cast<long double>() / std::pow(2.0L, squarings);
    LMat term = LMat::Identity(m.rows(), m.cols());
    LMat sum = term;
    for (int k = 1; k < 40; ++k) {
        term = term * a / static_cast<long double>(k);
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum.cast<double>();
}

TEST(MatrixExp, MatchesSeriesOracleUpToNormTen) {
    std::mt19937_64 gen(11);
    for (double scale : {0.01, 0.5, 2.0, 5.0, 10.0}) {
        for (int rep = 0; rep < 5; ++rep) {
            Matrix m = gaussian(5, 5, gen);
            m *= scale / m.norm();
            const Matrix ours = matrix_exp(m);
            const Matrix oracle = series_exp(m);
            EXPECT_LE((ours - oracle).norm() / oracle.norm(), 1e-12) << "norm " << scale;
            const Matrix eigen_ref = m.exp();
            EXPECT_LE((ours - eigen_ref).norm() / eigen_ref.norm(), 1e-12) << "norm " << scale;
        }
    }
}

TEST(MatrixExp, InverseProperty) {
    std::mt19937_64 gen(12);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix m = gaussian(6, 6, gen);
        m *= 5.0 * std::uniform_real_distribution<double>(0.0, 1.0)(gen) / m.norm();
        const Matrix prod = matrix_exp(m) * matrix_exp(-m);
        EXPECT_LE((prod - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(MatrixExp, AntisymmetricGivesOrthogonal) {
    std::mt19937_64 gen(13);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix a = gaussian(7, 7, gen) * 3.0;
        const Matrix q = matrix_exp(0.5 * (a - a.transpose()));
        EXPECT_LE((q * q.transpose() - Matrix::Identity(7, 7)).norm(), 1e-9);
    }
}

TEST(SymEig, Identity) {
    const SymEig e = sym_eig(Matrix::Identity(3, 3));
    for (Index k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(e.eigenvalues(k), 1.0);
}

TEST(SymEig, DiagonalSortedAscending) {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    const SymEig e = sym_eig(d);
    EXPECT_DOUBLE_EQ(e.eigenvalues(0), 1.0);
    EXPECT_DOUBLE_EQ(e.eigenvalues(1), 3.0);
}

TEST(SymEig, RandomReconstruction) {
    std::mt19937_64 gen(21);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix a = gaussian(10, 10, gen);
        const Matrix s = a + a.transpose();
        const SymEig e = sym_eig(s);
        const Matrix& v = e.eigenvectors;
        const Matrix recon = v * e.eigenvalues.asDiagonal() * v.transpose();
        EXPECT_LE((s - recon).norm() / s.norm(), 1e-9);
        EXPECT_LE((v.transpose() * v - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-10);
        for (Index k = 1; k < 10; ++k) EXPECT_LE(e.eigenvalues(k - 1), e.eigenvalues(k));
    }
}

TEST(SymEig, AgreesWithEigenSolver) {
    std::mt19937_64 gen(22);
    const Matrix a = gaussian(40, 40, gen);
    const Matrix s = a * a.transpose();
    const Vector ours = jacobi_eig(s).eigenvalues;
    const Vector ref = Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues();
    EXPECT_LE((ours - ref).cwiseAbs().maxCoeff(), 1e-10 * ref.cwiseAbs().maxCoeff());
}

TEST(SymEig, LargeOperatorsUseTridiagonalPath) {
    std::mt19937_64 gen(23);
    const Index n = kJacobiMaxDim + 20;
    const Matrix a = gaussian(n, n, gen);
    const Matrix s = a + a.transpose();
    const SymEig e = sym_eig(s);
    const Matrix recon = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
    EXPECT_LE((s - recon).norm() / s.norm(), 1e-9);
}

TEST(SymEig, OrthogonalConjugationInvariance) {
    std::mt19937_64 gen(24);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix a = gaussian(8, 8, gen);
        const Matrix s = a + a.transpose();
        const Matrix q = random_orthogonal(8, gen);
        Matrix c = q * s * q.transpose();
        c = 0.5 * (c + c.transpose());
        EXPECT_LE((sym_eig(s).eigenvalues - sym_eig(c).eigenvalues).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(SymEig, RejectsAsymmetric) {
    Matrix m = Matrix::Identity(3, 3);
    m(0, 1) = 1e-6;
    EXPECT_THROW(sym_eig(m), ContractError);
    m(0, 1) = 1e-12;  // within tolerance
    EXPECT_NO_THROW(sym_eig(m));
}

TEST(SolveSpd, Identity) {
    Vector b(3);
    b << 1.0, -2.0, 3.5;
    EXPECT_TRUE(solve_spd(Matrix::Identity(3, 3), b).isApprox(b, 0.0));
}

TEST(SolveSpd, Diagonal) {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = 2.0;
    s(1, 1) = 4.0;
    Vector b(2);
    b << 2.0, 4.0;
    const Vector x = solve_spd(s, b);
    EXPECT_DOUBLE_EQ(x(0), 1.0);
    EXPECT_DOUBLE_EQ(x(1), 1.0);
}

TEST(SolveSpd, RandomResidual) {
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix s = random_spd(12, gen);
        const Vector b = gaussian(12, 1, gen);
        const Vector x = solve_spd(s, b);
        EXPECT_LE((s * x - b).norm(), 1e-9 * b.norm());
    }
}

TEST(SolveSpd, NonPositivePivot) {
    Matrix s = Matrix::Identity(3, 3);
    s(2, 2) = -1.0;
    EXPECT_THROW(solve_spd(s, Vector(Vector::Ones(3))), NotSpdError);
    EXPECT_THROW(cholesky_lower(Matrix::Zero(2, 2)), NotSpdError);
}

TEST(Whiten, AlreadyWhiteGivesIdentity) {
    std::mt19937_64 gen(41);
    const Whitened first = whiten(gaussian(4, 5000, gen));
    const Whitened second = whiten(first.z);
    EXPECT_LE((second.result.whitener - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Whiten, ScalarChannel) {
    // Zero mean, mean square 4.
    Matrix x(1, 4);
    x << 2.0, -2.0, 2.0, -2.0;
    const Whitened w = whiten(x);
    EXPECT_NEAR(w.result.whitener(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(w.result.mean(0), 0.0, 1e-15);
}

TEST(Whiten, RandomOutputCovariance) {
    std::mt19937_64 gen(42);
    const Matrix mix = gaussian(4, 4, gen);
    Matrix x = mix * laplace(4, 1000, gen);
    x.array().colwise() += Eigen::Array4d(1.0, -2.0, 3.0, 0.5);
    const Whitened w = whiten(x);
    const Matrix c = w.z * w.z.transpose() / 1000.0;
    EXPECT_LE((c - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-8);
    // ZCA: the whitener is symmetric, and eigenvalues come sorted descending.
    EXPECT_LE((w.result.whitener - w.result.whitener.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    for (Index k = 1; k < 4; ++k) {
        EXPECT_GE(w.result.covariance_eigenvalues(k - 1), w.result.covariance_eigenvalues(k));
    }
    EXPECT_TRUE(apply_whitening(w.result, x).isApprox(w.z, 1e-12));
}

TEST(Whiten, RankDeficientNamesEigenvalue) {
    std::mt19937_64 gen(43);
    Matrix x = gaussian(3, 500, gen);
    x.row(2) = x.row(0) + x.row(1);
    try {
        whiten(x);
        FAIL() << "expected DegenerateDataError";
    } catch (const DegenerateDataError& e) {
        EXPECT_NE(std::string(e.what()).find("eigenvalue"), std::string::npos) << e.what();
    }
}

TEST(Whiten, RequiresMoreSamplesThanSignals) {
    std::mt19937_64 gen(44);
    EXPECT_THROW(whiten(gaussian(5, 5, gen)), Error);
}

static double total_variance(const Matrix& x) {
    const Matrix c = x.colwise() - x.rowwise().mean();
    return c.squaredNorm() / static_cast<double>(x.cols());
}

TEST(PcaReduce, FullRankPreservesVariance) {
    std::mt19937_64 gen(51);
    const Matrix x = gaussian(5, 5, gen) * gaussian(5, 800, gen);
    const Matrix r = pca_reduce(x, 5);
    EXPECT_EQ(r.rows(), 5);
    EXPECT_NEAR(total_variance(r), total_variance(x), 1e-8 * total_variance(x));
}

TEST(PcaReduce, OutputVariancesAreTopEigenvalues) {
    std::mt19937_64 gen(52);
    const Matrix x = gaussian(6, 6, gen) * gaussian(6, 900, gen);
    const Matrix centered = x.colwise() - x.rowwise().mean();
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(centered * centered.transpose() / 900.0).eigenvalues();
    const Matrix r = pca_reduce(x, 3);
    for (Index k = 0; k < 3; ++k) {
        const double var = r.row(k).squaredNorm() / 900.0;
        EXPECT_NEAR(var, ev(5 - k), 1e-8 * ev(5 - k));
    }
}

TEST(PcaReduce, ZeroChannelDropped) {
    std::mt19937_64 gen(53);
    Matrix x = gaussian(4, 700, gen);
    x.row(3).setZero();
    const Matrix r = pca_reduce(x, 3);
    EXPECT_NEAR(total_variance(r), total_variance(x), 1e-8 * total_variance(x));
}

TEST(PcaReduce, RankOneData) {
    std::mt19937_64 gen(54);
    const Matrix a = gaussian(4, 1, gen);
    const Matrix s = gaussian(1, 600, gen);
    const Matrix x = a * s;
    const Matrix r = pca_reduce(x, 1);
    EXPECT_EQ(r.rows(), 1);
    EXPECT_NEAR(total_variance(r), total_variance(x), 1e-8 * total_variance(x));
}

TEST(PcaReduce, RangeChecked) {
    std::mt19937_64 gen(55);
    const Matrix x = gaussian(3, 100, gen);
    EXPECT_THROW(pca_reduce(x, 0), DimensionError);
    EXPECT_THROW(pca_reduce(x, 4), DimensionError);
}

TEST(Basics, FrobeniusAndSupNorm) {
    Matrix a(2, 2);
    a << 1.0, -5.0, 2.0, 3.0;
    Matrix b(2, 2);
    b << 2.0, 1.0, 0.5, -1.0;
    EXPECT_DOUBLE_EQ(frobenius_dot(a, b), 2.0 - 5.0 + 1.0 - 3.0);
    EXPECT_DOUBLE_EQ(sup_norm(a), 5.0);
    Matrix bad = a;
    bad(1, 1) = std::nan("");
    EXPECT_THROW(require_finite(bad, "bad"), ContractError);
}
