#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "picardkit/data.hpp"
#include "picardkit/diagnostics.hpp"
#include "picardkit/errors.hpp"

using namespace picardkit;
using namespace testing_util;

namespace {

Matrix white_gaussian(Index n, Index t, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    return whiten(gaussian(n, t, gen)).z;
}

Vector sorted_eigenvalues(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

Trace losses(const std::vector<double>& values) {
    Trace t;
    for (std::size_t k = 0; k < values.size(); ++k) {
        IterationRecord r;
        r.iteration = k;
        r.loss = values[k];
        t.push_back(r);
    }
    return t;
}

LbfgsMemory spd_memory(Index n, std::size_t count, std::mt19937_64& gen) {
    const Matrix a = random_spd(n * n, gen);
    LbfgsMemory mem(count);
    while (mem.size() < count) {
        const Matrix s = gaussian(n, n, gen);
        const Vector y = a * s.reshaped<Eigen::RowMajor>();
        mem.push(s, y.reshaped<Eigen::RowMajor>(n, n));
    }
    return mem;
}

}  // namespace

TEST(MaterializeFullHessian, GaussianScoreWhiteSpectrum) {
    // H = delta_il delta_jk + delta_ik delta_jl: eigenvalue 2 on symmetric
    // matrices, 0 on antisymmetric ones.
    const Index n = 3;
    const Matrix h = materialize_full_hessian(full_hessian(white_gaussian(n, 400, 1), ScoreModel::gaussian()));
    const Vector ev = sorted_eigenvalues(h);
    for (Index k = 0; k < n * (n - 1) / 2; ++k) EXPECT_NEAR(ev(k), 0.0, 1e-12);
    for (Index k = n * (n - 1) / 2; k < n * n; ++k) EXPECT_NEAR(ev(k), 2.0, 1e-12);
}

TEST(MaterializeFullHessian, ExactlySymmetric) {
    std::mt19937_64 gen(2);
    const Matrix h = materialize_full_hessian(full_hessian(laplace(4, 500, gen), ScoreModel()));
    EXPECT_TRUE(h == h.transpose());
}

TEST(MaterializeFullHessian, SizeGuard) {
    HessianTensor h;
    h.kappa = Vector::Ones(kMaxHessianSources + 1);
    h.moments.assign(static_cast<std::size_t>(kMaxHessianSources + 1), Matrix::Zero(1, 1));
    EXPECT_THROW(materialize_full_hessian(h), SizeGuardError);
    ApproxHessianCoeffs c;
    c.kappa = Vector::Ones(kMaxHessianSources + 1);
    c.h = Matrix::Ones(kMaxHessianSources + 1, kMaxHessianSources + 1);
    EXPECT_THROW(materialize_simple_hessian(c, 1e-2), SizeGuardError);
    ApproxHessianCoeffs small;
    small.kappa = Vector::Ones(kMaxPreconditionerSources + 1);
    small.h = Matrix::Ones(kMaxPreconditionerSources + 1, kMaxPreconditionerSources + 1);
    EXPECT_THROW(materialize_preconditioner_inverse(LbfgsMemory(7), small, 1e-2), SizeGuardError);
}

TEST(MaterializeSimpleHessian, GaussianScoreWhiteSpectrum) {
    // Off-diagonal blocks [[1, 1], [1, 1]] have eigenvalues {0, 2}; 0 is
    // clamped to the floor. Diagonal coordinates carry h_ii + kappa_i = 2.
    const double floor = 1e-2;
    const Index n = 3;
    const Matrix m =
        materialize_simple_hessian(approx_hessian(white_gaussian(n, 400, 3), ScoreModel::gaussian()), floor);
    const Vector ev = sorted_eigenvalues(m);
    for (Index k = 0; k < n * (n - 1) / 2; ++k) EXPECT_NEAR(ev(k), floor, 1e-12);
    for (Index k = n * (n - 1) / 2; k < n * n; ++k) EXPECT_NEAR(ev(k), 2.0, 1e-12);
}

TEST(MaterializeSimpleHessian, InverseOfBlockSolve) {
    std::mt19937_64 gen(4);
    const ApproxHessianCoeffs c = approx_hessian(laplace(4, 1000, gen), ScoreModel());
    const Matrix m = materialize_simple_hessian(c, 1e-2);
    const Matrix g = gaussian(4, 4, gen);
    const Vector md = m * solve_regularized(c, g, 1e-2).reshaped<Eigen::RowMajor>();
    EXPECT_LE((md + g.reshaped<Eigen::RowMajor>().eval()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MaterializeSimpleHessian, ScalarSource) {
    ApproxHessianCoeffs c;
    c.kappa = Vector::Constant(1, 0.4);
    c.h = Matrix::Constant(1, 1, 0.3);
    EXPECT_DOUBLE_EQ(materialize_simple_hessian(c, 1e-2)(0, 0), 0.7);
}

TEST(PreconditionerInverse, EmptyMemoryInvertsSimpleHessian) {
    std::mt19937_64 gen(5);
    const ApproxHessianCoeffs c = approx_hessian(laplace(3, 800, gen), ScoreModel());
    const Matrix prod =
        materialize_preconditioner_inverse(LbfgsMemory(7), c, 1e-2) * materialize_simple_hessian(c, 1e-2);
    EXPECT_LE((prod - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PreconditionerInverse, SymmetricPositiveDefinite) {
    std::mt19937_64 gen(6);
    for (std::size_t m = 1; m <= 7; ++m) {
        const ApproxHessianCoeffs c = approx_hessian(laplace(3, 800, gen), ScoreModel());
        const LbfgsMemory mem = spd_memory(3, m, gen);
        const Matrix raw = materialize_preconditioner_inverse_raw(mem, c, 1e-2);
        EXPECT_LE((raw - raw.transpose()).cwiseAbs().maxCoeff(), 1e-9 * raw.cwiseAbs().maxCoeff());
        const Matrix sym = materialize_preconditioner_inverse(mem, c, 1e-2);
        EXPECT_TRUE(sym == sym.transpose());
        EXPECT_GT(sorted_eigenvalues(sym)(0), 0.0);
    }
}

TEST(PreconditionedSpectrum, IdenticalOperators) {
    std::mt19937_64 gen(7);
    const Matrix h = random_spd(9, gen);
    const SpectrumReport r = preconditioned_spectrum(h, h);
    EXPECT_NEAR(r.lambda_m, 1.0, 1e-10);
    EXPECT_NEAR(r.lambda_M, 1.0, 1e-10);
    EXPECT_NEAR(r.kappa, 1.0, 1e-10);
}

TEST(PreconditionedSpectrum, IdentityPreconditioner) {
    std::mt19937_64 gen(8);
    const Matrix h = random_spd(6, gen);
    const SpectrumReport r = preconditioned_spectrum(h, Matrix::Identity(6, 6));
    EXPECT_LE((r.eigenvalues - sorted_eigenvalues(h)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PreconditionedSpectrum, DiagonalExample) {
    const Matrix h = Vector::LinSpaced(4, 1.0, 4.0).asDiagonal();
    const Matrix hh = Vector::Constant(4, 2.0).asDiagonal();
    const SpectrumReport r = preconditioned_spectrum(h, hh);
    EXPECT_DOUBLE_EQ(r.lambda_m, 0.5);
    EXPECT_DOUBLE_EQ(r.lambda_M, 2.0);
    EXPECT_DOUBLE_EQ(r.kappa, 4.0);
}

TEST(PreconditionedSpectrum, GeneralizedEigenOracle) {
    std::mt19937_64 gen(9);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix a = gaussian(8, 8, gen);
        const Matrix h = 0.5 * (a + a.transpose());  // indefinite
        const Matrix hh = random_spd(8, gen);
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(h, hh, Eigen::EigenvaluesOnly);
        const SpectrumReport r = preconditioned_spectrum(h, hh);
        EXPECT_LE((r.eigenvalues - ges.eigenvalues()).cwiseAbs().maxCoeff(), 1e-8);
        if (r.lambda_m <= 0.0) EXPECT_TRUE(std::isinf(r.kappa));
    }
}

TEST(PreconditionedSpectrum, ScalingInvariance) {
    std::mt19937_64 gen(10);
    const Matrix h = random_spd(9, gen), hh = random_spd(9, gen);
    const double k = preconditioned_spectrum(h, hh).kappa;
    EXPECT_NEAR(preconditioned_spectrum(3.5 * h, 0.2 * hh).kappa, k, 1e-10 * k);
}

TEST(PreconditionedSpectrum, Contracts) {
    Matrix bad = Matrix::Identity(3, 3);
    bad(2, 2) = -1.0;
    EXPECT_THROW(preconditioned_spectrum(Matrix::Identity(3, 3), bad), NotSpdError);
    EXPECT_THROW(preconditioned_spectrum(Matrix::Identity(3, 3), Matrix::Identity(4, 4)), DimensionError);
}

TEST(AntisymmetricBasis, Orthonormal) {
    const Matrix b = antisymmetric_basis(4);
    ASSERT_EQ(b.cols(), 6);
    EXPECT_LE((b.transpose() * b - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-15);
    for (Index c = 0; c < b.cols(); ++c) {
        const Matrix m = b.col(c).reshaped<Eigen::RowMajor>(4, 4);
        EXPECT_EQ(m, -m.transpose());
    }
}

TEST(ConstrainedSpectrum, TwoSourcesHaveOneDirection) {
    std::mt19937_64 gen(11);
    const Matrix y = laplace(2, 2000, gen);
    const Matrix h = materialize_full_hessian(full_hessian(y, ScoreModel()));
    const Matrix hh = materialize_simple_hessian(approx_hessian(y, ScoreModel()), 1e-2);
    const SpectrumReport r = constrained_spectrum(h, hh);
    ASSERT_EQ(r.eigenvalues.size(), 1);
    const Vector e = antisymmetric_basis(2).col(0);
    EXPECT_NEAR(r.lambda_m, e.dot(h * e) / e.dot(hh * e), 1e-12);
    EXPECT_DOUBLE_EQ(constrained_spectrum(h, h).kappa, 1.0);
}

TEST(ConstrainedSpectrum, InterlacesFullSpectrum) {
    std::mt19937_64 gen(12);
    const Matrix y = laplace(4, 3000, gen);
    const Matrix h = materialize_full_hessian(full_hessian(y, ScoreModel()));
    const Matrix hh = materialize_simple_hessian(approx_hessian(y, ScoreModel()), 1e-2);
    const SpectrumReport full = preconditioned_spectrum(h, hh);
    const SpectrumReport con = constrained_spectrum(h, hh);
    EXPECT_EQ(con.eigenvalues.size(), 6);
    EXPECT_GE(con.lambda_m, full.lambda_m - 1e-10);
    EXPECT_LE(con.lambda_M, full.lambda_M + 1e-10);
}

TEST(MeasureRate, Geometric) {
    std::vector<double> v;
    for (int k = 0; k < 30; ++k) v.push_back(std::ldexp(1.0, -k));
    const auto r = measure_rate(losses(v), 0.0);
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(*r, 0.5, 1e-12);
}

TEST(MeasureRate, NoProgress) {
    const auto r = measure_rate(losses(std::vector<double>(20, 1.0)), 0.0);
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(*r, 0.0);
}

TEST(MeasureRate, TooShort) {
    EXPECT_FALSE(measure_rate(losses({3.0, 2.0, 1.0}), 0.0).has_value());
    EXPECT_FALSE(measure_rate(losses({1.0, 1.0, 1.0, 1.0, 1.0, 1.0}), 1.0).has_value());
}

TEST(MeasureRate, UsesTermwiseDecreases) {
    // The stored losses are flat in double precision while the decreases
    // still halve. Gaps are measured to the last iterate, which bends the
    // ratios slightly below 1/2 near the end.
    Trace t = losses(std::vector<double>(30, 1.0));
    for (std::size_t k = 1; k < t.size(); ++k) t[k].loss_decrease = std::ldexp(1e-20, -static_cast<int>(k));
    const auto r = measure_rate(t, 1.0);
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(*r, 0.5, 1e-2);
}

TEST(MeasureRate, NewtonLikeOnSeparableData) {
    const Dataset ds = generate_synthetic(8, 20000, 1);
    SolverConfig cfg;
    cfg.policy = Policy::Simple;
    const FitResult fr = fit(whiten(ds.x).z, ScoreModel(), cfg);
    ASSERT_TRUE(fr.converged);
    const auto r = measure_rate(fr.trace, fr.trace.back().loss);
    ASSERT_TRUE(r.has_value());
    EXPECT_GE(*r, 0.5);
}
