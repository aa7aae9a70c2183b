#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace mcorr;
using namespace mcorr::testing;

namespace {

/// Sample whose covariance is exactly diag(4, 1): a 2^2 factorial design.
Dataset axis_design() {
    Matrix m(4, 2);
    m << 2, 1, 2, -1, -2, 1, -2, -1;
    return Dataset(m);
}

} // namespace

TEST(FitLinear, AxisAlignedSpectrum) {
    const auto lin = fit_linear(axis_design(), 1);
    EXPECT_NEAR(lin.eigenvalues[0], 4.0, 1e-14);
    EXPECT_NEAR(std::abs(lin.basis(0, 0)), 1.0, 1e-14);
    EXPECT_NEAR(lin.basis(1, 0), 0.0, 1e-14);
    EXPECT_GT(lin.basis(0, 0), 0.0);  // canonical sign
    EXPECT_NEAR(lin.full_spectrum[1], 1.0, 1e-14);
    EXPECT_FALSE(lin.rank_deficient());
}

TEST(FitLinear, InvariantsOnRandomData) {
    std::mt19937_64 rng(4);
    const Dataset data(random_matrix(rng, 300, 5) * random_matrix(rng, 5, 5));
    const auto lin = fit_linear(data, 3);
    const Matrix cov = stats::covariance_matrix(data.values());
    EXPECT_LE((lin.basis.transpose() * lin.basis - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index i = 0; i < 3; ++i)
        EXPECT_LE((cov * lin.basis.col(i) - lin.eigenvalues[i] * lin.basis.col(i)).norm(), 1e-8 * lin.eigenvalues[0]);
    for (Eigen::Index i = 0; i + 1 < 5; ++i) EXPECT_GE(lin.full_spectrum[i], lin.full_spectrum[i + 1]);
    EXPECT_EQ(lin.eigenvalues, lin.full_spectrum.head(3));
}

TEST(FitLinear, AnalyticCovarianceOracle) {
    // Cov = A A^T; its eigenvalues are the squared singular values of A.
    Matrix a(3, 3);
    a << 2.0, 0.3, 0.0, 0.5, 1.0, 0.2, 0.0, -0.4, 0.5;
    const Vector sv = Eigen::JacobiSVD<Matrix>(a).singularValues();
    const double target = sv[0] * sv[0] + sv[1] * sv[1];
    const auto data = sample_elliptical({a, Vector::Zero(3), Radial::gaussian, 5.0}, 100000, 17);
    const auto lin = fit_linear(data, 2);
    EXPECT_NEAR(lin.eigenvalues.sum(), target, 0.02 * target);
}

TEST(FitLinear, RankDeficientStillReturns) {
    Matrix m(5, 3);
    m.col(0) << 1, 2, 3, 4, 5;
    m.col(1) = 2.0 * m.col(0);
    m.col(2).setConstant(1.0);
    const auto lin = fit_linear(Dataset(m), 2);
    EXPECT_TRUE(lin.rank_deficient());
    EXPECT_EQ(lin.basis.cols(), 2);
}

TEST(FitLinear, TieBreakingIsCanonical) {
    // Isotropic 2-d design: the eigenspace is the whole plane, so any rotation
    // of the data must yield the same basis.
    Matrix m(4, 2);
    m << 1, 0, -1, 0, 0, 1, 0, -1;
    const auto a = fit_linear(Dataset(m), 2);
    const double c = std::cos(0.3), s = std::sin(0.3);
    Matrix r(2, 2);
    r << c, -s, s, c;
    const auto b = fit_linear(Dataset(Matrix(m * r.transpose())), 2);
    EXPECT_LE((a.basis - b.basis).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((a.basis - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitLinear, FullDimensionExplainsEverything) {
    std::mt19937_64 rng(8);
    const Dataset data(random_matrix(rng, 100, 3));
    const auto split = explained_variance_split(fit_linear(data, 3), data);
    EXPECT_LE((split.total - split.explained).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(split.unexplained.cwiseAbs().maxCoeff(), 1e-24 + 1e-12);
}

TEST(ProjectLinear, HandGeometryAndFixedPoints) {
    LinearPrincipalManifold lin;
    lin.mean = Vector::Zero(2);
    lin.basis = Matrix(2, 1);
    lin.basis << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    lin.eigenvalues = vec({1.0});
    lin.full_spectrum = vec({1.0, 0.0});
    Matrix q(3, 2);
    q << 2, 0, 3, 3, 0, 0;
    const Matrix p = project_linear(lin, q);
    EXPECT_NEAR(p(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(p(0, 1), 1.0, 1e-15);
    EXPECT_NEAR((p.row(1) - q.row(1)).norm(), 0.0, 1e-14);
    EXPECT_EQ(p.row(2), q.row(2));
}

TEST(ProjectLinear, IdempotentAndOrthogonal) {
    std::mt19937_64 rng(12);
    const Dataset data(random_matrix(rng, 200, 4));
    const auto lin = fit_linear(data, 2);
    const Matrix p = project_linear(lin, data.values());
    const Matrix pp = project_linear(lin, p);
    EXPECT_LE((p - pp).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix resid = data.values() - p;
    EXPECT_LE((resid * lin.basis).cwiseAbs().maxCoeff(), 1e-9 * data.values().cwiseAbs().maxCoeff());
    const Matrix mean_row = lin.mean.transpose();
    EXPECT_LE((project_linear(lin, mean_row) - mean_row).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProjectedVariance, EqualsTraceOfProjectionCovariance) {
    std::mt19937_64 rng(13);
    const Dataset data(random_matrix(rng, 500, 4) * random_matrix(rng, 4, 4));
    const auto lin = fit_linear(data, 2);
    const double pv = projected_variance(lin, data);
    EXPECT_NEAR(pv, lin.eigenvalues.sum(), 1e-10 * pv);
    const double trace = stats::column_variances(project_linear(lin, data.values())).sum();
    EXPECT_NEAR(pv, trace, 1e-8 * pv);
    const Matrix cov = stats::covariance_matrix(data.values());
    EXPECT_NEAR(projected_variance(Matrix(Matrix::Identity(4, 4)), data), cov.trace(), 1e-12 * cov.trace());
}

TEST(ProjectedVariance, TranslationInvariant) {
    std::mt19937_64 rng(14);
    const Matrix x = random_matrix(rng, 300, 3);
    const Matrix u = random_frame(rng, 3, 2);
    const double a = projected_variance(u, Dataset(x));
    const Matrix shifted = x.rowwise() + Eigen::RowVector3d(100.0, -50.0, 7.0);
    EXPECT_NEAR(projected_variance(u, Dataset(shifted)), a, 1e-8 * a);
}

TEST(SubspaceCoefficients, EigenbasisAndCompleteness) {
    std::mt19937_64 rng(15);
    const Dataset data(random_matrix(rng, 200, 4) * random_matrix(rng, 4, 4));
    const auto spec = covariance_spectrum(data);
    const Vector a = subspace_coefficients(spec, spec.vectors.leftCols(2));
    EXPECT_LE((a - vec({1, 1, 0, 0})).cwiseAbs().maxCoeff(), 1e-12);
    const Vector full = subspace_coefficients(spec, spec.vectors);
    EXPECT_LE((full - Vector::Ones(4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SubspaceCoefficients, RandomFramesSatisfyLemma) {
    std::mt19937_64 rng(16);
    const Dataset data(random_matrix(rng, 400, 5) * random_matrix(rng, 5, 5));
    const auto spec = covariance_spectrum(data);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix u = random_frame(rng, 5, 2);
        const Vector a = subspace_coefficients(spec, u);
        EXPECT_NEAR(a.sum(), 2.0, 1e-10);
        EXPECT_GE(a.minCoeff(), -1e-12);
        EXPECT_LE(a.maxCoeff(), 1.0 + 1e-12);
        const double pv = projected_variance(u, data);
        EXPECT_NEAR(spec.values.dot(a), pv, 1e-8 * pv);
    }
}

TEST(SubspaceCoefficients, RejectsNonOrthonormal) {
    const auto spec = symmetric_spectrum(Matrix::Identity(3, 3));
    Matrix u(3, 1);
    u << 1, 1, 0;
    EXPECT_THROW(subspace_coefficients(spec, u), NotOrthonormal);
}

TEST(Maximality, NoFrameBeatsTheEigenbasis) {
    std::mt19937_64 rng(17);
    const Dataset data(random_matrix(rng, 300, 4) * random_matrix(rng, 4, 4));
    const auto lin = fit_linear(data, 2);
    const double best = lin.eigenvalues.sum();
    for (int t = 0; t < 500; ++t)
        EXPECT_LE(projected_variance(random_frame(rng, 4, 2), data), best + 1e-8 * lin.eigenvalues[0]);
}

TEST(LCorrelation, ExactFitAndPointManifold) {
    Matrix m(5, 2);
    m.col(0) << -2, -1, 0, 1, 2;
    m.col(1) = 0.5 * m.col(0);
    const Dataset on_line(m);
    const auto lc = l_correlation(on_line, fit_linear(on_line, 1), 0, 1);
    EXPECT_NEAR(lc.r_i, 1.0, 1e-15);
    EXPECT_NEAR(lc.r_j, 1.0, 1e-15);
    EXPECT_NEAR(lc.rho_sq, 1.0, 1e-15);

    std::mt19937_64 rng(18);
    const Dataset noisy(random_matrix(rng, 50, 2));
    const auto point = l_correlation(noisy, fit_linear(noisy, 0), 0, 1);
    EXPECT_NEAR(point.r_i, 0.0, 1e-15);
    EXPECT_NEAR(point.rho_sq, 0.0, 1e-15);
}

TEST(LCorrelation, PythagoreanSplitAndReliabilityRange) {
    std::mt19937_64 rng(19);
    const Dataset data(random_matrix(rng, 1000, 3) * random_matrix(rng, 3, 3));
    const auto lin = fit_linear(data, 1);
    const auto split = explained_variance_split(lin, data);
    for (Eigen::Index i = 0; i < 3; ++i) {
        EXPECT_NEAR(split.total[i], split.explained[i] + split.unexplained[i], 1e-8 * split.total[i]);
        const auto lc = l_correlation(data, lin, i, i);
        EXPECT_GE(lc.r_i, -1e-12);
        EXPECT_LE(lc.r_i, 1.0 + 1e-12);
    }
}

TEST(LCorrelation, TwoDimensionalClosedForm) {
    // With sample moments, Cov(x, y) = (l1 - l2) u1 u2 and R_x R_y = (l1 u1 u2)^2 / (Var x Var y),
    // so the squared L-correlation equals pearson^2 * (l1 / (l1 - l2))^2 exactly.
    Matrix a(2, 2);
    a << 1.0, 0.0, 0.8, 0.6;
    for (std::uint64_t seed : {5u, 6u, 7u}) {
        const auto data = sample_elliptical({a, Vector::Zero(2), Radial::gaussian, 5.0}, 20000, seed);
        const auto lin = fit_linear(data, 1);
        const double r = pearson(data, 0, 1);
        const double l1 = lin.full_spectrum[0], l2 = lin.full_spectrum[1];
        const double predicted = r * r * (l1 / (l1 - l2)) * (l1 / (l1 - l2));
        EXPECT_NEAR(l_correlation(data, lin, 0, 1).rho_sq, predicted, 1e-12);
    }
}

TEST(LCorrelation, ApproachesPearsonSquaredAsResidualVarianceVanishes) {
    // l2 / l1 -> 0 drives the factor (l1 / (l1 - l2))^2 to 1.
    double prev_gap = std::numeric_limits<double>::infinity();
    for (double noise : {0.3, 0.1, 0.03}) {
        Matrix a(2, 2);
        a << 1.0, 0.0, 0.7, noise;
        const auto data = sample_elliptical({a, Vector::Zero(2), Radial::gaussian, 5.0}, 50000, 9);
        const double r = pearson(data, 0, 1);
        const double gap = std::abs(l_correlation(data, fit_linear(data, 1), 0, 1).rho_sq - r * r);
        EXPECT_LT(gap, prev_gap);
        prev_gap = gap;
    }
    EXPECT_LT(prev_gap, 0.02);
}

TEST(LCorrelation, DegenerateColumnRaises) {
    Matrix m(3, 2);
    m << 1, 5, 2, 5, 3, 5;
    const Dataset d(m);
    EXPECT_THROW(l_correlation(d, fit_linear(d, 1), 0, 1), DegenerateVariance);
}
