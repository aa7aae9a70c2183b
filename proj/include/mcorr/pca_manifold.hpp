#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

#include "mcorr/core_stats.hpp"

namespace mcorr {

/// Eigendecomposition of a symmetric covariance matrix. Values are descending;
/// vectors are the matching orthonormal columns.
struct CovarianceSpectrum {
    Vector values;
    Matrix vectors;
};

/// Affine subspace through the mean spanned by the leading principal components.
struct LinearPrincipalManifold {
    Vector mean;
    Matrix basis;          ///< d x k, orthonormal columns
    Vector eigenvalues;    ///< k leading eigenvalues, descending
    Vector full_spectrum;  ///< all d eigenvalues, descending

    Eigen::Index dim() const noexcept { return mean.size(); }
    Eigen::Index intrinsic_dim() const noexcept { return basis.cols(); }

    /// True when some retained direction carries no variance.
    bool rank_deficient() const {
        const double top = full_spectrum.size() ? std::max(full_spectrum[0], 0.0) : 0.0;
        for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
            if (!(eigenvalues[i] > 1e-12 * top) || top == 0.0) return true;
        return false;
    }
};

/// Per-coordinate split of the variance into the part carried by the
/// projection and the part left in the residual.
struct VarianceDecomposition {
    Vector total;
    Vector explained;
    Vector unexplained;

    /// total - explained - unexplained, i.e. twice the projection/residual covariance.
    Vector defect() const { return total - explained - unexplained; }
};

struct LCorrelation {
    double rho_sq = 0.0;
    double r_i = 0.0;
    double r_j = 0.0;
};

namespace detail {

/// Makes the first component with magnitude above 1e-12 positive.
inline void canonical_sign(Eigen::Ref<Vector> v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-12) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

/// Replaces the columns of an eigenspace block by a basis that depends only on
/// the subspace: Gram-Schmidt over the projections of e_1, e_2, ... onto it.
inline Matrix canonical_block_basis(const Matrix& block) {
    const Eigen::Index d = block.rows();
    const Eigen::Index k = block.cols();
    const Matrix proj = block * block.transpose();
    Matrix out(d, k);
    Eigen::Index filled = 0;
    for (Eigen::Index e = 0; e < d && filled < k; ++e) {
        Vector v = proj.col(e);
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index c = 0; c < filled; ++c) v -= out.col(c).dot(v) * out.col(c);
        const double nrm = v.norm();
        if (nrm > 1e-6) out.col(filled++) = v / nrm;
    }
    return out;
}

} // namespace detail

/// Symmetric eigendecomposition with deterministic output. Eigenvalues are
/// sorted descending; eigenspaces of tied eigenvalues (within 1e-10 of the
/// largest magnitude) get a canonical basis; every vector has its first
/// non-negligible component positive.
inline CovarianceSpectrum symmetric_spectrum(const Matrix& cov) {
    if (cov.rows() != cov.cols()) throw InvalidArgument("symmetric_spectrum: matrix is not square");
    const Eigen::Index d = cov.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw InvalidArgument("eigendecomposition failed");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    const Vector& ev = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return ev[a] > ev[b]; });

    CovarianceSpectrum s;
    s.values.resize(d);
    s.vectors.resize(d, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        s.values[c] = ev[order[static_cast<std::size_t>(c)]];
        s.vectors.col(c) = solver.eigenvectors().col(order[static_cast<std::size_t>(c)]);
    }
    const double scale = d ? std::max(std::abs(s.values[0]), std::abs(s.values[d - 1])) : 0.0;
    const double tie = 1e-10 * scale;
    for (Eigen::Index lo = 0; lo < d;) {
        Eigen::Index hi = lo + 1;
        while (hi < d && s.values[lo] - s.values[hi] <= tie) ++hi;
        if (hi - lo > 1) s.vectors.middleCols(lo, hi - lo) = detail::canonical_block_basis(s.vectors.middleCols(lo, hi - lo));
        lo = hi;
    }
    for (Eigen::Index c = 0; c < d; ++c) detail::canonical_sign(s.vectors.col(c));
    return s;
}

inline CovarianceSpectrum covariance_spectrum(const Dataset& data) {
    return symmetric_spectrum(stats::covariance_matrix(data.values()));
}

/// Fits the k-dimensional maximal linear principal manifold: the sample mean
/// plus the span of the top-k covariance eigenvectors. k = 0 yields the mean
/// point. Check rank_deficient() when k exceeds the count of positive eigenvalues.
inline LinearPrincipalManifold fit_linear(const Dataset& data, Eigen::Index k) {
    if (k < 0 || k > data.cols())
        throw InvalidArgument("fit_linear: k must lie in [0, " + std::to_string(data.cols()) + "]");
    if (data.rows() <= k) throw InvalidArgument("fit_linear: need more rows than k");
    const auto spec = covariance_spectrum(data);
    LinearPrincipalManifold m;
    m.mean = stats::column_means(data.values());
    m.basis = spec.vectors.leftCols(k);
    m.eigenvalues = spec.values.head(k);
    m.full_spectrum = spec.values;
    return m;
}

/// Orthogonal projection of each row onto the manifold:
/// mean + sum_i <x - mean, u_i> u_i.
inline Matrix project_linear(const LinearPrincipalManifold& m, const Matrix& points) {
    if (points.cols() != m.dim()) throw InvalidArgument("project_linear: dimension mismatch");
    const Matrix centered = points.rowwise() - m.mean.transpose();
    const Matrix coords = centered * m.basis;
    return (coords * m.basis.transpose()).rowwise() + m.mean.transpose();
}

/// Variance of the projection, sum_i u_i^T Cov u_i, for an orthonormal basis.
inline double projected_variance(const Matrix& basis, const Dataset& data) {
    if (basis.rows() != data.cols()) throw InvalidArgument("projected_variance: dimension mismatch");
    const Matrix cov = stats::covariance_matrix(data.values());
    double total = 0.0;
    for (Eigen::Index i = 0; i < basis.cols(); ++i) total += basis.col(i).dot(cov * basis.col(i));
    return total;
}

inline double projected_variance(const LinearPrincipalManifold& m, const Dataset& data) {
    return projected_variance(m.basis, data);
}

inline void check_orthonormal(const Matrix& u, double tol = 1e-10) {
    const Matrix gram = u.transpose() * u;
    const double err = (gram - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
    if (u.cols() > 0 && !(err <= tol))
        throw NotOrthonormal("frame deviates from orthonormality by " + std::to_string(err));
}

/// Weights a_i = sum_j <e_i, u_j>^2 of each covariance eigenvector e_i in the
/// frame U. Each lies in [0, 1], they sum to k, and sum_i lambda_i a_i is the
/// projected variance of span(U).
inline Vector subspace_coefficients(const CovarianceSpectrum& spectrum, const Matrix& u) {
    if (u.rows() != spectrum.vectors.rows()) throw InvalidArgument("subspace_coefficients: dimension mismatch");
    check_orthonormal(u);
    const Matrix c = spectrum.vectors.transpose() * u;  // column j: u_j in eigen-coordinates
    return c.rowwise().squaredNorm();
}

/// Variance split for an arbitrary projection of the data.
inline VarianceDecomposition variance_split(const Matrix& data, const Matrix& projection) {
    VarianceDecomposition v;
    v.total = stats::column_variances(data);
    v.explained = stats::column_variances(projection);
    v.unexplained = stats::column_variances(data - projection);
    return v;
}

inline VarianceDecomposition explained_variance_split(const LinearPrincipalManifold& m, const Dataset& data) {
    return variance_split(data.values(), project_linear(m, data.values()));
}

/// Reliability of one coordinate: 1 - Var(residual_i) / Var(x_i). Not clamped.
inline double reliability(const Dataset& data, const Matrix& residuals, Eigen::Index i) {
    check_column(data, i);
    if (residuals.rows() != data.rows() || residuals.cols() != data.cols())
        throw InvalidArgument("reliability: residual shape mismatch");
    const double total = stats::variance(data.column(i));
    if (!(total > 0.0)) throw DegenerateVariance(data.column_names()[static_cast<std::size_t>(i)]);
    return 1.0 - stats::variance(residuals.col(i)) / total;
}

/// Squared L-correlation R_i * R_j with reliabilities taken against the
/// linear manifold.
inline LCorrelation l_correlation(const Dataset& data, const LinearPrincipalManifold& m, Eigen::Index i,
                                  Eigen::Index j) {
    const Matrix residuals = data.values() - project_linear(m, data.values());
    LCorrelation out;
    out.r_i = reliability(data, residuals, i);
    out.r_j = reliability(data, residuals, j);
    out.rho_sq = out.r_i * out.r_j;
    return out;
}

/// All reliabilities against the manifold, in column order.
inline Vector reliabilities(const Dataset& data, const Matrix& residuals) {
    Vector r(data.cols());
    for (Eigen::Index i = 0; i < data.cols(); ++i) r[i] = reliability(data, residuals, i);
    return r;
}

} // namespace mcorr
