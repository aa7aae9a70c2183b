#pragma once

#include <cmath>

#include "mcorr/dataset.hpp"

namespace mcorr {

using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Sample moments with 1/n normalization.
struct MomentSummary {
    Vector mean;
    Vector variance;
    Matrix covariance;
};

namespace stats {

inline double mean(ConstVectorRef x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i];
    return s / static_cast<double>(x.size());
}

/// Two-pass covariance: means first, then centered products. Symmetric in its
/// arguments bit for bit, and covariance(x, x) is the variance.
inline double covariance(ConstVectorRef x, ConstVectorRef y) {
    if (x.size() != y.size()) throw InvalidArgument("covariance: length mismatch");
    const double mx = mean(x);
    const double my = mean(y);
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size());
}

inline double variance(ConstVectorRef x) { return covariance(x, x); }

/// Per-column 1/n variances of an n x d matrix.
inline Vector column_variances(const Matrix& m) {
    Vector v(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) v[j] = variance(m.col(j));
    return v;
}

/// 1/n covariance matrix of the rows of m, assembled from the two-pass kernel.
inline Matrix covariance_matrix(const Matrix& m) {
    const Eigen::Index d = m.cols();
    Matrix cov(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) cov(i, j) = cov(j, i) = covariance(m.col(i), m.col(j));
    return cov;
}

inline Vector column_means(const Matrix& m) {
    Vector mu(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) mu[j] = mean(m.col(j));
    return mu;
}

/// Correlation from precomputed moments; throws on a zero variance.
inline double pearson_from_moments(double cov, double var_x, double var_y, const std::string& name_x,
                                   const std::string& name_y) {
    if (!(var_x > 0.0)) throw DegenerateVariance(name_x);
    if (!(var_y > 0.0)) throw DegenerateVariance(name_y);
    return cov / std::sqrt(var_x * var_y);
}

} // namespace stats

inline MomentSummary compute_moments(const Dataset& data) {
    MomentSummary m;
    m.mean = stats::column_means(data.values());
    m.covariance = stats::covariance_matrix(data.values());
    m.variance = m.covariance.diagonal();
    return m;
}

inline void check_column(const Dataset& data, Eigen::Index i) {
    if (i < 0 || i >= data.cols())
        throw InvalidArgument("column index " + std::to_string(i) + " out of range [0, " + std::to_string(data.cols()) +
                              ")");
}

/// Pearson correlation of columns i and j.
inline double pearson(const Dataset& data, Eigen::Index i, Eigen::Index j) {
    check_column(data, i);
    check_column(data, j);
    const auto& names = data.column_names();
    const double vi = stats::variance(data.column(i));
    const double vj = stats::variance(data.column(j));
    if (!(vi > 0.0)) throw DegenerateVariance(names[static_cast<std::size_t>(i)]);
    if (!(vj > 0.0)) throw DegenerateVariance(names[static_cast<std::size_t>(j)]);
    if (i == j) return 1.0;
    return stats::pearson_from_moments(stats::covariance(data.column(i), data.column(j)), vi, vj,
                                       names[static_cast<std::size_t>(i)], names[static_cast<std::size_t>(j)]);
}

inline Matrix pearson_matrix(const Dataset& data) {
    const Eigen::Index d = data.cols();
    const auto& names = data.column_names();
    const Matrix cov = stats::covariance_matrix(data.values());
    for (Eigen::Index i = 0; i < d; ++i)
        if (!(cov(i, i) > 0.0)) throw DegenerateVariance(names[static_cast<std::size_t>(i)]);
    Matrix rho(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        rho(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < d; ++j)
            rho(i, j) = rho(j, i) = stats::pearson_from_moments(cov(i, j), cov(i, i), cov(j, j),
                                                                names[static_cast<std::size_t>(i)],
                                                                names[static_cast<std::size_t>(j)]);
    }
    return rho;
}

} // namespace mcorr
