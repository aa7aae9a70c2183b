#pragma once

#include <random>

#include "mcorr/mcorr.hpp"

namespace mcorr::testing {

/// Gaussian d x k matrix orthonormalized by Householder QR.
inline Matrix random_frame(std::mt19937_64& rng, Eigen::Index d, Eigen::Index k) {
    std::normal_distribution<double> g;
    Matrix a(d, k);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < k; ++j) a(i, j) = g(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(d, k);
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = g(rng);
    return m;
}

inline Dataset column_dataset(std::initializer_list<std::vector<double>> cols) {
    const auto n = static_cast<Eigen::Index>(cols.begin()->size());
    Matrix m(n, static_cast<Eigen::Index>(cols.size()));
    Eigen::Index j = 0;
    for (const auto& c : cols) {
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = c[static_cast<std::size_t>(i)];
        ++j;
    }
    return Dataset(std::move(m));
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

} // namespace mcorr::testing
