#pragma once

#include "mcorr/core_stats.hpp"

namespace mcorr {

/// Least-squares line y ~ slope * x + intercept.
struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double sse = 0.0;
};

/// Known measurement-error variances of the two observed variables.
struct NoiseModel {
    double eta_x_sq = 0.0;
    double eta_y_sq = 0.0;
};

struct SlopeProduct {
    double beta_x = 0.0;
    double beta_y = 0.0;
    double rho_sq = 0.0;
};

/// Ordinary least squares of y on x. The slope solves the normal equations of
/// the constant-plus-x design: slope = Cov(x, y) / Var(x).
inline RegressionFit ols_fit(ConstVectorRef x, ConstVectorRef y) {
    if (x.size() != y.size()) throw InvalidArgument("ols_fit: length mismatch");
    const double var_x = stats::variance(x);
    if (!(var_x > 0.0)) throw DegenerateVariance("x");
    RegressionFit fit;
    fit.slope = stats::covariance(x, y) / var_x;
    fit.intercept = stats::mean(y) - fit.slope * stats::mean(x);
    double sse = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        sse += r * r;
    }
    fit.sse = sse;
    return fit;
}

/// Both regression slopes and the squared correlation; their product equals rho^2.
inline SlopeProduct slope_product_identity(ConstVectorRef x, ConstVectorRef y) {
    if (x.size() != y.size()) throw InvalidArgument("slope_product_identity: length mismatch");
    const double var_x = stats::variance(x);
    const double var_y = stats::variance(y);
    if (!(var_x > 0.0)) throw DegenerateVariance("x");
    if (!(var_y > 0.0)) throw DegenerateVariance("y");
    const double cov = stats::covariance(x, y);
    SlopeProduct out;
    out.beta_x = cov / var_x;
    out.beta_y = cov / var_y;
    out.rho_sq = (cov * cov) / (var_x * var_y);
    return out;
}

/// Fraction of the observed variance that is not measurement error, 1 - eta^2 / sigma^2.
inline double attenuation_factor(double sigma_sq, double eta_sq) {
    if (!(sigma_sq > 0.0)) throw InvalidNoise("total variance must be positive");
    if (!(eta_sq >= 0.0)) throw InvalidNoise("noise variance must be non-negative");
    if (eta_sq > sigma_sq) throw InvalidNoise("noise variance exceeds total variance");
    return 1.0 - eta_sq / sigma_sq;
}

/// Asymptotic squared correlation of two error-laden observations of an exact
/// linear relation: the product of the two attenuation factors, using the
/// sample variances of x and y as the total variances.
inline double dilution_corrected_rho_sq(ConstVectorRef x, ConstVectorRef y, const NoiseModel& noise) {
    if (x.size() != y.size()) throw InvalidArgument("dilution_corrected_rho_sq: length mismatch");
    return attenuation_factor(stats::variance(x), noise.eta_x_sq) *
           attenuation_factor(stats::variance(y), noise.eta_y_sq);
}

} // namespace mcorr
