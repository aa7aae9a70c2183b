#pragma once

#include <string>
#include <variant>

#include "mcorr/elastic_manifold.hpp"

namespace mcorr {

using Manifold = std::variant<LinearPrincipalManifold, ElasticManifold>;

enum class SensitivityMode { residual_jacobian, tangent_graph };

inline std::string to_string(SensitivityMode m) {
    return m == SensitivityMode::residual_jacobian ? "residual_jacobian" : "tangent_graph";
}

inline SensitivityMode parse_mode(const std::string& s) {
    if (s == "residual_jacobian") return SensitivityMode::residual_jacobian;
    if (s == "tangent_graph") return SensitivityMode::tangent_graph;
    throw InvalidArgument("unknown sensitivity mode '" + s + "'");
}

inline Eigen::Index intrinsic_dim(const Manifold& m) {
    return std::visit(
        [](const auto& v) -> Eigen::Index {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LinearPrincipalManifold>)
                return v.intrinsic_dim();
            else
                return v.intrinsic_dim;
        },
        m);
}

/// tangent_graph for curves (honours the linear reduction), residual_jacobian otherwise.
inline SensitivityMode default_mode(const Manifold& m) {
    return intrinsic_dim(m) == 1 ? SensitivityMode::tangent_graph : SensitivityMode::residual_jacobian;
}

/// Projection onto either manifold kind. Linear manifolds report an infinite
/// boundary distance and their basis as the tangent frame.
inline ProjectionResult project_any(const Manifold& m, const Matrix& points,
                                    std::size_t threads = detail::default_threads()) {
    if (const auto* lin = std::get_if<LinearPrincipalManifold>(&m)) {
        ProjectionResult out;
        out.foot_points = project_linear(*lin, points);
        out.residuals = points - out.foot_points;
        out.tangents.assign(static_cast<std::size_t>(points.rows()), lin->basis);
        out.face_index.assign(static_cast<std::size_t>(points.rows()), 0);
        out.boundary_distance = Vector::Constant(points.rows(), std::numeric_limits<double>::infinity());
        return out;
    }
    return project(std::get<ElasticManifold>(m), points, threads);
}

/// Local sensitivities S_ij at every sample's foot point.
struct SensitivityField {
    SensitivityMode mode = SensitivityMode::residual_jacobian;
    Eigen::Index n = 0;
    Eigen::Index d = 0;
    std::vector<double> values;        ///< n*d*d, entry (r, i, j) at (r*d + i)*d + j
    std::vector<unsigned char> entry_flag;  ///< 1 where S_ij is a sentinel (graph slope undefined)
    std::vector<unsigned char> boundary;    ///< per sample: foot point too close to a face boundary
    Matrix unit_tangents;              ///< tangent_graph only: n x d unit tangent per sample
    double fd_step = 1e-4;

    double at(Eigen::Index r, Eigen::Index i, Eigen::Index j) const {
        return values[static_cast<std::size_t>((r * d + i) * d + j)];
    }
    bool flagged(Eigen::Index r, Eigen::Index i, Eigen::Index j) const {
        return entry_flag[static_cast<std::size_t>((r * d + i) * d + j)] != 0;
    }
    Eigen::Index boundary_count() const {
        Eigen::Index c = 0;
        for (auto b : boundary) c += b;
        return c;
    }
    /// d x d slice for one sample.
    Matrix sample(Eigen::Index r) const {
        Matrix s(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) s(i, j) = at(r, i, j);
        return s;
    }
};

struct RPCorrelationReport {
    SensitivityMode mode = SensitivityMode::tangent_graph;
    Matrix rho_sq;
    Vector reliabilities;
    Matrix sensitivity_integrals;
    Matrix integral_stderr;       ///< standard error of each integral estimate
    Matrix pair_excluded;         ///< samples left out per pair (boundary or sentinel)
    Eigen::Index excluded_samples = 0;  ///< boundary-flagged samples
    Eigen::Index sample_count = 0;

    /// sign(pearson) * sqrt(rho_sq): heuristic extension, not part of the measure.
    Matrix signed_heuristic;
};

/// Per-column standard deviation (1/n), used as the finite-difference scale.
inline Vector column_scales(const Matrix& x) {
    return stats::column_variances(x).cwiseSqrt();
}

/// Evaluates S_ij = d(x - pi(x))_i / dx_j at each sample.
///
/// residual_jacobian: central differences with h_j = fd_step * sd(column j);
/// samples whose foot point lies within 2 max_j h_j of a face boundary are
/// marked in `boundary`.
/// tangent_graph (k = 1): S_ij = t_i / t_j from the unit tangent t; entries
/// with |t_j| < 1e-8 are sentinels (0, flagged).
inline SensitivityField sensitivity_field(const Manifold& m, const Dataset& data, SensitivityMode mode,
                                          double fd_step = 1e-4, std::size_t threads = detail::default_threads()) {
    if (!(fd_step > 0.0 && fd_step <= 1e-1)) throw InvalidArgument("fd_step must lie in (0, 0.1]");
    const Matrix& x = data.values();
    const Eigen::Index n = x.rows(), d = x.cols();
    SensitivityField f;
    f.mode = mode;
    f.n = n;
    f.d = d;
    f.fd_step = fd_step;
    f.values.assign(static_cast<std::size_t>(n * d * d), 0.0);
    f.entry_flag.assign(f.values.size(), 0);
    f.boundary.assign(static_cast<std::size_t>(n), 0);

    if (mode == SensitivityMode::tangent_graph) {
        if (intrinsic_dim(m) != 1)
            throw ModeUnsupported("tangent_graph sensitivities need a one-dimensional manifold, got k = " +
                                  std::to_string(intrinsic_dim(m)));
        const auto proj = project_any(m, x, threads);
        f.unit_tangents.resize(n, d);
        for (Eigen::Index r = 0; r < n; ++r) {
            const Vector t = proj.tangents[static_cast<std::size_t>(r)].col(0).normalized();
            f.unit_tangents.row(r) = t.transpose();
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index j = 0; j < d; ++j) {
                    const auto idx = static_cast<std::size_t>((r * d + i) * d + j);
                    if (std::abs(t[j]) < 1e-8) {
                        f.entry_flag[idx] = 1;
                    } else {
                        f.values[idx] = t[i] / t[j];
                    }
                }
        }
        return f;
    }

    const Vector h = fd_step * column_scales(x);
    const double h_max = h.maxCoeff();
    const auto base = project_any(m, x, threads);
    for (Eigen::Index r = 0; r < n; ++r)
        f.boundary[static_cast<std::size_t>(r)] = base.boundary_distance[r] < 2.0 * h_max ? 1 : 0;

    for (Eigen::Index j = 0; j < d; ++j) {
        if (!(h[j] > 0.0)) throw DegenerateVariance(data.column_names()[static_cast<std::size_t>(j)]);
        Matrix plus = x, minus = x;
        plus.col(j).array() += h[j];
        minus.col(j).array() -= h[j];
        const Matrix rp = plus - project_any(m, plus, threads).foot_points;
        const Matrix rm = minus - project_any(m, minus, threads).foot_points;
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index i = 0; i < d; ++i)
                f.values[static_cast<std::size_t>((r * d + i) * d + j)] = (rp(r, i) - rm(r, i)) / (2.0 * h[j]);
    }
    return f;
}

/// Riemann-Pearson correlation: rho^2_ij = R_i R_j * mean over samples of
/// S_ij S_ji, the sample mean being the integral against the pushforward of
/// the empirical distribution onto the manifold. Boundary samples and
/// sentinel entries are left out of the mean. Means use pairwise summation.
inline RPCorrelationReport rp_correlation(const Dataset& data, const Manifold& m, SensitivityMode mode,
                                          double fd_step = 1e-4, std::size_t threads = detail::default_threads()) {
    const Eigen::Index n = data.rows(), d = data.cols();
    for (Eigen::Index i = 0; i < d; ++i)
        if (!(stats::variance(data.column(i)) > 0.0))
            throw DegenerateVariance(data.column_names()[static_cast<std::size_t>(i)]);

    const auto proj = project_any(m, data.values(), threads);
    const auto field = sensitivity_field(m, data, mode, fd_step, threads);

    RPCorrelationReport rep;
    rep.mode = mode;
    rep.sample_count = n;
    rep.excluded_samples = field.boundary_count();
    if (rep.excluded_samples == n) throw AllSamplesFlagged("every sample lies within the boundary band of a face");
    rep.reliabilities = reliabilities(data, proj.residuals);
    rep.sensitivity_integrals.resize(d, d);
    rep.integral_stderr.resize(d, d);
    rep.pair_excluded.resize(d, d);

    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) {
            terms.clear();
            for (Eigen::Index r = 0; r < n; ++r) {
                if (field.boundary[static_cast<std::size_t>(r)]) continue;
                if (field.flagged(r, i, j) || field.flagged(r, j, i)) continue;
                if (mode == SensitivityMode::tangent_graph) {
                    // (t_i/t_j)(t_j/t_i) written as a ratio of equal products: exactly 1.
                    const double ti = field.unit_tangents(r, i), tj = field.unit_tangents(r, j);
                    terms.push_back((ti * tj) / (tj * ti));
                } else {
                    terms.push_back(field.at(r, i, j) * field.at(r, j, i));
                }
            }
            const auto used = static_cast<double>(terms.size());
            double integral = 0.0, se = 0.0;
            if (!terms.empty()) {
                integral = detail::pairwise_sum(terms) / used;
                for (auto& t : terms) t = (t - integral) * (t - integral);
                se = terms.size() > 1 ? std::sqrt(detail::pairwise_sum(terms) / (used - 1.0) / used) : 0.0;
            }
            rep.sensitivity_integrals(i, j) = rep.sensitivity_integrals(j, i) = integral;
            rep.integral_stderr(i, j) = rep.integral_stderr(j, i) = se;
            rep.pair_excluded(i, j) = rep.pair_excluded(j, i) = static_cast<double>(n) - used;
        }

    rep.rho_sq.resize(d, d);
    rep.signed_heuristic.resize(d, d);
    const Matrix cov = stats::covariance_matrix(data.values());
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const auto lo = std::min(i, j), hi = std::max(i, j);
            rep.rho_sq(i, j) = rep.reliabilities[lo] * rep.reliabilities[hi] * rep.sensitivity_integrals(lo, hi);
            const double sign = cov(i, j) < 0.0 ? -1.0 : 1.0;
            rep.signed_heuristic(i, j) = sign * std::sqrt(std::max(rep.rho_sq(i, j), 0.0));
        }
    return rep;
}

inline RPCorrelationReport rp_correlation(const Dataset& data, const Manifold& m) {
    return rp_correlation(data, m, default_mode(m));
}

struct LReductionCheck {
    Matrix rp_rho_sq;
    Matrix l_rho_sq;
    double max_abs_diff = 0.0;
    ElasticManifold chain;
    LinearPrincipalManifold line;
};

/// Computes the squared correlation matrix twice over the same line: once as
/// the L-correlation of the one-dimensional linear principal manifold and once
/// as the tangent_graph Riemann-Pearson correlation of a straight elastic
/// chain laid along that line.
inline LReductionCheck l_reduction_check(const Dataset& data, Eigen::Index k, Eigen::Index chain_nodes = 16) {
    if (k != 1)
        throw ModeUnsupported("the tangent_graph reduction is defined for k = 1 only, got k = " + std::to_string(k));
    LReductionCheck out;
    out.line = fit_linear(data, 1);
    out.chain = straight_chain(out.line, data, chain_nodes);
    const auto rp = rp_correlation(data, Manifold{out.chain}, SensitivityMode::tangent_graph);
    out.rp_rho_sq = rp.rho_sq;
    const Eigen::Index d = data.cols();
    out.l_rho_sq.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out.l_rho_sq(i, j) = l_correlation(data, out.line, i, j).rho_sq;
    out.max_abs_diff = (out.rp_rho_sq - out.l_rho_sq).cwiseAbs().maxCoeff();
    return out;
}

} // namespace mcorr
