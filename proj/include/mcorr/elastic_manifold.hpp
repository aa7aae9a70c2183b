#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "mcorr/detail/numeric.hpp"
#include "mcorr/pca_manifold.hpp"

namespace mcorr {

/// Discretized smooth principal manifold: a chain of nodes (curve) or a
/// rectangular grid of nodes (surface) embedded in R^d.
///
/// Grid nodes are stored row-major: node (a, b) of an m1 x m2 grid has index
/// a * m2 + b.
struct ElasticManifold {
    Matrix nodes;                     ///< m x d node embeddings
    int intrinsic_dim = 1;            ///< 1 (chain) or 2 (grid)
    std::vector<Eigen::Index> grid;   ///< {m} or {m1, m2}
    double stretch_penalty = 0.01;
    double bend_penalty = 0.1;
    bool spline_smoothing = false;    ///< chains only: C1 centripetal Catmull-Rom through the nodes

    Eigen::Index dim() const noexcept { return nodes.cols(); }
    Eigen::Index node_count() const noexcept { return nodes.rows(); }

    Eigen::Index face_count() const {
        if (intrinsic_dim == 1) return grid[0] - 1;
        return 2 * (grid[0] - 1) * (grid[1] - 1);
    }

    void validate() const {
        if (intrinsic_dim != 1 && intrinsic_dim != 2)
            throw DimensionUnsupported("elastic manifolds support intrinsic dimension 1 or 2, got " +
                                       std::to_string(intrinsic_dim));
        if (grid.size() != static_cast<std::size_t>(intrinsic_dim))
            throw InvalidArgument("grid shape does not match intrinsic dimension");
        Eigen::Index m = 1;
        for (auto g : grid) {
            if (g < 2) throw InvalidArgument("every grid axis needs at least 2 nodes");
            m *= g;
        }
        if (m != nodes.rows()) throw InvalidArgument("node count does not match grid shape");
        if (nodes.cols() < intrinsic_dim) throw InvalidArgument("embedding dimension below intrinsic dimension");
        if (!nodes.allFinite()) throw InvalidArgument("non-finite node coordinate");
        if (stretch_penalty < 0 || bend_penalty < 0) throw InvalidArgument("penalties must be non-negative");
        if (spline_smoothing && intrinsic_dim != 1) throw InvalidArgument("spline smoothing applies to chains only");
    }
};

/// Energy terms of an elastic map at a given node placement and assignment.
struct ElasticEnergy {
    double approx = 0.0;   ///< (1/n) sum ||x - y_nearest(x)||^2
    double stretch = 0.0;  ///< sum over edges ||y_a - y_b||^2
    double bend = 0.0;     ///< sum over ribs ||y_a - 2 y_b + y_c||^2
    double total = 0.0;    ///< approx + lambda * stretch + mu * bend
};

struct ElasticFitOptions {
    int k = 1;
    std::vector<Eigen::Index> nodes;  ///< {m} or {m1, m2}; empty selects the default
    double lambda = 0.01;
    double mu = 0.1;
    int max_iter = 200;
    double tol = 1e-6;
    bool spline_smoothing = false;
};

struct ElasticFitResult {
    ElasticManifold manifold;
    std::vector<ElasticEnergy> trace;  ///< trace[0] is the initialization, one entry per iteration after
    int iterations = 0;
    bool converged = false;
};

/// Nearest point on the manifold for each query row.
struct ProjectionResult {
    Matrix foot_points;
    Matrix residuals;
    std::vector<Matrix> tangents;            ///< per row, d x k orthonormal
    std::vector<Eigen::Index> face_index;    ///< segment or triangle carrying the foot point
    Vector boundary_distance;                ///< distance from the foot point to the carrying face's boundary

    /// Foot point lies strictly inside its face.
    bool interior(Eigen::Index r, double eps = 1e-12) const { return boundary_distance[r] > eps; }
};

struct SelfConsistencyBin {
    double deviation = 0.0;  ///< normal-space offset of the bin mean, in units of the data RMS scale
    Eigen::Index support = 0;
};

namespace elastic {

inline Eigen::Index default_chain_nodes(Eigen::Index n) {
    return std::max<Eigen::Index>(10, static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n)))));
}

inline std::vector<std::pair<Eigen::Index, Eigen::Index>> edges(const ElasticManifold& m) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> e;
    if (m.intrinsic_dim == 1) {
        for (Eigen::Index i = 0; i + 1 < m.grid[0]; ++i) e.emplace_back(i, i + 1);
        return e;
    }
    const Eigen::Index m1 = m.grid[0], m2 = m.grid[1];
    for (Eigen::Index a = 0; a < m1; ++a)
        for (Eigen::Index b = 0; b < m2; ++b) {
            if (b + 1 < m2) e.emplace_back(a * m2 + b, a * m2 + b + 1);
            if (a + 1 < m1) e.emplace_back(a * m2 + b, (a + 1) * m2 + b);
        }
    return e;
}

inline std::vector<std::array<Eigen::Index, 3>> ribs(const ElasticManifold& m) {
    std::vector<std::array<Eigen::Index, 3>> r;
    if (m.intrinsic_dim == 1) {
        for (Eigen::Index i = 1; i + 1 < m.grid[0]; ++i) r.push_back({i - 1, i, i + 1});
        return r;
    }
    const Eigen::Index m1 = m.grid[0], m2 = m.grid[1];
    for (Eigen::Index a = 0; a < m1; ++a)
        for (Eigen::Index b = 1; b + 1 < m2; ++b) r.push_back({a * m2 + b - 1, a * m2 + b, a * m2 + b + 1});
    for (Eigen::Index b = 0; b < m2; ++b)
        for (Eigen::Index a = 1; a + 1 < m1; ++a) r.push_back({(a - 1) * m2 + b, a * m2 + b, (a + 1) * m2 + b});
    return r;
}

/// Quadratic form of the stretch + bend penalties: y^T Q y = lambda U_stretch + mu U_bend.
inline Matrix penalty_matrix(const ElasticManifold& m, double lambda, double mu) {
    const Eigen::Index n = m.node_count();
    Matrix q = Matrix::Zero(n, n);
    for (auto [a, b] : edges(m)) {
        q(a, a) += lambda;
        q(b, b) += lambda;
        q(a, b) -= lambda;
        q(b, a) -= lambda;
    }
    for (const auto& r : ribs(m)) {
        const std::array<double, 3> w{1.0, -2.0, 1.0};
        for (int s = 0; s < 3; ++s)
            for (int t = 0; t < 3; ++t) q(r[s], r[t]) += mu * w[s] * w[t];
    }
    return q;
}

inline double stretch_energy(const ElasticManifold& m) {
    double s = 0.0;
    for (auto [a, b] : edges(m)) s += (m.nodes.row(a) - m.nodes.row(b)).squaredNorm();
    return s;
}

inline double bend_energy(const ElasticManifold& m) {
    double s = 0.0;
    for (const auto& r : ribs(m)) s += (m.nodes.row(r[0]) - 2.0 * m.nodes.row(r[1]) + m.nodes.row(r[2])).squaredNorm();
    return s;
}

/// Index of the closest node per row; ties go to the lowest index.
inline std::vector<Eigen::Index> nearest_nodes(const Matrix& nodes, const Matrix& points, Vector* sq_dist = nullptr,
                                               std::size_t threads = detail::default_threads()) {
    const auto n = static_cast<std::size_t>(points.rows());
    std::vector<Eigen::Index> idx(n);
    Vector dist(points.rows());
    detail::parallel_for(n, threads, [&](std::size_t r) {
        const auto row = static_cast<Eigen::Index>(r);
        double best = std::numeric_limits<double>::infinity();
        Eigen::Index arg = 0;
        for (Eigen::Index j = 0; j < nodes.rows(); ++j) {
            const double d2 = (points.row(row) - nodes.row(j)).squaredNorm();
            if (d2 < best) {
                best = d2;
                arg = j;
            }
        }
        idx[r] = arg;
        dist[row] = best;
    });
    if (sq_dist) *sq_dist = std::move(dist);
    return idx;
}

inline ElasticEnergy energy(const ElasticManifold& m, const Matrix& points, std::size_t threads) {
    Vector d2;
    nearest_nodes(m.nodes, points, &d2, threads);
    ElasticEnergy e;
    e.approx = detail::pairwise_sum({d2.data(), static_cast<std::size_t>(d2.size())}) / static_cast<double>(points.rows());
    e.stretch = stretch_energy(m);
    e.bend = bend_energy(m);
    e.total = e.approx + m.stretch_penalty * e.stretch + m.bend_penalty * e.bend;
    return e;
}

/// Nodes on a regular grid spanning +-2 sqrt(lambda_i) along the top-k principal axes.
inline Matrix initial_nodes(const LinearPrincipalManifold& lin, const std::vector<Eigen::Index>& grid) {
    const Eigen::Index m = grid.size() == 1 ? grid[0] : grid[0] * grid[1];
    Matrix nodes(m, lin.dim());
    auto coord = [](Eigen::Index i, Eigen::Index count) {
        return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(count - 1);
    };
    const Vector half0 = 2.0 * std::sqrt(std::max(lin.eigenvalues[0], 0.0)) * lin.basis.col(0);
    if (grid.size() == 1) {
        for (Eigen::Index i = 0; i < m; ++i) nodes.row(i) = (lin.mean + coord(i, m) * half0).transpose();
        return nodes;
    }
    const Vector half1 = 2.0 * std::sqrt(std::max(lin.eigenvalues[1], 0.0)) * lin.basis.col(1);
    for (Eigen::Index a = 0; a < grid[0]; ++a)
        for (Eigen::Index b = 0; b < grid[1]; ++b)
            nodes.row(a * grid[1] + b) = (lin.mean + coord(a, grid[0]) * half0 + coord(b, grid[1]) * half1).transpose();
    return nodes;
}

/// Exact minimizer of the energy over node positions for a fixed assignment.
inline Matrix solve_nodes(const ElasticManifold& m, const Matrix& points, const std::vector<Eigen::Index>& assign) {
    const Eigen::Index count = m.node_count();
    const double inv_n = 1.0 / static_cast<double>(points.rows());
    Matrix a = penalty_matrix(m, m.stretch_penalty, m.bend_penalty);
    Matrix rhs = Matrix::Zero(count, points.cols());
    Vector support = Vector::Zero(count);
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        const auto j = assign[static_cast<std::size_t>(r)];
        support[j] += 1.0;
        rhs.row(j) += points.row(r);
    }
    const bool empty = (support.array() == 0.0).any();
    if (empty && m.stretch_penalty == 0.0 && m.bend_penalty == 0.0)
        throw SingularSystem("node without assigned data and both penalties zero");
    a.diagonal() += support * inv_n;
    rhs *= inv_n;
    Eigen::LDLT<Matrix> ldlt(a);
    const Vector piv = ldlt.vectorD();
    const double top = piv.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(piv.minCoeff() > 1e-14 * top))
        throw SingularSystem("elastic node system is singular");
    Matrix y = ldlt.solve(rhs);
    if (!y.allFinite()) throw SingularSystem("elastic node system produced non-finite nodes");
    return y;
}

} // namespace elastic

/// Fits an elastic map by alternating nearest-node assignment with an exact
/// solve of the quadratic node system. Each iteration is one solve followed by
/// a reassignment; the recorded energy never increases. Stops when the
/// relative energy drop falls below tol, the assignment stops changing, or
/// max_iter solves have run.
inline ElasticFitResult fit_elastic(const Dataset& data, ElasticFitOptions opt,
                                    std::size_t threads = detail::default_threads()) {
    if (opt.k != 1 && opt.k != 2)
        throw DimensionUnsupported("elastic manifolds support k = 1 or k = 2, got k = " + std::to_string(opt.k));
    if (data.cols() < opt.k) throw InvalidArgument("data dimension below intrinsic dimension");
    if (opt.lambda < 0 || opt.mu < 0) throw InvalidArgument("penalties must be non-negative");
    if (opt.max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
    if (!(opt.tol > 0)) throw InvalidArgument("tol must be positive");
    if (opt.spline_smoothing && opt.k != 1) throw InvalidArgument("spline smoothing applies to k = 1 only");
    if (opt.nodes.empty()) {
        if (opt.k == 1) {
            opt.nodes = {elastic::default_chain_nodes(data.rows())};
        } else {
            const auto side = std::max<Eigen::Index>(
                3, static_cast<Eigen::Index>(std::llround(std::sqrt(std::sqrt(static_cast<double>(data.rows()))))));
            opt.nodes = {side, side};
        }
    }
    if (opt.nodes.size() != static_cast<std::size_t>(opt.k)) throw InvalidArgument("node grid shape does not match k");

    ElasticFitResult res;
    auto& m = res.manifold;
    m.intrinsic_dim = opt.k;
    m.grid = opt.nodes;
    m.stretch_penalty = opt.lambda;
    m.bend_penalty = opt.mu;
    m.spline_smoothing = opt.spline_smoothing;
    const auto lin = fit_linear(data, opt.k);
    m.nodes = elastic::initial_nodes(lin, m.grid);
    m.validate();
    if (data.rows() < m.node_count()) throw InvalidArgument("need at least as many rows as nodes");

    const Matrix& x = data.values();
    auto assign = elastic::nearest_nodes(m.nodes, x, nullptr, threads);
    res.trace.push_back(elastic::energy(m, x, threads));
    for (int it = 0; it < opt.max_iter; ++it) {
        m.nodes = elastic::solve_nodes(m, x, assign);
        auto next = elastic::nearest_nodes(m.nodes, x, nullptr, threads);
        res.trace.push_back(elastic::energy(m, x, threads));
        ++res.iterations;
        const double prev = res.trace[res.trace.size() - 2].total;
        const double cur = res.trace.back().total;
        const bool same = next == assign;
        assign = std::move(next);
        if (same || (prev - cur) <= opt.tol * std::max(std::abs(prev), std::numeric_limits<double>::min())) {
            res.converged = true;
            break;
        }
    }
    return res;
}

namespace geometry {

/// Closest point on segment [a, b]; t is the affine parameter in [0, 1].
struct SegmentFoot {
    double t = 0.0;
    double sq_dist = 0.0;
};

inline SegmentFoot closest_on_segment(const Vector& x, const Vector& a, const Vector& b) {
    const Vector ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return {t, (x - (a + t * ab)).squaredNorm()};
}

struct TriangleFoot {
    Vector point;
    double sq_dist = 0.0;
};

/// Closest point on triangle abc in any dimension (Voronoi-region walk over
/// vertices, edges and the interior, using dot products only).
inline TriangleFoot closest_on_triangle(const Vector& p, const Vector& a, const Vector& b, const Vector& c) {
    const Vector ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    auto done = [&](Vector q) { return TriangleFoot{q, (p - q).squaredNorm()}; };
    if (d1 <= 0 && d2 <= 0) return done(a);
    const Vector bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return done(b);
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        const double denom = d1 - d3;
        return done(denom > 0 ? Vector(a + (d1 / denom) * ab) : a);
    }
    const Vector cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return done(c);
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        const double denom = d2 - d6;
        return done(denom > 0 ? Vector(a + (d2 / denom) * ac) : a);
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double denom = (d4 - d3) + (d5 - d6);
        return done(denom > 0 ? Vector(b + ((d4 - d3) / denom) * (c - b)) : b);
    }
    const double denom = va + vb + vc;
    if (!(denom > 0)) {
        // Degenerate (collinear) triangle: fall back to its edges.
        TriangleFoot best = done(a);
        for (auto [u, v] : {std::pair{&a, &b}, std::pair{&b, &c}, std::pair{&a, &c}}) {
            const auto f = closest_on_segment(p, *u, *v);
            if (f.sq_dist < best.sq_dist) best = done(*u + f.t * (*v - *u));
        }
        return best;
    }
    const double v = vb / denom, w = vc / denom;
    return done(a + v * ab + w * ac);
}

/// Orthonormal basis for the span of the given columns; columns that collapse
/// are replaced with the standard basis vector least aligned with the frame.
inline Matrix orthonormal_frame(const Matrix& dirs) {
    const Eigen::Index d = dirs.rows();
    Matrix q(d, dirs.cols());
    for (Eigen::Index c = 0; c < dirs.cols(); ++c) {
        Vector v = dirs.col(c);
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index p = 0; p < c; ++p) v -= q.col(p).dot(v) * q.col(p);
        const double scale = dirs.col(c).norm();
        if (!(v.norm() > 1e-12 * std::max(scale, 1e-300))) {
            Eigen::Index pick = 0;
            double least = std::numeric_limits<double>::infinity();
            for (Eigen::Index e = 0; e < d; ++e) {
                double overlap = 0.0;
                for (Eigen::Index p = 0; p < c; ++p) overlap += q(e, p) * q(e, p);
                if (overlap < least) {
                    least = overlap;
                    pick = e;
                }
            }
            v = Vector::Unit(d, pick);
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index p = 0; p < c; ++p) v -= q.col(p).dot(v) * q.col(p);
        }
        q.col(c) = v.normalized();
    }
    return q;
}

inline double point_segment_distance(const Vector& x, const Vector& a, const Vector& b) {
    return std::sqrt(closest_on_segment(x, a, b).sq_dist);
}

/// Cubic piece p(s) = c0 + c1 s + c2 s^2 + c3 s^3, s in [0, 1].
struct CubicPiece {
    Matrix coeffs;  ///< d x 4

    Vector eval(double s) const {
        return coeffs.col(0) + s * (coeffs.col(1) + s * (coeffs.col(2) + s * coeffs.col(3)));
    }
    Vector derivative(double s) const { return coeffs.col(1) + s * (2.0 * coeffs.col(2) + 3.0 * s * coeffs.col(3)); }
};

/// Centripetal Catmull-Rom pieces through the chain nodes, in Hermite form.
/// End tangents use reflected phantom nodes, so the curve is C1 and passes
/// through every node.
inline std::vector<CubicPiece> catmull_rom(const Matrix& nodes) {
    const Eigen::Index m = nodes.rows();
    auto node = [&](Eigen::Index i) -> Vector {
        if (i < 0) return 2.0 * nodes.row(0).transpose() - nodes.row(1).transpose();
        if (i >= m) return 2.0 * nodes.row(m - 1).transpose() - nodes.row(m - 2).transpose();
        return nodes.row(i).transpose();
    };
    double scale = 0.0;
    for (Eigen::Index i = 0; i + 1 < m; ++i) scale = std::max(scale, (nodes.row(i + 1) - nodes.row(i)).norm());
    const double floor = std::max(1e-12 * scale, 1e-300);
    auto knot = [&](const Vector& p, const Vector& q) { return std::max(std::sqrt((q - p).norm()), floor); };

    std::vector<CubicPiece> pieces;
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
        const Vector p0 = node(i - 1), p1 = node(i), p2 = node(i + 1), p3 = node(i + 2);
        const double t01 = knot(p0, p1), t12 = knot(p1, p2), t23 = knot(p2, p3);
        Vector m1 = (p1 - p0) / t01 - (p2 - p0) / (t01 + t12) + (p2 - p1) / t12;
        Vector m2 = (p2 - p1) / t12 - (p3 - p1) / (t12 + t23) + (p3 - p2) / t23;
        m1 *= t12;
        m2 *= t12;
        CubicPiece c;
        c.coeffs.resize(nodes.cols(), 4);
        c.coeffs.col(0) = p1;
        c.coeffs.col(1) = m1;
        c.coeffs.col(2) = -3.0 * p1 - 2.0 * m1 + 3.0 * p2 - m2;
        c.coeffs.col(3) = 2.0 * p1 + m1 - 2.0 * p2 + m2;
        pieces.push_back(std::move(c));
    }
    return pieces;
}

} // namespace geometry

namespace detail {

struct Foot {
    Vector point;
    Eigen::Index face = 0;
    Matrix tangent;
    double boundary_distance = 0.0;
};

/// Chain tangent for segment f; degenerate segments borrow the nearest
/// non-degenerate neighbour's direction.
inline Vector chain_direction(const Matrix& nodes, Eigen::Index f) {
    const Eigen::Index segs = nodes.rows() - 1;
    for (Eigen::Index off = 0; off <= segs; ++off) {
        for (Eigen::Index g : {f - off, f + off}) {
            if (g < 0 || g >= segs) continue;
            const Vector dir = (nodes.row(g + 1) - nodes.row(g)).transpose();
            if (dir.norm() > 0.0) return dir.normalized();
        }
    }
    return Vector::Unit(nodes.cols(), 0);
}

inline Foot project_polyline(const Matrix& nodes, const Vector& x) {
    const Eigen::Index segs = nodes.rows() - 1;
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index face = 0;
    double best_t = 0.0;
    for (Eigen::Index f = 0; f < segs; ++f) {
        const auto sf = geometry::closest_on_segment(x, nodes.row(f).transpose(), nodes.row(f + 1).transpose());
        if (sf.sq_dist < best) {
            best = sf.sq_dist;
            face = f;
            best_t = sf.t;
        }
    }
    const Vector a = nodes.row(face).transpose(), b = nodes.row(face + 1).transpose();
    Foot foot;
    foot.point = a + best_t * (b - a);
    foot.face = face;
    foot.tangent = chain_direction(nodes, face);
    foot.boundary_distance = std::min(best_t, 1.0 - best_t) * (b - a).norm();
    return foot;
}

inline Foot project_spline(const Matrix& nodes, const std::vector<geometry::CubicPiece>& pieces, const Vector& x) {
    constexpr int samples = 16;
    const auto count = static_cast<Eigen::Index>(pieces.size());
    std::vector<double> seg_best(pieces.size());
    std::vector<int> seg_arg(pieces.size());
    std::vector<double> seg_spacing(pieces.size());
    double global = std::numeric_limits<double>::infinity();
    for (Eigen::Index f = 0; f < count; ++f) {
        const auto& pc = pieces[static_cast<std::size_t>(f)];
        double b = std::numeric_limits<double>::infinity();
        int arg = 0;
        double spacing = 0.0;
        Vector prev = pc.eval(0.0);
        for (int s = 0; s <= samples; ++s) {
            const Vector p = s == 0 ? prev : pc.eval(static_cast<double>(s) / samples);
            if (s > 0) spacing = std::max(spacing, (p - prev).norm());
            prev = p;
            const double dist = (p - x).norm();
            if (dist < b) {
                b = dist;
                arg = s;
            }
        }
        seg_best[static_cast<std::size_t>(f)] = b;
        seg_arg[static_cast<std::size_t>(f)] = arg;
        seg_spacing[static_cast<std::size_t>(f)] = spacing;
        global = std::min(global, b);
    }
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index face = 0;
    double best_s = 0.0;
    for (Eigen::Index f = 0; f < count; ++f) {
        const auto fi = static_cast<std::size_t>(f);
        if (seg_best[fi] - seg_spacing[fi] > global) continue;
        const auto& pc = pieces[fi];
        double lo = std::max(0.0, (seg_arg[fi] - 1.0) / samples);
        double hi = std::min(1.0, (seg_arg[fi] + 1.0) / samples);
        auto dist2 = [&](double s) { return (pc.eval(s) - x).squaredNorm(); };
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
        double fc = dist2(c), fd = dist2(d);
        while (hi - lo > 1e-12) {
            if (fc < fd) {
                hi = d;
                d = c;
                fd = fc;
                c = hi - g * (hi - lo);
                fc = dist2(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + g * (hi - lo);
                fd = dist2(d);
            }
        }
        double s = 0.5 * (lo + hi);
        double fs = dist2(s);
        for (double edge : {0.0, 1.0}) {
            const double fe = dist2(edge);
            if (fe < fs && std::abs(edge - s) <= 2.0 / samples) {
                s = edge;
                fs = fe;
            }
        }
        if (fs < best) {
            best = fs;
            face = f;
            best_s = s;
        }
    }
    const auto& pc = pieces[static_cast<std::size_t>(face)];
    Foot foot;
    foot.point = pc.eval(best_s);
    foot.face = face;
    Vector dir = pc.derivative(best_s);
    foot.tangent = dir.norm() > 0.0 ? Vector(dir.normalized()) : chain_direction(nodes, face);
    double bd = std::numeric_limits<double>::infinity();
    if (face == 0) bd = std::min(bd, (foot.point - nodes.row(0).transpose()).norm());
    if (face == count - 1) bd = std::min(bd, (foot.point - nodes.row(nodes.rows() - 1).transpose()).norm());
    foot.boundary_distance = bd;
    return foot;
}

/// Triangle t of cell (a, b): 0 = (a,b),(a+1,b),(a+1,b+1); 1 = (a,b),(a+1,b+1),(a,b+1).
inline std::array<Eigen::Index, 3> triangle_nodes(const ElasticManifold& m, Eigen::Index face) {
    const Eigen::Index m2 = m.grid[1];
    const Eigen::Index cell = face / 2;
    const Eigen::Index a = cell / (m2 - 1), b = cell % (m2 - 1);
    const Eigen::Index p00 = a * m2 + b, p10 = (a + 1) * m2 + b, p11 = (a + 1) * m2 + b + 1, p01 = a * m2 + b + 1;
    if (face % 2 == 0) return {p00, p10, p11};
    return {p00, p11, p01};
}

inline Foot project_grid(const ElasticManifold& m, const Vector& x) {
    double best = std::numeric_limits<double>::infinity();
    Foot foot;
    const Eigen::Index faces = m.face_count();
    for (Eigen::Index f = 0; f < faces; ++f) {
        const auto tri = triangle_nodes(m, f);
        auto tf = geometry::closest_on_triangle(x, m.nodes.row(tri[0]).transpose(), m.nodes.row(tri[1]).transpose(),
                                                m.nodes.row(tri[2]).transpose());
        if (tf.sq_dist < best) {
            best = tf.sq_dist;
            foot.point = std::move(tf.point);
            foot.face = f;
        }
    }
    const auto tri = triangle_nodes(m, foot.face);
    const Vector a = m.nodes.row(tri[0]).transpose(), b = m.nodes.row(tri[1]).transpose(),
                 c = m.nodes.row(tri[2]).transpose();
    Matrix dirs(m.dim(), 2);
    dirs.col(0) = b - a;
    dirs.col(1) = c - a;
    foot.tangent = geometry::orthonormal_frame(dirs);
    foot.boundary_distance = std::min({geometry::point_segment_distance(foot.point, a, b),
                                       geometry::point_segment_distance(foot.point, b, c),
                                       geometry::point_segment_distance(foot.point, a, c)});
    return foot;
}

} // namespace detail

/// Precomputed projector for repeated queries against one manifold.
class ElasticProjector {
public:
    explicit ElasticProjector(const ElasticManifold& m) : m_(m) {
        m_.validate();
        if (m_.intrinsic_dim == 1 && m_.spline_smoothing) pieces_ = geometry::catmull_rom(m_.nodes);
    }

    detail::Foot project_point(const Vector& x) const {
        if (m_.intrinsic_dim == 2) return detail::project_grid(m_, x);
        if (m_.spline_smoothing) return detail::project_spline(m_.nodes, pieces_, x);
        return detail::project_polyline(m_.nodes, x);
    }

    const ElasticManifold& manifold() const noexcept { return m_; }

private:
    ElasticManifold m_;
    std::vector<geometry::CubicPiece> pieces_;
};

/// Minimal orthogonal projection onto the discretized manifold. The foot point
/// minimizes the distance over every face (segment, spline piece, or
/// triangle); ties go to the lowest face index.
inline ProjectionResult project(const ElasticManifold& m, const Matrix& points,
                                std::size_t threads = detail::default_threads()) {
    if (points.cols() != m.dim()) throw InvalidArgument("project: dimension mismatch");
    const ElasticProjector proj(m);
    const Eigen::Index n = points.rows();
    ProjectionResult out;
    out.foot_points.resize(n, m.dim());
    out.tangents.resize(static_cast<std::size_t>(n));
    out.face_index.resize(static_cast<std::size_t>(n));
    out.boundary_distance.resize(n);
    detail::parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t r) {
        const auto row = static_cast<Eigen::Index>(r);
        auto foot = proj.project_point(points.row(row).transpose());
        out.foot_points.row(row) = foot.point.transpose();
        out.tangents[r] = std::move(foot.tangent);
        out.face_index[r] = foot.face;
        out.boundary_distance[row] = foot.boundary_distance;
    });
    out.residuals = points - out.foot_points;
    return out;
}

/// sqrt of the total variance (trace of the covariance): RMS distance to the mean.
inline double rms_scale(const Matrix& x) { return std::sqrt(stats::column_variances(x).sum()); }

/// Conditional-mean diagnostic. Points are binned by the face carrying their
/// piecewise-linear foot point; each bin reports how far the mean of its
/// points sits off the face, measured in the face's normal space and divided
/// by the data RMS scale. Spline smoothing is ignored here.
inline std::vector<SelfConsistencyBin> self_consistency(const ElasticManifold& manifold, const Dataset& data) {
    ElasticManifold m = manifold;
    m.spline_smoothing = false;
    const auto proj = project(m, data.values());
    const Eigen::Index faces = m.face_count();
    std::vector<SelfConsistencyBin> bins(static_cast<std::size_t>(faces));
    Matrix sums = Matrix::Zero(faces, m.dim());
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        const auto f = proj.face_index[static_cast<std::size_t>(r)];
        sums.row(f) += data.values().row(r);
        ++bins[static_cast<std::size_t>(f)].support;
    }
    const double scale = rms_scale(data.values());
    for (Eigen::Index f = 0; f < faces; ++f) {
        auto& bin = bins[static_cast<std::size_t>(f)];
        if (bin.support == 0) continue;
        const Vector mean = sums.row(f).transpose() / static_cast<double>(bin.support);
        Vector anchor;
        Matrix tangent;
        if (m.intrinsic_dim == 1) {
            anchor = m.nodes.row(f).transpose();
            tangent = detail::chain_direction(m.nodes, f);
        } else {
            const auto tri = detail::triangle_nodes(m, f);
            anchor = m.nodes.row(tri[0]).transpose();
            Matrix dirs(m.dim(), 2);
            dirs.col(0) = (m.nodes.row(tri[1]) - m.nodes.row(tri[0])).transpose();
            dirs.col(1) = (m.nodes.row(tri[2]) - m.nodes.row(tri[0])).transpose();
            tangent = geometry::orthonormal_frame(dirs);
        }
        const Vector off = mean - anchor;
        const Vector normal = off - tangent * (tangent.transpose() * off);
        bin.deviation = scale > 0.0 ? normal.norm() / scale : 0.0;
    }
    return bins;
}

/// Support-weighted mean of the bin deviations.
inline double mean_deviation(const std::vector<SelfConsistencyBin>& bins) {
    double num = 0.0, den = 0.0;
    for (const auto& b : bins) {
        num += b.deviation * static_cast<double>(b.support);
        den += static_cast<double>(b.support);
    }
    return den > 0.0 ? num / den : 0.0;
}

inline VarianceDecomposition explained_variance_split(const ElasticManifold& m, const Dataset& data) {
    return variance_split(data.values(), project(m, data.values()).foot_points);
}

/// Straight chain of `nodes` equally spaced nodes along the first principal
/// axis of a k = 1 linear manifold, spanning every projected data coordinate
/// plus a 1% margin at both ends. No foot point falls on an end node, so the
/// chain projects exactly like the line.
inline ElasticManifold straight_chain(const LinearPrincipalManifold& lin, const Dataset& data, Eigen::Index nodes,
                                      double lambda = 0.01, double mu = 0.1) {
    if (lin.intrinsic_dim() != 1) throw InvalidArgument("straight_chain needs a one-dimensional linear manifold");
    if (nodes < 2) throw InvalidArgument("straight_chain needs at least 2 nodes");
    const Vector coords = (data.values().rowwise() - lin.mean.transpose()) * lin.basis.col(0);
    double lo = coords.minCoeff(), hi = coords.maxCoeff();
    const double margin = 0.01 * std::max(hi - lo, 1e-12);
    lo -= margin;
    hi += margin;
    ElasticManifold m;
    m.intrinsic_dim = 1;
    m.grid = {nodes};
    m.stretch_penalty = lambda;
    m.bend_penalty = mu;
    m.nodes.resize(nodes, lin.dim());
    for (Eigen::Index i = 0; i < nodes; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nodes - 1);
        m.nodes.row(i) = (lin.mean + t * lin.basis.col(0)).transpose();
    }
    m.validate();
    return m;
}

} // namespace mcorr
