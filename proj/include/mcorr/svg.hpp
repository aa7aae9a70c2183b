#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mcorr/rp_correlation.hpp"

namespace mcorr::svg {

/// Maps d-dimensional rows onto the drawing plane.
struct PlaneProjection {
    Vector origin;
    Matrix axes;  ///< d x 2

    Matrix apply(const Matrix& points) const { return (points.rowwise() - origin.transpose()) * axes; }
};

/// "pca" (top two principal components of the data) or a coordinate pair such
/// as "xy", "xz", "yz". Two-dimensional data may pass an empty string.
inline PlaneProjection make_projection(const Dataset& data, const std::string& plane) {
    const Eigen::Index d = data.cols();
    if (d != 2 && d != 3)
        throw DimensionUnsupported("plots need 2- or 3-dimensional data, got d = " + std::to_string(d));
    if (plane == "pca") {
        const auto lin = fit_linear(data, 2);
        return {lin.mean, lin.basis};
    }
    if (plane.empty() || plane == "xy") {
        if (d == 3 && plane.empty())
            throw DimensionUnsupported("3-dimensional data needs --project (pca, xy, xz or yz)");
        Matrix axes = Matrix::Zero(d, 2);
        axes(0, 0) = axes(1, 1) = 1.0;
        return {Vector::Zero(d), axes};
    }
    if (d == 3 && (plane == "xz" || plane == "yz")) {
        Matrix axes = Matrix::Zero(3, 2);
        axes(plane == "xz" ? 0 : 1, 0) = 1.0;
        axes(2, 1) = 1.0;
        return {Vector::Zero(3), axes};
    }
    throw DimensionUnsupported("unknown projection plane '" + plane + "'");
}

/// Polylines tracing a manifold: the chain (or spline samples) for curves, the
/// grid rows and columns for surfaces.
inline std::vector<Matrix> manifold_polylines(const Manifold& manifold, const Dataset& data) {
    std::vector<Matrix> lines;
    if (const auto* lin = std::get_if<LinearPrincipalManifold>(&manifold)) {
        if (lin->intrinsic_dim() < 1) return lines;
        const Vector coords = (data.values().rowwise() - lin->mean.transpose()) * lin->basis.col(0);
        Matrix seg(2, lin->dim());
        seg.row(0) = (lin->mean + coords.minCoeff() * lin->basis.col(0)).transpose();
        seg.row(1) = (lin->mean + coords.maxCoeff() * lin->basis.col(0)).transpose();
        lines.push_back(seg);
        return lines;
    }
    const auto& m = std::get<ElasticManifold>(manifold);
    if (m.intrinsic_dim == 1) {
        if (!m.spline_smoothing) {
            lines.push_back(m.nodes);
            return lines;
        }
        const auto pieces = geometry::catmull_rom(m.nodes);
        constexpr int per_piece = 16;
        Matrix pts(static_cast<Eigen::Index>(pieces.size()) * per_piece + 1, m.dim());
        Eigen::Index row = 0;
        for (const auto& pc : pieces)
            for (int s = 0; s < per_piece; ++s) pts.row(row++) = pc.eval(static_cast<double>(s) / per_piece).transpose();
        pts.row(row) = pieces.back().eval(1.0).transpose();
        lines.push_back(pts);
        return lines;
    }
    const Eigen::Index m1 = m.grid[0], m2 = m.grid[1];
    for (Eigen::Index a = 0; a < m1; ++a) lines.push_back(m.nodes.middleRows(a * m2, m2));
    for (Eigen::Index b = 0; b < m2; ++b) {
        Matrix col(m1, m.dim());
        for (Eigen::Index a = 0; a < m1; ++a) col.row(a) = m.nodes.row(a * m2 + b);
        lines.push_back(col);
    }
    return lines;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

/// Standalone SVG: one <g id="data"> layer of circles plus, when given, a
/// <g id="manifold"> layer of polylines. Both use the same data-to-pixel map.
inline std::string render(const Matrix& points, const std::vector<Matrix>& lines, const std::string& title = {}) {
    constexpr double width = 640.0, height = 480.0, margin = 32.0;
    double xmin = points.col(0).minCoeff(), xmax = points.col(0).maxCoeff();
    double ymin = points.col(1).minCoeff(), ymax = points.col(1).maxCoeff();
    for (const auto& l : lines) {
        xmin = std::min(xmin, l.col(0).minCoeff());
        xmax = std::max(xmax, l.col(0).maxCoeff());
        ymin = std::min(ymin, l.col(1).minCoeff());
        ymax = std::max(ymax, l.col(1).maxCoeff());
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
    const double scale = std::min(width - 2 * margin, height - 2 * margin) / span;
    auto px = [&](double x) { return margin + (x - xmin) * scale; };
    auto py = [&](double y) { return height - margin - (y - ymin) * scale; };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    if (!title.empty()) out << "<title>" << title << "</title>\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<g id=\"data\" fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        out << "<circle cx=\"" << fmt(px(points(i, 0))) << "\" cy=\"" << fmt(py(points(i, 1))) << "\" r=\"1.5\"/>\n";
    out << "</g>\n";
    if (!lines.empty()) {
        out << "<g id=\"manifold\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\">\n";
        for (const auto& l : lines) {
            out << "<polyline points=\"";
            for (Eigen::Index i = 0; i < l.rows(); ++i)
                out << (i ? " " : "") << fmt(px(l(i, 0))) << ',' << fmt(py(l(i, 1)));
            out << "\"/>\n";
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
    return out.str();
}

/// Scatter of the data with an optional manifold overlay.
inline std::string plot(const Dataset& data, const std::optional<Manifold>& manifold, const std::string& plane) {
    const auto projection = make_projection(data, plane);
    std::vector<Matrix> lines;
    if (manifold)
        for (const auto& l : manifold_polylines(*manifold, data)) {
            if (l.cols() != data.cols()) throw InvalidArgument("manifold dimension does not match data");
            lines.push_back(projection.apply(l));
        }
    return render(projection.apply(data.values()), lines);
}

} // namespace mcorr::svg
