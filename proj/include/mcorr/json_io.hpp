#pragma once

#include <json.hpp>

#include <set>
#include <string>

#include "mcorr/datagen.hpp"
#include "mcorr/rp_correlation.hpp"

namespace mcorr {

using Json = nlohmann::ordered_json;

namespace jsonio {

inline Json vector_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

/// Matrix as a list of rows.
inline Json rows_json(const Matrix& m) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
    return a;
}

/// Matrix as a list of columns.
inline Json columns_json(const Matrix& m) { return rows_json(m.transpose()); }

/// Thrown for schema violations; names the offending key path.
class SchemaError : public ParseError {
public:
    SchemaError(std::string key, const std::string& what) : ParseError("'" + key + "': " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Typed field access with key-naming diagnostics.
class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw SchemaError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string& k) const {
        used_.insert(k);
        return j_.contains(k) && !j_.at(k).is_null();
    }

    const Json& at(const std::string& k) const {
        used_.insert(k);
        if (!j_.contains(k)) throw SchemaError(key(k), "missing required key");
        return j_.at(k);
    }

    double number(const std::string& k) const {
        const auto& v = at(k);
        if (!v.is_number()) throw SchemaError(key(k), "expected a number");
        return v.get<double>();
    }
    double number(const std::string& k, double fallback) const { return has(k) ? number(k) : (used_.insert(k), fallback); }

    std::int64_t integer(const std::string& k) const {
        const auto& v = at(k);
        if (!v.is_number_integer()) throw SchemaError(key(k), "expected an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& k, std::int64_t fallback) const {
        return has(k) ? integer(k) : (used_.insert(k), fallback);
    }

    bool boolean(const std::string& k, bool fallback) const {
        if (!has(k)) {
            used_.insert(k);
            return fallback;
        }
        const auto& v = at(k);
        if (!v.is_boolean()) throw SchemaError(key(k), "expected a boolean");
        return v.get<bool>();
    }

    std::string string(const std::string& k) const {
        const auto& v = at(k);
        if (!v.is_string()) throw SchemaError(key(k), "expected a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& k, const std::string& fallback) const {
        return has(k) ? string(k) : (used_.insert(k), fallback);
    }

    Vector vector(const std::string& k) const {
        const auto& v = at(k);
        if (!v.is_array()) throw SchemaError(key(k), "expected an array of numbers");
        Vector out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw SchemaError(key(k) + "[" + std::to_string(i) + "]", "expected a number");
            out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
        }
        return out;
    }

    /// List of equal-length numeric lists, returned as rows.
    Matrix rows(const std::string& k) const {
        const auto& v = at(k);
        if (!v.is_array()) throw SchemaError(key(k), "expected an array of arrays");
        if (v.empty()) return Matrix(0, 0);
        Matrix out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string ki = key(k) + "[" + std::to_string(i) + "]";
            if (!v[i].is_array()) throw SchemaError(ki, "expected an array of numbers");
            if (i == 0) out.resize(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v[0].size()));
            if (static_cast<Eigen::Index>(v[i].size()) != out.cols()) throw SchemaError(ki, "ragged row length");
            for (std::size_t c = 0; c < v[i].size(); ++c) {
                if (!v[i][c].is_number()) throw SchemaError(ki + "[" + std::to_string(c) + "]", "expected a number");
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[i][c].get<double>();
            }
        }
        return out;
    }

    /// Rejects keys that were never read.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw SchemaError(key(it.key()), "unknown key");
    }

private:
    const Json& j_;
    std::string path_;
    mutable std::set<std::string> used_;
};

} // namespace jsonio

inline Json to_json(const LinearPrincipalManifold& m) {
    Json j;
    j["kind"] = "linear";
    j["mean"] = jsonio::vector_json(m.mean);
    j["basis"] = jsonio::columns_json(m.basis);  // one entry per principal component
    j["eigenvalues"] = jsonio::vector_json(m.eigenvalues);
    j["full_spectrum"] = jsonio::vector_json(m.full_spectrum);
    return j;
}

inline Json to_json(const ElasticManifold& m) {
    Json j;
    j["kind"] = "elastic";
    j["intrinsic_dim"] = m.intrinsic_dim;
    j["grid"] = Json::array();
    for (auto g : m.grid) j["grid"].push_back(g);
    j["nodes"] = jsonio::rows_json(m.nodes);
    j["stretch_penalty"] = m.stretch_penalty;
    j["bend_penalty"] = m.bend_penalty;
    j["spline_smoothing"] = m.spline_smoothing;
    return j;
}

inline Json to_json(const Manifold& m) {
    return std::visit([](const auto& v) { return to_json(v); }, m);
}

inline LinearPrincipalManifold linear_manifold_from_json(const Json& j) {
    jsonio::Reader r(j, "");
    if (r.string("kind") != "linear") throw jsonio::SchemaError("kind", "expected \"linear\"");
    LinearPrincipalManifold m;
    m.mean = r.vector("mean");
    const Matrix cols = r.rows("basis");
    m.basis = cols.size() ? Matrix(cols.transpose()) : Matrix(m.mean.size(), 0);
    m.eigenvalues = r.vector("eigenvalues");
    m.full_spectrum = r.vector("full_spectrum");
    r.has("config");
    r.finish();
    if (m.basis.rows() != m.mean.size()) throw jsonio::SchemaError("basis", "component length does not match mean");
    if (m.eigenvalues.size() != m.basis.cols()) throw jsonio::SchemaError("eigenvalues", "count does not match basis");
    if (m.full_spectrum.size() != m.mean.size())
        throw jsonio::SchemaError("full_spectrum", "length does not match mean");
    return m;
}

inline ElasticManifold elastic_manifold_from_json(const Json& j) {
    jsonio::Reader r(j, "");
    if (r.string("kind") != "elastic") throw jsonio::SchemaError("kind", "expected \"elastic\"");
    ElasticManifold m;
    m.intrinsic_dim = static_cast<int>(r.integer("intrinsic_dim"));
    const auto& g = r.at("grid");
    if (!g.is_array()) throw jsonio::SchemaError("grid", "expected an array of integers");
    for (const auto& e : g) {
        if (!e.is_number_integer()) throw jsonio::SchemaError("grid", "expected an array of integers");
        m.grid.push_back(e.get<Eigen::Index>());
    }
    m.nodes = r.rows("nodes");
    m.stretch_penalty = r.number("stretch_penalty");
    m.bend_penalty = r.number("bend_penalty");
    m.spline_smoothing = r.boolean("spline_smoothing", false);
    r.has("config");  // run metadata written by the CLI
    r.has("fit");
    r.finish();
    m.validate();
    return m;
}

inline Manifold manifold_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw jsonio::SchemaError("kind", "missing manifold kind");
    const auto kind = j["kind"].get<std::string>();
    if (kind == "linear") return linear_manifold_from_json(j);
    if (kind == "elastic") return elastic_manifold_from_json(j);
    throw jsonio::SchemaError("kind", "unknown manifold kind '" + kind + "'");
}

inline Json to_json(const EllipticalSpec& s) {
    Json j;
    j["A"] = jsonio::rows_json(s.a);
    j["b"] = jsonio::vector_json(s.b);
    j["radial"] = to_string(s.radial);
    if (s.radial == Radial::student_t) j["nu"] = s.nu;
    return j;
}

inline EllipticalSpec elliptical_from_json(const Json& j, const std::string& path) {
    jsonio::Reader r(j, path);
    EllipticalSpec s;
    s.a = r.rows("A");
    s.b = r.has("b") ? r.vector("b") : Vector(Vector::Zero(s.a.rows()));
    try {
        s.radial = parse_radial(r.string("radial", "gaussian"));
    } catch (const InvalidArgument& e) {
        throw jsonio::SchemaError(r.key("radial"), e.what());
    }
    s.nu = r.number("nu", 5.0);
    r.finish();
    return s;
}

inline Json to_json(const ManifoldSpec& s) {
    Json j;
    j["kind"] = "manifold";
    j["preset"] = to_string(s.preset);
    j["parameter_distribution"] = to_string(s.parameter_distribution);
    if (s.preset == Preset::circle_arc) j["radius"] = s.radius;
    if (s.preset == Preset::line) j["dim"] = s.line_dim;
    j["noise"] = s.noise ? to_json(*s.noise) : Json(nullptr);
    return j;
}

inline ManifoldSpec manifold_spec_from_json(const Json& j) {
    jsonio::Reader r(j, "");
    ManifoldSpec s;
    r.string("kind");
    try {
        s.preset = parse_preset(r.string("preset"));
    } catch (const InvalidArgument& e) {
        throw jsonio::SchemaError("preset", e.what());
    }
    try {
        s.parameter_distribution = parse_param_distribution(r.string("parameter_distribution", "uniform"));
    } catch (const InvalidArgument& e) {
        throw jsonio::SchemaError("parameter_distribution", e.what());
    }
    s.radius = r.number("radius", 1.0);
    s.line_dim = static_cast<Eigen::Index>(r.integer("dim", 2));
    // Noise is a full elliptical spec, or {"sigma": s} for isotropic Gaussian noise.
    if (r.has("noise")) {
        const auto& nj = r.at("noise");
        if (nj.is_object() && nj.contains("sigma")) {
            jsonio::Reader nr(nj, "noise");
            const double sigma = nr.number("sigma");
            nr.finish();
            if (!(sigma >= 0.0)) throw jsonio::SchemaError("noise.sigma", "must be non-negative");
            if (sigma > 0.0) s.noise = isotropic_noise(s.dim(), sigma);
        } else {
            s.noise = elliptical_from_json(nj, "noise");
        }
    }
    r.finish();
    try {
        s.validate();
    } catch (const Error& e) {
        throw jsonio::SchemaError("noise", e.what());
    }
    return s;
}

inline Json to_json(const RPCorrelationReport& rep) {
    Json j;
    j["method"] = "riemann_pearson";
    j["mode"] = to_string(rep.mode);
    j["rho_sq"] = jsonio::rows_json(rep.rho_sq);
    j["reliabilities"] = jsonio::vector_json(rep.reliabilities);
    j["sensitivity_integrals"] = jsonio::rows_json(rep.sensitivity_integrals);
    j["excluded_samples"] = rep.excluded_samples;
    j["n"] = rep.sample_count;
    j["integral_stderr"] = jsonio::rows_json(rep.integral_stderr);
    j["pair_excluded"] = jsonio::rows_json(rep.pair_excluded);
    j["signed_heuristic"] = {{"note", "sign(pearson) * sqrt(rho_sq); heuristic extension, not part of the measure"},
                             {"values", jsonio::rows_json(rep.signed_heuristic)}};
    return j;
}

} // namespace mcorr
