#pragma once

#include <Eigen/SVD>

#include <optional>
#include <string>

#include "mcorr/dataset.hpp"
#include "mcorr/detmath.hpp"
#include "mcorr/linear_model.hpp"
#include "mcorr/philox.hpp"

namespace mcorr {

/// Rotation-invariant generator S of an elliptical law X = A S + b.
enum class Radial { gaussian, uniform_ball, student_t };

inline std::string to_string(Radial r) {
    switch (r) {
    case Radial::gaussian: return "gaussian";
    case Radial::uniform_ball: return "uniform_ball";
    default: return "student_t";
    }
}

inline Radial parse_radial(const std::string& s) {
    if (s == "gaussian") return Radial::gaussian;
    if (s == "uniform_ball") return Radial::uniform_ball;
    if (s == "student_t") return Radial::student_t;
    throw InvalidArgument("unknown radial law '" + s + "'");
}

struct EllipticalSpec {
    Matrix a;  ///< d x k, rank k
    Vector b;  ///< d
    Radial radial = Radial::gaussian;
    double nu = 5.0;  ///< student_t degrees of freedom, > 2

    Eigen::Index dim() const noexcept { return a.rows(); }
    Eigen::Index latent_dim() const noexcept { return a.cols(); }

    void validate() const {
        if (a.cols() == 0 || a.rows() == 0) throw RankDeficientA("A has no columns");
        if (a.cols() > a.rows()) throw RankDeficientA("A has more columns than rows");
        if (b.size() != a.rows()) throw InvalidArgument("b length does not match A rows");
        if (!a.allFinite() || !b.allFinite()) throw InvalidArgument("non-finite entry in elliptical spec");
        const Vector sv = Eigen::JacobiSVD<Matrix>(a).singularValues();
        if (!(sv[0] > 0.0) || !(sv[sv.size() - 1] > 1e-10 * sv[0]))
            throw RankDeficientA("A is rank deficient (smallest singular value " + std::to_string(sv[sv.size() - 1]) +
                                 ")");
        if (radial == Radial::student_t && !(nu > 2.0))
            throw InvalidArgument("student_t needs nu > 2 for a finite covariance");
    }

    /// Cov(S) = c I for the radial law.
    double radial_constant() const {
        switch (radial) {
        case Radial::gaussian: return 1.0;
        case Radial::uniform_ball: return 1.0 / static_cast<double>(latent_dim() + 2);
        default: return nu / (nu - 2.0);
        }
    }

    Matrix analytic_covariance() const { return radial_constant() * a * a.transpose(); }
};

/// Gaussian noise with covariance sigma^2 I in d dimensions.
inline EllipticalSpec isotropic_noise(Eigen::Index d, double sigma) {
    return EllipticalSpec{sigma * Matrix::Identity(d, d), Vector::Zero(d), Radial::gaussian, 5.0};
}

/// Draw source bound to one Philox stream: uniforms, normals (Marsaglia polar)
/// and gamma variates (Marsaglia-Tsang), all using deterministic math.
class Sampler {
public:
    Sampler(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

    double uniform() { return rng_.next_uniform(); }

    double normal() {
        if (cached_) {
            cached_ = false;
            return cache_;
        }
        while (true) {
            const double u = 2.0 * rng_.next_uniform() - 1.0;
            const double v = 2.0 * rng_.next_uniform() - 1.0;
            const double s = u * u + v * v;
            if (s >= 1.0 || s == 0.0) continue;
            const double f = std::sqrt(-2.0 * detmath::log(s) / s);
            cache_ = v * f;
            cached_ = true;
            return u * f;
        }
    }

    /// Gamma(shape, 1) for shape >= 1.
    double gamma(double shape) {
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            const double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform();
            if (detmath::log(u) < 0.5 * x * x + d - d * v + d * detmath::log(v)) return d * v;
        }
    }

private:
    Philox4x32 rng_;
    bool cached_ = false;
    double cache_ = 0.0;
};

/// Stream ids: the high 16 bits name the purpose, the low bits the row.
namespace streams {
inline constexpr std::uint64_t elliptical = 0;
inline constexpr std::uint64_t manifold_param = 1ull << 48;
inline constexpr std::uint64_t manifold_noise = 2ull << 48;
inline constexpr std::uint64_t dilution = 3ull << 48;
} // namespace streams

/// One draw of the k-dimensional rotation-invariant generator.
inline Vector draw_radial(const EllipticalSpec& spec, Sampler& s) {
    const Eigen::Index k = spec.latent_dim();
    Vector z(k);
    for (Eigen::Index i = 0; i < k; ++i) z[i] = s.normal();
    switch (spec.radial) {
    case Radial::gaussian: return z;
    case Radial::uniform_ball: {
        const double u = s.uniform();
        const double r = k == 1 ? u : k == 2 ? std::sqrt(u) : detmath::pow(u, 1.0 / static_cast<double>(k));
        return (r / z.norm()) * z;
    }
    default: {
        const double w = 2.0 * s.gamma(0.5 * spec.nu);  // chi-square with nu dof
        return z / std::sqrt(w / spec.nu);
    }
    }
}

/// n i.i.d. rows of A S + b. Row r draws from Philox stream r.
inline Dataset sample_elliptical(const EllipticalSpec& spec, Eigen::Index n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw InvalidArgument("sample_elliptical: n must be at least 1");
    Matrix x(n, spec.dim());
    for (Eigen::Index r = 0; r < n; ++r) {
        Sampler s(seed, streams::elliptical + static_cast<std::uint64_t>(r));
        x.row(r) = (spec.a * draw_radial(spec, s) + spec.b).transpose();
    }
    return Dataset(std::move(x));
}

enum class Preset { line, parabola, sine, circle_arc, helix, saddle };
enum class ParamDistribution { uniform, truncated_gaussian };

inline std::string to_string(Preset p) {
    switch (p) {
    case Preset::line: return "line";
    case Preset::parabola: return "parabola";
    case Preset::sine: return "sine";
    case Preset::circle_arc: return "circle_arc";
    case Preset::helix: return "helix";
    default: return "saddle";
    }
}

inline Preset parse_preset(const std::string& s) {
    for (auto p : {Preset::line, Preset::parabola, Preset::sine, Preset::circle_arc, Preset::helix, Preset::saddle})
        if (to_string(p) == s) return p;
    throw InvalidArgument("unknown manifold preset '" + s + "'");
}

inline std::string to_string(ParamDistribution p) {
    return p == ParamDistribution::uniform ? "uniform" : "truncated_gaussian";
}

inline ParamDistribution parse_param_distribution(const std::string& s) {
    if (s == "uniform") return ParamDistribution::uniform;
    if (s == "truncated_gaussian") return ParamDistribution::truncated_gaussian;
    throw InvalidArgument("unknown parameter distribution '" + s + "'");
}

/// Parametric curve or surface with noise around it.
///
/// Presets (parameter domain in brackets):
///   line        t u, u = (1,...,1)/sqrt(dim)          [-1, 1]
///   parabola    (t, t^2)                               [-1, 1]
///   sine        (t, sin(pi t))                         [-1, 1]
///   circle_arc  radius (cos t, sin t)                  [0, pi]
///   helix       (cos t, sin t, 0.1 t)                  [0, 4 pi]
///   saddle      (u, v, u^2 - v^2)                      [-1, 1]^2
struct ManifoldSpec {
    Preset preset = Preset::parabola;
    ParamDistribution parameter_distribution = ParamDistribution::uniform;
    std::optional<EllipticalSpec> noise;  ///< empty: noise-free samples
    double radius = 1.0;                  ///< circle_arc
    Eigen::Index line_dim = 2;            ///< line

    Eigen::Index dim() const {
        switch (preset) {
        case Preset::line: return line_dim;
        case Preset::helix:
        case Preset::saddle: return 3;
        default: return 2;
        }
    }
    Eigen::Index intrinsic_dim() const { return preset == Preset::saddle ? 2 : 1; }

    std::pair<double, double> domain() const {
        switch (preset) {
        case Preset::circle_arc: return {0.0, detmath::kPi};
        case Preset::helix: return {0.0, 4.0 * detmath::kPi};
        default: return {-1.0, 1.0};
        }
    }

    void validate() const {
        if (preset == Preset::line && line_dim < 2) throw InvalidArgument("line preset needs dim >= 2");
        if (preset == Preset::circle_arc && !(radius > 0.0)) throw InvalidArgument("circle_arc radius must be positive");
        if (noise) {
            noise->validate();
            if (noise->dim() != dim())
                throw InvalidArgument("noise dimension " + std::to_string(noise->dim()) + " does not match preset dimension " +
                                      std::to_string(dim()));
        }
    }

    /// gamma(params) with deterministic math.
    Vector point(const Vector& p) const {
        const double t = p[0];
        Vector x(dim());
        switch (preset) {
        case Preset::line: x.setConstant(t / std::sqrt(static_cast<double>(line_dim))); break;
        case Preset::parabola: x << t, t * t; break;
        case Preset::sine: x << t, detmath::sin(detmath::kPi * t); break;
        case Preset::circle_arc: x << radius * detmath::cos(t), radius * detmath::sin(t); break;
        case Preset::helix: x << detmath::cos(t), detmath::sin(t), 0.1 * t; break;
        case Preset::saddle: x << p[0], p[1], p[0] * p[0] - p[1] * p[1]; break;
        }
        return x;
    }

    /// Analytic d x k derivative of gamma (not normalized).
    Matrix tangent(const Vector& p) const {
        const double t = p[0];
        Matrix tg(dim(), intrinsic_dim());
        switch (preset) {
        case Preset::line: tg.setConstant(1.0 / std::sqrt(static_cast<double>(line_dim))); break;
        case Preset::parabola: tg << 1.0, 2.0 * t; break;
        case Preset::sine: tg << 1.0, detmath::kPi * detmath::cos(detmath::kPi * t); break;
        case Preset::circle_arc: tg << -radius * detmath::sin(t), radius * detmath::cos(t); break;
        case Preset::helix: tg << -detmath::sin(t), detmath::cos(t), 0.1; break;
        case Preset::saddle: tg << 1.0, 0.0, 0.0, 1.0, 2.0 * p[0], -2.0 * p[1]; break;
        }
        return tg;
    }
};

struct ManifoldSample {
    Dataset data;
    Matrix ground_truth;  ///< noise-free points gamma(params)
    Matrix params;        ///< n x k
};

/// Parameters come from stream manifold_param + r, noise from manifold_noise + r.
inline ManifoldSample sample_manifold(const ManifoldSpec& spec, Eigen::Index n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw InvalidArgument("sample_manifold: n must be at least 1");
    const auto [lo, hi] = spec.domain();
    const Eigen::Index k = spec.intrinsic_dim(), d = spec.dim();
    Matrix params(n, k), truth(n, d), x(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        Sampler ps(seed, streams::manifold_param + static_cast<std::uint64_t>(r));
        Vector p(k);
        for (Eigen::Index c = 0; c < k; ++c) {
            if (spec.parameter_distribution == ParamDistribution::uniform) {
                p[c] = lo + (hi - lo) * ps.uniform();
            } else {
                const double mid = 0.5 * (lo + hi), sd = 0.25 * (hi - lo);
                do {
                    p[c] = mid + sd * ps.normal();
                } while (!(p[c] > lo && p[c] < hi));
            }
        }
        params.row(r) = p.transpose();
        const Vector g = spec.point(p);
        truth.row(r) = g.transpose();
        if (spec.noise) {
            Sampler ns(seed, streams::manifold_noise + static_cast<std::uint64_t>(r));
            x.row(r) = (g + spec.noise->a * draw_radial(*spec.noise, ns) + spec.noise->b).transpose();
        } else {
            x.row(r) = g.transpose();
        }
    }
    return ManifoldSample{Dataset(std::move(x)), std::move(truth), std::move(params)};
}

struct DilutionSample {
    Dataset data;        ///< columns "x", "y"
    double sigma_x_sq;   ///< analytic Var(x) = sigma*^2 + eta_x^2
    double sigma_y_sq;   ///< analytic Var(y) = beta^2 sigma*^2 + eta_y^2
    NoiseModel noise;

    /// Limit of the squared sample correlation: product of the attenuation factors.
    double limit_rho_sq() const {
        return attenuation_factor(sigma_x_sq, noise.eta_x_sq) * attenuation_factor(sigma_y_sq, noise.eta_y_sq);
    }
};

/// x* ~ N(0, sigma*^2), y* = beta x*, observed x = x* + e_x, y = y* + e_y with
/// Gaussian errors of variance eta_x^2, eta_y^2. Row r uses stream dilution + r.
inline DilutionSample dilution_scenario(double beta, double sigma_star_sq, const NoiseModel& noise, Eigen::Index n,
                                        std::uint64_t seed) {
    if (!(sigma_star_sq > 0.0)) throw InvalidArgument("dilution_scenario: sigma_star_sq must be positive");
    if (!(noise.eta_x_sq >= 0.0) || !(noise.eta_y_sq >= 0.0)) throw InvalidNoise("noise variances must be non-negative");
    if (n < 1) throw InvalidArgument("dilution_scenario: n must be at least 1");
    const double sx = std::sqrt(sigma_star_sq), ex = std::sqrt(noise.eta_x_sq), ey = std::sqrt(noise.eta_y_sq);
    Matrix v(n, 2);
    for (Eigen::Index r = 0; r < n; ++r) {
        Sampler s(seed, streams::dilution + static_cast<std::uint64_t>(r));
        const double xs = sx * s.normal();
        const double e1 = s.normal(), e2 = s.normal();
        v(r, 0) = xs + ex * e1;
        v(r, 1) = beta * xs + ey * e2;
    }
    return DilutionSample{Dataset(std::move(v), {"x", "y"}), sigma_star_sq + noise.eta_x_sq,
                          beta * beta * sigma_star_sq + noise.eta_y_sq, noise};
}

} // namespace mcorr
