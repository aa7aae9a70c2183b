// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcorr/mcorr.hpp"

#ifndef MANIFOLD_CORR_BIN
#error "MANIFOLD_CORR_BIN must name the CLI executable"
#endif

using namespace mcorr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> body;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> g;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = g(rng);
    return m;
}

Matrix random_frame(std::mt19937_64& rng, Eigen::Index d, Eigen::Index k) {
    Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(rng, d, k));
    return qr.householderQ() * Matrix::Identity(d, k);
}

Outcome check_slope_product_identity() {
    std::mt19937_64 rng(20240101);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_int_distribution<int> rows(3, 200);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Eigen::Index n = rows(rng);
        Matrix x = gaussian_matrix(rng, n, 2);
        x.col(1) = coef(rng) * x.col(0) + std::abs(coef(rng)) * x.col(1);
        const auto sp = slope_product_identity(x.col(0), x.col(1));
        const double err = std::abs(sp.beta_x * sp.beta_y - sp.rho_sq) / std::max(1.0, sp.rho_sq);
        worst = std::max(worst, err);
    }
    return {worst <= 1e-12, fmt("1000 datasets, max |bx*by - rho^2| / max(1, rho^2) = %.3e (tol 1e-12)", worst)};
}

Outcome check_dilution_limit() {
    struct Setting {
        double beta, sigma_star_sq, eta_x_sq, eta_y_sq;
    };
    const std::vector<Setting> settings{{2.0, 1.0, 0.25, 1.0}, {1.0, 1.0, 1.0, 0.0}, {0.5, 2.0, 0.5, 0.25}, {-3.0, 1.0, 0.1, 4.0}};
    bool pass = true;
    std::ostringstream detail;
    std::uint64_t seed = 2024;
    for (const auto& s : settings) {
        const double vx = s.sigma_star_sq + s.eta_x_sq;
        const double vy = s.beta * s.beta * s.sigma_star_sq + s.eta_y_sq;
        const double target = (1.0 - s.eta_x_sq / vx) * (1.0 - s.eta_y_sq / vy);
        const auto sample = dilution_scenario(s.beta, s.sigma_star_sq, {s.eta_x_sq, s.eta_y_sq}, 100000, seed++);
        const double r = pearson(sample.data, 0, 1);
        const double rel = std::abs(r * r - target) / target;
        pass = pass && rel <= 0.02;
        detail << fmt("beta=%g: rho^2=%.4f target=%.4f (%.2f%%); ", s.beta, r * r, target, 100.0 * rel);
    }
    return {pass, detail.str() + "tol 2%"};
}

Outcome check_pca_maximality() {
    std::mt19937_64 rng(6);
    const Matrix mix = gaussian_matrix(rng, 6, 6);
    const Dataset data(gaussian_matrix(rng, 2000, 6) * mix);
    const auto lin = fit_linear(data, 2);
    const double bound = lin.eigenvalues[0] + lin.eigenvalues[1];
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 1000; ++trial)
        worst_excess = std::max(worst_excess, projected_variance(random_frame(rng, 6, 2), data) - bound);
    const double attained = std::abs(projected_variance(lin.basis, data) - bound);
    const bool pass = worst_excess <= 1e-8 * lin.eigenvalues[0] && attained <= 1e-10;
    return {pass, fmt("max excess over l1+l2 = %.3e (tol %.3e); eigenbasis gap = %.3e (tol 1e-10)", worst_excess,
                      1e-8 * lin.eigenvalues[0], attained)};
}

Outcome check_coefficient_lemma() {
    std::mt19937_64 rng(5);
    const Dataset data(gaussian_matrix(rng, 1000, 5) * gaussian_matrix(rng, 5, 5));
    const auto spectrum = covariance_spectrum(data);
    double worst_range = 0.0, worst_sum = 0.0, worst_var = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index k = 1 + trial % 3;
        const Matrix u = random_frame(rng, 5, k);
        const Vector a = subspace_coefficients(spectrum, u);
        worst_range = std::max({worst_range, -a.minCoeff(), a.maxCoeff() - 1.0});
        worst_sum = std::max(worst_sum, std::abs(a.sum() - static_cast<double>(k)));
        const double pv = projected_variance(u, data);
        worst_var = std::max(worst_var, std::abs(spectrum.values.dot(a) - pv) / pv);
    }
    const bool pass = worst_range <= 1e-12 && worst_sum <= 1e-10 && worst_var <= 1e-8;
    return {pass, fmt("range excess %.3e (tol 1e-12); |sum a - k| %.3e (tol 1e-10); rel variance gap %.3e (tol 1e-8)",
                      std::max(worst_range, 0.0), worst_sum, worst_var)};
}

Outcome check_l_correlation_reduction() {
    Matrix a(2, 2);
    a << 1.0, 0.0, 0.8, 0.6;
    const auto data = sample_elliptical({a, Vector::Zero(2), Radial::gaussian, 5.0}, 100000, 55);
    const auto lin = fit_linear(data, 1);
    const double l = l_correlation(data, lin, 0, 1).rho_sq;
    const double r = pearson(data, 0, 1);
    const double gap = std::abs(l - r * r);
    const double ratio = lin.full_spectrum[0] / (lin.full_spectrum[0] - lin.full_spectrum[1]);
    return {gap <= 0.02, fmt("A=[[1,0],[0.8,0.6]]: L=%.6f pearson^2=%.6f |diff|=%.4f (tol 0.02); "
                             "pearson^2*(l1/(l1-l2))^2=%.6f",
                             l, r * r, gap, r * r * ratio * ratio)};
}

Outcome check_rp_linear_reduction() {
    Matrix a2(2, 2);
    a2 << 1.0, 0.0, 0.8, 0.6;
    Matrix a3(3, 3);
    a3 << 1.0, 0.0, 0.0, 0.6, 0.8, 0.0, 0.3, -0.2, 0.5;
    const auto c2 = l_reduction_check(sample_elliptical({a2, Vector::Zero(2), Radial::gaussian, 5.0}, 20000, 61), 1);
    const auto c3 = l_reduction_check(sample_elliptical({a3, Vector::Zero(3), Radial::gaussian, 5.0}, 20000, 62), 1);
    const bool pass = c2.max_abs_diff <= 1e-6 && c3.max_abs_diff <= 1e-6;
    return {pass, fmt("max |rho^2_RP - rho^2_L|: d=2 %.3e, d=3 %.3e (tol 1e-6)", c2.max_abs_diff, c3.max_abs_diff)};
}

Outcome check_residual_jacobian() {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (Eigen::Index d : {2, 3, 5}) {
        const Dataset data(gaussian_matrix(rng, 300, d) * gaussian_matrix(rng, d, d));
        LinearPrincipalManifold lin;
        lin.mean = stats::column_means(data.values());
        lin.basis = d == 2 ? Matrix(Vector::Constant(2, std::sqrt(0.5))) : random_frame(rng, d, 1);
        lin.eigenvalues = Vector::Ones(1);
        lin.full_spectrum = Vector::Ones(d);
        const Matrix expect = Matrix::Identity(d, d) - lin.basis * lin.basis.transpose();
        const auto field = sensitivity_field(Manifold{lin}, data, SensitivityMode::residual_jacobian, 1e-4);
        for (Eigen::Index r = 0; r < field.n; ++r) worst = std::max(worst, (field.sample(r) - expect).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-5, fmt("d in {2,3,5}, max |S_fd - (I - uu^T)| = %.3e (tol 1e-5, eps 1e-4)", worst)};
}

ManifoldSample noisy_parabola() {
    ManifoldSpec spec;
    spec.preset = Preset::parabola;
    spec.noise = isotropic_noise(2, 0.05);
    return sample_manifold(spec, 2000, 42);
}

ElasticFitResult parabola_fit(Eigen::Index nodes) {
    ElasticFitOptions opt;
    opt.nodes = {nodes};
    return fit_elastic(noisy_parabola().data, opt);
}

Outcome check_energy_and_projection() {
    const auto fit = parabola_fit(30);
    double worst_rise = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < fit.trace.size(); ++i)
        worst_rise = std::max(worst_rise, fit.trace[i].total - fit.trace[i - 1].total);
    const bool monotone = worst_rise <= 1e-12;

    const auto small = parabola_fit(12);
    const Matrix& nodes = small.manifold.nodes;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ux(-1.5, 1.5), uy(-0.5, 1.5);
    Matrix q(100, 2);
    for (Eigen::Index r = 0; r < 100; ++r) q.row(r) << ux(rng), uy(rng);
    const auto proj = project(small.manifold, q);
    double worst = 0.0;
    for (Eigen::Index r = 0; r < 100; ++r) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index f = 0; f + 1 < nodes.rows(); ++f) {
            // Per-face minimum from the normal equations of the segment.
            const Vector a = nodes.row(f).transpose(), b = nodes.row(f + 1).transpose(), x = q.row(r).transpose();
            const double t = std::clamp((x - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
            best = std::min(best, (x - a - t * (b - a)).norm());
        }
        worst = std::max(worst, std::abs(proj.residuals.row(r).norm() - best) / std::max(1.0, best));
    }
    const bool optimal = worst <= 1e-12;
    return {monotone && optimal,
            fmt("m=30: %d iterations, max energy rise %.3e (slack 1e-12); m=12: 100 queries, max gap to exhaustive "
                "per-face minimum %.3e (tol 1e-12)",
                fit.iterations, std::max(worst_rise, 0.0), worst)};
}

Outcome check_self_consistency() {
    const auto s = noisy_parabola();
    const auto fit = parabola_fit(30);
    const double converged = mean_deviation(self_consistency(fit.manifold, s.data));

    const double shift = 0.2;
    ElasticManifold moved = fit.manifold;
    const Matrix& y = fit.manifold.nodes;
    const Eigen::Index m = y.rows();
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vector t = (y.row(std::min(i + 1, m - 1)) - y.row(std::max<Eigen::Index>(i - 1, 0))).transpose().normalized();
        moved.nodes(i, 0) += shift * t[1];
        moved.nodes(i, 1) -= shift * t[0];
    }
    const double detected = mean_deviation(self_consistency(moved, s.data)) * rms_scale(s.data.values());
    const double rel = std::abs(detected - shift) / shift;
    return {converged < 0.1 && rel <= 0.1,
            fmt("converged fit deviation %.4f (tol 0.1); normal shift %.2f detected as %.4f (%.1f%%, tol 10%%)", converged,
                shift, detected, 100.0 * rel)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome check_end_to_end_determinism() {
    const fs::path dir = fs::temp_directory_path() / "mcorr_acceptance_e2e";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream(dir / "spec.json") << R"({"kind": "manifold", "preset": "sine", "noise": {"sigma": 0.05}})";
    }
    const std::string bin = MANIFOLD_CORR_BIN;
    const std::string d = dir.string() + "/";
    const std::vector<std::string> commands{
        bin + " generate --spec " + d + "spec.json --n 3000 --seed 11 --output " + d + "data.csv",
        bin + " fit-manifold --input " + d + "data.csv --k 1 --nodes 25 --spline true --trace " + d + "trace.csv --output " +
            d + "manifold.json",
        bin + " correlate --input " + d + "data.csv --method rpcorr --manifold " + d + "manifold.json --mode residual_jacobian --output " +
            d + "report.json",
    };
    const std::vector<std::string> artifacts{"data.csv", "data.meta.json", "manifold.json", "trace.csv", "report.json"};
    std::vector<std::vector<std::string>> runs;
    for (int run = 0; run < 2; ++run) {
        for (const auto& a : artifacts) fs::remove(dir / a);
        for (const auto& c : commands) {
            const int rc = std::system((c + " 2>/dev/null").c_str());
            if (rc != 0) return {false, fmt("command failed with status %d: %s", rc, c.c_str())};
        }
        std::vector<std::string> bytes;
        for (const auto& a : artifacts) bytes.push_back(slurp(dir / a));
        runs.push_back(std::move(bytes));
    }
    fs::remove_all(dir);
    std::size_t identical = 0, total_bytes = 0;
    for (std::size_t i = 0; i < artifacts.size(); ++i) {
        identical += runs[0][i] == runs[1][i] && !runs[0][i].empty();
        total_bytes += runs[0][i].size();
    }
    return {identical == artifacts.size(),
            fmt("%zu/%zu artifacts byte-identical across two runs (%zu bytes)", identical, artifacts.size(), total_bytes)};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "slope-product identity", 1.0, check_slope_product_identity},
        {2, "regression-dilution limit", 5.0, check_dilution_limit},
        {3, "PCA maximality", 2.0, check_pca_maximality},
        {4, "coefficient lemma", 1.0, check_coefficient_lemma},
        {5, "L-correlation reduces to pearson^2", 3.0, check_l_correlation_reduction},
        {6, "RP correlation reduces to L-correlation", 5.0, check_rp_linear_reduction},
        {7, "residual-Jacobian finite differences", 1.0, check_residual_jacobian},
        {8, "elastic energy monotonicity and projection optimality", 10.0, check_energy_and_projection},
        {9, "self-consistency diagnostic", 5.0, check_self_consistency},
        {10, "end-to-end determinism", 10.0, check_end_to_end_determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail
                  << fmt(" | %.2fs (budget %.0fs%s)", secs, c.budget_s, in_time ? "" : ", exceeded") << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
