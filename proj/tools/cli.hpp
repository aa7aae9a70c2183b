#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "mcorr/mcorr.hpp"

namespace mcorr::cli {

enum ExitCode : int { ok = 0, io_error = 1, domain_error = 2, not_converged = 3 };

/// Flags shared by every subcommand, with defaults matching the library.
struct RunConfig {
    std::string command;
    std::string input;
    std::string output;
    std::string manifold;
    std::string method = "pearson";
    std::string kind = "elastic";
    std::string mode;
    std::string nodes;
    std::string format = "json";
    std::string trace;
    std::string project;
    int k = 1;
    long long n = 1000;
    std::uint64_t seed = 1;
    double lambda = 0.01;
    double mu = 0.1;
    double fd_step = 1e-4;
    int max_iter = 200;
    double tol = 1e-6;
    std::optional<bool> spline;
};

/// Reproducibility header: the resolved flags of the run.
inline Json config_json(const RunConfig& c) {
    Json j;
    j["command"] = c.command;
    j["input"] = c.input;
    j["output"] = c.output;
    if (c.command == "generate") {
        j["n"] = c.n;
        j["seed"] = c.seed;
        return j;
    }
    if (c.command == "fit-manifold") {
        j["kind"] = c.kind;
        j["k"] = c.k;
        j["nodes"] = c.nodes;
        j["lambda"] = c.lambda;
        j["mu"] = c.mu;
        j["max_iter"] = c.max_iter;
        j["tol"] = c.tol;
        j["spline"] = c.spline.value_or(false);
        j["trace"] = c.trace;
        return j;
    }
    if (c.command == "correlate") {
        j["method"] = c.method;
        j["format"] = c.format;
        if (c.method == "lcorr") j["k"] = c.k;
        if (c.method == "rpcorr") {
            j["manifold"] = c.manifold;
            j["k"] = c.k;
            j["nodes"] = c.nodes;
            j["lambda"] = c.lambda;
            j["mu"] = c.mu;
            j["max_iter"] = c.max_iter;
            j["tol"] = c.tol;
            j["spline"] = c.spline.value_or(c.k == 1);
            j["mode"] = c.mode;
            j["fd_step"] = c.fd_step;
        }
        return j;
    }
    j["manifold"] = c.manifold;
    j["project"] = c.project;
    return j;
}

/// "30" for a chain, "5x6" for a grid; empty selects the library default.
inline std::vector<Eigen::Index> parse_nodes(const std::string& s, int k) {
    if (s.empty()) return {};
    std::vector<Eigen::Index> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, 'x')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(part, &used);
            if (used != part.size() || v < 2) throw std::invalid_argument(part);
            out.push_back(static_cast<Eigen::Index>(v));
        } catch (const std::exception&) {
            throw InvalidArgument("--nodes: expected an integer >= 2 per axis, got '" + s + "'");
        }
    }
    if (out.size() != static_cast<std::size_t>(k))
        throw InvalidArgument("--nodes: expected " + std::to_string(k) + " axis size(s), got '" + s + "'");
    return out;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        // nlohmann reports a byte offset; translate to a line number.
        std::ifstream again(path);
        std::string text((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ParseError(path + ":" + std::to_string(line) + ": " + e.what(), static_cast<std::size_t>(line));
    }
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ParseError("write failed for '" + path + "'");
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Sidecar path for generated data: out.csv -> out.meta.json.
inline std::string sidecar_path(const std::string& csv) {
    std::filesystem::path p(csv);
    p.replace_extension(".meta.json");
    return p.string();
}

inline int cmd_generate(const RunConfig& c, std::ostream& log) {
    Json spec = read_json_file(c.input);
    if (!spec.is_object()) throw jsonio::SchemaError("<root>", "expected an object");
    if (!spec.contains("kind") || !spec["kind"].is_string())
        throw jsonio::SchemaError("kind", "missing required key (elliptical, manifold or dilution)");
    if (c.n < 1) throw InvalidArgument("--n must be at least 1");
    const std::string kind = spec["kind"].get<std::string>();
    const auto n = static_cast<Eigen::Index>(c.n);

    Json meta;
    meta["config"] = config_json(c);
    std::optional<Dataset> data;
    try {
        if (kind == "elliptical") {
            Json body = spec;
            body.erase("kind");
            const auto es = elliptical_from_json(body, "");
            data = sample_elliptical(es, n, c.seed);
            meta["spec"] = to_json(es);
            meta["spec"]["kind"] = "elliptical";
            meta["analytic"] = {{"covariance", jsonio::rows_json(es.analytic_covariance())},
                                {"mean", jsonio::vector_json(es.b)},
                                {"radial_constant", es.radial_constant()}};
        } else if (kind == "manifold") {
            const auto ms = manifold_spec_from_json(spec);
            auto sample = sample_manifold(ms, n, c.seed);
            data = std::move(sample.data);
            meta["spec"] = to_json(ms);
            const auto [lo, hi] = ms.domain();
            meta["analytic"] = {{"intrinsic_dim", ms.intrinsic_dim()},
                                {"parameter_domain", {lo, hi}},
                                {"noise_covariance",
                                 ms.noise ? jsonio::rows_json(ms.noise->analytic_covariance()) : Json(nullptr)}};
        } else if (kind == "dilution") {
            jsonio::Reader r(spec, "");
            r.string("kind");
            const double beta = r.number("beta");
            const double sigma_star_sq = r.number("sigma_star_sq");
            const NoiseModel noise{r.number("eta_x_sq", 0.0), r.number("eta_y_sq", 0.0)};
            r.finish();
            auto sample = dilution_scenario(beta, sigma_star_sq, noise, n, c.seed);
            meta["spec"] = {{"kind", "dilution"},      {"beta", beta},
                            {"sigma_star_sq", sigma_star_sq}, {"eta_x_sq", noise.eta_x_sq},
                            {"eta_y_sq", noise.eta_y_sq}};
            meta["analytic"] = {{"sigma_x_sq", sample.sigma_x_sq},
                                {"sigma_y_sq", sample.sigma_y_sq},
                                {"limit_rho_sq", sample.limit_rho_sq()}};
            data = std::move(sample.data);
        } else {
            throw jsonio::SchemaError("kind", "unknown spec kind '" + kind + "'");
        }
    } catch (const jsonio::SchemaError&) {
        throw;
    } catch (const RankDeficientA& e) {
        throw jsonio::SchemaError("A", e.what());
    } catch (const InvalidArgument& e) {
        throw jsonio::SchemaError(kind, e.what());
    }
    meta["seed"] = c.seed;
    meta["n"] = c.n;
    meta["generator"] = "philox4x32-10; row r of purpose p uses stream (p << 48) | r";

    std::ostringstream csv;
    write_csv(csv, *data);
    write_text(c.output, csv.str());
    write_text(sidecar_path(c.output), dump(meta));
    log << "wrote " << data->rows() << " rows to " << c.output << "\n";
    return ok;
}

inline std::string trace_csv(const std::vector<ElasticEnergy>& trace) {
    std::ostringstream out;
    out << "iteration,energy,approx,stretch,bend\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        out << i << ',' << detail::format_double(trace[i].total) << ',' << detail::format_double(trace[i].approx) << ','
            << detail::format_double(trace[i].stretch) << ',' << detail::format_double(trace[i].bend) << '\n';
    return out.str();
}

inline ElasticFitOptions fit_options(const RunConfig& c, bool spline_default) {
    ElasticFitOptions o;
    o.k = c.k;
    o.nodes = parse_nodes(c.nodes, c.k);
    o.lambda = c.lambda;
    o.mu = c.mu;
    o.max_iter = c.max_iter;
    o.tol = c.tol;
    o.spline_smoothing = c.k == 1 && c.spline.value_or(spline_default);
    return o;
}

inline int cmd_fit_manifold(const RunConfig& c, std::ostream& log) {
    const auto data = read_csv_file(c.input);
    if (c.kind == "linear") {
        const auto lin = fit_linear(data, c.k);
        if (lin.rank_deficient()) log << "warning: k exceeds the number of positive eigenvalues\n";
        Json j = to_json(lin);
        j["config"] = config_json(c);
        write_text(c.output, dump(j));
        return ok;
    }
    const auto fit = fit_elastic(data, fit_options(c, false));
    Json j = to_json(fit.manifold);
    j["config"] = config_json(c);
    j["fit"] = {{"iterations", fit.iterations},
                {"converged", fit.converged},
                {"energy", fit.trace.back().total},
                {"n", data.rows()}};
    write_text(c.output, dump(j));
    if (!c.trace.empty()) write_text(c.trace, trace_csv(fit.trace));
    if (!fit.converged) {
        log << "warning: elastic fit did not converge within " << c.max_iter << " iterations\n";
        return not_converged;
    }
    return ok;
}

inline std::string matrix_csv(const Matrix& m, const std::vector<std::string>& names) {
    std::ostringstream out;
    out << "column";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << detail::format_double(m(i, j));
        out << '\n';
    }
    return out.str();
}

inline Json names_json(const Dataset& d) {
    Json a = Json::array();
    for (const auto& n : d.column_names()) a.push_back(n);
    return a;
}

/// Pearson report body (without the config header).
inline Json pearson_report(const Dataset& data) {
    Json j;
    j["method"] = "pearson";
    j["columns"] = names_json(data);
    j["n"] = data.rows();
    j["rho"] = jsonio::rows_json(pearson_matrix(data));
    return j;
}

/// L-correlation report body: squared correlations and reliabilities against
/// the k-dimensional linear principal manifold.
inline Json lcorr_report(const Dataset& data, int k) {
    const auto lin = fit_linear(data, k);
    const Eigen::Index d = data.cols();
    Matrix rho_sq(d, d);
    Vector rel(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const auto lc = l_correlation(data, lin, i, j);
            rho_sq(i, j) = lc.rho_sq;
            rel[i] = lc.r_i;
        }
    }
    Json j;
    j["method"] = "l_correlation";
    j["k"] = k;
    j["columns"] = names_json(data);
    j["n"] = data.rows();
    j["rho_sq"] = jsonio::rows_json(rho_sq);
    j["reliabilities"] = jsonio::vector_json(rel);
    j["manifold_ref"] = to_json(lin);
    return j;
}

inline int cmd_correlate(const RunConfig& c, std::ostream& log) {
    const auto data = read_csv_file(c.input);
    if (c.format != "json" && c.format != "csv") throw InvalidArgument("--format must be json or csv");
    Json body;
    Matrix table;
    if (c.method == "pearson") {
        body = pearson_report(data);
        table = pearson_matrix(data);
    } else if (c.method == "lcorr") {
        body = lcorr_report(data, c.k);
        table = jsonio::Reader(body, "").rows("rho_sq");
    } else if (c.method == "rpcorr") {
        Manifold manifold;
        Json ref;
        if (!c.manifold.empty()) {
            manifold = manifold_from_json(read_json_file(c.manifold));
            ref = c.manifold;
        } else {
            auto fit = fit_elastic(data, fit_options(c, true));
            if (!fit.converged) log << "warning: elastic fit did not converge\n";
            manifold = fit.manifold;
            ref = to_json(fit.manifold);
        }
        const auto mode = c.mode.empty() ? default_mode(manifold) : parse_mode(c.mode);
        const auto rep = rp_correlation(data, manifold, mode, c.fd_step);
        body = to_json(rep);
        body["columns"] = names_json(data);
        body["manifold_ref"] = ref;
        table = rep.rho_sq;
    } else {
        throw InvalidArgument("--method must be pearson, lcorr or rpcorr");
    }
    if (c.format == "csv") {
        write_text(c.output, matrix_csv(table, data.column_names()));
        return ok;
    }
    Json report;
    report["config"] = config_json(c);
    for (auto it = body.begin(); it != body.end(); ++it) report[it.key()] = it.value();
    write_text(c.output, dump(report));
    return ok;
}

inline int cmd_plot(const RunConfig& c, std::ostream&) {
    const auto data = read_csv_file(c.input);
    std::optional<Manifold> manifold;
    if (!c.manifold.empty()) manifold = manifold_from_json(read_json_file(c.manifold));
    write_text(c.output, svg::plot(data, manifold, c.project));
    return ok;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Correlation measures normalized against fitted linear and smooth principal manifolds",
                 "manifold_corr"};
    app.require_subcommand(1);
    RunConfig c;

    auto* gen = app.add_subcommand("generate", "Sample a synthetic dataset from a JSON spec");
    gen->add_option("--input,--spec", c.input, "spec JSON (kind: elliptical, manifold or dilution)")->required();
    gen->add_option("--output", c.output, "CSV output; a .meta.json sidecar is written next to it")->required();
    gen->add_option("--n", c.n, "number of rows");
    gen->add_option("--seed", c.seed, "generator seed");

    auto* fit = app.add_subcommand("fit-manifold", "Fit a linear or elastic principal manifold");
    fit->add_option("--input", c.input, "data CSV")->required();
    fit->add_option("--output", c.output, "manifold JSON")->required();
    fit->add_option("--kind", c.kind, "elastic or linear")->check(CLI::IsMember({"elastic", "linear"}));
    fit->add_option("--k", c.k, "intrinsic dimension")->check(CLI::Range(0, 2));
    fit->add_option("--nodes", c.nodes, "node count, e.g. 30 or 8x8");
    fit->add_option("--lambda", c.lambda, "stretch penalty");
    fit->add_option("--mu", c.mu, "bend penalty");
    fit->add_option("--max-iter", c.max_iter, "iteration cap");
    fit->add_option("--tol", c.tol, "relative energy tolerance");
    fit->add_option("--spline", c.spline, "C1 spline smoothing for chains");
    fit->add_option("--trace", c.trace, "write the per-iteration energy trace CSV here");

    auto* cor = app.add_subcommand("correlate", "Compute a correlation report");
    cor->add_option("--input", c.input, "data CSV")->required();
    cor->add_option("--output", c.output, "report path")->required();
    cor->add_option("--method", c.method, "pearson, lcorr or rpcorr")
        ->check(CLI::IsMember({"pearson", "lcorr", "rpcorr"}));
    cor->add_option("--k", c.k, "manifold dimension")->check(CLI::Range(0, 2));
    cor->add_option("--manifold", c.manifold, "fitted manifold JSON (rpcorr); fitted on the fly if omitted");
    cor->add_option("--nodes", c.nodes, "node count for on-the-fly fits");
    cor->add_option("--lambda", c.lambda, "stretch penalty for on-the-fly fits");
    cor->add_option("--mu", c.mu, "bend penalty for on-the-fly fits");
    cor->add_option("--max-iter", c.max_iter, "iteration cap for on-the-fly fits");
    cor->add_option("--tol", c.tol, "tolerance for on-the-fly fits");
    cor->add_option("--spline", c.spline, "spline smoothing for on-the-fly chains (default on)");
    cor->add_option("--mode", c.mode, "residual_jacobian or tangent_graph")
        ->check(CLI::IsMember({"residual_jacobian", "tangent_graph"}));
    cor->add_option("--fd-step", c.fd_step, "relative finite-difference step");
    cor->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    auto* plt = app.add_subcommand("plot", "Render data and an optional manifold as SVG");
    plt->add_option("--input", c.input, "data CSV")->required();
    plt->add_option("--output", c.output, "SVG path")->required();
    plt->add_option("--manifold", c.manifold, "manifold JSON to overlay");
    plt->add_option("--project", c.project, "plane for 3-d data: pca, xy, xz or yz");

    // --format only changes correlate output; the other commands accept it for uniformity.
    for (auto* sub : {gen, fit, plt}) sub->add_option("--format", c.format, "output format (ignored)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : io_error;
    }

    try {
        if (gen->parsed()) {
            c.command = "generate";
            return cmd_generate(c, err);
        }
        if (fit->parsed()) {
            c.command = "fit-manifold";
            if (c.kind == "elastic" && c.k < 1) throw DimensionUnsupported("elastic manifolds need k = 1 or 2");
            return cmd_fit_manifold(c, err);
        }
        if (cor->parsed()) {
            c.command = "correlate";
            return cmd_correlate(c, err);
        }
        c.command = "plot";
        return cmd_plot(c, err);
    } catch (const DegenerateVariance& e) {
        err << "error: DegenerateVariance: column '" << e.column() << "': " << e.what() << "\n";
        return domain_error;
    } catch (const ModeUnsupported& e) {
        err << "error: ModeUnsupported: " << e.what() << "\n";
        return domain_error;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return io_error;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return domain_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return io_error;
    }
}

} // namespace mcorr::cli
