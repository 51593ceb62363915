#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "serreg/csv.hpp"
#include "serreg/field.hpp"
#include "serreg/hac.hpp"
#include "serreg/ridge.hpp"
#include "serreg/rng.hpp"
#include "serreg/sites.hpp"
#include "serreg/study.hpp"

using nlohmann::json;
using namespace serreg;

namespace {

constexpr int kVersion = 1;

enum ExitCode {
    kOk = 0,
    kUsage = 2,
    kSchema = 3,
    kEmptyInput = 4,
    kOutOfRegion = 5,
    kSingularGram = 6,
    kArtifact = 7,
    kConfig = 8,
    kRuntime = 9,
};

struct CliError : std::runtime_error {
    int code;
    CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

json load_json(const std::string& path, int error_code) {
    std::ifstream in(path);
    if (!in) throw CliError(error_code, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CliError(error_code, path + ": " + e.what());
    }
    return j;
}

void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw CliError(kRuntime, "cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw CliError(kRuntime, "write failure on " + path);
}

Eigen::VectorXd parse_reals(const std::string& spec, const char* what) {
    std::vector<double> vals;
    std::stringstream ss(spec);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            vals.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw CliError(kUsage, std::string("cannot parse ") + what + " value '" + cell + "'");
        }
    }
    if (vals.empty()) throw CliError(kUsage, std::string("empty ") + what + " list");
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
}

std::vector<int> parse_grid_spec(const std::string& spec, int d) {
    Eigen::VectorXd vals = parse_reals(spec, "grid");
    std::vector<int> res;
    if (vals.size() == 1) {
        res.assign(d, static_cast<int>(vals[0]));
    } else if (vals.size() == static_cast<long>(d)) {
        for (long k = 0; k < vals.size(); ++k) res.push_back(static_cast<int>(vals[k]));
    } else {
        throw CliError(kUsage, "grid needs one value or one per dimension");
    }
    for (int g : res)
        if (g < 2) throw CliError(kUsage, "grid resolution must be >= 2 per dimension");
    return res;
}

// Row-major grid over the cube: first dimension slowest, last fastest.
Eigen::MatrixXd cube_grid(const std::vector<int>& res) {
    int d = static_cast<int>(res.size());
    long rows = 1;
    for (int g : res) rows *= g;
    Eigen::MatrixXd grid(rows, d);
    for (long i = 0; i < rows; ++i) {
        long rem = i;
        for (int k = d - 1; k >= 0; --k) {
            long c = rem % res[k];
            rem /= res[k];
            grid(i, k) = -0.5 + static_cast<double>(c) / (res[k] - 1);
        }
    }
    return grid;
}

Eigen::MatrixXd to_raw(const Eigen::MatrixXd& scaled, const Eigen::VectorXd& A,
                       const Eigen::VectorXd& offset) {
    Eigen::MatrixXd raw = scaled;
    for (long k = 0; k < raw.cols(); ++k)
        raw.col(k) = raw.col(k) * A[k] + Eigen::VectorXd::Constant(raw.rows(), offset[k]);
    return raw;
}

struct CommonFlags {
    int degree = 3;
    long J = 0;
    int knots_per_dim = 0;
    double ridge = -1.0;  // < 0: default 0.5/n
    std::string region;
    double infer_margin = -1.0;
    std::string weight_region;
    double level = 0.95;
    double bandwidth_frac = 0.1;
    std::string bandwidth;  // absolute override, comma list
    std::uint64_t seed = 0;
    bool seed_given = false;
};

TensorBasis build_basis(const CommonFlags& f, int dims) {
    if (f.J > 0 && f.knots_per_dim > 0)
        throw CliError(kUsage, "--J and --knots-per-dim are mutually exclusive");
    if (f.J > 0) return TensorBasis::with_total_dimension(dims, f.degree, f.J);
    if (f.knots_per_dim > 0) return TensorBasis::cube(dims, f.degree, f.knots_per_dim);
    throw CliError(kUsage, "specify the basis size with --J or --knots-per-dim");
}

struct RegionResult {
    SiteSet sites;
    Eigen::VectorXd offset;
};

RegionResult resolve_region(const CommonFlags& f, const Eigen::MatrixXd& raw) {
    int d = static_cast<int>(raw.cols());
    bool has_region = !f.region.empty();
    bool has_infer = f.infer_margin >= 0.0;
    if (has_region == has_infer)
        throw CliError(kUsage, "specify exactly one of --region or --infer-region");
    RegionResult out;
    if (has_region) {
        Eigen::VectorXd A = parse_reals(f.region, "region");
        if (A.size() != d)
            throw CliError(kUsage, "region needs one scale per dimension (" + std::to_string(d) + ")");
        out.offset = Eigen::VectorXd::Zero(d);
        out.sites = rescale_sites(raw, A);
    } else {
        InferredRegion reg = infer_region(raw, f.infer_margin);
        Eigen::MatrixXd centered = raw;
        centered.rowwise() -= reg.offset.transpose();
        out.offset = reg.offset;
        out.sites = rescale_sites(centered, reg.A);
    }
    return out;
}

Rect resolve_weight_region(const CommonFlags& f, int p) {
    if (f.weight_region.empty()) return Rect::cube(p);
    Eigen::VectorXd vals = parse_reals(f.weight_region, "weight-region");
    if (vals.size() != 2 * p)
        throw CliError(kUsage, "weight-region needs lo,hi per covariate (standardized units)");
    Rect r;
    r.lo.resize(p);
    r.hi.resize(p);
    for (int j = 0; j < p; ++j) {
        r.lo[j] = vals[2 * j];
        r.hi[j] = vals[2 * j + 1];
        if (!(r.lo[j] < r.hi[j])) throw CliError(kUsage, "weight-region bounds must satisfy lo < hi");
    }
    return r;
}

json metadata_block(const std::string& command, const json& resolved) {
    return {{"version", kVersion}, {"command", command}, {"rng", rng_name()}, {"config", resolved}};
}

// Minimal artifact for prediction: coefficients plus coordinate maps, no
// normal-equation factor.
struct Artifact {
    RidgeFit fit;
    json raw;
};

Artifact load_artifact(const std::string& path) {
    json j = load_json(path, kArtifact);
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
        throw CliError(kArtifact, "unsupported fit artifact schema version in " + path);
    try {
        Artifact art{RidgeFit{TensorBasis::from_json(j.at("basis"))}, j};
        RidgeFit& fit = art.fit;
        fit.kind = j.at("model_kind") == "covariate" ? ModelKind::Covariate : ModelKind::Trend;
        fit.penalty = j.at("penalty").get<double>();
        fit.n = j.at("n").get<long>();
        auto as_vec = [&](const char* key) {
            std::vector<double> v = j.at(key).get<std::vector<double>>();
            return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(v.size())).eval();
        };
        fit.A = as_vec("A");
        fit.offset = as_vec("offset");
        fit.beta = as_vec("beta");
        if (fit.kind == ModelKind::Covariate) {
            auto vec_of = [](const json& arr) {
                std::vector<double> v = arr.get<std::vector<double>>();
                return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(v.size())).eval();
            };
            fit.x_map.scale = vec_of(j.at("x_map").at("scale"));
            fit.x_map.shift = vec_of(j.at("x_map").at("shift"));
            fit.weight_region.lo = vec_of(j.at("weight_region").at("lo"));
            fit.weight_region.hi = vec_of(j.at("weight_region").at("hi"));
        }
        if (fit.beta.size() != fit.basis.total_dimension())
            throw CliError(kArtifact, "coefficient length does not match basis dimension");
        return art;
    } catch (const json::exception& e) {
        throw CliError(kArtifact, path + ": " + e.what());
    }
}

// Standardized covariate-model design points from raw (site, x) rows.
Eigen::MatrixXd covariate_points(const RidgeFit& fit, const Eigen::MatrixXd& sites_raw,
                                 const Eigen::MatrixXd& x_raw) {
    int d = static_cast<int>(sites_raw.cols());
    int p = static_cast<int>(x_raw.cols());
    Eigen::MatrixXd pts(sites_raw.rows(), d + p);
    for (long i = 0; i < sites_raw.rows(); ++i) {
        for (int k = 0; k < d; ++k) pts(i, k) = (sites_raw(i, k) - fit.offset[k]) / fit.A[k];
        pts.row(i).tail(p) = fit.x_map.apply(x_raw.row(i).transpose());
    }
    return pts;
}

ScalarField make_truth(const std::string& truth) {
    return [truth](const Eigen::VectorXd& z) { return truth_value(truth, z); };
}

int cmd_fit(const CommonFlags& flags, const std::string& data_path, const std::string& out_path,
            std::string residual_path) {
    DataTable data = read_data_csv(data_path);
    RegionResult region = resolve_region(flags, data.sites);
    TensorBasis basis = build_basis(flags, data.d + data.p);
    double penalty = flags.ridge >= 0.0 ? flags.ridge : 0.5 / static_cast<double>(data.n());

    RidgeFit fit = data.p > 0
                       ? fit_covariate(region.sites, data.X, data.y, std::move(basis),
                                       resolve_weight_region(flags, data.p), penalty)
                       : fit_trend(region.sites, data.y, std::move(basis), penalty);
    fit.offset = region.offset;

    Eigen::VectorXd resid = residuals(fit, data.y);
    long probe_n = std::min<long>(fit.n, 500);
    GramDiagnostics diag = gram_diagnostics(fit, fit.design_points.topRows(probe_n));

    json resolved{{"data", data_path},        {"degree", flags.degree},
                  {"J", fit.basis.total_dimension()}, {"penalty", penalty},
                  {"region", std::vector<double>(fit.A.data(), fit.A.data() + fit.A.size())},
                  {"infer_region_margin", flags.infer_margin},
                  {"covariates", data.p}};
    json artifact = fit.to_json();
    artifact["metadata"] = metadata_block("fit", resolved);
    save_json(out_path, artifact);

    if (residual_path.empty()) residual_path = out_path + ".residuals.csv";
    std::vector<std::string> header;
    for (int k = 0; k < data.d; ++k) header.push_back("s" + std::to_string(k + 1));
    header.push_back("residual");
    Eigen::MatrixXd table(data.n(), data.d + 1);
    table.leftCols(data.d) = data.sites;
    table.col(data.d) = resid;
    write_table(residual_path, header, table);

    json summary{{"n", fit.n},
                 {"J", fit.basis.total_dimension()},
                 {"penalty", penalty},
                 {"gram_condition", diag.condition},
                 {"residual_norm", resid.norm()},
                 {"artifact", out_path},
                 {"residuals", residual_path}};
    std::cout << summary.dump() << '\n';
    return kOk;
}

int cmd_predict(const std::string& fit_path, const std::string& out_path,
                const std::string& grid_spec, const std::string& points_path) {
    Artifact art = load_artifact(fit_path);
    const RidgeFit& fit = art.fit;
    std::vector<std::string> header;
    Eigen::MatrixXd table;

    if (fit.kind == ModelKind::Trend) {
        int d = fit.basis.dims();
        Eigen::MatrixXd grid = cube_grid(parse_grid_spec(grid_spec, d));
        Eigen::VectorXd est = predict(fit, grid);
        Eigen::MatrixXd raw = to_raw(grid, fit.A, fit.offset);
        for (int k = 0; k < d; ++k) header.push_back("s" + std::to_string(k + 1));
        header.push_back("estimate");
        table.resize(grid.rows(), d + 1);
        table.leftCols(d) = raw;
        table.col(d) = est;
    } else {
        if (points_path.empty())
            throw CliError(kUsage, "covariate-model prediction needs --points (s1..sd, x1..xp rows)");
        DataTable pts = read_data_csv(points_path);
        Eigen::MatrixXd design = covariate_points(fit, pts.sites, pts.X);
        Eigen::VectorXd est = predict(fit, design);
        for (int k = 0; k < pts.d; ++k) header.push_back("s" + std::to_string(k + 1));
        for (int k = 0; k < pts.p; ++k) header.push_back("x" + std::to_string(k + 1));
        header.push_back("estimate");
        table.resize(pts.n(), pts.d + pts.p + 1);
        table.leftCols(pts.d) = pts.sites;
        table.middleCols(pts.d, pts.p) = pts.X;
        table.col(pts.d + pts.p) = est;
    }
    write_table(out_path, header, table);
    save_json(out_path + ".meta.json",
              metadata_block("predict", {{"fit", fit_path}, {"grid", grid_spec}}));
    return kOk;
}

int cmd_infer(const CommonFlags& flags, const std::string& fit_path, const std::string& data_path,
              const std::string& out_path, const std::string& grid_spec,
              const std::string& points_path) {
    Artifact art = load_artifact(fit_path);
    DataTable data = read_data_csv(data_path);
    int d = data.d;
    if (art.fit.kind == ModelKind::Covariate ? art.fit.basis.dims() != d + data.p
                                             : art.fit.basis.dims() != d)
        throw CliError(kArtifact, "data columns do not match the fit artifact");

    Eigen::MatrixXd centered = data.sites;
    centered.rowwise() -= art.fit.offset.transpose();
    SiteSet sites = rescale_sites(centered, art.fit.A);

    json meta{{"level", flags.level}, {"kernel", "bartlett"}, {"penalty", art.fit.penalty},
              {"J", art.fit.basis.total_dimension()}};
    std::vector<std::string> header;
    Eigen::MatrixXd table;
    ConfidenceBand band;

    if (art.fit.kind == ModelKind::Trend) {
        RidgeFit fit = fit_trend(sites, data.y, art.fit.basis, art.fit.penalty);
        fit.offset = art.fit.offset;
        Eigen::VectorXd b = flags.bandwidth.empty()
                                ? default_bandwidths(fit.A, flags.bandwidth_frac)
                                : parse_reals(flags.bandwidth, "bandwidth");
        if (b.size() != d) throw CliError(kUsage, "one bandwidth per spatial dimension required");
        VarianceEstimate var = hac_long_run_matrix(fit, data.y, HacConfig{b});
        Eigen::MatrixXd grid = cube_grid(parse_grid_spec(grid_spec, d));
        band = confidence_band(fit, var, grid, flags.level);
        Eigen::MatrixXd raw = to_raw(grid, fit.A, fit.offset);
        for (int k = 0; k < d; ++k) header.push_back("s" + std::to_string(k + 1));
        table.resize(grid.rows(), d + 4);
        table.leftCols(d) = raw;
        meta["bandwidths"] = std::vector<double>(b.data(), b.data() + b.size());
        meta["empty_support_warning"] = var.empty_support_warning;
    } else {
        if (points_path.empty())
            throw CliError(kUsage, "covariate-model inference needs --points (s1..sd, x1..xp rows)");
        RidgeFit fit = fit_covariate(sites, data.X, data.y, art.fit.basis, art.fit.weight_region,
                                     art.fit.penalty);
        fit.offset = art.fit.offset;
        VarianceEstimate var = covariate_variance(fit, data.y);
        DataTable pts = read_data_csv(points_path);
        Eigen::MatrixXd design = covariate_points(fit, pts.sites, pts.X);
        band = confidence_band(fit, var, design, flags.level);
        for (int k = 0; k < pts.d; ++k) header.push_back("s" + std::to_string(k + 1));
        for (int k = 0; k < pts.p; ++k) header.push_back("x" + std::to_string(k + 1));
        table.resize(pts.n(), pts.d + pts.p + 4);
        table.leftCols(pts.d) = pts.sites;
        table.middleCols(pts.d, pts.p) = pts.X;
    }
    long base = table.cols() - 4;
    table.col(base) = band.estimate;
    table.col(base + 1) = band.se;
    table.col(base + 2) = band.lower;
    table.col(base + 3) = band.upper;
    header.push_back("estimate");
    header.push_back("se");
    header.push_back("lower");
    header.push_back("upper");
    write_table(out_path, header, table);
    meta["clamped_points"] = band.clamped;
    meta["grid_rows"] = table.rows();
    json block = metadata_block("infer", {{"fit", fit_path}, {"data", data_path}, {"grid", grid_spec}});
    block["inference"] = meta;
    save_json(out_path + ".meta.json", block);
    std::cout << json{{"rows", table.rows()}, {"clamped_points", band.clamped}}.dump() << '\n';
    return kOk;
}

FieldModel field_from_config(json fj) {
    fj["grid_step"] = fj.value("grid_step", 0.0);
    fj["truncation_radius"] = fj.value("truncation_radius", 0.0);
    fj["normalize"] = fj.value("normalize", true);
    return FieldModel::from_json(fj);
}

int cmd_simulate(const CommonFlags& flags, const std::string& config_path,
                 const std::string& out_path) {
    json cfg = load_json(config_path, kConfig);
    try {
        int d = cfg.at("d").get<int>();
        long n = cfg.at("n").get<long>();
        std::vector<double> region = cfg.at("region").get<std::vector<double>>();
        if (static_cast<int>(region.size()) != d)
            throw CliError(kConfig, "region needs one scale per dimension");
        std::uint64_t seed = flags.seed_given ? flags.seed : cfg.value("seed", std::uint64_t{1});

        SamplingDesign design{d, Eigen::Map<Eigen::VectorXd>(region.data(), d), Density{}};
        if (cfg.contains("density")) {
            design.g.uniform = false;
            for (const auto& m : cfg.at("density").at("marginals"))
                design.g.marginals.push_back(MarginalPoly{m.get<std::vector<double>>()});
        }
        SiteSet sites = draw_sites(design, n, seed, make_stream(0, 0, 0));

        std::string truth = cfg.value("truth", std::string("default"));
        Eigen::VectorXd y;
        Eigen::MatrixXd X(n, 0);
        if (cfg.contains("covariates")) {
            std::vector<FieldModel> x_models;
            for (const auto& fj : cfg.at("covariates")) x_models.push_back(field_from_config(fj));
            double h_const = cfg.value("h_const", 0.5);
            auto m0 = [](const Eigen::VectorXd& z, const Eigen::VectorXd& x) {
                return std::sin(2.0 * M_PI * z[0]) + x[0] * x[0];
            };
            auto h_var = [h_const](const Eigen::VectorXd&, const Eigen::VectorXd&) { return h_const; };
            CovariateData datap =
                simulate_covariate_data(m0, h_var, x_models, sites, seed, make_stream(0, 0, 1));
            y = datap.y;
            X = datap.X;
        } else {
            FieldModel field = field_from_config(cfg.at("field"));
            double eta_c = cfg.value("eta", 0.5);
            double sig_c = cfg.value("sigma_eps", 0.5);
            auto eta = [eta_c](const Eigen::VectorXd&) { return eta_c; };
            auto sig = [sig_c](const Eigen::VectorXd&) { return sig_c; };
            y = simulate_trend_data(make_truth(truth), eta, sig, field, sites, seed,
                                    make_stream(0, 0, 1));
        }
        write_data_csv(out_path, sites.raw, y, X);
        json resolved = cfg;
        resolved["seed"] = seed;
        save_json(out_path + ".meta.json", metadata_block("simulate", resolved));
        std::cout << json{{"n", n}, {"out", out_path}, {"seed", seed}}.dump() << '\n';
        return kOk;
    } catch (const json::exception& e) {
        throw CliError(kConfig, config_path + ": " + e.what());
    }
}

std::uint64_t require_seed(const CommonFlags& flags, const json& cfg) {
    if (flags.seed_given) return flags.seed;
    if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
    throw CliError(kUsage, "studies need an explicit seed (--seed or config file)");
}

int cmd_rate_study(const CommonFlags& flags, const std::string& config_path,
                   const std::string& out_prefix, const std::string& mode, int replications) {
    json cfg = config_path.empty() ? json::object() : load_json(config_path, kConfig);
    RateStudyConfig config = RateStudyConfig::from_json(cfg);
    if (!mode.empty()) config.mode = mode == "sup" ? RateMode::Sup : RateMode::L2;
    if (replications > 0) config.replications = replications;
    config.seed = require_seed(flags, cfg);
    if (config.ladder.empty())
        for (double A : {200.0, 400.0, 800.0, 1600.0, 3200.0})
            config.ladder.push_back(Rung{A, static_cast<long>(A), 0});
    if (config.replications < 50)
        std::cerr << json{{"warning", "replications below 50 weaken the Monte Carlo bands"}}.dump()
                  << '\n';

    StudyResult result = run_rate_study(config);

    Eigen::MatrixXd table(result.rungs.size(), 7);
    for (size_t i = 0; i < result.rungs.size(); ++i) {
        const RungResult& r = result.rungs[i];
        table.row(i) << r.A, static_cast<double>(r.n), static_cast<double>(r.J), r.mean_sup,
            r.se_sup, r.mean_l2, r.se_l2;
    }
    write_table(out_prefix + ".csv", {"A", "n", "J", "mean_sup", "se_sup", "mean_l2", "se_l2"},
                table);

    json report{{"slope", result.slope},
                {"slope_se", result.slope_se},
                {"mode", config.mode == RateMode::Sup ? "sup" : "l2"},
                {"rungs", json::array()}};
    for (size_t i = 0; i < result.rungs.size(); ++i) {
        const RungResult& r = result.rungs[i];
        report["rungs"].push_back({{"A", r.A}, {"n", r.n}, {"J", r.J}, {"mean_sup", r.mean_sup},
                                   {"se_sup", r.se_sup}, {"mean_l2", r.mean_l2}, {"se_l2", r.se_l2}});
    }
    report["metadata"] = metadata_block("rate-study", result.provenance);
    save_json(out_prefix + ".json", report);
    std::cout << json{{"slope", result.slope}, {"slope_se", result.slope_se}}.dump() << '\n';
    return kOk;
}

int cmd_coverage_study(const CommonFlags& flags, const std::string& config_path,
                       const std::string& out_prefix, int replications) {
    json cfg = config_path.empty() ? json::object() : load_json(config_path, kConfig);
    CoverageStudyConfig config = CoverageStudyConfig::from_json(cfg);
    if (replications > 0) config.replications = replications;
    config.seed = require_seed(flags, cfg);
    config.level = flags.level;
    if (!flags.bandwidth.empty()) config.bandwidth = parse_reals(flags.bandwidth, "bandwidth")[0];
    if (config.points.rows() == 0) {
        config.points.resize(4, 1);
        config.points << -0.25, 0.0, 0.25, 0.5;
    }
    if (config.replications < 50)
        std::cerr << json{{"warning", "replications below 50 weaken the binomial coverage band"}}.dump()
                  << '\n';

    StudyResult result = run_coverage_study(config);

    Eigen::MatrixXd table(result.points.size(), config.d + 2);
    std::vector<std::string> header;
    for (int k = 0; k < config.d; ++k) header.push_back("z" + std::to_string(k + 1));
    header.push_back("coverage");
    header.push_back("mean_width");
    json points = json::array();
    for (size_t i = 0; i < result.points.size(); ++i) {
        const PointResult& pr = result.points[i];
        for (int k = 0; k < config.d; ++k) table(i, k) = pr.point[k];
        table(i, config.d) = pr.coverage;
        table(i, config.d + 1) = pr.mean_width;
        points.push_back({{"point", std::vector<double>(pr.point.data(),
                                                        pr.point.data() + pr.point.size())},
                          {"coverage", pr.coverage},
                          {"mean_width", pr.mean_width}});
    }
    write_table(out_prefix + ".csv", header, table);

    json report{{"level", config.level}, {"points", points}};
    report["metadata"] = metadata_block("coverage-study", result.provenance);
    save_json(out_prefix + ".json", report);
    std::cout << json{{"points", points}}.dump() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"series ridge regression for spatial data"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string data_path, out_path, fit_path, config_path, points_path;
    std::string grid_spec = "50";
    std::string residual_path, mode;
    int replications = 0;

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", flags.seed, "RNG seed")->each([&](const std::string&) {
            flags.seed_given = true;
        });
    };

    CLI::App* fit = app.add_subcommand("fit", "fit the series ridge estimator from a CSV dataset");
    fit->add_option("--data", data_path, "input CSV (s1..sd, y [, x1..xp])")->required();
    fit->add_option("--out", out_path, "output fit artifact (JSON)")->required();
    fit->add_option("--residuals", residual_path, "residual CSV path");
    fit->add_option("--degree", flags.degree, "spline degree");
    fit->add_option("--J", flags.J, "total tensor basis dimension");
    fit->add_option("--knots-per-dim", flags.knots_per_dim, "interior knots per dimension");
    fit->add_option("--ridge", flags.ridge, "ridge penalty (default 0.5/n)");
    fit->add_option("--region", flags.region, "region scales A1,...,Ad");
    fit->add_option("--infer-region", flags.infer_margin, "infer region with this margin fraction");
    fit->add_option("--weight-region", flags.weight_region,
                    "covariate weight region lo1,hi1,... (standardized units)");

    CLI::App* predict = app.add_subcommand("predict", "evaluate a fitted surface");
    predict->add_option("--fit", fit_path, "fit artifact")->required();
    predict->add_option("--out", out_path, "output CSV")->required();
    predict->add_option("--grid", grid_spec, "grid resolution (one value or per-dimension list)");
    predict->add_option("--points", points_path, "points CSV for covariate models");

    CLI::App* infer = app.add_subcommand("infer", "pointwise standard errors and intervals");
    infer->add_option("--fit", fit_path, "fit artifact")->required();
    infer->add_option("--data", data_path, "input CSV used for the fit")->required();
    infer->add_option("--out", out_path, "output CSV")->required();
    infer->add_option("--grid", grid_spec, "grid resolution");
    infer->add_option("--points", points_path, "points CSV for covariate models");
    infer->add_option("--level", flags.level, "confidence level");
    infer->add_option("--bandwidth-frac", flags.bandwidth_frac, "bandwidths as a fraction of A_j");
    infer->add_option("--bandwidth", flags.bandwidth, "absolute bandwidths b1,...,bd");

    CLI::App* simulate = app.add_subcommand("simulate", "synthesize a dataset from a model config");
    simulate->add_option("--config", config_path, "model config JSON")->required();
    simulate->add_option("--out", out_path, "output CSV")->required();
    add_seed(simulate);

    CLI::App* rate = app.add_subcommand("rate-study", "Monte Carlo convergence-rate study");
    rate->add_option("--config", config_path, "study config JSON");
    rate->add_option("--out", out_path, "output prefix (.csv and .json)")->required();
    rate->add_option("--mode", mode, "sup or l2")->check(CLI::IsMember({"sup", "l2"}));
    rate->add_option("--replications", replications, "replications per rung");
    add_seed(rate);

    CLI::App* coverage = app.add_subcommand("coverage-study", "Monte Carlo CI coverage study");
    coverage->add_option("--config", config_path, "study config JSON");
    coverage->add_option("--out", out_path, "output prefix (.csv and .json)")->required();
    coverage->add_option("--replications", replications, "replications");
    coverage->add_option("--level", flags.level, "confidence level");
    coverage->add_option("--bandwidth", flags.bandwidth, "absolute HAC bandwidth");
    add_seed(coverage);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << json{{"error", e.what()}, {"code", kUsage}}.dump() << '\n';
        return kUsage;
    }

    auto fail = [](int code, const std::string& msg) {
        std::cerr << json{{"error", msg}, {"code", code}}.dump() << '\n';
        return code;
    };

    try {
        if (fit->parsed()) return cmd_fit(flags, data_path, out_path, residual_path);
        if (predict->parsed()) return cmd_predict(fit_path, out_path, grid_spec, points_path);
        if (infer->parsed())
            return cmd_infer(flags, fit_path, data_path, out_path, grid_spec, points_path);
        if (simulate->parsed()) return cmd_simulate(flags, config_path, out_path);
        if (rate->parsed())
            return cmd_rate_study(flags, config_path, out_path, mode, replications);
        if (coverage->parsed()) return cmd_coverage_study(flags, config_path, out_path, replications);
        return fail(kUsage, "no subcommand selected");
    } catch (const CliError& e) {
        return fail(e.code, e.what());
    } catch (const EmptyInputError& e) {
        return fail(kEmptyInput, e.what());
    } catch (const CsvError& e) {
        return fail(kSchema, e.what());
    } catch (const OutOfRegionError& e) {
        return fail(kOutOfRegion, e.what());
    } catch (const SingularGramError& e) {
        return fail(kSingularGram, e.what());
    } catch (const std::exception& e) {
        return fail(kRuntime, e.what());
    }
}
