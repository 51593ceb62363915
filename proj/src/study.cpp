#include "serreg/study.hpp"

#include <cmath>
#include <stdexcept>

#include "serreg/hac.hpp"
#include "serreg/normal.hpp"
#include "serreg/ridge.hpp"
#include "serreg/rng.hpp"

namespace serreg {

long select_J(double A, long n, double r, int d, RateMode mode, double scale, int degree) {
    if (!(A > 1.0)) throw std::invalid_argument("region scale must exceed 1");
    if (!(r > 0.0)) throw std::invalid_argument("smoothness must be positive");
    double expo = static_cast<double>(d) / (2.0 * r + d);
    double base = mode == RateMode::L2 ? A : A / std::log(static_cast<double>(n));
    long J = std::lround(scale * std::pow(base, expo));
    auto factors = TensorBasis::factor_dimension(J, d, degree);
    long achievable = 1;
    for (int f : factors) achievable *= f;
    return achievable;
}

double truth_value(const std::string& truth, const Eigen::VectorXd& z) {
    int d = static_cast<int>(z.size());
    if (truth == "constant") return 1.0;
    if (truth == "linear") return 0.5 + 0.25 * z[0];
    return std::sin(2.0 * M_PI * z[0]) * (1.0 + 0.5 * z[d - 1]);
}

namespace {

Eigen::MatrixXd error_grid(int d, int per_dim) {
    int gd = std::min(d, 2);
    long rows = 1;
    for (int k = 0; k < gd; ++k) rows *= per_dim;
    Eigen::MatrixXd grid(rows, d);
    grid.setZero();
    for (long i = 0; i < rows; ++i) {
        long rem = i;
        for (int k = gd - 1; k >= 0; --k) {
            long c = rem % per_dim;
            rem /= per_dim;
            grid(i, k) = -0.5 + static_cast<double>(c) / (per_dim - 1);
        }
    }
    return grid;
}

FieldModel trend_field(const TrendStudyModel& m) {
    return FieldModel(ExponentialKernel{m.r0, m.r1}, GaussianDriver{m.sigma0}, 0.0, 0.0, true);
}

struct OlsLine {
    double slope = 0.0, se = 0.0;
};

OlsLine fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    OlsLine out;
    out.slope = sxy / sxx;
    if (n > 2) {
        double rss = 0.0;
        double b0 = my - out.slope * mx;
        for (size_t i = 0; i < n; ++i) {
            double e = y[i] - b0 - out.slope * x[i];
            rss += e * e;
        }
        out.se = std::sqrt(rss / (n - 2) / sxx);
    }
    return out;
}

}  // namespace

StudyResult run_rate_study(const RateStudyConfig& config) {
    if (config.ladder.empty()) throw std::invalid_argument("rate study needs a ladder");
    for (size_t i = 1; i < config.ladder.size(); ++i)
        if (!(config.ladder[i].A > config.ladder[i - 1].A))
            throw std::invalid_argument("ladder must be strictly increasing in A");

    FieldModel field = trend_field(config.model);
    Eigen::MatrixXd grid = error_grid(config.d, config.grid_points);
    auto m0 = [&](const Eigen::VectorXd& z) { return truth_value(config.truth, z); };
    auto eta = [&](const Eigen::VectorXd&) { return config.model.eta; };
    auto sig = [&](const Eigen::VectorXd&) { return config.model.sigma_eps; };

    Eigen::VectorXd m0_grid(grid.rows());
    for (long i = 0; i < grid.rows(); ++i) m0_grid[i] = m0(grid.row(i).transpose());

    StudyResult result;
    size_t nrungs = config.ladder.size();
    std::vector<std::vector<double>> sup_err(nrungs), l2_err(nrungs);

    for (size_t ru = 0; ru < nrungs; ++ru) {
        const Rung& rung = config.ladder[ru];
        long J = rung.J > 0 ? rung.J
                            : select_J(rung.A, rung.n, config.r, config.d, config.mode,
                                       config.j_scale, config.degree);
        TensorBasis basis = TensorBasis::with_total_dimension(config.d, config.degree, J);
        SamplingDesign design{config.d, Eigen::VectorXd::Constant(config.d, rung.A), Density{}};
        double penalty = config.penalty_scale / static_cast<double>(rung.n);

        sup_err[ru].resize(config.replications);
        l2_err[ru].resize(config.replications);

#pragma omp parallel for schedule(dynamic)
        for (int rp = 0; rp < config.replications; ++rp) {
            SiteSet sites = draw_sites(design, rung.n, config.seed,
                                       make_stream(ru + 1, static_cast<std::uint64_t>(rp), 0));
            Eigen::VectorXd y =
                simulate_trend_data(m0, eta, sig, field, sites, config.seed,
                                    make_stream(ru + 1, static_cast<std::uint64_t>(rp), 1));
            RidgeFit fit = fit_trend(sites, y, basis, penalty);
            Eigen::VectorXd mh = predict(fit, grid);
            double sup = 0.0, l2 = 0.0;
            for (long g = 0; g < grid.rows(); ++g) {
                double e = mh[g] - m0_grid[g];
                sup = std::max(sup, std::abs(e));
                l2 += e * e;
            }
            sup_err[ru][rp] = sup;
            l2_err[ru][rp] = std::sqrt(l2 / grid.rows());
        }

        RungResult rr;
        rr.A = rung.A;
        rr.n = rung.n;
        rr.J = J;
        for (int rp = 0; rp < config.replications; ++rp) {
            rr.mean_sup += sup_err[ru][rp];
            rr.mean_l2 += l2_err[ru][rp];
        }
        rr.mean_sup /= config.replications;
        rr.mean_l2 /= config.replications;
        double vs = 0.0, vl = 0.0;
        for (int rp = 0; rp < config.replications; ++rp) {
            vs += std::pow(sup_err[ru][rp] - rr.mean_sup, 2);
            vl += std::pow(l2_err[ru][rp] - rr.mean_l2, 2);
        }
        if (config.replications > 1) {
            rr.se_sup = std::sqrt(vs / (config.replications - 1) / config.replications);
            rr.se_l2 = std::sqrt(vl / (config.replications - 1) / config.replications);
        }
        result.rungs.push_back(rr);
    }

    std::vector<double> lx, ly;
    for (const auto& rr : result.rungs) {
        lx.push_back(std::log(rr.A));
        ly.push_back(std::log(config.mode == RateMode::Sup ? rr.mean_sup : rr.mean_l2));
    }
    OlsLine line = fit_line(lx, ly);
    result.slope = line.slope;
    result.slope_se = line.se;
    result.provenance = config.to_json();
    result.provenance["rng"] = rng_name();
    return result;
}

StudyResult run_coverage_study(const CoverageStudyConfig& config) {
    if (config.points.rows() == 0) throw std::invalid_argument("coverage study needs target points");
    if (config.replications < 50)
        std::fputs("warning: fewer than 50 replications weakens the binomial coverage band\n", stderr);

    FieldModel field = trend_field(config.model);
    long J = config.J > 0 ? config.J
                          : select_J(config.A, config.n, config.r, config.d, RateMode::L2,
                                     config.j_scale, config.degree);
    TensorBasis basis = TensorBasis::with_total_dimension(config.d, config.degree, J);
    SamplingDesign design{config.d, Eigen::VectorXd::Constant(config.d, config.A), Density{}};
    double penalty = config.penalty_scale / static_cast<double>(config.n);
    HacConfig hac{Eigen::VectorXd::Constant(config.d, config.bandwidth)};

    auto m0 = [&](const Eigen::VectorXd& z) { return truth_value(config.truth, z); };
    auto eta = [&](const Eigen::VectorXd&) { return config.model.eta; };
    auto sig = [&](const Eigen::VectorXd&) { return config.model.sigma_eps; };

    long npts = config.points.rows();
    Eigen::MatrixXi covered = Eigen::MatrixXi::Zero(config.replications, npts);
    Eigen::MatrixXd width = Eigen::MatrixXd::Zero(config.replications, npts);

#pragma omp parallel for schedule(dynamic)
    for (int rp = 0; rp < config.replications; ++rp) {
        SiteSet sites =
            draw_sites(design, config.n, config.seed, make_stream(1, static_cast<std::uint64_t>(rp), 0));
        Eigen::VectorXd y = simulate_trend_data(m0, eta, sig, field, sites, config.seed,
                                                make_stream(1, static_cast<std::uint64_t>(rp), 1));
        RidgeFit fit = fit_trend(sites, y, basis, penalty);
        VarianceEstimate var = hac_long_run_matrix(fit, y, hac);
        ConfidenceBand band = confidence_band(fit, var, config.points, config.level);
        for (long pt = 0; pt < npts; ++pt) {
            double truth = m0(config.points.row(pt).transpose());
            covered(rp, pt) = (truth >= band.lower[pt] && truth <= band.upper[pt]) ? 1 : 0;
            width(rp, pt) = band.upper[pt] - band.lower[pt];
        }
    }

    StudyResult result;
    RungResult rr;
    rr.A = config.A;
    rr.n = config.n;
    rr.J = J;
    result.rungs.push_back(rr);
    for (long pt = 0; pt < npts; ++pt) {
        PointResult pr;
        pr.point = config.points.row(pt);
        pr.coverage = covered.col(pt).cast<double>().mean();
        pr.mean_width = width.col(pt).mean();
        result.points.push_back(pr);
    }
    result.provenance = config.to_json();
    result.provenance["rng"] = rng_name();
    return result;
}

CovariateStudyResult run_covariate_study(const CovariateStudyConfig& config) {
    auto m0 = [](const Eigen::VectorXd& z, const Eigen::VectorXd& x) {
        return std::sin(2.0 * M_PI * z[0]) + x[0] * x[0];
    };
    auto h_var = [&](const Eigen::VectorXd&, const Eigen::VectorXd&) { return config.h_const; };
    std::vector<FieldModel> x_models;
    x_models.emplace_back(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0}, 0.0, 0.0, true);
    Rect D = Rect::cube(1);
    double expo = 2.0 / (2.0 * config.r + 2.0);  // (d+p)/(2r+d+p), d=p=1

    CovariateStudyResult result;
    for (size_t ni = 0; ni < config.ns.size(); ++ni) {
        long n = config.ns[ni];
        long J = std::lround(config.j_scale * std::pow(static_cast<double>(n), expo));
        TensorBasis basis = TensorBasis::with_total_dimension(2, config.degree, J);
        long actual = basis.total_dimension();
        SamplingDesign design{1, Eigen::VectorXd::Constant(1, static_cast<double>(n)), Density{}};
        double penalty = config.penalty_scale / static_cast<double>(n);

        std::vector<double> errs(config.rate_replications);
#pragma omp parallel for schedule(dynamic)
        for (int rp = 0; rp < config.rate_replications; ++rp) {
            SiteSet sites =
                draw_sites(design, n, config.seed, make_stream(ni + 10, static_cast<std::uint64_t>(rp), 0));
            CovariateData data = simulate_covariate_data(m0, h_var, x_models, sites, config.seed,
                                                         make_stream(ni + 10, static_cast<std::uint64_t>(rp), 1));
            RidgeFit fit = fit_covariate(sites, data.X, data.y, basis, D, penalty);
            Eigen::VectorXd mh = predict(fit, fit.design_points);
            double acc = 0.0, wsum = 0.0;
            for (long i = 0; i < n; ++i) {
                double w = fit.weights[i];
                Eigen::VectorXd x = data.X.row(i);
                double e = w * mh[i] - w * m0(sites.scaled.row(i).transpose(), x);
                acc += w * e * e;
                wsum += w;
            }
            errs[rp] = std::sqrt(acc / wsum);
        }
        double mean = 0.0;
        for (double e : errs) mean += e;
        result.ns.push_back(n);
        result.Js.push_back(actual);
        result.l2_errors.push_back(mean / config.rate_replications);
    }

    // coverage at the supplied (z, x_raw) targets
    if (config.points.rows() > 0) {
        long n = config.coverage_n;
        long J = std::lround(config.j_scale * std::pow(static_cast<double>(n), expo));
        TensorBasis basis = TensorBasis::with_total_dimension(2, config.degree, J);
        SamplingDesign design{1, Eigen::VectorXd::Constant(1, static_cast<double>(n)), Density{}};
        double penalty = config.penalty_scale / static_cast<double>(n);
        long npts = config.points.rows();

        Eigen::MatrixXi covered = Eigen::MatrixXi::Zero(config.coverage_replications, npts);
        Eigen::MatrixXd width = Eigen::MatrixXd::Zero(config.coverage_replications, npts);
#pragma omp parallel for schedule(dynamic)
        for (int rp = 0; rp < config.coverage_replications; ++rp) {
            SiteSet sites =
                draw_sites(design, n, config.seed, make_stream(50, static_cast<std::uint64_t>(rp), 0));
            CovariateData data = simulate_covariate_data(m0, h_var, x_models, sites, config.seed,
                                                         make_stream(50, static_cast<std::uint64_t>(rp), 1));
            RidgeFit fit = fit_covariate(sites, data.X, data.y, basis, D, penalty);
            VarianceEstimate var = covariate_variance(fit, data.y);
            Eigen::MatrixXd targets(npts, 2);
            for (long pt = 0; pt < npts; ++pt) {
                targets(pt, 0) = config.points(pt, 0);
                Eigen::VectorXd xraw(1);
                xraw << config.points(pt, 1);
                targets(pt, 1) = fit.x_map.apply(xraw)[0];
            }
            ConfidenceBand band = confidence_band(fit, var, targets, config.level);
            for (long pt = 0; pt < npts; ++pt) {
                Eigen::VectorXd z(1), x(1);
                z << config.points(pt, 0);
                x << config.points(pt, 1);
                double truth = m0(z, x);
                covered(rp, pt) = (truth >= band.lower[pt] && truth <= band.upper[pt]) ? 1 : 0;
                width(rp, pt) = band.upper[pt] - band.lower[pt];
            }
        }
        for (long pt = 0; pt < npts; ++pt) {
            PointResult pr;
            pr.point = config.points.row(pt);
            pr.coverage = covered.col(pt).cast<double>().mean();
            pr.mean_width = width.col(pt).mean();
            result.points.push_back(pr);
        }
    }
    return result;
}

nlohmann::json RateStudyConfig::to_json() const {
    nlohmann::json ladder_j = nlohmann::json::array();
    for (const auto& rung : ladder) ladder_j.push_back({{"A", rung.A}, {"n", rung.n}, {"J", rung.J}});
    return {{"d", d},
            {"r", r},
            {"degree", degree},
            {"mode", mode == RateMode::L2 ? "l2" : "sup"},
            {"j_scale", j_scale},
            {"ladder", ladder_j},
            {"replications", replications},
            {"penalty_scale", penalty_scale},
            {"seed", seed},
            {"truth", truth},
            {"grid_points", grid_points},
            {"model", {{"eta", model.eta},
                       {"sigma_eps", model.sigma_eps},
                       {"r0", model.r0},
                       {"r1", model.r1},
                       {"sigma0", model.sigma0}}}};
}

namespace {

TrendStudyModel model_from_json(const nlohmann::json& j) {
    TrendStudyModel m;
    if (!j.contains("model")) return m;
    const auto& mj = j.at("model");
    m.eta = mj.value("eta", m.eta);
    m.sigma_eps = mj.value("sigma_eps", m.sigma_eps);
    m.r0 = mj.value("r0", m.r0);
    m.r1 = mj.value("r1", m.r1);
    m.sigma0 = mj.value("sigma0", m.sigma0);
    return m;
}

}  // namespace

RateStudyConfig RateStudyConfig::from_json(const nlohmann::json& j) {
    RateStudyConfig c;
    c.d = j.value("d", c.d);
    c.r = j.value("r", c.r);
    c.degree = j.value("degree", c.degree);
    c.mode = j.value("mode", std::string("l2")) == "sup" ? RateMode::Sup : RateMode::L2;
    c.j_scale = j.value("j_scale", c.j_scale);
    c.replications = j.value("replications", c.replications);
    c.penalty_scale = j.value("penalty_scale", c.penalty_scale);
    c.seed = j.value("seed", c.seed);
    c.truth = j.value("truth", c.truth);
    c.grid_points = j.value("grid_points", c.grid_points);
    c.model = model_from_json(j);
    if (j.contains("ladder"))
        for (const auto& rj : j.at("ladder"))
            c.ladder.push_back(Rung{rj.at("A").get<double>(), rj.at("n").get<long>(), rj.value("J", 0L)});
    return c;
}

nlohmann::json CoverageStudyConfig::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (long i = 0; i < points.rows(); ++i) {
        std::vector<double> row(points.cols());
        for (long k = 0; k < points.cols(); ++k) row[k] = points(i, k);
        pts.push_back(row);
    }
    return {{"d", d},         {"A", A},           {"n", n},
            {"J", J},         {"degree", degree}, {"r", r},
            {"j_scale", j_scale}, {"replications", replications},
            {"level", level}, {"points", pts},    {"bandwidth", bandwidth},
            {"penalty_scale", penalty_scale},     {"seed", seed},
            {"truth", truth},
            {"model", {{"eta", model.eta},
                       {"sigma_eps", model.sigma_eps},
                       {"r0", model.r0},
                       {"r1", model.r1},
                       {"sigma0", model.sigma0}}}};
}

CoverageStudyConfig CoverageStudyConfig::from_json(const nlohmann::json& j) {
    CoverageStudyConfig c;
    c.d = j.value("d", c.d);
    c.A = j.value("A", c.A);
    c.n = j.value("n", c.n);
    c.J = j.value("J", c.J);
    c.degree = j.value("degree", c.degree);
    c.r = j.value("r", c.r);
    c.j_scale = j.value("j_scale", c.j_scale);
    c.replications = j.value("replications", c.replications);
    c.level = j.value("level", c.level);
    c.bandwidth = j.value("bandwidth", c.bandwidth);
    c.penalty_scale = j.value("penalty_scale", c.penalty_scale);
    c.seed = j.value("seed", c.seed);
    c.truth = j.value("truth", c.truth);
    c.model = model_from_json(j);
    if (j.contains("points")) {
        const auto& pts = j.at("points");
        c.points.resize(pts.size(), c.d);
        for (size_t i = 0; i < pts.size(); ++i)
            for (int k = 0; k < c.d; ++k) c.points(i, k) = pts[i][k].get<double>();
    }
    return c;
}

}  // namespace serreg
