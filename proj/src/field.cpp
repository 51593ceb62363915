#include "serreg/field.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "serreg/quad.hpp"
#include "serreg/rng.hpp"

namespace serreg {

double CarmaIsotropicKernel::weight(int i) const {
    double li = lambda[i];
    double aprime = 2.0 * li;
    for (size_t m = 0; m < lambda.size(); ++m)
        if (static_cast<int>(m) != i) aprime *= li * li - lambda[m] * lambda[m];
    double b = 0.0;
    for (auto it = b_coeffs.rbegin(); it != b_coeffs.rend(); ++it) b = b * li + *it;
    return b / aprime;
}

void validate(const KernelSpec& spec) {
    if (const auto* e = std::get_if<ExponentialKernel>(&spec)) {
        if (!(std::abs(e->r0) > 0.0)) throw std::invalid_argument("exponential kernel requires |r0| > 0");
        if (!(e->r1 > 0.0)) throw std::invalid_argument("exponential kernel requires r1 > 0");
        return;
    }
    const auto& c = std::get<CarmaIsotropicKernel>(spec);
    if (c.lambda.empty()) throw std::invalid_argument("CARMA kernel needs at least one root");
    if (c.b_coeffs.empty()) throw std::invalid_argument("CARMA kernel needs b coefficients");
    if (c.b_coeffs.size() > c.lambda.size())
        throw std::invalid_argument("CARMA moving-average degree must be less than p0");
    for (size_t i = 0; i < c.lambda.size(); ++i) {
        if (!(c.lambda[i] < 0.0)) throw std::invalid_argument("CARMA roots must be negative");
        for (size_t m = i + 1; m < c.lambda.size(); ++m)
            if (c.lambda[i] == c.lambda[m]) throw std::invalid_argument("CARMA roots must be distinct");
    }
    for (size_t i = 0; i < c.lambda.size(); ++i) {
        double li = c.lambda[i], b = 0.0;
        for (auto it = c.b_coeffs.rbegin(); it != c.b_coeffs.rend(); ++it) b = b * li + *it;
        if (b == 0.0) throw std::invalid_argument("CARMA b polynomial vanishes at a root lambda_i");
    }
}

double kernel_eval_radius(const KernelSpec& spec, double r) {
    if (const auto* e = std::get_if<ExponentialKernel>(&spec)) return e->r0 * std::exp(-e->r1 * r);
    const auto& c = std::get<CarmaIsotropicKernel>(spec);
    double acc = 0.0;
    for (size_t i = 0; i < c.lambda.size(); ++i)
        acc += c.weight(static_cast<int>(i)) * std::exp(c.lambda[i] * r);
    return acc;
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x) {
    return kernel_eval_radius(spec, x.norm());
}

double kernel_decay_rate(const KernelSpec& spec) {
    if (const auto* e = std::get_if<ExponentialKernel>(&spec)) return e->r1;
    const auto& c = std::get<CarmaIsotropicKernel>(spec);
    double rate = -c.lambda[0];
    for (double l : c.lambda) rate = std::min(rate, -l);
    return rate;
}

void validate(const LevyDriverSpec& spec) {
    if (const auto* g = std::get_if<GaussianDriver>(&spec)) {
        if (!(g->sigma0 > 0.0)) throw std::invalid_argument("Gaussian driver requires sigma0 > 0");
        return;
    }
    const auto& cp = std::get<CompoundPoissonDriver>(spec);
    if (!(cp.rate > 0.0)) throw std::invalid_argument("compound Poisson intensity must be > 0");
    if (const auto* n = std::get_if<NormalJumps>(&cp.jumps)) {
        if (!(n->variance > 0.0)) throw std::invalid_argument("jump variance must be > 0");
    } else {
        if (!(std::get<TwoPointJumps>(cp.jumps).magnitude > 0.0))
            throw std::invalid_argument("two-point jump magnitude must be > 0");
    }
}

double driver_variance_rate(const LevyDriverSpec& spec) {
    if (const auto* g = std::get_if<GaussianDriver>(&spec)) return g->sigma0;
    const auto& cp = std::get<CompoundPoissonDriver>(spec);
    double jump_var = std::holds_alternative<NormalJumps>(cp.jumps)
                          ? std::get<NormalJumps>(cp.jumps).variance
                          : std::pow(std::get<TwoPointJumps>(cp.jumps).magnitude, 2);
    return cp.rate * jump_var;
}

FieldModel::FieldModel(KernelSpec kernel, LevyDriverSpec driver, double grid_step,
                       double truncation_radius, bool normalize)
    : kernel_(std::move(kernel)), driver_(std::move(driver)), normalize_(normalize) {
    validate(kernel_);
    validate(driver_);
    double rate = kernel_decay_rate(kernel_);
    radius_ = truncation_radius > 0.0 ? truncation_radius : std::max(5.0, std::log(1e8)) / rate;
    h_ = grid_step > 0.0 ? grid_step : 1.0 / (8.0 * rate);
    if (radius_ * rate < 5.0)
        throw std::invalid_argument("truncation radius below five e-folding lengths of the kernel");
    if (!(h_ > 0.0)) throw std::invalid_argument("grid step must be positive");
}

double FieldModel::truncated_kernel(double r) const {
    return r <= radius_ ? kernel_eval_radius(kernel_, r) : 0.0;
}

double FieldModel::overlap_integral(const Eigen::VectorXd& lag) const {
    int d = static_cast<int>(lag.size());
    const double tol = 1e-8;
    if (d == 1) {
        double x = lag[0];
        double a = std::min(-radius_, -radius_ - x);
        double b = std::max(radius_, radius_ - x);
        return adaptive_simpson(
            [&](double u) { return truncated_kernel(std::abs(u)) * truncated_kernel(std::abs(u + x)); },
            a, b, tol);
    }
    if (d == 2) {
        double x1 = lag[0], x2 = lag[1];
        double a1 = std::min(-radius_, -radius_ - x1), b1 = std::max(radius_, radius_ - x1);
        double a2 = std::min(-radius_, -radius_ - x2), b2 = std::max(radius_, radius_ - x2);
        double inner_tol = tol / (2.0 * (b1 - a1));
        return adaptive_simpson(
            [&](double u1) {
                return adaptive_simpson(
                    [&](double u2) {
                        double r1 = std::hypot(u1, u2);
                        double r2 = std::hypot(u1 + x1, u2 + x2);
                        return truncated_kernel(r1) * truncated_kernel(r2);
                    },
                    a2, b2, inner_tol);
            },
            a1, b1, tol / 2.0);
    }
    throw std::invalid_argument("covariance quadrature implemented for d <= 2");
}

double FieldModel::base_variance(int d) const {
    const double tol = 1e-8;
    // radial form of int thetaR(u)^2 du for isotropic kernels
    double surface;
    switch (d) {
        case 1: surface = 2.0; break;
        case 2: surface = 2.0 * M_PI; break;
        case 3: surface = 4.0 * M_PI; break;
        default: throw std::invalid_argument("base variance implemented for d <= 3");
    }
    double integral = adaptive_simpson(
        [&](double r) {
            double t = truncated_kernel(r);
            return t * t * std::pow(r, d - 1);
        },
        0.0, radius_, tol);
    return variance_rate() * surface * integral;
}

double FieldModel::covariance(const Eigen::VectorXd& lag) const {
    double c = variance_rate() * overlap_integral(lag);
    if (normalize_) c /= base_variance(static_cast<int>(lag.size()));
    return c;
}

namespace {

struct GridBox {
    Eigen::VectorXd lo;
    std::vector<long> cells;
    double h;
    long total = 1;
};

GridBox make_grid(const Eigen::VectorXd& A, double radius, double h) {
    GridBox g;
    int d = static_cast<int>(A.size());
    g.lo.resize(d);
    g.cells.resize(d);
    g.h = h;
    for (int j = 0; j < d; ++j) {
        g.lo[j] = -A[j] / 2.0 - radius;
        double span = A[j] + 2.0 * radius;
        g.cells[j] = static_cast<long>(std::ceil(span / h));
        g.total *= g.cells[j];
    }
    return g;
}

}  // namespace

Eigen::VectorXd FieldModel::simulate(const SiteSet& sites, std::uint64_t seed,
                                     std::uint64_t stream) const {
    if (sites.n < 1) throw std::invalid_argument("site set is empty");
    int d = static_cast<int>(sites.raw.cols());
    Philox rng(seed, stream);
    Eigen::VectorXd field = Eigen::VectorXd::Zero(sites.n);

    if (std::holds_alternative<GaussianDriver>(driver_)) {
        GridBox grid = make_grid(sites.A, radius_, h_);
        if (static_cast<std::size_t>(grid.total) > cell_budget)
            throw std::runtime_error("simulation grid exceeds cell budget (" +
                                     std::to_string(grid.total) + " cells)");
        double sd = std::sqrt(std::get<GaussianDriver>(driver_).sigma0 * std::pow(h_, d));
        std::vector<double> incr(static_cast<std::size_t>(grid.total));
        for (auto& w : incr) w = rng.normal() * sd;

        std::vector<long> stride(d, 1);
        for (int k = d - 2; k >= 0; --k) stride[k] = stride[k + 1] * grid.cells[k + 1];

#pragma omp parallel for schedule(static)
        for (long i = 0; i < sites.n; ++i) {
            std::vector<long> kmin(d), kmax(d), c(d);
            for (int j = 0; j < d; ++j) {
                double x = sites.raw(i, j);
                kmin[j] = std::max<long>(0, static_cast<long>(std::floor((x - radius_ - grid.lo[j]) / h_ - 0.5)));
                kmax[j] = std::min<long>(grid.cells[j] - 1,
                                         static_cast<long>(std::ceil((x + radius_ - grid.lo[j]) / h_ - 0.5)));
                c[j] = kmin[j];
            }
            double acc = 0.0;
            while (true) {
                double dist2 = 0.0;
                long flat = 0;
                for (int j = 0; j < d; ++j) {
                    double u = grid.lo[j] + (c[j] + 0.5) * h_;
                    double dx = sites.raw(i, j) - u;
                    dist2 += dx * dx;
                    flat += c[j] * stride[j];
                }
                double r = std::sqrt(dist2);
                if (r <= radius_) acc += kernel_eval_radius(kernel_, r) * incr[flat];
                int j = d - 1;
                while (j >= 0 && ++c[j] > kmax[j]) --j;
                if (j < 0) break;
                for (int m = j + 1; m < d; ++m) c[m] = kmin[m];
            }
            field[i] = acc;
        }
    } else {
        const auto& cp = std::get<CompoundPoissonDriver>(driver_);
        int dd = d;
        Eigen::VectorXd lo(dd), span(dd);
        double vol = 1.0;
        for (int j = 0; j < dd; ++j) {
            lo[j] = -sites.A[j] / 2.0 - radius_;
            span[j] = sites.A[j] + 2.0 * radius_;
            vol *= span[j];
        }
        long npts = rng.poisson(cp.rate * vol);
        Eigen::MatrixXd pts(npts, dd);
        Eigen::VectorXd jumps(npts);
        for (long k = 0; k < npts; ++k) {
            for (int j = 0; j < dd; ++j) pts(k, j) = lo[j] + rng.uniform() * span[j];
            if (const auto* nj = std::get_if<NormalJumps>(&cp.jumps))
                jumps[k] = rng.normal() * std::sqrt(nj->variance);
            else {
                double a = std::get<TwoPointJumps>(cp.jumps).magnitude;
                jumps[k] = rng.uniform() < 0.5 ? a : -a;
            }
        }

        // bucket jump points on a grid with cell edge R
        std::vector<long> nb(dd), stride(dd, 1);
        for (int j = 0; j < dd; ++j) nb[j] = std::max<long>(1, static_cast<long>(std::ceil(span[j] / radius_)));
        for (int k = dd - 2; k >= 0; --k) stride[k] = stride[k + 1] * nb[k + 1];
        long nbuckets = stride[0] * nb[0];
        std::vector<std::vector<long>> buckets(nbuckets);
        auto bucket_of = [&](const auto& row) {
            long flat = 0;
            for (int j = 0; j < dd; ++j) {
                long c = std::min<long>(nb[j] - 1, static_cast<long>((row[j] - lo[j]) / radius_));
                flat += c * stride[j];
            }
            return flat;
        };
        for (long k = 0; k < npts; ++k) buckets[bucket_of(pts.row(k))].push_back(k);

#pragma omp parallel for schedule(static)
        for (long i = 0; i < sites.n; ++i) {
            std::vector<long> cmin(dd), cmax(dd), c(dd);
            for (int j = 0; j < dd; ++j) {
                long cc = std::min<long>(nb[j] - 1, static_cast<long>((sites.raw(i, j) - lo[j]) / radius_));
                cmin[j] = std::max<long>(0, cc - 1);
                cmax[j] = std::min<long>(nb[j] - 1, cc + 1);
                c[j] = cmin[j];
            }
            double acc = 0.0;
            while (true) {
                long flat = 0;
                for (int j = 0; j < dd; ++j) flat += c[j] * stride[j];
                for (long k : buckets[flat]) {
                    double dist2 = 0.0;
                    for (int j = 0; j < dd; ++j) {
                        double dx = sites.raw(i, j) - pts(k, j);
                        dist2 += dx * dx;
                    }
                    double r = std::sqrt(dist2);
                    if (r <= radius_) acc += kernel_eval_radius(kernel_, r) * jumps[k];
                }
                int j = dd - 1;
                while (j >= 0 && ++c[j] > cmax[j]) --j;
                if (j < 0) break;
                for (int m = j + 1; m < dd; ++m) c[m] = cmin[m];
            }
            field[i] = acc;
        }
    }

    if (normalize_) field /= std::sqrt(base_variance(d));
    return field;
}

Eigen::VectorXd simulate_trend_data(const ScalarField& m0, const ScalarField& eta,
                                    const ScalarField& sigma_eps, const FieldModel& model,
                                    const SiteSet& sites, std::uint64_t seed, std::uint64_t stream) {
    Eigen::VectorXd e = model.simulate(sites, seed, stream);
    Philox noise(seed, stream + 1);
    Eigen::VectorXd y(sites.n);
    for (long i = 0; i < sites.n; ++i) {
        Eigen::VectorXd z = sites.scaled.row(i);
        double et = eta(z), sg = sigma_eps(z);
        if (!(et > 0.0)) throw std::invalid_argument("eta must be strictly positive on the cube");
        if (!(sg > 0.0)) throw std::invalid_argument("sigma_eps must be strictly positive on the cube");
        y[i] = m0(z) + et * e[i] + sg * noise.normal();
    }
    return y;
}

CovariateData simulate_covariate_data(const SurfaceField& m0, const SurfaceField& h_var,
                                      const std::vector<FieldModel>& x_models, const SiteSet& sites,
                                      std::uint64_t seed, std::uint64_t stream) {
    if (x_models.empty()) throw std::invalid_argument("at least one covariate field model required");
    long p = static_cast<long>(x_models.size());
    CovariateData out;
    out.X.resize(sites.n, p);
    for (long j = 0; j < p; ++j)
        out.X.col(j) = x_models[j].simulate(sites, seed, stream + 2 + static_cast<std::uint64_t>(j));
    Philox noise(seed, stream + 1);
    out.y.resize(sites.n);
    for (long i = 0; i < sites.n; ++i) {
        Eigen::VectorXd z = sites.scaled.row(i);
        Eigen::VectorXd x = out.X.row(i);
        double hv = h_var(z, x);
        if (!(hv > 0.0)) throw std::invalid_argument("variance function must be strictly positive");
        out.y[i] = m0(z, x) + hv * noise.normal();
    }
    return out;
}

namespace {

nlohmann::json kernel_json(const KernelSpec& k) {
    if (const auto* e = std::get_if<ExponentialKernel>(&k))
        return {{"type", "exponential"}, {"r0", e->r0}, {"r1", e->r1}};
    const auto& c = std::get<CarmaIsotropicKernel>(k);
    return {{"type", "carma_isotropic"}, {"lambda", c.lambda}, {"b_coeffs", c.b_coeffs}};
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
    if (j.at("type") == "exponential")
        return ExponentialKernel{j.at("r0").get<double>(), j.at("r1").get<double>()};
    return CarmaIsotropicKernel{j.at("lambda").get<std::vector<double>>(),
                                j.at("b_coeffs").get<std::vector<double>>()};
}

nlohmann::json driver_json(const LevyDriverSpec& dr) {
    if (const auto* g = std::get_if<GaussianDriver>(&dr))
        return {{"type", "gaussian"}, {"sigma0", g->sigma0}};
    const auto& cp = std::get<CompoundPoissonDriver>(dr);
    nlohmann::json jj;
    if (const auto* n = std::get_if<NormalJumps>(&cp.jumps))
        jj = {{"type", "normal"}, {"variance", n->variance}};
    else
        jj = {{"type", "two_point"}, {"magnitude", std::get<TwoPointJumps>(cp.jumps).magnitude}};
    return {{"type", "compound_poisson"}, {"rate", cp.rate}, {"jumps", jj}};
}

LevyDriverSpec driver_from_json(const nlohmann::json& j) {
    if (j.at("type") == "gaussian") return GaussianDriver{j.at("sigma0").get<double>()};
    const auto& jj = j.at("jumps");
    JumpDist jumps = jj.at("type") == "normal"
                         ? JumpDist{NormalJumps{jj.at("variance").get<double>()}}
                         : JumpDist{TwoPointJumps{jj.at("magnitude").get<double>()}};
    return CompoundPoissonDriver{j.at("rate").get<double>(), jumps};
}

}  // namespace

nlohmann::json FieldModel::to_json() const {
    return {{"kernel", kernel_json(kernel_)},
            {"driver", driver_json(driver_)},
            {"grid_step", h_},
            {"truncation_radius", radius_},
            {"normalize", normalize_}};
}

FieldModel FieldModel::from_json(const nlohmann::json& j) {
    return FieldModel(kernel_from_json(j.at("kernel")), driver_from_json(j.at("driver")),
                      j.at("grid_step").get<double>(), j.at("truncation_radius").get<double>(),
                      j.at("normalize").get<bool>());
}

}  // namespace serreg
