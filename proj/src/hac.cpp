#include "serreg/hac.hpp"

#include <cmath>
#include <vector>

#include "serreg/normal.hpp"

namespace serreg {

double bartlett_kernel(const Eigen::VectorXd& w, const Eigen::VectorXd& bandwidths) {
    double u2 = 0.0;
    for (int j = 0; j < w.size(); ++j) {
        double u = w[j] / bandwidths[j];
        u2 += u * u;
    }
    double u = std::sqrt(u2);
    return u < 1.0 ? 1.0 - u : 0.0;
}

Eigen::VectorXd default_bandwidths(const Eigen::VectorXd& A, double fraction) {
    return fraction * A;
}

namespace {

void check_hac_config(const RidgeFit& fit, const HacConfig& config) {
    if (fit.kind != ModelKind::Trend)
        throw std::invalid_argument("HAC long-run variance applies to trend-model fits");
    if (config.bandwidths.size() != fit.A.size())
        throw std::invalid_argument("one bandwidth per spatial dimension required");
    for (int j = 0; j < config.bandwidths.size(); ++j)
        if (!(config.bandwidths[j] > 0.0)) throw std::invalid_argument("bandwidths must be positive");
}

// Sparse basis rows at the design points.
struct SparseRows {
    std::vector<long> idx;
    std::vector<double> val;
    std::vector<int> count;
    int local;

    SparseRows(const TensorBasis& basis, const Eigen::MatrixXd& points,
               const Eigen::VectorXd* weights)
        : local(basis.local_size()) {
        long n = points.rows();
        idx.resize(static_cast<size_t>(n) * local);
        val.resize(static_cast<size_t>(n) * local);
        count.resize(n);
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) {
            Eigen::RowVectorXd pt = points.row(i);
            count[i] = basis.eval_sparse(pt.data(), &idx[i * local], &val[i * local]);
            if (weights && (*weights)[i] == 0.0)
                for (int a = 0; a < count[i]; ++a) val[i * local + a] = 0.0;
            else if (weights)
                for (int a = 0; a < count[i]; ++a) val[i * local + a] *= (*weights)[i];
        }
    }
};

void add_pair(const SparseRows& rows, long i, long j, double weight, Eigen::MatrixXd& C) {
    const long* ia = &rows.idx[i * rows.local];
    const double* va = &rows.val[i * rows.local];
    const long* ib = &rows.idx[j * rows.local];
    const double* vb = &rows.val[j * rows.local];
    for (int a = 0; a < rows.count[i]; ++a) {
        double wa = weight * va[a];
        for (int b = 0; b < rows.count[j]; ++b) C(ia[a], ib[b]) += wa * vb[b];
    }
}

Eigen::MatrixXd raw_sites(const RidgeFit& fit) {
    int d = static_cast<int>(fit.A.size());
    Eigen::MatrixXd raw = fit.design_points.leftCols(d);
    for (int j = 0; j < d; ++j) raw.col(j) *= fit.A[j];
    return raw;
}

VarianceEstimate finish_trend(const RidgeFit& fit, Eigen::MatrixXd C, const HacConfig& config,
                              bool empty_support) {
    double scale = fit.A.prod() / (static_cast<double>(fit.n) * fit.n);
    Eigen::MatrixXd g = fit.apply_inverse(fit.apply_inverse(C * scale).transpose()).transpose();
    VarianceEstimate out;
    out.g_hat = 0.5 * (g + g.transpose());  // symmetric exactly
    out.kind = ModelKind::Trend;
    out.has_hac = true;
    out.bandwidths = config.bandwidths;
    out.empty_support_warning = empty_support;
    return out;
}

}  // namespace

Eigen::MatrixXd hac_weighted_sum_bruteforce(const RidgeFit& fit, const Eigen::VectorXd& resid,
                                            const HacConfig& config) {
    check_hac_config(fit, config);
    long J = fit.basis.total_dimension();
    SparseRows rows(fit.basis, fit.design_points, fit.weights.size() ? &fit.weights : nullptr);
    Eigen::MatrixXd raw = raw_sites(fit);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(J, J);
    Eigen::VectorXd delta(raw.cols());
    for (long i = 0; i < fit.n; ++i)
        for (long j = 0; j < fit.n; ++j) {
            delta = raw.row(i) - raw.row(j);
            double k = bartlett_kernel(delta, config.bandwidths);
            if (k == 0.0) continue;
            add_pair(rows, i, j, k * resid[i] * resid[j], C);
        }
    return C;
}

VarianceEstimate hac_long_run_matrix(const RidgeFit& fit, const Eigen::VectorXd& y,
                                     const HacConfig& config) {
    check_hac_config(fit, config);
    Eigen::VectorXd resid = residuals(fit, y);
    long J = fit.basis.total_dimension();
    int d = static_cast<int>(fit.A.size());
    Eigen::MatrixXd raw = raw_sites(fit);
    SparseRows rows(fit.basis, fit.design_points, fit.weights.size() ? &fit.weights : nullptr);

    // uniform buckets with cell edge b_j; the elliptical kernel support fits
    // inside the 3^d neighborhood of a site's cell
    std::vector<long> nb(d), stride(d, 1);
    Eigen::VectorXd lo(d), edge(d);
    for (int j = 0; j < d; ++j) {
        lo[j] = raw.col(j).minCoeff();
        double span = raw.col(j).maxCoeff() - lo[j];
        nb[j] = std::max<long>(1, static_cast<long>(std::floor(span / config.bandwidths[j])) + 1);
    }
    // cap the bucket count; wider cells still cover the support via the
    // 3^d neighborhood because the edge only grows
    double total = 1.0;
    for (int j = 0; j < d; ++j) total *= static_cast<double>(nb[j]);
    double limit = 8.0 * static_cast<double>(fit.n) + 64.0;
    if (total > limit) {
        double shrink = std::pow(total / limit, 1.0 / d);
        for (int j = 0; j < d; ++j)
            nb[j] = std::max<long>(1, static_cast<long>(std::floor(nb[j] / shrink)));
    }
    for (int j = 0; j < d; ++j) {
        double span = raw.col(j).maxCoeff() - lo[j];
        edge[j] = std::max(config.bandwidths[j], span / static_cast<double>(nb[j]) + 1e-300);
    }
    for (int k = d - 2; k >= 0; --k) stride[k] = stride[k + 1] * nb[k + 1];
    long nbuckets = stride[0] * nb[0];
    std::vector<std::vector<long>> buckets(nbuckets);
    std::vector<long> cell_of(fit.n);
    for (long i = 0; i < fit.n; ++i) {
        long flat = 0;
        for (int j = 0; j < d; ++j) {
            long c = std::min<long>(nb[j] - 1, static_cast<long>((raw(i, j) - lo[j]) / edge[j]));
            flat += c * stride[j];
        }
        cell_of[i] = flat;
        buckets[flat].push_back(i);
    }

    const long nchunks = std::min<long>(nbuckets, 32);
    std::vector<Eigen::MatrixXd> partial(nchunks, Eigen::MatrixXd::Zero(J, J));
    std::vector<char> offdiag(nchunks, 0);
    long per = (nbuckets + nchunks - 1) / nchunks;

#pragma omp parallel for schedule(dynamic)
    for (long chunk = 0; chunk < nchunks; ++chunk) {
        Eigen::MatrixXd& C = partial[chunk];
        Eigen::VectorXd delta(d);
        std::vector<long> c(d), cmin(d), cmax(d);
        for (long cell = chunk * per; cell < std::min(nbuckets, (chunk + 1) * per); ++cell) {
            if (buckets[cell].empty()) continue;
            long rem = cell;
            for (int j = 0; j < d; ++j) {
                long cj = rem / stride[j];
                rem %= stride[j];
                cmin[j] = std::max<long>(0, cj - 1);
                cmax[j] = std::min<long>(nb[j] - 1, cj + 1);
                c[j] = cmin[j];
            }
            while (true) {
                long neighbor = 0;
                for (int j = 0; j < d; ++j) neighbor += c[j] * stride[j];
                for (long i : buckets[cell])
                    for (long jj : buckets[neighbor]) {
                        delta = raw.row(i) - raw.row(jj);
                        double k = bartlett_kernel(delta, config.bandwidths);
                        if (k == 0.0) continue;
                        if (i != jj) offdiag[chunk] = 1;
                        add_pair(rows, i, jj, k * resid[i] * resid[jj], C);
                    }
                int j = d - 1;
                while (j >= 0 && ++c[j] > cmax[j]) --j;
                if (j < 0) break;
                for (int m = j + 1; m < d; ++m) c[m] = cmin[m];
            }
        }
    }

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(J, J);
    for (long chunk = 0; chunk < nchunks; ++chunk) C += partial[chunk];  // fixed-order reduction
    bool any_offdiag = false;
    for (char f : offdiag) any_offdiag |= (f != 0);
    return finish_trend(fit, std::move(C), config, !any_offdiag && fit.n > 1);
}

namespace {

double bilinear(const RidgeFit& fit, const Eigen::MatrixXd& G, const Eigen::VectorXd& p1,
                const Eigen::VectorXd& p2) {
    int local = fit.basis.local_size();
    std::vector<long> i1(local), i2(local);
    std::vector<double> v1(local), v2(local);
    int c1 = fit.basis.eval_sparse(p1.data(), i1.data(), v1.data());
    int c2 = fit.basis.eval_sparse(p2.data(), i2.data(), v2.data());
    double acc = 0.0;
    for (int a = 0; a < c1; ++a)
        for (int b = 0; b < c2; ++b) acc += v1[a] * G(i1[a], i2[b]) * v2[b];
    return acc;
}

}  // namespace

double omega_hat(const RidgeFit& fit, const VarianceEstimate& var, const Eigen::VectorXd& z1,
                 const Eigen::VectorXd& z2) {
    if (fit.kind != ModelKind::Trend || var.kind != ModelKind::Trend)
        throw std::invalid_argument("omega_hat applies to trend-model fits");
    return bilinear(fit, var.g_hat, z1, z2);
}

VarianceEstimate covariate_variance(const RidgeFit& fit, const Eigen::VectorXd& y) {
    if (fit.kind != ModelKind::Covariate)
        throw std::invalid_argument("covariate_variance applies to covariate-model fits");
    Eigen::VectorXd resid = residuals(fit, y);
    long J = fit.basis.total_dimension();
    SparseRows rows(fit.basis, fit.design_points, fit.weights.size() ? &fit.weights : nullptr);
    Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(J, J);
    for (long i = 0; i < fit.n; ++i) add_pair(rows, i, i, resid[i] * resid[i], inner);
    inner /= static_cast<double>(fit.n);
    Eigen::MatrixXd core = fit.apply_inverse(fit.apply_inverse(inner).transpose()).transpose();
    VarianceEstimate out;
    out.g_hat = 0.5 * (core + core.transpose());
    out.kind = ModelKind::Covariate;
    return out;
}

double v_hat(const RidgeFit& fit, const VarianceEstimate& var, const Eigen::VectorXd& zx1,
             const Eigen::VectorXd& zx2) {
    if (fit.kind != ModelKind::Covariate || var.kind != ModelKind::Covariate)
        throw std::invalid_argument("v_hat applies to covariate-model fits");
    int d = static_cast<int>(fit.A.size());
    int p = fit.basis.dims() - d;
    double w1 = p == 0 || fit.weight_region.contains(zx1.tail(p)) ? 1.0 : 0.0;
    double w2 = p == 0 || fit.weight_region.contains(zx2.tail(p)) ? 1.0 : 0.0;
    if (w1 == 0.0 || w2 == 0.0) return 0.0;
    return bilinear(fit, var.g_hat, zx1, zx2);
}

ConfidenceBand confidence_band(const RidgeFit& fit, const VarianceEstimate& var,
                               const Eigen::MatrixXd& grid, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0, 1)");
    if (fit.kind != var.kind) throw std::invalid_argument("fit and variance estimate model kinds differ");

    double q = normal_quantile(0.5 + level / 2.0);
    double divider = fit.kind == ModelKind::Trend ? fit.A.prod() : static_cast<double>(fit.n);
    double vtol = 1e-8 * (1.0 + var.g_hat.cwiseAbs().maxCoeff()) / divider;

    ConfidenceBand band;
    band.points = grid;
    band.level = level;
    band.estimate = predict(fit, grid);
    band.se.resize(grid.rows());
    for (long i = 0; i < grid.rows(); ++i) {
        Eigen::VectorXd z = grid.row(i);
        double v = (fit.kind == ModelKind::Trend ? omega_hat(fit, var, z, z) : v_hat(fit, var, z, z)) /
                   divider;
        if (v < -vtol)
            throw std::runtime_error("variance estimate negative beyond tolerance at a grid point");
        if (v < 0.0) {
            v = 0.0;
            ++band.clamped;
        }
        band.se[i] = std::sqrt(v);
    }
    band.lower = band.estimate - q * band.se;
    band.upper = band.estimate + q * band.se;
    return band;
}

}  // namespace serreg
