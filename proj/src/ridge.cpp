#include "serreg/ridge.hpp"

#include <cmath>
#include <vector>

namespace serreg {

namespace {

void accumulate_rows(const TensorBasis& basis, const Eigen::MatrixXd& points,
                     const Eigen::VectorXd& y, const Eigen::VectorXd* weights, long row_begin,
                     long row_end, Eigen::MatrixXd& gram, Eigen::VectorXd& moment) {
    int local = basis.local_size();
    std::vector<long> idx(local);
    std::vector<double> val(local);
    Eigen::RowVectorXd pt(points.cols());
    for (long i = row_begin; i < row_end; ++i) {
        double w = weights ? (*weights)[i] : 1.0;
        if (w == 0.0) continue;
        pt = points.row(i);
        int count = basis.eval_sparse(pt.data(), idx.data(), val.data());
        for (int a = 0; a < count; ++a) {
            double va = w * val[a];
            moment[idx[a]] += va * y[i];
            for (int b = 0; b < count; ++b) gram(idx[a], idx[b]) += va * w * val[b];
        }
    }
}

}  // namespace

void assemble_normal_equations_serial(const TensorBasis& basis, const Eigen::MatrixXd& points,
                                      const Eigen::VectorXd& y, const Eigen::VectorXd* weights,
                                      Eigen::MatrixXd& gram, Eigen::VectorXd& moment) {
    long J = basis.total_dimension();
    long n = points.rows();
    gram = Eigen::MatrixXd::Zero(J, J);
    moment = Eigen::VectorXd::Zero(J);
    accumulate_rows(basis, points, y, weights, 0, n, gram, moment);
    gram /= static_cast<double>(n);
    moment /= static_cast<double>(n);
}

void assemble_normal_equations(const TensorBasis& basis, const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& y, const Eigen::VectorXd* weights,
                               Eigen::MatrixXd& gram, Eigen::VectorXd& moment) {
    long J = basis.total_dimension();
    long n = points.rows();
    const long chunk = 2048;
    long nchunks = (n + chunk - 1) / chunk;
    if (nchunks <= 1) {
        assemble_normal_equations_serial(basis, points, y, weights, gram, moment);
        return;
    }
    std::vector<Eigen::MatrixXd> pg(nchunks);
    std::vector<Eigen::VectorXd> pm(nchunks);
#pragma omp parallel for schedule(dynamic)
    for (long c = 0; c < nchunks; ++c) {
        pg[c] = Eigen::MatrixXd::Zero(J, J);
        pm[c] = Eigen::VectorXd::Zero(J);
        accumulate_rows(basis, points, y, weights, c * chunk, std::min(n, (c + 1) * chunk), pg[c],
                        pm[c]);
    }
    gram = Eigen::MatrixXd::Zero(J, J);
    moment = Eigen::VectorXd::Zero(J);
    for (long c = 0; c < nchunks; ++c) {  // fixed-order reduction
        gram += pg[c];
        moment += pm[c];
    }
    gram /= static_cast<double>(n);
    moment /= static_cast<double>(n);
}

namespace {

RidgeFit solve_fit(RidgeFit fit, const Eigen::VectorXd& y) {
    long J = fit.basis.total_dimension();
    if (y.size() != fit.n) throw std::invalid_argument("response length must equal site count");
    if (!y.allFinite()) throw std::invalid_argument("response contains NaN or infinite values");
    if (fit.penalty < 0.0) throw std::invalid_argument("ridge penalty must be >= 0");
    if (fit.penalty == 0.0 && J > fit.n)
        throw std::invalid_argument("unpenalized fit requires J <= n");

    assemble_normal_equations(fit.basis, fit.design_points, y,
                              fit.weights.size() ? &fit.weights : nullptr, fit.gram, fit.moment);

    Eigen::MatrixXd reg = fit.gram;
    reg.diagonal().array() += fit.penalty;
    fit.factor.compute(reg);
    if (fit.factor.info() != Eigen::Success)
        throw SingularGramError("normal-equation factorization failed; try penalty > 0");
    if (fit.penalty == 0.0) {
        double dmax = fit.factor.vectorD().maxCoeff();
        double dmin = fit.factor.vectorD().minCoeff();
        if (!(dmin > 1e-12 * dmax))
            throw SingularGramError("Gram matrix is numerically rank-deficient; use penalty > 0");
    }
    fit.beta = fit.factor.solve(fit.moment);

    double resid = (reg * fit.beta - fit.moment).norm();
    if (resid > 1e-8 * (1.0 + fit.moment.norm()))
        throw SingularGramError("normal-equation solve did not converge (residual " +
                                std::to_string(resid) + ")");
    return fit;
}

}  // namespace

RidgeFit fit_trend(const SiteSet& sites, const Eigen::VectorXd& y, TensorBasis basis,
                   double penalty) {
    if (basis.dims() != sites.scaled.cols())
        throw std::invalid_argument("basis dimension must match site dimension");
    RidgeFit fit{std::move(basis)};
    fit.kind = ModelKind::Trend;
    fit.penalty = penalty;
    fit.n = sites.n;
    fit.A = sites.A;
    fit.offset = Eigen::VectorXd::Zero(sites.A.size());
    fit.design_points = sites.scaled;
    return solve_fit(std::move(fit), y);
}

RidgeFit fit_covariate(const SiteSet& sites, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       TensorBasis basis, const Rect& weight_region, double penalty) {
    int d = static_cast<int>(sites.scaled.cols());
    int p = static_cast<int>(X.cols());
    if (basis.dims() != d + p)
        throw std::invalid_argument("basis must span site dimensions plus covariates");
    if (p > 0 && X.rows() != sites.n)
        throw std::invalid_argument("covariate rows must equal site count");
    if (p > 0 && !X.allFinite()) throw std::invalid_argument("covariates contain NaN");

    RidgeFit fit{std::move(basis)};
    fit.kind = ModelKind::Covariate;
    fit.penalty = penalty;
    fit.n = sites.n;
    fit.A = sites.A;
    fit.offset = Eigen::VectorXd::Zero(sites.A.size());
    fit.weight_region = weight_region;

    // standardize each covariate's observed [min, max] onto [-1/2, 1/2]
    fit.x_map.scale.resize(p);
    fit.x_map.shift.resize(p);
    for (int j = 0; j < p; ++j) {
        double lo = X.col(j).minCoeff(), hi = X.col(j).maxCoeff();
        double span = hi - lo;
        fit.x_map.shift[j] = 0.5 * (lo + hi);
        fit.x_map.scale[j] = span > 0.0 ? 1.0 / span : 1.0;
    }

    fit.design_points.resize(sites.n, d + p);
    fit.design_points.leftCols(d) = sites.scaled;
    fit.weights = Eigen::VectorXd::Ones(sites.n);
    for (long i = 0; i < sites.n; ++i) {
        Eigen::VectorXd xs = fit.x_map.apply(X.row(i));
        fit.design_points.row(i).tail(p) = xs;
        if (p > 0 && !weight_region.contains(xs)) fit.weights[i] = 0.0;
    }
    if (p > 0 && fit.weights.sum() == 0.0)
        throw std::invalid_argument("all rows fall outside the weight region");
    return solve_fit(std::move(fit), y);
}

Eigen::VectorXd predict(const RidgeFit& fit, const Eigen::MatrixXd& points) {
    if (points.cols() != fit.basis.dims())
        throw std::invalid_argument("prediction points have wrong dimension");
    int local = fit.basis.local_size();
    Eigen::VectorXd out(points.rows());
    std::vector<long> idx(local);
    std::vector<double> val(local);
    Eigen::RowVectorXd pt(points.cols());
    for (long i = 0; i < points.rows(); ++i) {
        pt = points.row(i);
        if (!fit.basis.contains(std::span<const double>(pt.data(), static_cast<size_t>(pt.size()))))
            throw std::domain_error("prediction point outside basis domain (no extrapolation)");
        int count = fit.basis.eval_sparse(pt.data(), idx.data(), val.data());
        double acc = 0.0;
        for (int a = 0; a < count; ++a) acc += val[a] * fit.beta[idx[a]];
        out[i] = acc;
    }
    return out;
}

Eigen::VectorXd residuals(const RidgeFit& fit, const Eigen::VectorXd& y) {
    if (y.size() != fit.n) throw std::invalid_argument("response length mismatch");
    Eigen::VectorXd fitted = predict(fit, fit.design_points);
    if (fit.weights.size()) fitted = fitted.cwiseProduct(fit.weights);
    return y - fitted;
}

GramDiagnostics gram_diagnostics(const RidgeFit& fit, const Eigen::MatrixXd& probe_grid) {
    if (probe_grid.rows() == 0) throw std::invalid_argument("probe grid must be nonempty");
    GramDiagnostics out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.gram, Eigen::EigenvaluesOnly);
    out.min_eig = es.eigenvalues().minCoeff();
    out.max_eig = es.eigenvalues().maxCoeff();
    out.condition = out.min_eig > 0.0 ? out.max_eig / out.min_eig
                                      : std::numeric_limits<double>::infinity();
    out.lambda_hat = out.min_eig > 0.0 ? 1.0 / std::sqrt(out.min_eig)
                                       : std::numeric_limits<double>::infinity();
    int local = fit.basis.local_size();
    std::vector<long> idx(local);
    std::vector<double> val(local);
    Eigen::RowVectorXd pt(probe_grid.cols());
    for (long i = 0; i < probe_grid.rows(); ++i) {
        pt = probe_grid.row(i);
        int count = fit.basis.eval_sparse(pt.data(), idx.data(), val.data());
        double norm2 = 0.0;
        for (int a = 0; a < count; ++a) norm2 += val[a] * val[a];
        out.zeta_hat = std::max(out.zeta_hat, std::sqrt(norm2));
    }
    return out;
}

nlohmann::json RidgeFit::to_json() const {
    nlohmann::json j{{"schema_version", 1},
                     {"model_kind", kind == ModelKind::Trend ? "trend" : "covariate"},
                     {"basis", basis.to_json()},
                     {"penalty", penalty},
                     {"n", n},
                     {"A", std::vector<double>(A.data(), A.data() + A.size())},
                     {"offset", std::vector<double>(offset.data(), offset.data() + offset.size())},
                     {"beta", std::vector<double>(beta.data(), beta.data() + beta.size())}};
    if (kind == ModelKind::Covariate) {
        j["x_map"] = {{"scale", std::vector<double>(x_map.scale.data(),
                                                    x_map.scale.data() + x_map.scale.size())},
                      {"shift", std::vector<double>(x_map.shift.data(),
                                                    x_map.shift.data() + x_map.shift.size())}};
        j["weight_region"] = {
            {"lo", std::vector<double>(weight_region.lo.data(),
                                       weight_region.lo.data() + weight_region.lo.size())},
            {"hi", std::vector<double>(weight_region.hi.data(),
                                       weight_region.hi.data() + weight_region.hi.size())}};
    }
    return j;
}

}  // namespace serreg
