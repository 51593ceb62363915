#include "serreg/sites.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "serreg/rng.hpp"

namespace serreg {

double MarginalPoly::eval(double z) const {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
    return acc;
}

double MarginalPoly::sup_bound() const {
    const int kGrid = 4096;
    double maxv = 0.0;
    for (int i = 0; i <= kGrid; ++i) {
        double z = -0.5 + static_cast<double>(i) / kGrid;
        maxv = std::max(maxv, eval(z));
    }
    // |p'| <= sum_i i*|c_i| (1/2)^(i-1) on the interval
    double lip = 0.0;
    for (size_t i = 1; i < coeffs.size(); ++i)
        lip += i * std::abs(coeffs[i]) * std::pow(0.5, static_cast<double>(i - 1));
    return maxv + lip * (1.0 / kGrid) / 2.0;
}

double MarginalPoly::min_on_grid() const {
    const int kGrid = 4096;
    double minv = eval(-0.5);
    for (int i = 1; i <= kGrid; ++i) {
        double z = -0.5 + static_cast<double>(i) / kGrid;
        minv = std::min(minv, eval(z));
    }
    return minv;
}

double Density::eval(const Eigen::VectorXd& z) const {
    if (uniform) return 1.0;
    double acc = 1.0;
    for (int k = 0; k < z.size(); ++k) acc *= marginals[k].eval(z[k]);
    return acc;
}

void SamplingDesign::validate() const {
    if (d < 1) throw std::invalid_argument("dimension must be >= 1");
    if (A.size() != d) throw std::invalid_argument("region scale vector length must equal dimension");
    for (int j = 0; j < d; ++j)
        if (!(A[j] > 0.0)) throw std::invalid_argument("region scales must be positive");
    if (!g.uniform) {
        if (static_cast<int>(g.marginals.size()) != d)
            throw std::invalid_argument("density needs one marginal per dimension");
        for (const auto& m : g.marginals)
            if (!(m.min_on_grid() > 0.0))
                throw std::invalid_argument("density marginal must be bounded away from zero on the cube");
    }
}

SiteSet draw_sites(const SamplingDesign& design, long n, std::uint64_t seed, std::uint64_t stream) {
    design.validate();
    if (n < 1) throw std::invalid_argument("site count must be >= 1");

    Philox rng(seed, stream);
    int d = design.d;
    SiteSet out;
    out.A = design.A;
    out.n = n;
    out.raw.resize(n, d);
    out.scaled.resize(n, d);

    double sup = 1.0;
    if (!design.g.uniform)
        for (const auto& m : design.g.marginals) sup *= m.sup_bound();

    Eigen::VectorXd z(d);
    for (long i = 0; i < n; ++i) {
        while (true) {
            for (int k = 0; k < d; ++k) z[k] = rng.uniform() - 0.5;
            if (design.g.uniform) break;
            double u = rng.uniform();
            if (u * sup <= design.g.eval(z)) break;
        }
        for (int k = 0; k < d; ++k) {
            out.scaled(i, k) = z[k];
            out.raw(i, k) = z[k] * design.A[k];
        }
    }
    return out;
}

SiteSet rescale_sites(const Eigen::MatrixXd& raw, const Eigen::VectorXd& A) {
    int d = static_cast<int>(raw.cols());
    if (A.size() != d) throw std::invalid_argument("scale vector length must equal site dimension");
    for (int j = 0; j < d; ++j)
        if (!(A[j] > 0.0)) throw std::invalid_argument("region scales must be positive");

    std::vector<long> offending;
    for (long i = 0; i < raw.rows(); ++i)
        for (int j = 0; j < d; ++j) {
            double tol = 1e-12 * A[j];
            if (raw(i, j) < -A[j] / 2 - tol || raw(i, j) > A[j] / 2 + tol) {
                offending.push_back(i);
                break;
            }
        }
    if (!offending.empty()) {
        std::ostringstream msg;
        msg << "sites outside region at rows:";
        for (size_t k = 0; k < offending.size() && k < 20; ++k) msg << ' ' << offending[k];
        if (offending.size() > 20) msg << " (+" << offending.size() - 20 << " more)";
        throw OutOfRegionError(msg.str());
    }

    SiteSet out;
    out.raw = raw;
    out.A = A;
    out.n = raw.rows();
    out.scaled = raw;
    for (int j = 0; j < d; ++j) {
        out.scaled.col(j) /= A[j];
        // guard against rounding just past the cube boundary
        out.scaled.col(j) = out.scaled.col(j).cwiseMax(-0.5).cwiseMin(0.5);
    }
    return out;
}

InferredRegion infer_region(const Eigen::MatrixXd& raw, double margin_fraction) {
    if (raw.rows() < 2) throw std::invalid_argument("region inference needs at least two sites");
    if (margin_fraction < 0.0) throw std::invalid_argument("margin fraction must be >= 0");

    int d = static_cast<int>(raw.cols());
    InferredRegion out;
    out.A.resize(d);
    out.offset.resize(d);
    for (int j = 0; j < d; ++j) {
        double lo = raw.col(j).minCoeff();
        double hi = raw.col(j).maxCoeff();
        if (!(hi > lo)) throw std::invalid_argument("all sites identical in dimension " + std::to_string(j));
        out.offset[j] = 0.5 * (lo + hi);  // midrange keeps the cube bound tight
        out.A[j] = (1.0 + margin_fraction) * (hi - lo);
    }
    return out;
}

}  // namespace serreg
