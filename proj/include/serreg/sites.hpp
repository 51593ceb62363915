#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace serreg {

struct OutOfRegionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Polynomial marginal density on [-1/2, 1/2], known only up to a constant.
// The sup bound is a certified upper envelope (grid max plus a Lipschitz
// margin), so rejection sampling from the uniform envelope is exact.
struct MarginalPoly {
    std::vector<double> coeffs;  // ascending powers of z

    double eval(double z) const;
    double sup_bound() const;
    double min_on_grid() const;
};

struct Density {
    bool uniform = true;
    std::vector<MarginalPoly> marginals;  // one per dimension when not uniform

    double eval(const Eigen::VectorXd& z) const;
};

struct SamplingDesign {
    int d = 1;
    Eigen::VectorXd A;  // region scales, R_n = prod_j [-A_j/2, A_j/2]
    Density g;

    void validate() const;
};

struct SiteSet {
    Eigen::MatrixXd raw;     // n x d, coordinates in R_n
    Eigen::MatrixXd scaled;  // n x d, coordinates in [-1/2, 1/2]^d
    Eigen::VectorXd A;
    long n = 0;
};

SiteSet draw_sites(const SamplingDesign& design, long n, std::uint64_t seed, std::uint64_t stream = 0);

SiteSet rescale_sites(const Eigen::MatrixXd& raw, const Eigen::VectorXd& A);

struct InferredRegion {
    Eigen::VectorXd A;
    Eigen::VectorXd offset;  // componentwise midrange subtracted before scaling
};

InferredRegion infer_region(const Eigen::MatrixXd& raw, double margin_fraction);

}  // namespace serreg
