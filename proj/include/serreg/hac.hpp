#pragma once

#include <Eigen/Dense>

#include "serreg/ridge.hpp"

namespace serreg {

enum class HacKernel { Bartlett };

struct HacConfig {
    Eigen::VectorXd bandwidths;  // one positive b_j per spatial dimension
    HacKernel kernel = HacKernel::Bartlett;
};

struct VarianceEstimate {
    Eigen::MatrixXd g_hat;  // long-run sandwich for the trend model; H-core for covariate
    ModelKind kind = ModelKind::Trend;
    bool has_hac = false;
    Eigen::VectorXd bandwidths;
    bool empty_support_warning = false;  // no off-diagonal pairs inside the kernel support
};

struct ConfidenceBand {
    Eigen::MatrixXd points;
    Eigen::VectorXd estimate, se, lower, upper;
    double level = 0.95;
    long clamped = 0;  // points whose slightly negative variance was clamped to 0
};

double bartlett_kernel(const Eigen::VectorXd& w, const Eigen::VectorXd& bandwidths);

// Serial O(n^2) reference for the kernel-weighted residual cross-product sum
// C = sum_{i,j} psi_i psi_j' r_i r_j Kbar_b(S_i - S_j). Oracle for the
// bucketed version.
Eigen::MatrixXd hac_weighted_sum_bruteforce(const RidgeFit& fit, const Eigen::VectorXd& resid,
                                            const HacConfig& config);

// G_hat = (A_n / n^2) * M C M with M = (Psi'Psi/n + penalty I)^{-1}; the pair
// sum is restricted to the kernel's support via uniform spatial bucketing and
// parallelized over buckets with fixed-order reduction.
VarianceEstimate hac_long_run_matrix(const RidgeFit& fit, const Eigen::VectorXd& y,
                                     const HacConfig& config);

// Omega_hat(z1, z2) = psi(z1)' G_hat psi(z2) (trend model).
double omega_hat(const RidgeFit& fit, const VarianceEstimate& var, const Eigen::VectorXd& z1,
                 const Eigen::VectorXd& z2);

// Sandwich core for the covariate model:
// (1/n) sum_i M b_i b_i' M r_i^2; V_hat is the bilinear form in it.
VarianceEstimate covariate_variance(const RidgeFit& fit, const Eigen::VectorXd& y);

double v_hat(const RidgeFit& fit, const VarianceEstimate& var, const Eigen::VectorXd& zx1,
             const Eigen::VectorXd& zx2);

// Pointwise intervals: estimate +/- q_{(1+level)/2} * se with
// se^2 = Omega_hat(z)/A_n (trend) or V_hat(z,x)/n (covariate).
ConfidenceBand confidence_band(const RidgeFit& fit, const VarianceEstimate& var,
                               const Eigen::MatrixXd& grid, double level);

Eigen::VectorXd default_bandwidths(const Eigen::VectorXd& A, double fraction = 0.1);

}  // namespace serreg
