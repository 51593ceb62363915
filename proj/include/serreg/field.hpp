#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include <json.hpp>

#include "serreg/sites.hpp"

namespace serreg {

// theta(x) = r0 * exp(-r1 * ||x||)
struct ExponentialKernel {
    double r0 = 1.0;
    double r1 = 1.0;
};

// Isotropic CARMA(p0, q0) kernel: theta(x) = sum_i b(lambda_i)/a'(lambda_i) * exp(lambda_i ||x||)
// with a(z) = prod_i (z^2 - lambda_i^2) and b a polynomial of degree < p0
// given by ascending coefficients.
struct CarmaIsotropicKernel {
    std::vector<double> lambda;    // distinct negative autoregressive roots
    std::vector<double> b_coeffs;  // ascending coefficients of b(z)

    double weight(int i) const;  // b(lambda_i) / a'(lambda_i)
};

using KernelSpec = std::variant<ExponentialKernel, CarmaIsotropicKernel>;

void validate(const KernelSpec& spec);
double kernel_eval_radius(const KernelSpec& spec, double r);
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x);
// Slowest exponential decay rate; sets truncation radius and grid step.
double kernel_decay_rate(const KernelSpec& spec);

struct GaussianDriver {
    double sigma0 = 1.0;  // variance rate, triplet (0, sigma0, 0)
};

struct NormalJumps {
    double variance = 1.0;
};
struct TwoPointJumps {
    double magnitude = 1.0;  // jumps are +/- magnitude with equal probability
};
using JumpDist = std::variant<NormalJumps, TwoPointJumps>;

struct CompoundPoissonDriver {
    double rate = 1.0;
    JumpDist jumps = NormalJumps{};
};

using LevyDriverSpec = std::variant<GaussianDriver, CompoundPoissonDriver>;

void validate(const LevyDriverSpec& spec);
double driver_variance_rate(const LevyDriverSpec& spec);  // sigma0 or rate * jump variance

// Stationary moving-average field e(x) = int theta(x-u) L(du), simulated by
// discretizing the driving measure on a regular grid (Gaussian case) or by
// drawing the jump point process directly (compound Poisson case). The
// kernel is truncated at radius R in both simulation and covariance so the
// two stay consistent.
class FieldModel {
public:
    FieldModel(KernelSpec kernel, LevyDriverSpec driver, double grid_step = 0.0,
               double truncation_radius = 0.0, bool normalize = false);

    const KernelSpec& kernel() const { return kernel_; }
    const LevyDriverSpec& driver() const { return driver_; }
    double grid_step() const { return h_; }
    double truncation_radius() const { return radius_; }
    bool normalized() const { return normalize_; }
    double variance_rate() const { return driver_variance_rate(driver_); }

    // sigma_e(lag) by adaptive quadrature (abs tol 1e-8); divided by
    // sigma_e(0) when the model is normalized.
    double covariance(const Eigen::VectorXd& lag) const;

    // Unnormalized lag-0 variance in dimension d.
    double base_variance(int d) const;

    Eigen::VectorXd simulate(const SiteSet& sites, std::uint64_t seed, std::uint64_t stream = 0) const;

    nlohmann::json to_json() const;
    static FieldModel from_json(const nlohmann::json& j);

    std::size_t cell_budget = 50'000'000;

private:
    double truncated_kernel(double r) const;
    double overlap_integral(const Eigen::VectorXd& lag) const;  // int thetaR(u) thetaR(u+lag) du

    KernelSpec kernel_;
    LevyDriverSpec driver_;
    double h_;
    double radius_;
    bool normalize_;
};

using ScalarField = std::function<double(const Eigen::VectorXd&)>;
using SurfaceField = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Y_i = m0(S_i/A) + eta(S_i/A) e(S_i) + sigma_eps(S_i/A) eps_i, eps iid N(0,1).
// Field and noise use sub-streams stream and stream+1.
Eigen::VectorXd simulate_trend_data(const ScalarField& m0, const ScalarField& eta,
                                    const ScalarField& sigma_eps, const FieldModel& model,
                                    const SiteSet& sites, std::uint64_t seed,
                                    std::uint64_t stream = 0);

struct CovariateData {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;  // n x p
};

// X_j simulated as independent fields; Y_i = m0(S_i/A, X_i) + h(S_i/A, X_i) eps_i.
CovariateData simulate_covariate_data(const SurfaceField& m0, const SurfaceField& h_var,
                                      const std::vector<FieldModel>& x_models, const SiteSet& sites,
                                      std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace serreg
