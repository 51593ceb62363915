#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "serreg/field.hpp"

namespace serreg {

enum class RateMode { Sup, L2 };

// J selection rules: J ~ scale * A^{d/(2r+d)} (L2) or
// scale * (A/log n)^{d/(2r+d)} (sup), rounded to the nearest achievable
// tensor dimension with per-dimension factors >= degree+1.
long select_J(double A, long n, double r, int d, RateMode mode, double scale, int degree);

struct Rung {
    double A = 0.0;  // per-dimension scale (isotropic ladder)
    long n = 0;
    long J = 0;  // 0: apply the selection rule
};

struct TrendStudyModel {
    double eta = 0.5;
    double sigma_eps = 0.5;
    double r0 = 1.0, r1 = 1.0;  // exponential kernel
    double sigma0 = 1.0;        // Gaussian driver
};

struct RateStudyConfig {
    int d = 1;
    double r = 2.0;
    int degree = 3;
    RateMode mode = RateMode::L2;
    double j_scale = 2.0;
    std::vector<Rung> ladder;
    int replications = 200;
    double penalty_scale = 0.5;  // penalty = penalty_scale / n
    std::uint64_t seed = 1;
    TrendStudyModel model;
    std::string truth = "default";  // default | linear | constant
    int grid_points = 200;          // per dimension, capped at 2 dimensions

    nlohmann::json to_json() const;
    static RateStudyConfig from_json(const nlohmann::json& j);
};

struct RungResult {
    double A = 0.0;
    long n = 0, J = 0;
    double mean_sup = 0.0, se_sup = 0.0;
    double mean_l2 = 0.0, se_l2 = 0.0;
};

struct PointResult {
    Eigen::VectorXd point;
    double coverage = 0.0;
    double mean_width = 0.0;
};

struct StudyResult {
    std::vector<RungResult> rungs;
    double slope = 0.0, slope_se = 0.0;
    std::vector<PointResult> points;  // coverage studies
    nlohmann::json provenance;
};

StudyResult run_rate_study(const RateStudyConfig& config);

struct CoverageStudyConfig {
    int d = 1;
    double A = 2000.0;
    long n = 2000;
    long J = 0;  // 0: L2 selection rule
    int degree = 3;
    double r = 2.0;
    double j_scale = 2.0;
    int replications = 500;
    double level = 0.95;
    Eigen::MatrixXd points;  // rows are target points in the cube
    double bandwidth = 10.0;  // absolute, per dimension
    double penalty_scale = 0.5;
    std::uint64_t seed = 1;
    TrendStudyModel model;
    std::string truth = "default";

    nlohmann::json to_json() const;
    static CoverageStudyConfig from_json(const nlohmann::json& j);
};

StudyResult run_coverage_study(const CoverageStudyConfig& config);

// Covariate-model study: m0(z, x) = sin(2 pi z) + x^2 with p = 1 spatially
// dependent covariate and conditionally i.i.d. errors.
struct CovariateStudyConfig {
    std::vector<long> ns = {500, 2000, 8000};
    int rate_replications = 100;
    int coverage_replications = 500;
    long coverage_n = 2000;
    double level = 0.95;
    double r = 2.0;
    int degree = 3;
    double j_scale = 2.0;
    double h_const = 0.5;  // constant conditional sd
    double penalty_scale = 0.5;
    std::uint64_t seed = 1;
    Eigen::MatrixXd points;  // (z, x_raw) coverage targets
};

struct CovariateStudyResult {
    std::vector<long> ns, Js;
    std::vector<double> l2_errors;
    std::vector<PointResult> points;
};

CovariateStudyResult run_covariate_study(const CovariateStudyConfig& config);

double truth_value(const std::string& truth, const Eigen::VectorXd& z);

}  // namespace serreg
