// Timing comparison of the OpenMP kernels against their serial references:
// normal-equation assembly and the HAC kernel-weighted pair sum.

#include <chrono>
#include <cstdio>

#include <omp.h>

#include "serreg/field.hpp"
#include "serreg/hac.hpp"
#include "serreg/ridge.hpp"
#include "serreg/rng.hpp"
#include "serreg/sites.hpp"
#include "serreg/study.hpp"

using namespace serreg;

namespace {

template <typename F>
double time_best_of(int reps, F&& body) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        body();
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

}  // namespace

int main() {
    const long n = 6000;
    const int d = 2;
    Eigen::VectorXd A(2);
    A << 102.0, 74.0;
    SamplingDesign design{d, A, Density{}};
    SiteSet sites = draw_sites(design, n, 42, 0);

    FieldModel field(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0}, 0.0, 0.0, true);
    auto m0 = [](const Eigen::VectorXd& z) { return truth_value("default", z); };
    auto one = [](const Eigen::VectorXd&) { return 0.5; };
    Eigen::VectorXd y = simulate_trend_data(m0, one, one, field, sites, 42, 16);

    TensorBasis basis = TensorBasis::with_total_dimension(d, 3, 900);
    std::printf("n=%ld  J=%ld  threads=%d\n\n", n, basis.total_dimension(), omp_get_max_threads());

    Eigen::MatrixXd gram_s, gram_p;
    Eigen::VectorXd mom_s, mom_p;
    double t_serial = time_best_of(3, [&] {
        assemble_normal_equations_serial(basis, sites.scaled, y, nullptr, gram_s, mom_s);
    });
    double t_parallel = time_best_of(3, [&] {
        assemble_normal_equations(basis, sites.scaled, y, nullptr, gram_p, mom_p);
    });
    double gram_diff = (gram_s - gram_p).cwiseAbs().maxCoeff();
    std::printf("normal equations  serial %8.3f s   parallel %8.3f s   speedup %5.2fx   max|diff| %.2e\n",
                t_serial, t_parallel, t_serial / t_parallel, gram_diff);

    RidgeFit fit = fit_trend(sites, y, basis, 0.5 / static_cast<double>(n));
    HacConfig hac{default_bandwidths(A, 0.1)};
    Eigen::VectorXd resid = residuals(fit, y);

    Eigen::MatrixXd c_brute, g_bucket;
    double t_brute = time_best_of(1, [&] { c_brute = hac_weighted_sum_bruteforce(fit, resid, hac); });
    VarianceEstimate var;
    double t_bucket = time_best_of(3, [&] { var = hac_long_run_matrix(fit, y, hac); });
    Eigen::MatrixXd g_brute =
        0.5 * (A.prod() / (static_cast<double>(n) * n)) *
        (fit.apply_inverse(fit.apply_inverse(c_brute).transpose()).transpose() +
         fit.apply_inverse(fit.apply_inverse(c_brute).transpose()));
    double hac_diff = (g_brute - var.g_hat).cwiseAbs().maxCoeff();
    std::printf("HAC pair sum      brute  %8.3f s   bucketed %8.3f s   speedup %5.2fx   max|diff| %.2e\n",
                t_brute, t_bucket, t_brute / t_bucket, hac_diff);
    return 0;
}
