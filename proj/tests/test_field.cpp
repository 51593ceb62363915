#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "serreg/field.hpp"
#include "serreg/rng.hpp"
#include "serreg/sites.hpp"

using namespace serreg;

namespace {

SiteSet grid_sites_1d(const std::vector<double>& raw_coords, double A) {
    Eigen::MatrixXd raw(static_cast<long>(raw_coords.size()), 1);
    for (size_t i = 0; i < raw_coords.size(); ++i) raw(static_cast<long>(i), 0) = raw_coords[i];
    return rescale_sites(raw, Eigen::VectorXd::Constant(1, A));
}

}  // namespace

TEST_CASE("kernel evaluation") {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    CHECK(kernel_eval(ExponentialKernel{1.0, 1.0}, zero) == doctest::Approx(1.0));

    Eigen::VectorXd x(2);
    x << 1.2, 1.6;  // norm 2
    CHECK(kernel_eval(ExponentialKernel{2.0, 0.5}, x) ==
          doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-10));

    // CARMA(2,1): lambda = (-1, -2), b(z) = 2 + 0.5 z
    // a'(-1) = 2(-1)((-1)^2 - (-2)^2) = 6, a'(-2) = 2(-2)((-2)^2 - (-1)^2) = -12
    // weights: b(-1)/6 = 0.25, b(-2)/(-12) = -1/12
    CarmaIsotropicKernel carma{{-1.0, -2.0}, {2.0, 0.5}};
    CHECK(carma.weight(0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(carma.weight(1) == doctest::Approx(-1.0 / 12.0).epsilon(1e-14));
    Eigen::VectorXd one(1);
    one << 1.0;
    double expect = 0.25 * std::exp(-1.0) - std::exp(-2.0) / 12.0;
    CHECK(kernel_eval(KernelSpec{carma}, one) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(validate(KernelSpec{ExponentialKernel{0.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(KernelSpec{ExponentialKernel{1.0, -1.0}}), std::invalid_argument);
    // b vanishing at a root is rejected
    CHECK_THROWS_AS(validate(KernelSpec{CarmaIsotropicKernel{{-1.0, -2.0}, {2.0, 1.0}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate(KernelSpec{CarmaIsotropicKernel{{-1.0, 2.0}, {1.0}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate(LevyDriverSpec{GaussianDriver{0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(LevyDriverSpec{CompoundPoissonDriver{1.0, TwoPointJumps{0.0}}}),
                    std::invalid_argument);
}

TEST_CASE("covariance against closed-form oracles") {
    FieldModel m1(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0});
    Eigen::VectorXd lag0 = Eigen::VectorXd::Zero(1);
    CHECK(m1.covariance(lag0) == doctest::Approx(1.0).epsilon(1e-6));

    Eigen::VectorXd lag2(1);
    lag2 << 2.0;
    // int e^{-|u|} e^{-|u+2|} du = 3 e^{-2}
    CHECK(m1.covariance(lag2) == doctest::Approx(3.0 * std::exp(-2.0)).epsilon(1e-6));

    FieldModel m2(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0});
    Eigen::VectorXd lag0_2d = Eigen::VectorXd::Zero(2);
    CHECK(m2.covariance(lag0_2d) == doctest::Approx(M_PI / 2.0).epsilon(1e-4));

    FieldModel norm(ExponentialKernel{3.0, 0.7}, GaussianDriver{2.0}, 0.0, 0.0, true);
    CHECK(norm.covariance(lag0) == doctest::Approx(1.0).epsilon(1e-9));

    // compound Poisson scaling: rate * jump variance replaces sigma0
    FieldModel cp(ExponentialKernel{1.0, 1.0}, CompoundPoissonDriver{2.0, NormalJumps{0.5}});
    CHECK(cp.covariance(lag0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("simulated field matches its covariance function") {
    FieldModel model(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0}, 0.0, 0.0, true);
    // 40 far-apart base points, each with a partner at lag 1
    std::vector<double> coords;
    for (int b = 0; b < 40; ++b) {
        double base = -600.0 + 30.0 * b;
        coords.push_back(base);
        coords.push_back(base + 1.0);
    }
    SiteSet sites = grid_sites_1d(coords, 1300.0);

    const int reps = 200;
    double var_acc = 0.0, cov_acc = 0.0;
    long pairs = 0;
    for (int r = 0; r < reps; ++r) {
        Eigen::VectorXd e = model.simulate(sites, 99, make_stream(3, r, 0));
        for (int b = 0; b < 40; ++b) {
            var_acc += e[2 * b] * e[2 * b];
            cov_acc += e[2 * b] * e[2 * b + 1];
            ++pairs;
        }
    }
    double var_hat = var_acc / pairs;
    double cov_hat = cov_acc / pairs;
    Eigen::VectorXd lag1(1);
    lag1 << 1.0;
    CHECK(var_hat == doctest::Approx(1.0).epsilon(0.10));
    CHECK(cov_hat == doctest::Approx(model.covariance(lag1)).epsilon(0.10));
}

TEST_CASE("field mean is zero") {
    FieldModel model(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0}, 0.0, 0.0, true);
    SamplingDesign design{1, Eigen::VectorXd::Constant(1, 100000.0), Density{}};
    SiteSet sites = draw_sites(design, 100000, 5, 0);
    Eigen::VectorXd e = model.simulate(sites, 5, 1);
    double mean = e.mean();
    // the mean of a correlated field has variance ~ integral of the
    // correlation over the region: int (1+|x|)e^{-|x|} dx = 4 here
    double se = std::sqrt(4.0 / 100000.0);
    CHECK(std::abs(mean) < 4.0 * se);
}

TEST_CASE("compound Poisson field: symmetric jumps give near-zero skewness") {
    FieldModel model(ExponentialKernel{1.0, 1.0}, CompoundPoissonDriver{1.0, TwoPointJumps{1.0}},
                     0.0, 0.0, true);
    SamplingDesign design{1, Eigen::VectorXd::Constant(1, 3000.0), Density{}};
    SiteSet sites = draw_sites(design, 3000, 8, 0);
    Eigen::VectorXd e = model.simulate(sites, 8, 1);
    double mean = e.mean();
    Eigen::ArrayXd c = e.array() - mean;
    double sd = std::sqrt(c.square().mean());
    double skew = c.cube().mean() / (sd * sd * sd);
    CHECK(std::abs(skew) < 4.0 * std::sqrt(6.0 / static_cast<double>(e.size())) * 3.0);
}

TEST_CASE("grid refinement stability") {
    SamplingDesign design{1, Eigen::VectorXd::Constant(1, 200.0), Density{}};
    SiteSet sites = draw_sites(design, 400, 17, 0);
    double vars[2];
    int k = 0;
    for (double h : {0.125, 0.0625}) {
        FieldModel model(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0}, h, 0.0, false);
        double acc = 0.0;
        const int reps = 400;
        for (int r = 0; r < reps; ++r) {
            Eigen::VectorXd e = model.simulate(sites, 31, make_stream(4, r, 0));
            acc += e.squaredNorm() / e.size();
        }
        vars[k++] = acc / reps;
    }
    CHECK(vars[0] == doctest::Approx(vars[1]).epsilon(0.05));
}

TEST_CASE("trend data synthesis") {
    SamplingDesign design{1, Eigen::VectorXd::Constant(1, 100.0), Density{}};
    SiteSet sites = draw_sites(design, 200, 3, 0);
    FieldModel model(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0}, 0.0, 0.0, true);

    auto m0 = [](const Eigen::VectorXd&) { return 5.0; };
    auto tiny = [](const Eigen::VectorXd&) { return 1e-9; };
    Eigen::VectorXd y = simulate_trend_data(m0, tiny, tiny, model, sites, 1, 0);
    CHECK((y.array() - 5.0).abs().maxCoeff() < 1e-6);

    auto zero = [](const Eigen::VectorXd&) { return 0.0; };
    CHECK_THROWS_AS(simulate_trend_data(m0, zero, tiny, model, sites, 1, 0), std::invalid_argument);

    // variance identity: eta^2 * 1 + sigma_eps^2 = 0.5
    SiteSet big = draw_sites(SamplingDesign{1, Eigen::VectorXd::Constant(1, 10000.0), Density{}},
                             10000, 4, 0);
    auto sin_truth = [](const Eigen::VectorXd& z) { return std::sin(2.0 * M_PI * z[0]); };
    auto half = [](const Eigen::VectorXd&) { return 0.5; };
    Eigen::VectorXd yb = simulate_trend_data(sin_truth, half, half, model, big, 4, 8);
    Eigen::VectorXd noise(big.n);
    for (long i = 0; i < big.n; ++i) noise[i] = yb[i] - sin_truth(big.scaled.row(i).transpose());
    double var = (noise.array() - noise.mean()).square().mean();
    CHECK(var == doctest::Approx(0.5).epsilon(0.10));
}

TEST_CASE("covariate data synthesis") {
    SamplingDesign design{1, Eigen::VectorXd::Constant(1, 500.0), Density{}};
    SiteSet sites = draw_sites(design, 500, 13, 0);
    std::vector<FieldModel> x_models;
    x_models.emplace_back(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0}, 0.0, 0.0, true);

    auto pick_x = [](const Eigen::VectorXd&, const Eigen::VectorXd& x) { return x[0]; };
    auto tiny = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 1e-9; };
    CovariateData data = simulate_covariate_data(pick_x, tiny, x_models, sites, 2, 0);
    CHECK((data.y - data.X.col(0)).cwiseAbs().maxCoeff() < 1e-6);

    auto c_var = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.7; };
    CovariateData noisy = simulate_covariate_data(pick_x, c_var, x_models, sites, 2, 8);
    Eigen::VectorXd eps = noisy.y - noisy.X.col(0);
    CHECK((eps.array() - eps.mean()).square().mean() == doctest::Approx(0.49).epsilon(0.10));
}

TEST_CASE("simulation guards and determinism") {
    FieldModel model(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0});
    SamplingDesign design{1, Eigen::VectorXd::Constant(1, 50.0), Density{}};
    SiteSet sites = draw_sites(design, 50, 9, 0);
    Eigen::VectorXd a = model.simulate(sites, 77, 3);
    Eigen::VectorXd b = model.simulate(sites, 77, 3);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    FieldModel guarded(ExponentialKernel{1.0, 1.0}, GaussianDriver{1.0});
    guarded.cell_budget = 10;
    CHECK_THROWS_AS(guarded.simulate(sites, 1, 0), std::runtime_error);
}

TEST_CASE("field model JSON round trip") {
    FieldModel model(CarmaIsotropicKernel{{-1.0, -2.0}, {2.0, 0.5}},
                     CompoundPoissonDriver{1.5, NormalJumps{0.3}}, 0.0, 0.0, true);
    FieldModel back = FieldModel::from_json(model.to_json());
    Eigen::VectorXd lag(1);
    lag << 0.5;
    CHECK(back.covariance(lag) == doctest::Approx(model.covariance(lag)).epsilon(1e-12));
    CHECK(back.grid_step() == model.grid_step());
    CHECK(back.truncation_radius() == model.truncation_radius());
}
