#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "serreg/bspline.hpp"
#include "serreg/sites.hpp"

namespace serreg {

enum class ModelKind { Trend, Covariate };

struct SingularGramError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Componentwise affine map, x_std = (x - shift) .* scale.
struct AffineMap {
    Eigen::VectorXd scale, shift;
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        return (x - shift).cwiseProduct(scale);
    }
};

struct Rect {
    Eigen::VectorXd lo, hi;
    bool contains(const Eigen::VectorXd& x) const {
        for (int k = 0; k < x.size(); ++k)
            if (x[k] < lo[k] || x[k] > hi[k]) return false;
        return true;
    }
    static Rect cube(int p) {
        Rect r;
        r.lo = Eigen::VectorXd::Constant(p, -0.5);
        r.hi = Eigen::VectorXd::Constant(p, 0.5);
        return r;
    }
};

struct GramDiagnostics {
    double min_eig = 0.0;
    double max_eig = 0.0;
    double condition = 0.0;
    double zeta_hat = 0.0;    // max over probe grid of ||psi(z)||
    double lambda_hat = 0.0;  // min_eig^{-1/2}
};

struct RidgeFit {
    TensorBasis basis;
    Eigen::VectorXd beta;
    Eigen::MatrixXd gram;     // Psi'Psi/n (weighted rows for the covariate model)
    Eigen::VectorXd moment;   // Psi'Y/n
    double penalty = 0.0;
    long n = 0;
    Eigen::VectorXd A;        // region scales
    Eigen::VectorXd offset;   // raw-coordinate centering (zero unless region inferred)
    ModelKind kind = ModelKind::Trend;

    // Per-row basis-domain points: scaled sites, plus standardized covariates
    // for the covariate model.
    Eigen::MatrixXd design_points;
    Eigen::VectorXd weights;  // 0/1 per row for the covariate model; empty otherwise
    AffineMap x_map;          // covariate model only
    Rect weight_region;       // covariate model only

    Eigen::LDLT<Eigen::MatrixXd> factor;  // of gram + penalty * I

    template <typename Derived>
    auto apply_inverse(const Eigen::MatrixBase<Derived>& m) const {
        return factor.solve(m).eval();
    }

    nlohmann::json to_json() const;
};

// Gram and moment in one pass. The parallel version accumulates per-chunk
// partials and reduces them in fixed chunk order, so results do not depend
// on the thread count.
void assemble_normal_equations_serial(const TensorBasis& basis, const Eigen::MatrixXd& points,
                                      const Eigen::VectorXd& y, const Eigen::VectorXd* weights,
                                      Eigen::MatrixXd& gram, Eigen::VectorXd& moment);
void assemble_normal_equations(const TensorBasis& basis, const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& y, const Eigen::VectorXd* weights,
                               Eigen::MatrixXd& gram, Eigen::VectorXd& moment);

RidgeFit fit_trend(const SiteSet& sites, const Eigen::VectorXd& y, TensorBasis basis,
                   double penalty);

RidgeFit fit_covariate(const SiteSet& sites, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       TensorBasis basis, const Rect& weight_region, double penalty);

// Points are in the basis domain (scaled coordinates). No extrapolation.
Eigen::VectorXd predict(const RidgeFit& fit, const Eigen::MatrixXd& points);

Eigen::VectorXd residuals(const RidgeFit& fit, const Eigen::VectorXd& y);

GramDiagnostics gram_diagnostics(const RidgeFit& fit, const Eigen::MatrixXd& probe_grid);

}  // namespace serreg
