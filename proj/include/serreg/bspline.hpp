#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace serreg {

struct Interval {
    double lo = -0.5;
    double hi = 0.5;
    double width() const { return hi - lo; }
};

// Clamped B-spline basis with equally spaced interior knots.
// dimension = interior knots + degree + 1; values are computed with the
// Cox-de Boor recursion restricted to the degree+1 non-vanishing functions.
class UnivariateSplineBasis {
public:
    static constexpr int kMaxDegree = 10;

    UnivariateSplineBasis(int degree, int interior_knot_count, Interval iv = {});

    int degree() const { return degree_; }
    int dimension() const { return dim_; }
    Interval interval() const { return iv_; }
    const std::vector<double>& knot_vector() const { return knots_; }

    // Writes the degree+1 non-vanishing values at t into vals and returns
    // the index of the first one. Evaluation at the right endpoint uses the
    // limit from the left, so the last basis function equals 1 there.
    int eval_local(double t, double* vals) const;

    // As eval_local, additionally writing first derivatives into ders.
    int eval_local_deriv(double t, double* vals, double* ders) const;

    // Full-length evaluation (all dimension() values, mostly zeros).
    Eigen::VectorXd eval(double t) const;

private:
    int find_span(double t) const;
    void check_domain(double t) const;

    int degree_;
    Interval iv_;
    int dim_;
    std::vector<double> knots_;
};

// Tensor product of per-dimension univariate bases over a box. The flat
// index is row-major: the last dimension varies fastest.
class TensorBasis {
public:
    explicit TensorBasis(std::vector<UnivariateSplineBasis> per_dim);

    // d dimensions, same degree and interior knot count everywhere,
    // each over [-1/2, 1/2].
    static TensorBasis cube(int d, int degree, int interior_knots_per_dim);

    // Splits a requested total dimension J into near-equal per-dimension
    // factors (each >= degree+1, product <= J) and builds the basis.
    static TensorBasis with_total_dimension(int d, int degree, long total);
    static std::vector<int> factor_dimension(long total, int d, int degree);

    int dims() const { return static_cast<int>(axes_.size()); }
    long total_dimension() const { return total_; }
    const UnivariateSplineBasis& axis(int k) const { return axes_[k]; }

    long flat_index(std::span<const int> multi) const;
    void multi_index(long flat, std::span<int> out) const;

    // Number of simultaneously non-vanishing tensor functions.
    int local_size() const { return local_size_; }

    // Sparse evaluation: writes local_size() flat indices and values,
    // returns the count written.
    int eval_sparse(const double* z, long* idx, double* val) const;

    // As eval_sparse, also writing the gradient: grad is local_size() x dims()
    // column-major (grad[k * local_size() + i] is d/dz_k of function idx[i]).
    int eval_sparse_grad(const double* z, long* idx, double* val, double* grad) const;

    Eigen::VectorXd eval(std::span<const double> z) const;
    Eigen::MatrixXd eval_gradient(std::span<const double> z) const;  // J x d

    bool contains(std::span<const double> z) const;

    nlohmann::json to_json() const;
    static TensorBasis from_json(const nlohmann::json& j);

private:
    std::vector<UnivariateSplineBasis> axes_;
    std::vector<long> strides_;
    long total_;
    int local_size_;
};

}  // namespace serreg
