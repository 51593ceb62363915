#include "serreg/bspline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace serreg {

UnivariateSplineBasis::UnivariateSplineBasis(int degree, int interior_knot_count, Interval iv)
    : degree_(degree), iv_(iv) {
    if (degree < 1 || degree > kMaxDegree)
        throw std::invalid_argument("spline degree must be in [1, " + std::to_string(kMaxDegree) + "]");
    if (interior_knot_count < 0)
        throw std::invalid_argument("interior knot count must be >= 0");
    if (!(iv.hi > iv.lo))
        throw std::invalid_argument("degenerate interval");

    dim_ = interior_knot_count + degree + 1;
    knots_.reserve(dim_ + degree + 1);
    for (int i = 0; i <= degree; ++i) knots_.push_back(iv.lo);
    double step = iv.width() / (interior_knot_count + 1);
    for (int i = 1; i <= interior_knot_count; ++i) knots_.push_back(iv.lo + i * step);
    for (int i = 0; i <= degree; ++i) knots_.push_back(iv.hi);
}

void UnivariateSplineBasis::check_domain(double t) const {
    if (t < iv_.lo || t > iv_.hi)
        throw std::domain_error("evaluation point outside basis interval");
}

int UnivariateSplineBasis::find_span(double t) const {
    check_domain(t);
    if (t >= knots_[dim_]) return dim_ - 1;  // right endpoint, limit from left
    int lo = degree_, hi = dim_;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (t < knots_[mid])
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

int UnivariateSplineBasis::eval_local(double t, double* vals) const {
    int s = find_span(t);
    std::array<double, kMaxDegree + 1> left{}, right{};
    vals[0] = 1.0;
    for (int j = 1; j <= degree_; ++j) {
        left[j] = t - knots_[s + 1 - j];
        right[j] = knots_[s + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            double tmp = vals[r] / (right[r + 1] + left[j - r]);
            vals[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        vals[j] = saved;
    }
    return s - degree_;
}

int UnivariateSplineBasis::eval_local_deriv(double t, double* vals, double* ders) const {
    int s = find_span(t);
    int p = degree_;
    std::array<double, kMaxDegree + 1> left{}, right{};
    std::array<double, kMaxDegree + 1> low{};  // degree p-1 values at t

    vals[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        if (j == p) {
            // values of the p non-vanishing degree p-1 functions N_{s-p+1..s, p-1}
            for (int i = 0; i < p; ++i) low[i] = vals[i];
        }
        left[j] = t - knots_[s + 1 - j];
        right[j] = knots_[s + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            double tmp = vals[r] / (right[r + 1] + left[j - r]);
            vals[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        vals[j] = saved;
    }

    int first = s - p;
    for (int i = 0; i <= p; ++i) {
        int j = first + i;
        double term1 = 0.0, term2 = 0.0;
        if (i > 0) {
            double den = knots_[j + p] - knots_[j];
            if (den > 0.0) term1 = low[i - 1] / den;
        }
        if (i < p) {
            double den = knots_[j + p + 1] - knots_[j + 1];
            if (den > 0.0) term2 = low[i] / den;
        }
        ders[i] = p * (term1 - term2);
    }
    return first;
}

Eigen::VectorXd UnivariateSplineBasis::eval(double t) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
    std::array<double, kMaxDegree + 1> vals{};
    int first = eval_local(t, vals.data());
    for (int i = 0; i <= degree_; ++i) out[first + i] = vals[i];
    return out;
}

TensorBasis::TensorBasis(std::vector<UnivariateSplineBasis> per_dim) : axes_(std::move(per_dim)) {
    if (axes_.empty()) throw std::invalid_argument("tensor basis needs at least one dimension");
    int d = dims();
    strides_.assign(d, 1);
    for (int k = d - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * axes_[k + 1].dimension();
    total_ = strides_[0] * axes_[0].dimension();
    local_size_ = 1;
    for (const auto& a : axes_) local_size_ *= a.degree() + 1;
}

TensorBasis TensorBasis::cube(int d, int degree, int interior_knots_per_dim) {
    std::vector<UnivariateSplineBasis> axes;
    axes.reserve(d);
    for (int k = 0; k < d; ++k) axes.emplace_back(degree, interior_knots_per_dim);
    return TensorBasis(std::move(axes));
}

std::vector<int> TensorBasis::factor_dimension(long total, int d, int degree) {
    int min_dim = degree + 1;
    std::vector<int> out(d, min_dim);
    long target = std::max<long>(total, 1);
    // grow the currently smallest factor while the product stays <= total
    while (true) {
        int k = static_cast<int>(std::min_element(out.begin(), out.end()) - out.begin());
        long prod = 1;
        for (int m = 0; m < d; ++m) prod *= (m == k) ? out[m] + 1 : out[m];
        if (prod > target) break;
        out[k] += 1;
    }
    return out;
}

TensorBasis TensorBasis::with_total_dimension(int d, int degree, long total) {
    auto factors = factor_dimension(total, d, degree);
    std::vector<UnivariateSplineBasis> axes;
    axes.reserve(d);
    for (int k = 0; k < d; ++k) axes.emplace_back(degree, factors[k] - degree - 1);
    return TensorBasis(std::move(axes));
}

long TensorBasis::flat_index(std::span<const int> multi) const {
    long flat = 0;
    for (int k = 0; k < dims(); ++k) {
        if (multi[k] < 0 || multi[k] >= axes_[k].dimension())
            throw std::out_of_range("multi-index out of range");
        flat += multi[k] * strides_[k];
    }
    return flat;
}

void TensorBasis::multi_index(long flat, std::span<int> out) const {
    if (flat < 0 || flat >= total_) throw std::out_of_range("flat index out of range");
    for (int k = 0; k < dims(); ++k) {
        out[k] = static_cast<int>(flat / strides_[k]);
        flat %= strides_[k];
    }
}

bool TensorBasis::contains(std::span<const double> z) const {
    for (int k = 0; k < dims(); ++k) {
        Interval iv = axes_[k].interval();
        if (z[k] < iv.lo || z[k] > iv.hi) return false;
    }
    return true;
}

int TensorBasis::eval_sparse(const double* z, long* idx, double* val) const {
    int d = dims();
    std::array<std::array<double, UnivariateSplineBasis::kMaxDegree + 1>, 8> v;
    std::array<int, 8> first{};
    std::array<int, 8> width{};
    if (d > 8) throw std::invalid_argument("tensor basis limited to 8 dimensions");
    for (int k = 0; k < d; ++k) {
        first[k] = axes_[k].eval_local(z[k], v[k].data());
        width[k] = axes_[k].degree() + 1;
    }
    std::array<int, 8> c{};
    int count = 0;
    while (true) {
        long flat = 0;
        double prod = 1.0;
        for (int k = 0; k < d; ++k) {
            flat += (first[k] + c[k]) * strides_[k];
            prod *= v[k][c[k]];
        }
        idx[count] = flat;
        val[count] = prod;
        ++count;
        int k = d - 1;
        while (k >= 0 && ++c[k] == width[k]) c[k--] = 0;
        if (k < 0) break;
    }
    return count;
}

int TensorBasis::eval_sparse_grad(const double* z, long* idx, double* val, double* grad) const {
    int d = dims();
    if (d > 8) throw std::invalid_argument("tensor basis limited to 8 dimensions");
    std::array<std::array<double, UnivariateSplineBasis::kMaxDegree + 1>, 8> v, dv;
    std::array<int, 8> first{}, width{};
    for (int k = 0; k < d; ++k) {
        first[k] = axes_[k].eval_local_deriv(z[k], v[k].data(), dv[k].data());
        width[k] = axes_[k].degree() + 1;
    }
    std::array<int, 8> c{};
    int count = 0;
    int local = local_size();
    while (true) {
        long flat = 0;
        double prod = 1.0;
        for (int k = 0; k < d; ++k) {
            flat += (first[k] + c[k]) * strides_[k];
            prod *= v[k][c[k]];
        }
        idx[count] = flat;
        val[count] = prod;
        for (int k = 0; k < d; ++k) {
            double g = dv[k][c[k]];
            for (int m = 0; m < d; ++m)
                if (m != k) g *= v[m][c[m]];
            grad[k * local + count] = g;
        }
        ++count;
        int k = d - 1;
        while (k >= 0 && ++c[k] == width[k]) c[k--] = 0;
        if (k < 0) break;
    }
    return count;
}

Eigen::VectorXd TensorBasis::eval(std::span<const double> z) const {
    if (!contains(z)) throw std::domain_error("evaluation point outside basis box");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(total_);
    std::vector<long> idx(local_size());
    std::vector<double> val(local_size());
    int count = eval_sparse(z.data(), idx.data(), val.data());
    for (int i = 0; i < count; ++i) out[idx[i]] = val[i];
    return out;
}

Eigen::MatrixXd TensorBasis::eval_gradient(std::span<const double> z) const {
    if (!contains(z)) throw std::domain_error("evaluation point outside basis box");
    int d = dims();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total_, d);
    int local = local_size();
    std::vector<long> idx(local);
    std::vector<double> val(local);
    std::vector<double> grad(static_cast<size_t>(local) * d);
    int count = eval_sparse_grad(z.data(), idx.data(), val.data(), grad.data());
    for (int i = 0; i < count; ++i)
        for (int k = 0; k < d; ++k) out(idx[i], k) = grad[k * local + i];
    return out;
}

nlohmann::json TensorBasis::to_json() const {
    nlohmann::json dims_j = nlohmann::json::array();
    for (const auto& a : axes_) {
        dims_j.push_back({{"degree", a.degree()},
                          {"interior_knots", a.dimension() - a.degree() - 1},
                          {"interval", {a.interval().lo, a.interval().hi}}});
    }
    return {{"per_dim", dims_j}, {"total_dimension", total_}};
}

TensorBasis TensorBasis::from_json(const nlohmann::json& j) {
    std::vector<UnivariateSplineBasis> axes;
    for (const auto& a : j.at("per_dim")) {
        Interval iv{a.at("interval")[0].get<double>(), a.at("interval")[1].get<double>()};
        axes.emplace_back(a.at("degree").get<int>(), a.at("interior_knots").get<int>(), iv);
    }
    return TensorBasis(std::move(axes));
}

}  // namespace serreg
