#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace serreg {

struct QuadratureError : std::runtime_error {
    double achieved;
    explicit QuadratureError(double achieved_tol)
        : std::runtime_error("adaptive quadrature did not reach the requested tolerance (achieved " +
                             std::to_string(achieved_tol) + ")"),
          achieved(achieved_tol) {}
};

// Adaptive Simpson with absolute tolerance. Throws QuadratureError if the
// depth cap is hit before the local error bound is met.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 40);

}  // namespace serreg
