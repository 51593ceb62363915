#include "serreg/quad.hpp"

#include <cmath>

namespace serreg {

namespace {

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double recurse(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth, double& worst) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(fa, flm, fm, m - a);
    double right = simpson(fm, frm, fb, b - m);
    double err = (left + right - whole) / 15.0;
    if (std::abs(err) <= tol) return left + right + err;
    if (depth <= 0) {
        worst = std::max(worst, std::abs(err));
        return left + right + err;
    }
    return recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, worst) +
           recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, worst);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    if (!(b > a)) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = simpson(fa, fm, fb, b - a);
    double worst = 0.0;
    double result = recurse(f, a, b, fa, fm, fb, whole, tol, max_depth, worst);
    if (worst > 0.0) throw QuadratureError(worst);
    return result;
}

}  // namespace serreg
