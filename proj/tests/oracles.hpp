#pragma once

// Numerical oracles shared by the test suites. Everything here is assembled
// from first principles (quadrature, finite differences) so that agreement
// with the library is evidence, not circularity.

#include <cmath>
#include <stdexcept>

namespace oracle {

inline constexpr double pi = 3.1415926535897932384626433832795;

// Composite Simpson rule with 2*half panels.
template <class F>
double simpson(F&& f, double a, double b, int half) {
    double h = (b - a) / (2.0 * half);
    double s = f(a) + f(b);
    for (int k = 1; k < 2 * half; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

namespace detail {

template <class F>
double adapt(F& f, double a, double b, double fa, double fm, double fb, double whole,
             double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double h = b - a;
    double left = (h / 12.0) * (fa + 4.0 * flm + fm);
    double right = (h / 12.0) * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    // Below the machine floor further bisection only amplifies noise: node
    // coordinates quantize to ulp(x), which perturbs panel widths by
    // ulp(x)/h in relative terms, and the f sums carry their own round-off.
    double mag = std::abs(left) + std::abs(right);
    double noise = mag * (1e-15 + 8.0 * 2.220446049250313e-16 *
                                       std::max(std::abs(a), std::abs(b)) / h);
    if (std::abs(delta) <= 15.0 * tol || std::abs(delta) <= noise)
        return left + right + delta / 15.0;
    if (depth <= 0) throw std::runtime_error("adaptive quadrature: depth exhausted");
    return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson with absolute tolerance.
template <class F>
double adaptive(F&& f, double a, double b, double tol, int depth = 48) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = ((b - a) / 6.0) * (fa + 4.0 * fm + fb);
    return detail::adapt(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Central first difference.
template <class F>
double d1(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Central second difference along one variable.
template <class F>
double d2(F&& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// surface measure of the unit sphere in R^n, n = 1..3
inline double sphere_area(int n) {
    switch (n) {
        case 1: return 2.0;
        case 2: return 2.0 * pi;
        default: return 4.0 * pi;
    }
}

// integral of e^{-m |c|^2 / (2 Theta)} |c|^{2p} over R^n by adaptive radial
// quadrature; reference for the closed-form Gaussian moment helpers
inline double gauss_radial(double m, double Theta, int n, int p) {
    double sigma = std::sqrt(Theta / m);
    double R = sigma * (14.0 + 2.0 * std::sqrt(2.0 * p + n));
    auto integrand = [&](double r) {
        return std::pow(r, n - 1 + 2 * p) * std::exp(-0.5 * r * r / (sigma * sigma));
    };
    double scale = std::pow(sigma, n + 2 * p);
    return sphere_area(n) * adaptive(integrand, 0.0, R, 1e-13 * scale);
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

} // namespace oracle
