#include "kinex/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kinex {

namespace {

// lower-tail series for P(a, x), valid and fast for x < a + 1
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int it = 0; it < 500; ++it) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw std::runtime_error("gamma_p_series: no convergence");
}

// upper-tail Lentz continued fraction for Q(a, x), valid for x >= a + 1
double gamma_q_cf(double a, double x) {
    const double tiny = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw std::runtime_error("gamma_q_cf: no convergence");
}

} // namespace

double gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0))
        throw std::domain_error("gamma_q: need a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi2_sf(double x, int dof) {
    if (dof < 1) throw std::domain_error("chi2_sf: dof must be >= 1");
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * dof, 0.5 * x);
}

Chi2Result chi2_gof(const std::vector<double>& observed_counts,
                    const std::vector<double>& probabilities, int fitted_params) {
    if (observed_counts.size() != probabilities.size() || observed_counts.empty())
        throw std::domain_error("chi2_gof: size mismatch");
    double total = 0.0;
    for (double c : observed_counts) total += c;
    if (!(total > 0.0)) throw std::domain_error("chi2_gof: empty sample");
    Chi2Result res;
    int cats = 0;
    for (std::size_t k = 0; k < probabilities.size(); ++k) {
        double e = probabilities[k] * total;
        if (e <= 0.0) {
            if (observed_counts[k] > 0.0)
                throw std::domain_error("chi2_gof: observation in a zero-probability category");
            continue;
        }
        double d = observed_counts[k] - e;
        res.statistic += d * d / e;
        ++cats;
    }
    res.dof = cats - 1 - fitted_params;
    if (res.dof < 1) throw std::domain_error("chi2_gof: nonpositive degrees of freedom");
    res.p_value = chi2_sf(res.statistic, res.dof);
    return res;
}

} // namespace kinex
