#pragma once

#include <vector>

namespace kinex {

// Regularized upper incomplete gamma function Q(a, x), a > 0, x >= 0.
double gamma_q(double a, double x);

// Survival function P[X > x] of the chi-squared distribution with dof degrees.
double chi2_sf(double x, int dof);

struct Chi2Result {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Pearson goodness-of-fit of observed counts against category probabilities.
// dof = (number of categories) - 1 - fitted_params.
Chi2Result chi2_gof(const std::vector<double>& observed_counts,
                    const std::vector<double>& probabilities, int fitted_params = 0);

} // namespace kinex
