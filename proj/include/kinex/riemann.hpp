#pragma once

// Exact solver for the 1-D Riemann problem of a single ideal gas, written in
// the classical variables (rho, u, p).  The shock-tube comparisons translate
// single-mass moment states into this form with p = rho * Theta and the ratio
// of specific heats gamma = (n + 2) / n.

#include <stdexcept>

namespace kinex {

struct RiemannState {
    double rho = 1.0;
    double u = 0.0;
    double p = 1.0;
};

struct RiemannFan {
    RiemannState left;
    RiemannState right;
    double gamma = 1.4;
    double p_star = 0.0;
    double u_star = 0.0;
};

// Computes the star-region pressure and velocity by Newton iteration on the
// pressure function.  Throws std::domain_error when the data produce vacuum
// and convergence_error when the iteration stalls.
RiemannFan solve_riemann(const RiemannState& left, const RiemannState& right, double gamma);

// Self-similar solution at xi = x / t.
RiemannState sample_riemann(const RiemannFan& fan, double xi);

} // namespace kinex
