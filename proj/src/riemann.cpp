#include "kinex/riemann.hpp"

#include "kinex/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kinex {

namespace {

void check_state(const RiemannState& s, const char* side) {
    if (!(s.rho > 0.0) || !(s.p > 0.0) || !std::isfinite(s.u))
        throw std::domain_error(std::string("solve_riemann: ") + side +
                                " state needs rho, p > 0 and finite u");
}

// pressure function f_K(p) and its derivative for one side of the fan
void pressure_fn(double p, const RiemannState& s, double gamma, double c, double& f,
                 double& fp) {
    if (p > s.p) {
        double A = 2.0 / ((gamma + 1.0) * s.rho);
        double B = (gamma - 1.0) / (gamma + 1.0) * s.p;
        double root = std::sqrt(A / (p + B));
        f = (p - s.p) * root;
        fp = root * (1.0 - 0.5 * (p - s.p) / (p + B));
    } else {
        double ex = 0.5 * (gamma - 1.0) / gamma;
        f = 2.0 * c / (gamma - 1.0) * (std::pow(p / s.p, ex) - 1.0);
        fp = std::pow(p / s.p, -0.5 * (gamma + 1.0) / gamma) / (s.rho * c);
    }
}

} // namespace

RiemannFan solve_riemann(const RiemannState& left, const RiemannState& right, double gamma) {
    if (!(gamma > 1.0)) throw std::domain_error("solve_riemann: gamma must exceed 1");
    check_state(left, "left");
    check_state(right, "right");

    double cL = std::sqrt(gamma * left.p / left.rho);
    double cR = std::sqrt(gamma * right.p / right.rho);
    double du = right.u - left.u;
    if (2.0 * (cL + cR) / (gamma - 1.0) <= du)
        throw std::domain_error("solve_riemann: initial data generate vacuum");

    // primitive-variable estimate, floored away from zero
    double p_pv = 0.5 * (left.p + right.p) -
                  0.125 * du * (left.rho + right.rho) * (cL + cR);
    double p = std::max(p_pv, 1e-12 * std::max(left.p, right.p));

    double fL = 0.0, fR = 0.0, dL = 0.0, dR = 0.0;
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
        pressure_fn(p, left, gamma, cL, fL, dL);
        pressure_fn(p, right, gamma, cR, fR, dR);
        double g = fL + fR + du;
        double step = g / (dL + dR);
        double p_new = p - step;
        if (p_new <= 0.0) p_new = 0.5 * p;
        double change = 2.0 * std::abs(p_new - p) / (p_new + p);
        p = p_new;
        if (change < 1e-14) {
            converged = true;
            break;
        }
    }
    if (!converged) throw convergence_error("solve_riemann: pressure iteration stalled");

    pressure_fn(p, left, gamma, cL, fL, dL);
    pressure_fn(p, right, gamma, cR, fR, dR);

    RiemannFan fan;
    fan.left = left;
    fan.right = right;
    fan.gamma = gamma;
    fan.p_star = p;
    fan.u_star = 0.5 * (left.u + right.u) + 0.5 * (fR - fL);
    return fan;
}

RiemannState sample_riemann(const RiemannFan& fan, double xi) {
    const double g = fan.gamma;
    const double gm = (g - 1.0) / (g + 1.0);
    const RiemannState& L = fan.left;
    const RiemannState& R = fan.right;
    const double cL = std::sqrt(g * L.p / L.rho);
    const double cR = std::sqrt(g * R.p / R.rho);
    const double ps = fan.p_star;
    const double us = fan.u_star;

    RiemannState out;
    if (xi <= us) {
        if (ps > L.p) {
            // left shock
            double SL = L.u - cL * std::sqrt(0.5 * (g + 1.0) / g * ps / L.p +
                                             0.5 * (g - 1.0) / g);
            if (xi <= SL) return L;
            out.rho = L.rho * (ps / L.p + gm) / (gm * ps / L.p + 1.0);
            out.u = us;
            out.p = ps;
            return out;
        }
        // left rarefaction
        double c_star = cL * std::pow(ps / L.p, 0.5 * (g - 1.0) / g);
        double head = L.u - cL;
        double tail = us - c_star;
        if (xi <= head) return L;
        if (xi >= tail) {
            out.rho = L.rho * std::pow(ps / L.p, 1.0 / g);
            out.u = us;
            out.p = ps;
            return out;
        }
        double fac = 2.0 / (g + 1.0) + gm / cL * (L.u - xi);
        out.rho = L.rho * std::pow(fac, 2.0 / (g - 1.0));
        out.u = 2.0 / (g + 1.0) * (cL + 0.5 * (g - 1.0) * L.u + xi);
        out.p = L.p * std::pow(fac, 2.0 * g / (g - 1.0));
        return out;
    }

    if (ps > R.p) {
        // right shock
        double SR = R.u + cR * std::sqrt(0.5 * (g + 1.0) / g * ps / R.p +
                                         0.5 * (g - 1.0) / g);
        if (xi >= SR) return R;
        out.rho = R.rho * (ps / R.p + gm) / (gm * ps / R.p + 1.0);
        out.u = us;
        out.p = ps;
        return out;
    }
    // right rarefaction
    double c_star = cR * std::pow(ps / R.p, 0.5 * (g - 1.0) / g);
    double head = R.u + cR;
    double tail = us + c_star;
    if (xi >= head) return R;
    if (xi <= tail) {
        out.rho = R.rho * std::pow(ps / R.p, 1.0 / g);
        out.u = us;
        out.p = ps;
        return out;
    }
    double fac = 2.0 / (g + 1.0) - gm / cR * (R.u - xi);
    out.rho = R.rho * std::pow(fac, 2.0 / (g - 1.0));
    out.u = 2.0 / (g + 1.0) * (-cR + 0.5 * (g - 1.0) * R.u + xi);
    out.p = R.p * std::pow(fac, 2.0 * g / (g - 1.0));
    return out;
}

} // namespace kinex
