#include "kinex/riemann.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace kinex;

namespace {

// One-sided pressure function of the exact solver, written out independently:
// shock branch above the side pressure, rarefaction branch below.
double side_fn(double p, const RiemannState& s, double gamma) {
    if (p > s.p) {
        double A = 2.0 / ((gamma + 1.0) * s.rho);
        double B = (gamma - 1.0) / (gamma + 1.0) * s.p;
        return (p - s.p) * std::sqrt(A / (p + B));
    }
    double a = std::sqrt(gamma * s.p / s.rho);
    return 2.0 * a / (gamma - 1.0) * (std::pow(p / s.p, 0.5 * (gamma - 1.0) / gamma) - 1.0);
}

double star_pressure_bisect(const RiemannState& l, const RiemannState& r, double gamma) {
    auto phi = [&](double p) { return side_fn(p, l, gamma) + side_fn(p, r, gamma) + r.u - l.u; };
    double lo = 1e-14 * std::min(l.p, r.p);
    double hi = std::max(l.p, r.p);
    while (phi(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (phi(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("uniform data produce a trivial fan") {
    RiemannState s{1.3, 0.4, 2.1};
    RiemannFan fan = solve_riemann(s, s, 1.4);
    CHECK(std::abs(fan.p_star - s.p) <= 1e-12);
    CHECK(std::abs(fan.u_star - s.u) <= 1e-12);
    for (double xi : {-3.0, 0.0, 0.4, 3.0}) {
        RiemannState probe = sample_riemann(fan, xi);
        CHECK(std::abs(probe.rho - s.rho) <= 1e-12);
        CHECK(std::abs(probe.u - s.u) <= 1e-12);
        CHECK(std::abs(probe.p - s.p) <= 1e-12);
    }
}

TEST_CASE("classic shock tube star state") {
    RiemannFan fan = solve_riemann({1.0, 0.0, 1.0}, {0.125, 0.0, 0.1}, 1.4);
    CHECK(std::abs(fan.p_star - 0.30313) <= 2e-5);
    CHECK(std::abs(fan.u_star - 0.92745) <= 2e-5);
}

TEST_CASE("star pressure matches an independent bisection") {
    struct Case {
        RiemannState l, r;
        double gamma;
    };
    Case cases[] = {
        {{1.0, 0.0, 1.0}, {0.125, 0.0, 0.1}, 1.4},
        {{1.0, 0.0, 1.0}, {0.125, 0.0, 0.1}, 5.0 / 3.0},
        {{1.0, 0.0, 1.0}, {0.125, 0.0, 0.1}, 2.0},
        {{1.0, 0.0, 1.0}, {0.125, 0.0, 0.1}, 3.0},
        {{1.0, -0.5, 1.0}, {1.0, 0.5, 1.0}, 1.4},     // two rarefactions
        {{1.0, 0.5, 1.0}, {1.0, -0.5, 1.0}, 1.4},     // two shocks
        {{0.8, 0.3, 2.5}, {1.9, -0.2, 0.4}, 5.0 / 3.0},
    };
    for (const Case& c : cases) {
        RiemannFan fan = solve_riemann(c.l, c.r, c.gamma);
        double p_ref = star_pressure_bisect(c.l, c.r, c.gamma);
        CHECK(std::abs(fan.p_star - p_ref) <= 1e-12 * std::max(1.0, p_ref));
        double u_ref = 0.5 * (c.l.u + c.r.u) +
                       0.5 * (side_fn(p_ref, c.r, c.gamma) - side_fn(p_ref, c.l, c.gamma));
        CHECK(std::abs(fan.u_star - u_ref) <= 1e-10);
    }

    // expansion ordering: diverging flow lowers the star pressure,
    // converging flow raises it
    RiemannFan rarefy = solve_riemann({1.0, -0.5, 1.0}, {1.0, 0.5, 1.0}, 1.4);
    CHECK(rarefy.p_star < 1.0);
    RiemannFan compress = solve_riemann({1.0, 0.5, 1.0}, {1.0, -0.5, 1.0}, 1.4);
    CHECK(compress.p_star > 1.0);
}

TEST_CASE("mirror symmetry") {
    RiemannState l{1.0, 0.2, 1.0}, r{0.125, -0.1, 0.1};
    RiemannFan fwd = solve_riemann(l, r, 1.4);
    RiemannFan rev = solve_riemann({r.rho, -r.u, r.p}, {l.rho, -l.u, l.p}, 1.4);
    CHECK(std::abs(fwd.p_star - rev.p_star) <= 1e-12);
    CHECK(std::abs(fwd.u_star + rev.u_star) <= 1e-12);
    for (double xi : {-1.5, -0.3, 0.1, 0.9}) {
        RiemannState a = sample_riemann(fwd, xi);
        RiemannState b = sample_riemann(rev, -xi);
        CHECK(std::abs(a.rho - b.rho) <= 1e-10);
        CHECK(std::abs(a.u + b.u) <= 1e-10);
        CHECK(std::abs(a.p - b.p) <= 1e-10);
    }
}

TEST_CASE("vacuum formation is rejected") {
    CHECK_THROWS_AS(solve_riemann({1.0, -10.0, 0.01}, {1.0, 10.0, 0.01}, 1.4),
                    std::domain_error);
}

TEST_CASE("self-similar sampling") {
    RiemannState l{1.0, 0.0, 1.0}, r{0.125, 0.0, 0.1};
    double gamma = 1.4;
    RiemannFan fan = solve_riemann(l, r, gamma);

    // far field returns the inputs
    RiemannState far_l = sample_riemann(fan, -100.0);
    CHECK(far_l.rho == l.rho);
    CHECK(far_l.p == l.p);
    RiemannState far_r = sample_riemann(fan, 100.0);
    CHECK(far_r.rho == r.rho);
    CHECK(far_r.p == r.p);

    // pressure and velocity are continuous across the contact
    double d = 1e-9;
    RiemannState cl = sample_riemann(fan, fan.u_star - d);
    RiemannState cr = sample_riemann(fan, fan.u_star + d);
    CHECK(std::abs(cl.p - fan.p_star) <= 1e-6);
    CHECK(std::abs(cr.p - fan.p_star) <= 1e-6);
    CHECK(std::abs(cl.u - fan.u_star) <= 1e-6);
    CHECK(std::abs(cr.u - fan.u_star) <= 1e-6);
    CHECK(cl.rho > cr.rho);  // the contact carries the density jump here

    // the rarefaction interior interpolates smoothly between head and tail
    double a_l = std::sqrt(gamma * l.p / l.rho);
    double head = l.u - a_l;
    RiemannState inside = sample_riemann(fan, head + 0.05);
    CHECK(inside.p < l.p);
    CHECK(inside.p > fan.p_star);
    CHECK(inside.u > l.u);
}
