#include "kinex/fluid.hpp"

#include "kinex/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace kinex {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

// per-cell working values for the 1-D steppers (axial velocity only)
struct CellVals {
    double rho, u, pt, beta, Theta, im;
    double Alog, Cent, Dent;      // entropic values log(rho/Z), -1/(2T), u/T
    double mu, kappa, nu;
};

double minmod(double a, double b) {
    if (a > 0.0 && b > 0.0) return std::min(a, b);
    if (a < 0.0 && b < 0.0) return std::max(a, b);
    return 0.0;
}

struct Wrec {
    double rho, u, pt, beta;
};

struct FaceSide {
    double rho, u, pt, im;
};

void side_flux(const FaceSide& w, int n, double F[4]) {
    double N = w.rho * w.im;
    F[0] = N * w.u;
    F[1] = w.rho * w.u;
    F[2] = w.rho * w.u * w.u + w.pt;
    F[3] = (w.rho * w.u * w.u + (n + 2) * w.pt) * w.u;
}

void side_cons(const FaceSide& w, int n, double U[4]) {
    U[0] = w.rho * w.im;
    U[1] = w.rho;
    U[2] = w.rho * w.u;
    U[3] = w.rho * w.u * w.u + n * w.pt;
}

int wrap(int i, int cells, BoundaryKind bc) {
    if (bc == BoundaryKind::periodic) return (i % cells + cells) % cells;
    return std::clamp(i, 0, cells - 1);
}

std::vector<CellVals> load_cells(const MassLaw& law, const std::vector<ConservedState>& states,
                                 bool initial, bool want_entropic) {
    std::vector<CellVals> out(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        const ConservedState& c = states[i];
        if (std::abs(c.P[1]) > 0.0 || std::abs(c.P[2]) > 0.0)
            throw std::domain_error("fluid: transverse momentum not supported by the 1-D stepper");
        PrimitiveState p;
        try {
            p = cons_to_prim(law, c);
        } catch (const std::domain_error& e) {
            if (initial) throw;
            std::ostringstream os;
            os << "fluid step: cell " << i << " left the admissible set (" << e.what() << ")";
            throw step_error(os.str());
        }
        CellVals& v = out[i];
        v.rho = p.rho;
        v.u = p.u[0];
        v.Theta = p.Theta;
        v.beta = p.beta;
        v.im = c.N / c.rho;
        v.pt = p.rho * p.Theta * v.im;
        if (want_entropic) {
            v.Alog = std::log(p.rho) - log_partition_Z(law, p.beta, p.Theta);
            v.Cent = -0.5 / p.Theta;
            v.Dent = v.u / p.Theta;
            TransportCoeffs tc = transport_coeffs(law, p);
            v.mu = tc.mu;
            v.kappa = tc.kappa;
            v.nu = tc.nu;
        }
    }
    return out;
}

// HLL flux with Davis wave-speed bounds, returned in F[4] = (N, rho, P, E)
void hll_face(const FaceSide& L, const FaceSide& R, int n, double F[4]) {
    double gamma_gas = static_cast<double>(n + 2) / n;
    double cL = std::sqrt(gamma_gas * L.pt / L.rho);
    double cR = std::sqrt(gamma_gas * R.pt / R.rho);
    double SL = std::min(L.u - cL, R.u - cR);
    double SR = std::max(L.u + cL, R.u + cR);
    double FL[4], FR[4];
    side_flux(L, n, FL);
    side_flux(R, n, FR);
    if (SL >= 0.0) {
        for (int k = 0; k < 4; ++k) F[k] = FL[k];
        return;
    }
    if (SR <= 0.0) {
        for (int k = 0; k < 4; ++k) F[k] = FR[k];
        return;
    }
    double UL[4], UR[4];
    side_cons(L, n, UL);
    side_cons(R, n, UR);
    double inv = 1.0 / (SR - SL);
    for (int k = 0; k < 4; ++k)
        F[k] = (SR * FL[k] - SL * FR[k] + SL * SR * (UR[k] - UL[k])) * inv;
}

// time derivative of the conserved fields; fluxes F are per-face (cells+1)
void hyper_rhs(const MassLaw& law, const std::vector<CellVals>& cv, const Grid1D& grid,
               const FluidStepOptions& opts, std::vector<ConservedState>& dUdt) {
    const int C = grid.cells;
    const int n = law.n;
    std::vector<Wrec> W(static_cast<std::size_t>(C));
    for (int i = 0; i < C; ++i)
        W[static_cast<std::size_t>(i)] = {cv[static_cast<std::size_t>(i)].rho,
                                          cv[static_cast<std::size_t>(i)].u,
                                          cv[static_cast<std::size_t>(i)].pt,
                                          cv[static_cast<std::size_t>(i)].beta};

    std::vector<Wrec> slope(static_cast<std::size_t>(C), {0.0, 0.0, 0.0, 0.0});
    if (opts.second_order && C >= 3) {
        for (int i = 0; i < C; ++i) {
            const Wrec& wm = W[static_cast<std::size_t>(wrap(i - 1, C, grid.bc))];
            const Wrec& w0 = W[static_cast<std::size_t>(i)];
            const Wrec& wp = W[static_cast<std::size_t>(wrap(i + 1, C, grid.bc))];
            Wrec& s = slope[static_cast<std::size_t>(i)];
            if (opts.limit) {
                s.rho = minmod(w0.rho - wm.rho, wp.rho - w0.rho);
                s.u = minmod(w0.u - wm.u, wp.u - w0.u);
                s.pt = minmod(w0.pt - wm.pt, wp.pt - w0.pt);
                s.beta = minmod(w0.beta - wm.beta, wp.beta - w0.beta);
            } else {
                s.rho = 0.5 * (wp.rho - wm.rho);
                s.u = 0.5 * (wp.u - wm.u);
                s.pt = 0.5 * (wp.pt - wm.pt);
                s.beta = 0.5 * (wp.beta - wm.beta);
            }
            // fall back to first order if the face values leave rho, p~ > 0
            if (w0.rho - 0.5 * std::abs(s.rho) <= 0.0 || w0.pt - 0.5 * std::abs(s.pt) <= 0.0)
                s = {0.0, 0.0, 0.0, 0.0};
        }
    }

    auto face_side = [&](int cell, double sgn) {
        const Wrec& w = W[static_cast<std::size_t>(cell)];
        const Wrec& s = slope[static_cast<std::size_t>(cell)];
        Wrec r{w.rho + sgn * 0.5 * s.rho, w.u + sgn * 0.5 * s.u, w.pt + sgn * 0.5 * s.pt,
               w.beta + sgn * 0.5 * s.beta};
        FaceSide f{r.rho, r.u, r.pt, mean_inv_mass(law, r.beta)};
        return f;
    };

    std::vector<std::array<double, 4>> F(static_cast<std::size_t>(C) + 1);
    for (int k = 0; k <= C; ++k) {
        if (grid.bc == BoundaryKind::periodic && k == C) {
            F[static_cast<std::size_t>(C)] = F[0];
            break;
        }
        int lc = wrap(k - 1, C, grid.bc);
        int rc = wrap(k, C, grid.bc);
        FaceSide L = face_side(lc, +1.0);
        FaceSide R = face_side(rc, -1.0);
        hll_face(L, R, n, F[static_cast<std::size_t>(k)].data());
    }

    dUdt.assign(static_cast<std::size_t>(C), ConservedState{});
    double inv_dx = 1.0 / grid.dx;
    for (int i = 0; i < C; ++i) {
        const auto& Fl = F[static_cast<std::size_t>(i)];
        const auto& Fr = F[static_cast<std::size_t>(i) + 1];
        ConservedState& d = dUdt[static_cast<std::size_t>(i)];
        d.N = (Fl[0] - Fr[0]) * inv_dx;
        d.rho = (Fl[1] - Fr[1]) * inv_dx;
        d.P[0] = (Fl[2] - Fr[2]) * inv_dx;
        d.E = (Fl[3] - Fr[3]) * inv_dx;
    }
}

std::vector<DiffusiveFlux> diffusive_faces(const MassLaw& law, const std::vector<CellVals>& cv,
                                           const Grid1D& grid, double eps) {
    const int C = grid.cells;
    const int n = law.n;
    std::vector<DiffusiveFlux> F(static_cast<std::size_t>(C) + 1);
    double inv_dx = 1.0 / grid.dx;
    for (int k = 0; k <= C; ++k) {
        if (grid.bc == BoundaryKind::periodic && k == C) {
            F[static_cast<std::size_t>(C)] = F[0];
            break;
        }
        const CellVals& l = cv[static_cast<std::size_t>(wrap(k - 1, C, grid.bc))];
        const CellVals& r = cv[static_cast<std::size_t>(wrap(k, C, grid.bc))];
        double Th = 0.5 * (l.Theta + r.Theta);
        double uf = 0.5 * (l.u + r.u);
        double mu = 0.5 * (l.mu + r.mu);
        double ka = 0.5 * (l.kappa + r.kappa);
        double nu = 0.5 * (l.nu + r.nu);
        double dA = (r.Alog - l.Alog) * inv_dx;
        double dC = (r.Cent - l.Cent) * inv_dx;
        double dD = (r.Dent - l.Dent) * inv_dx;
        double grad_chi = dA + (n + 2) * Th * dC;
        double grad_Th = 2.0 * Th * Th * dC;
        double grad_u = Th * dD + 2.0 * Th * uf * dC;
        double sigma = (2.0 * (n - 1) / n) * grad_u;
        DiffusiveFlux& f = F[static_cast<std::size_t>(k)];
        f.N = eps * nu * grad_chi;
        f.P = eps * mu * sigma;
        f.E = eps * ((n + 2) * nu * Th * grad_chi + 2.0 * ka * grad_Th + 2.0 * mu * sigma * uf);
    }
    return F;
}

void full_rhs(const MassLaw& law, const std::vector<CellVals>& cv, const Grid1D& grid,
              const FluidStepOptions& opts, double eps, std::vector<ConservedState>& dUdt) {
    hyper_rhs(law, cv, grid, opts, dUdt);
    if (eps == 0.0) return;
    std::vector<DiffusiveFlux> D = diffusive_faces(law, cv, grid, eps);
    double inv_dx = 1.0 / grid.dx;
    for (int i = 0; i < grid.cells; ++i) {
        const DiffusiveFlux& l = D[static_cast<std::size_t>(i)];
        const DiffusiveFlux& r = D[static_cast<std::size_t>(i) + 1];
        ConservedState& d = dUdt[static_cast<std::size_t>(i)];
        d.N += (r.N - l.N) * inv_dx;
        d.P[0] += (r.P - l.P) * inv_dx;
        d.E += (r.E - l.E) * inv_dx;
    }
}

void check_grid(const Grid1D& grid, const std::vector<ConservedState>& states) {
    if (grid.cells < 1 || static_cast<std::size_t>(grid.cells) != states.size())
        throw std::domain_error("fluid: grid.cells must match the state vector length");
    if (!(grid.dx > 0.0)) throw std::domain_error("fluid: dx must be positive");
}

void step_impl(const MassLaw& law, std::vector<ConservedState>& states, const Grid1D& grid,
               double dt, double eps, const FluidStepOptions& opts) {
    law.validate();
    check_grid(grid, states);
    if (!(dt >= 0.0)) throw std::domain_error("fluid: dt must be >= 0");
    if (!(eps >= 0.0)) throw std::domain_error("fluid: eps must be >= 0");
    const bool want_ent = eps > 0.0;

    std::vector<CellVals> cv = load_cells(law, states, true, want_ent);
    double lam = 0.0;
    double diff_scale = 0.0;
    for (const CellVals& v : cv) {
        double c = std::sqrt((static_cast<double>(law.n) + 2) / law.n * v.pt / v.rho);
        lam = std::max(lam, std::abs(v.u) + c);
        if (want_ent)
            diff_scale = std::max(
                diff_scale, std::max({2.0 * v.kappa, (law.n + 2) * v.nu * v.Theta, 2.0 * v.mu}) /
                                v.rho);
    }
    if (dt * lam > opts.cfl * grid.dx * (1.0 + 1e-12))
        throw step_error("fluid step: dt exceeds the advective bound cfl*dx/wavespeed");
    if (want_ent && eps * diff_scale > 0.0 &&
        dt > 0.4 * grid.dx * grid.dx / (eps * diff_scale) * (1.0 + 1e-12))
        throw step_error("fluid step: dt exceeds the diffusive bound 0.4*dx^2/(eps*D)");

    const std::size_t C = states.size();
    std::vector<ConservedState> rhs;
    full_rhs(law, cv, grid, opts, eps, rhs);
    std::vector<ConservedState> u1(C);
    for (std::size_t i = 0; i < C; ++i) {
        u1[i].N = states[i].N + dt * rhs[i].N;
        u1[i].rho = states[i].rho + dt * rhs[i].rho;
        u1[i].P[0] = states[i].P[0] + dt * rhs[i].P[0];
        u1[i].E = states[i].E + dt * rhs[i].E;
    }
    std::vector<CellVals> cv1 = load_cells(law, u1, false, want_ent);
    full_rhs(law, cv1, grid, opts, eps, rhs);
    for (std::size_t i = 0; i < C; ++i) {
        states[i].N = 0.5 * (states[i].N + u1[i].N + dt * rhs[i].N);
        states[i].rho = 0.5 * (states[i].rho + u1[i].rho + dt * rhs[i].rho);
        states[i].P[0] = 0.5 * (states[i].P[0] + u1[i].P[0] + dt * rhs[i].P[0]);
        states[i].E = 0.5 * (states[i].E + u1[i].E + dt * rhs[i].E);
    }
    // surface persistent inadmissibility now rather than on the next call
    load_cells(law, states, false, false);
}

} // namespace

ConservedState prim_to_cons(const MassLaw& law, const PrimitiveState& p) {
    law.validate();
    if (!(p.rho > 0.0)) throw std::domain_error("prim_to_cons: rho > 0 violated");
    if (!(p.Theta > 0.0)) throw std::domain_error("prim_to_cons: Theta > 0 violated");
    double im = mean_inv_mass(law, p.beta);
    ConservedState c;
    c.N = p.rho * im;
    c.rho = p.rho;
    c.P = p.rho * p.u;
    c.E = p.rho * (norm2(p.u) + law.n * p.Theta * im);
    return c;
}

PrimitiveState cons_to_prim(const MassLaw& law, const ConservedState& c) {
    law.validate();
    if (!(c.N > 0.0)) throw std::domain_error("cons_to_prim: N > 0 violated");
    if (!(c.rho > 0.0)) throw std::domain_error("cons_to_prim: rho > 0 violated");
    double centered = c.E - norm2(c.P) / c.rho;
    if (!(centered > 0.0))
        throw std::domain_error("cons_to_prim: E - |P|^2/rho > 0 violated");
    double im = c.N / c.rho;
    if (law.M_max == 1) {
        if (std::abs(im - 1.0) > 1e-9)
            throw std::domain_error("cons_to_prim: N/rho in (1/M_max, 1] violated");
    } else if (!(im > 1.0 / law.M_max) || !(im < 1.0)) {
        throw std::domain_error("cons_to_prim: N/rho in (1/M_max, 1] violated");
    }
    PrimitiveState p;
    p.rho = c.rho;
    p.u = (1.0 / c.rho) * c.P;
    p.beta = beta_from_inv_mass_mean(law, im);
    double Theta_tilde = centered / (law.n * c.rho);
    p.Theta = Theta_tilde / im;
    return p;
}

ConservedState euler_flux(const MassLaw& law, const PrimitiveState& p) {
    law.validate();
    double im = mean_inv_mass(law, p.beta);
    double pt = p.rho * p.Theta * im;
    double ux = p.u[0];
    ConservedState F;
    F.N = p.rho * im * ux;
    F.rho = p.rho * ux;
    F.P = (p.rho * ux) * p.u;
    F.P[0] += pt;
    F.E = (p.rho * norm2(p.u) + (law.n + 2) * pt) * ux;
    return F;
}

double max_wave_speed(const MassLaw& law, const PrimitiveState& p) {
    law.validate();
    double Theta_tilde = p.Theta * mean_inv_mass(law, p.beta);
    double gamma_gas = (static_cast<double>(law.n) + 2) / law.n;
    return norm(p.u) + std::sqrt(gamma_gas * Theta_tilde);
}

void eme_step(const MassLaw& law, std::vector<ConservedState>& states, const Grid1D& grid,
              double dt, const FluidStepOptions& opts) {
    step_impl(law, states, grid, dt, 0.0, opts);
}

TransportCoeffs transport_coeffs(const MassLaw& law, const PrimitiveState& p) {
    law.validate();
    double im = mean_inv_mass(law, p.beta);
    double im2 = mean_inv_mass_sq(law, p.beta);
    TransportCoeffs tc;
    tc.mu = p.rho * p.Theta * im;
    tc.kappa = 0.5 * (law.n + 2) * p.rho * p.Theta * im2;
    tc.nu = p.rho * p.Theta * (im2 - im * im);
    return tc;
}

double population_potential_chi(const MassLaw& law, const PrimitiveState& p) {
    law.validate();
    if (!(p.rho > 0.0) || !(p.Theta > 0.0))
        throw std::domain_error("population_potential_chi: need rho, Theta > 0");
    double logS = log_partition_Z(law, p.beta, p.Theta) -
                  0.5 * law.n * std::log(2.0 * kPi * p.Theta);
    return std::log(p.rho * p.Theta) - logS;
}

std::vector<DiffusiveFlux> nsme_diffusive_fluxes(const MassLaw& law,
                                                 const std::vector<ConservedState>& states,
                                                 const Grid1D& grid, double eps) {
    law.validate();
    check_grid(grid, states);
    if (!(eps >= 0.0)) throw std::domain_error("nsme_diffusive_fluxes: eps must be >= 0");
    std::vector<CellVals> cv = load_cells(law, states, true, true);
    return diffusive_faces(law, cv, grid, eps);
}

void nsme_step(const MassLaw& law, std::vector<ConservedState>& states, const Grid1D& grid,
               double dt, double eps, const FluidStepOptions& opts) {
    step_impl(law, states, grid, dt, eps, opts);
}

} // namespace kinex
