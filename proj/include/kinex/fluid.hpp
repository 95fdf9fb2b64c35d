#pragma once

#include "kinex/kinetic.hpp"
#include "kinex/mass_law.hpp"

#include <vector>

namespace kinex {

// 1-D finite-volume solvers for the hydrodynamic limit of the exchange gas:
// the hyperbolic system (4 conserved fields) and its diffusive correction.
// Fields vary along x; velocities keep their n components (slab symmetry).

using PrimitiveState = MacroFields;

struct ConservedState {
    double N = 0.0;   // population density rho <m^-1>
    double rho = 0.0; // mass density
    Vec3 P{};         // momentum density
    double E = 0.0;   // rho |u|^2 + n rho Theta <m^-1>  (no 1/2 factor)
};

enum class BoundaryKind { periodic, outflow };

struct Grid1D {
    int cells = 0;
    double dx = 0.0;
    BoundaryKind bc = BoundaryKind::periodic;
    double eps = 0.0;  // diffusion scale; 0 gives the inviscid system
};

ConservedState prim_to_cons(const MassLaw& law, const PrimitiveState& p);

/// Inverts the conserved fields: u = P/rho, reduced temperature from the
/// centered energy, beta from N/rho. Throws naming the violated inequality.
PrimitiveState cons_to_prim(const MassLaw& law, const ConservedState& c);

/// Flux of the conserved fields in the x direction.
ConservedState euler_flux(const MassLaw& law, const PrimitiveState& p);

/// |u| + sqrt(gamma_gas Theta~) with gamma_gas = (n+2)/n, Theta~ = Theta <m^-1>.
double max_wave_speed(const MassLaw& law, const PrimitiveState& p);

struct FluidStepOptions {
    double cfl = 0.45;
    bool second_order = true;
    bool limit = true;  // minmod slopes; unlimited central slopes for smooth runs
};

/// One SSP-RK2 step of the inviscid system with HLL fluxes and slope
/// reconstruction in (rho, u, p~, beta). Cells whose reconstructed face values
/// leave the admissible set fall back to first order.
void eme_step(const MassLaw& law, std::vector<ConservedState>& states, const Grid1D& grid,
              double dt, const FluidStepOptions& opts = {});

struct TransportCoeffs {
    double mu = 0.0;     // viscosity rho Theta <m^-1>
    double kappa = 0.0;  // heat conductivity (n+2)/2 rho Theta <m^-2>
    double nu = 0.0;     // population diffusivity rho Theta (<m^-2> - <m^-1>^2)
};

TransportCoeffs transport_coeffs(const MassLaw& law, const PrimitiveState& p);

/// log(rho Theta / sum_m m e^{beta m}/gamma_m), the potential whose gradient
/// drives population diffusion.
double population_potential_chi(const MassLaw& law, const PrimitiveState& p);

/// Diffusive face fluxes for (N, P_x, E); the mass flux is identically zero.
/// Face k sits between cells k-1 and k, with k = 0..cells; they enter the
/// update as +(flux_{k+1} - flux_k)/dx. Face gradients are two-point
/// differences expressed through the entropic variables, face coefficients
/// arithmetic means, so the update coincides with its Onsager-form assembly.
struct DiffusiveFlux {
    double N = 0.0;
    double P = 0.0;
    double E = 0.0;
};

std::vector<DiffusiveFlux> nsme_diffusive_fluxes(const MassLaw& law,
                                                 const std::vector<ConservedState>& states,
                                                 const Grid1D& grid, double eps);

/// Hyperbolic step plus explicit diffusive fluxes. Requires
/// dt <= min(cfl dx / wave speed, 0.4 dx^2 / (eps D_max)).
void nsme_step(const MassLaw& law, std::vector<ConservedState>& states, const Grid1D& grid,
               double dt, double eps, const FluidStepOptions& opts = {});

} // namespace kinex
