#pragma once

// Entropic-variable algebra for the moment system: the potential whose
// gradient is the conserved vector, its flux counterpart, closed-form
// Hessians with their positivity certificates, the thermodynamic entropy as
// a Legendre transform, and the symmetric nonnegative coefficient matrix of
// the diffusive right side together with its quadratic form.
//
// Component ordering is frozen everywhere as (D, A, B, C): indices 0..n-1
// carry the velocity-like vector D, index n the population potential A,
// index n+1 the mass potential B, index n+2 the energy potential C.  The
// conserved vector uses the dual ordering (P, N, rho, E).

#include "kinex/fluid.hpp"
#include "kinex/mass_law.hpp"
#include "kinex/vec.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace kinex {

struct EntropicState {
    Vec3 D;           // u / Theta
    double A = 0.0;   // log(rho / Z)
    double B = 0.0;   // beta - |u|^2 / (2 Theta)
    double C = -1.0;  // -1 / (2 Theta), strictly negative
};

// Symmetric nonnegative coefficient matrix of the diffusive fluxes.  Each of
// the (n+3)^2 blocks is an n x n matrix over spatial directions; the mass row
// and column vanish identically.
struct OnsagerMatrix {
    int n = 0;
    double eps = 0.0;
    std::vector<Eigen::MatrixXd> blocks;

    Eigen::MatrixXd& block(int a, int b) {
        return blocks[static_cast<std::size_t>(a * (n + 3) + b)];
    }
    const Eigen::MatrixXd& block(int a, int b) const {
        return blocks[static_cast<std::size_t>(a * (n + 3) + b)];
    }
    // full n(n+3) square matrix with rows/cols grouped by component
    Eigen::MatrixXd dense() const;
};

EntropicState entropic_from_prim(const MassLaw& law, const PrimitiveState& p);
PrimitiveState prim_from_entropic(const MassLaw& law, const EntropicState& a);

Eigen::VectorXd pack_entropic(const MassLaw& law, const EntropicState& a);
EntropicState unpack_entropic(const MassLaw& law, const Eigen::VectorXd& v);

// conserved fields in the canonical ordering (P, N, rho, E)
Eigen::VectorXd conserved_vector(const MassLaw& law, const ConservedState& c);

// potential whose entropic-variable gradient is the conserved vector;
// numerically equal to rho <m^-1>
double massieu_sigma(const MassLaw& law, const EntropicState& a);

// flux potential, one component per spatial direction; gradient of component
// i with respect to the entropic variables is the Euler flux along x_i
Vec3 flux_potential_phi(const MassLaw& law, const EntropicState& a);

// closed-form Hessian of massieu_sigma, (n+3) square, symmetric, and
// positive definite whenever the law carries at least two mass classes
Eigen::MatrixXd hessian_sigma(const MassLaw& law, const EntropicState& a);

// the Hessian quadratic form restricted to the five directions (transverse
// momentum magnitude, axial momentum, population, mass, energy) after
// scaling out rho; meaningful for n >= 2, and the u = 0 limit is taken
// continuously
Eigen::MatrixXd reduced_hessian(const MassLaw& law, const PrimitiveState& p);

// closed-form leading principal minors of reduced_hessian
std::array<double, 5> principal_minors(const MassLaw& law, const PrimitiveState& p);

// thermodynamic entropy of a conserved state (Legendre dual of the Massieu
// potential), computed through the closed form at local equilibrium
double thermo_entropy(const MassLaw& law, const ConservedState& c);

OnsagerMatrix onsager_X(const MassLaw& law, const PrimitiveState& p, double eps);

// quadratic form of the coefficient matrix on a family Y of n-vectors, one
// per component; evaluated either by direct block contraction or through the
// sum-of-squares expansion that certifies nonnegativity
double X_quadratic_form_direct(const MassLaw& law, const PrimitiveState& p, double eps,
                               const std::vector<Vec3>& Y);
double X_quadratic_form_sos(const MassLaw& law, const PrimitiveState& p, double eps,
                            const std::vector<Vec3>& Y);

// diffusive right side assembled in entropic form: two-point face gradients
// of the entropic fields contracted with the face-averaged coefficient
// matrix, then differenced.  Matches the physical-form assembly of
// nsme_diffusive_fluxes on the shared stencil.
std::vector<Eigen::VectorXd> entropic_rhs(const MassLaw& law,
                                          const std::vector<ConservedState>& states,
                                          const Grid1D& grid, double eps);

// local entropy production density of the diffusive terms; nonpositive
double dissipation_rate(const MassLaw& law, const PrimitiveState& p, const Vec3& grad_chi,
                        const Vec3& grad_Theta, const Eigen::MatrixXd& sigma, double eps);

// entropy flux including the diffusive correction
Vec3 entropy_flux_tilde(const MassLaw& law, const PrimitiveState& p, const Vec3& grad_chi,
                        const Vec3& grad_Theta, double eps);

struct LinearizedRunOptions {
    int steps = 100;
    double dt = 1e-3;
};

struct LinearizedRun {
    std::vector<double> energy;      // Hessian-weighted norm, one entry per time level
    std::vector<double> plain_norm;  // unweighted squared L2 norm
    double norm_bound = 1.0;         // condition number of the background Hessian
};

// Crank-Nicolson evolution of a periodic perturbation under the system
// linearized about a constant background; the weighted norm is non-increasing
// to round-off regardless of the step size
LinearizedRun linearized_energy_check(const MassLaw& law, const EntropicState& a0,
                                      const std::vector<Eigen::VectorXd>& perturbation,
                                      const Grid1D& grid, double eps,
                                      const LinearizedRunOptions& opts = {});

} // namespace kinex
