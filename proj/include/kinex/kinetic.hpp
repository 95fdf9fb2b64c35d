#pragma once

#include "kinex/collision.hpp"
#include "kinex/mass_law.hpp"
#include "kinex/vec.hpp"
#include "kinex/velocity_grid.hpp"

#include <string>
#include <vector>

namespace kinex {

/// Raw velocity moments of a distribution over the mass ladder:
/// number, mass, momentum and m|v|^2 energy densities.
struct RawMoments {
    double N = 0.0;
    double rho = 0.0;
    Vec3 P{};
    double E = 0.0;
};

/// Hydrodynamic description (density, bulk velocity, temperature, population
/// exponent beta).
struct MacroFields {
    double rho = 0.0;
    Vec3 u{};
    double Theta = 0.0;
    double beta = 0.0;
};

/// Discrete kinetic state: one or more spatial cells, each holding a
/// distribution f over (mass rung, velocity node). Layout: cell-major,
/// then mass rung, then flat velocity node index.
struct KineticState {
    MassLaw law;
    VelocityGrid grid;
    int n_cells = 1;
    double dx = 1.0;  // spatial cell width for 1-D runs
    std::vector<double> f;

    KineticState() = default;
    KineticState(MassLaw l, VelocityGrid g, int cells = 1, double dx_ = 1.0);

    std::size_t cell_stride() const {
        return static_cast<std::size_t>(law.M_max) * static_cast<std::size_t>(grid.total());
    }
    double* cell_data(int cell) { return f.data() + cell_stride() * static_cast<std::size_t>(cell); }
    const double* cell_data(int cell) const {
        return f.data() + cell_stride() * static_cast<std::size_t>(cell);
    }
    double& at(int cell, int m, int node) {
        return f[cell_stride() * cell + static_cast<std::size_t>(grid.total()) * (m - 1) + node];
    }
    double at(int cell, int m, int node) const {
        return f[cell_stride() * cell + static_cast<std::size_t>(grid.total()) * (m - 1) + node];
    }
};

RawMoments raw_moments(const MassLaw& law, const VelocityGrid& grid, const double* f);
RawMoments raw_moments(const KineticState& st, int cell = 0);

/// Invert raw moments for (rho, u, Theta, beta). Raises std::domain_error when
/// the moment vector is inadmissible (non-positive density, N/rho off the open
/// interval (1/M_max, 1), non-positive centered energy).
MacroFields macro_from_moments(const MassLaw& law, const RawMoments& mom);

/// Exponential-family state on the grid whose *discrete* moments reproduce the
/// target macro fields. Newton-matched to 1e-12 relative (polished further when
/// round-off allows); cap 50 iterations.
std::vector<double> discrete_maxwellian(const MassLaw& law, const VelocityGrid& grid,
                                        const MacroFields& target);

/// Options for the deterministic mass-exchange collision operator.
struct QbmeOptions {
    int N_omega = 16;   // angular resolution (half-circle intervals for n=2)
    int workers = 0;    // 0: use KINEX_THREADS or 1
    bool want_gain_norm = false;
};

struct QbmeResult {
    std::vector<double> Q;          // collision operator, same layout as a cell
    double entropy_production = 0.0;
    double gain_l1 = 0.0;           // L1 norm of the assembled gain term
};

/// Assemble the mass-exchange Boltzmann operator for a single cell via the
/// symmetrized pair form. Per-tuple deposits are remapped conservatively, so
/// number, mass, momentum and energy moments of Q vanish to round-off. The
/// entropy production accumulates -(1/4) sum W (log a - log b)(a - b) over the
/// same tuples and is nonpositive by construction.
QbmeResult qbme_assemble(const MassLaw& law, const VelocityGrid& grid, const double* f,
                         const Kernel& kernel, const QbmeOptions& opts = {});

std::vector<double> q_bme(const KineticState& st, const Kernel& kernel,
                          const QbmeOptions& opts = {}, int cell = 0);

/// Entropy production of the collision operator; requires f > 0 entrywise
/// (floor at 1e-300 before calling).
double entropy_production(const KineticState& st, const Kernel& kernel,
                          const QbmeOptions& opts = {}, int cell = 0);

/// Kinetic entropy sum_m int f (log(gamma_m f_m / m^{n/2}) - 1) dv with the
/// 0 log 0 = 0 convention, and its velocity flux (x-component).
double kinetic_entropy(const MassLaw& law, const VelocityGrid& grid, const double* f);
double kinetic_entropy(const KineticState& st, int cell = 0);
double kinetic_entropy_flux_x(const MassLaw& law, const VelocityGrid& grid, const double* f);

/// Space-homogeneous BGK relaxation with the exact exponential update
/// f <- M* + (f - M*) exp(-dt/eps), M* moment-matched to f.
void bgk_step_homogeneous(KineticState& st, double dt, double eps, int cell = 0);

enum class AdvectionScheme { first_order, minmod, unlimited };

/// One Strang-split step of the 1-D kinetic equation: half advection, full
/// relaxation, half advection. Periodic boundary; CFL requires
/// dt <= dx / v_max.
void bgkme_step_1d(KineticState& st, double dt, double eps,
                   AdvectionScheme scheme = AdvectionScheme::minmod);

/// Transport-only variant (no relaxation), used by operator tests.
void advect_1d(KineticState& st, double dt, AdvectionScheme scheme);

/// CSV snapshot (cell_index, m, velocity indices, f) plus a JSON sidecar with
/// the grid metadata.
void write_kinetic_csv(const KineticState& st, const std::string& csv_path,
                       const std::string& sidecar_path);

} // namespace kinex
