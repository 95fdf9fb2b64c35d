#include "kinex/errors.hpp"
#include "kinex/kinetic.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace kinex {

namespace {

inline double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return (std::abs(a) < std::abs(b)) ? a : b;
}

// Upwind finite-volume transport of every (m, node) pencil at speed v_x,
// periodic in x. `scheme` selects the reconstruction.
void advect_pencil(std::vector<double>& line, std::vector<double>& work, double courant,
                   AdvectionScheme scheme) {
    const int nc = static_cast<int>(line.size());
    work = line;
    auto at = [&](int i) { return work[static_cast<std::size_t>((i % nc + nc) % nc)]; };
    // courant = v_x dt / dx, |courant| <= 1
    for (int i = 0; i < nc; ++i) {
        double fl, fr;  // interface values at i-1/2 and i+1/2
        if (courant >= 0.0) {
            double sl_i, sl_im;
            switch (scheme) {
                case AdvectionScheme::first_order: sl_i = sl_im = 0.0; break;
                case AdvectionScheme::minmod:
                    sl_i = minmod(at(i + 1) - at(i), at(i) - at(i - 1));
                    sl_im = minmod(at(i) - at(i - 1), at(i - 1) - at(i - 2));
                    break;
                default:
                    sl_i = 0.5 * (at(i + 1) - at(i - 1));
                    sl_im = 0.5 * (at(i) - at(i - 2));
                    break;
            }
            fr = at(i) + 0.5 * (1.0 - courant) * sl_i;
            fl = at(i - 1) + 0.5 * (1.0 - courant) * sl_im;
        } else {
            double sr_i, sr_ip;
            switch (scheme) {
                case AdvectionScheme::first_order: sr_i = sr_ip = 0.0; break;
                case AdvectionScheme::minmod:
                    sr_i = minmod(at(i + 1) - at(i), at(i) - at(i - 1));
                    sr_ip = minmod(at(i + 2) - at(i + 1), at(i + 1) - at(i));
                    break;
                default:
                    sr_i = 0.5 * (at(i + 1) - at(i - 1));
                    sr_ip = 0.5 * (at(i + 2) - at(i));
                    break;
            }
            fl = at(i) - 0.5 * (1.0 + courant) * sr_i;
            fr = at(i + 1) - 0.5 * (1.0 + courant) * sr_ip;
        }
        line[static_cast<std::size_t>(i)] = at(i) - courant * (fr - fl);
    }
}

} // namespace

void advect_1d(KineticState& st, double dt, AdvectionScheme scheme) {
    const int nc = st.n_cells;
    const int T = st.grid.total();
    const double cmax = st.grid.vmax() * dt / st.dx;
    if (cmax > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "advect_1d: CFL violated, v_max dt / dx = " << cmax << " > 1";
        throw step_error(os.str());
    }
    std::vector<double> line(static_cast<std::size_t>(nc));
    std::vector<double> work;
    for (int m = 1; m <= st.law.M_max; ++m) {
        for (int i = 0; i < T; ++i) {
            double vx = st.grid.node(i)[0];
            if (vx == 0.0) continue;
            for (int c = 0; c < nc; ++c) line[static_cast<std::size_t>(c)] = st.at(c, m, i);
            advect_pencil(line, work, vx * dt / st.dx, scheme);
            for (int c = 0; c < nc; ++c) st.at(c, m, i) = line[static_cast<std::size_t>(c)];
        }
    }
}

void bgk_step_homogeneous(KineticState& st, double dt, double eps, int cell) {
    if (!(eps > 0.0))
        throw std::domain_error("bgk_step_homogeneous: eps > 0 required");
    if (!(dt >= 0.0))
        throw std::domain_error("bgk_step_homogeneous: dt >= 0 required");
    MacroFields mac = macro_from_moments(st.law, raw_moments(st, cell));
    std::vector<double> M = discrete_maxwellian(st.law, st.grid, mac);
    const double lam = std::exp(-dt / eps);
    double* f = st.cell_data(cell);
    const std::size_t len = st.cell_stride();
    for (std::size_t k = 0; k < len; ++k)
        f[k] = M[k] + lam * (f[k] - M[k]);
}

void bgkme_step_1d(KineticState& st, double dt, double eps, AdvectionScheme scheme) {
    if (st.grid.vmax() * dt / st.dx > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "bgkme_step_1d: CFL violated, dt = " << dt << " exceeds dx/v_max = "
           << st.dx / st.grid.vmax();
        throw step_error(os.str());
    }
    advect_1d(st, 0.5 * dt, scheme);
    for (int c = 0; c < st.n_cells; ++c) bgk_step_homogeneous(st, dt, eps, c);
    advect_1d(st, 0.5 * dt, scheme);
}

} // namespace kinex
