#include "kinex/kinetic.hpp"
#include "kinex/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace kinex {

KineticState::KineticState(MassLaw l, VelocityGrid g, int cells, double dx_)
    : law(std::move(l)), grid(std::move(g)), n_cells(cells), dx(dx_) {
    law.validate();
    if (law.n != grid.dim())
        throw std::domain_error("KineticState: law.n must match grid dimension");
    if (n_cells < 1)
        throw std::domain_error("KineticState: n_cells >= 1 required");
    if (!(dx > 0.0))
        throw std::domain_error("KineticState: dx > 0 required");
    f.assign(cell_stride() * static_cast<std::size_t>(n_cells), 0.0);
}

RawMoments raw_moments(const MassLaw& law, const VelocityGrid& grid, const double* f) {
    RawMoments mom;
    const double w = grid.weight();
    const int T = grid.total();
    for (int m = 1; m <= law.M_max; ++m) {
        const double* fm = f + static_cast<std::size_t>(T) * (m - 1);
        double n_acc = 0.0, e_acc = 0.0;
        Vec3 p_acc{};
        for (int i = 0; i < T; ++i) {
            double fv = fm[i];
            n_acc += fv;
            p_acc += fv * grid.node(i);
            e_acc += fv * grid.node_sq(i);
        }
        mom.N += w * n_acc;
        mom.rho += w * m * n_acc;
        mom.P += (w * m) * p_acc;
        mom.E += w * m * e_acc;
    }
    return mom;
}

RawMoments raw_moments(const KineticState& st, int cell) {
    return raw_moments(st.law, st.grid, st.cell_data(cell));
}

MacroFields macro_from_moments(const MassLaw& law, const RawMoments& mom) {
    if (!(mom.rho > 0.0))
        throw std::domain_error("macro_from_moments: rho > 0 violated");
    if (!(mom.N > 0.0))
        throw std::domain_error("macro_from_moments: N > 0 violated");
    MacroFields mac;
    mac.rho = mom.rho;
    mac.u = (1.0 / mom.rho) * mom.P;
    double ratio = mom.N / mom.rho;
    if (law.M_max == 1) {
        if (std::abs(ratio - 1.0) > 1e-9)
            throw std::domain_error("macro_from_moments: N = rho required when M_max = 1");
        mac.beta = 0.0;
    } else {
        // beta_from_inv_mass_mean re-validates ratio in (1/M_max, 1)
        mac.beta = beta_from_inv_mass_mean(law, ratio);
    }
    double centered = mom.E - mom.rho * norm2(mac.u);
    if (!(centered > 0.0))
        throw std::domain_error("macro_from_moments: E - rho|u|^2 > 0 violated");
    mac.Theta = centered / (law.n * mom.N);
    return mac;
}

double kinetic_entropy(const MassLaw& law, const VelocityGrid& grid, const double* f) {
    const double w = grid.weight();
    const int T = grid.total();
    double s = 0.0;
    for (int m = 1; m <= law.M_max; ++m) {
        const double* fm = f + static_cast<std::size_t>(T) * (m - 1);
        double shift = std::log(law.gamma_of(m)) - 0.5 * law.n * std::log(static_cast<double>(m));
        double acc = 0.0;
        for (int i = 0; i < T; ++i) {
            double fv = fm[i];
            if (fv > 0.0) acc += fv * (std::log(fv) + shift - 1.0);
        }
        s += w * acc;
    }
    return s;
}

double kinetic_entropy(const KineticState& st, int cell) {
    return kinetic_entropy(st.law, st.grid, st.cell_data(cell));
}

double kinetic_entropy_flux_x(const MassLaw& law, const VelocityGrid& grid, const double* f) {
    const double w = grid.weight();
    const int T = grid.total();
    double s = 0.0;
    for (int m = 1; m <= law.M_max; ++m) {
        const double* fm = f + static_cast<std::size_t>(T) * (m - 1);
        double shift = std::log(law.gamma_of(m)) - 0.5 * law.n * std::log(static_cast<double>(m));
        double acc = 0.0;
        for (int i = 0; i < T; ++i) {
            double fv = fm[i];
            if (fv > 0.0) acc += fv * (std::log(fv) + shift - 1.0) * grid.node(i)[0];
        }
        s += w * acc;
    }
    return s;
}

void write_kinetic_csv(const KineticState& st, const std::string& csv_path,
                       const std::string& sidecar_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("write_kinetic_csv: cannot open " + csv_path);
    csv << "cell,m";
    for (int d = 0; d < st.grid.dim(); ++d) csv << ",k" << d;
    csv << ",f\n";
    csv.precision(17);
    int k[3];
    for (int c = 0; c < st.n_cells; ++c)
        for (int m = 1; m <= st.law.M_max; ++m)
            for (int i = 0; i < st.grid.total(); ++i) {
                st.grid.unflat(i, k);
                csv << c << ',' << m;
                for (int d = 0; d < st.grid.dim(); ++d) csv << ',' << k[d];
                csv << ',' << st.at(c, m, i) << '\n';
            }

    std::ofstream side(sidecar_path);
    if (!side) throw std::runtime_error("write_kinetic_csv: cannot open " + sidecar_path);
    side << "{\n"
         << "  \"n\": " << st.grid.dim() << ",\n"
         << "  \"N_v\": " << st.grid.per_axis() << ",\n"
         << "  \"v_max\": " << st.grid.vmax() << ",\n"
         << "  \"M_max\": " << st.law.M_max << ",\n"
         << "  \"n_cells\": " << st.n_cells << ",\n"
         << "  \"dx\": " << st.dx << "\n"
         << "}\n";
}

} // namespace kinex
