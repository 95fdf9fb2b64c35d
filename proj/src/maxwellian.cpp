#include "kinex/errors.hpp"
#include "kinex/kinetic.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>

namespace kinex {

namespace {

// Moment map of the exponential-family candidate
//   f_m(v) = (m^{n/2}/gamma_m) exp(A + m B + m v.D + m |v|^2 C)
// in the gradient ordering (P_1..P_n, N, rho, E) matching unknowns (D, A, B, C).
struct FamilyEval {
    bool finite = false;
    Eigen::VectorXd mom;  // size n+3
};

FamilyEval eval_moments(const MassLaw& law, const VelocityGrid& grid,
                        const Eigen::VectorXd& x, std::vector<double>* field_out,
                        std::vector<double>* tbuf) {
    const int n = law.n;
    const int T = grid.total();
    const double A = x[n], B = x[n + 1], C = x[n + 2];
    FamilyEval ev;
    ev.mom = Eigen::VectorXd::Zero(n + 3);

    tbuf->resize(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
        const Vec3& v = grid.node(i);
        double t = grid.node_sq(i) * C;
        for (int d = 0; d < n; ++d) t += v[d] * x[d];
        (*tbuf)[static_cast<std::size_t>(i)] = t;
    }

    const double w = grid.weight();
    for (int m = 1; m <= law.M_max; ++m) {
        double base = 0.5 * n * std::log(static_cast<double>(m)) - std::log(law.gamma_of(m)) + A + m * B;
        double n_acc = 0.0, e_acc = 0.0;
        Vec3 p_acc{};
        for (int i = 0; i < T; ++i) {
            double fv = std::exp(base + m * (*tbuf)[static_cast<std::size_t>(i)]);
            if (field_out)
                (*field_out)[static_cast<std::size_t>(T) * (m - 1) + i] = fv;
            n_acc += fv;
            p_acc += fv * grid.node(i);
            e_acc += fv * grid.node_sq(i);
        }
        for (int d = 0; d < n; ++d) ev.mom[d] += w * m * p_acc[d];
        ev.mom[n] += w * n_acc;
        ev.mom[n + 1] += w * m * n_acc;
        ev.mom[n + 2] += w * m * e_acc;
    }
    ev.finite = ev.mom.allFinite();
    return ev;
}

Eigen::MatrixXd eval_hessian(const MassLaw& law, const VelocityGrid& grid,
                             const std::vector<double>& field) {
    const int n = law.n;
    const int T = grid.total();
    const double w = grid.weight();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 3, n + 3);
    Eigen::VectorXd mu(n + 3);
    for (int m = 1; m <= law.M_max; ++m) {
        for (int i = 0; i < T; ++i) {
            double fv = field[static_cast<std::size_t>(T) * (m - 1) + i];
            if (fv == 0.0) continue;
            const Vec3& v = grid.node(i);
            for (int d = 0; d < n; ++d) mu[d] = m * v[d];
            mu[n] = 1.0;
            mu[n + 1] = m;
            mu[n + 2] = m * grid.node_sq(i);
            H.selfadjointView<Eigen::Lower>().rankUpdate(mu, w * fv);
        }
    }
    return Eigen::MatrixXd(H.selfadjointView<Eigen::Lower>());
}

} // namespace

std::vector<double> discrete_maxwellian(const MassLaw& law, const VelocityGrid& grid,
                                        const MacroFields& target) {
    law.validate();
    if (law.n != grid.dim())
        throw std::domain_error("discrete_maxwellian: law.n must match grid dimension");
    if (!(target.rho > 0.0) || !(target.Theta > 0.0))
        throw std::domain_error("discrete_maxwellian: rho > 0 and Theta > 0 required");

    const int n = law.n;
    const int T = grid.total();
    const bool degenerate = (law.M_max == 1);  // A and B indistinguishable, pin B = 0

    double im = mean_inv_mass(law, target.beta);
    Eigen::VectorXd tgt(n + 3);
    for (int d = 0; d < n; ++d) tgt[d] = target.rho * target.u[d];
    tgt[n] = target.rho * im;
    tgt[n + 1] = target.rho;
    tgt[n + 2] = target.rho * (norm2(target.u) + n * target.Theta * im);

    Eigen::VectorXd x(n + 3);
    double Theta = target.Theta;
    for (int d = 0; d < n; ++d) x[d] = target.u[d] / Theta;
    x[n + 2] = -0.5 / Theta;
    if (degenerate) {
        // fold the continuum B term into A so the pinned B = 0 loses nothing
        x[n] = std::log(target.rho) - log_partition_Z(law, target.beta, Theta) +
               target.beta - norm2(target.u) / (2.0 * Theta);
        x[n + 1] = 0.0;
    } else {
        x[n] = std::log(target.rho) - log_partition_Z(law, target.beta, Theta);
        x[n + 1] = target.beta - norm2(target.u) / (2.0 * Theta);
    }

    auto scale = [&](int k) { return std::max(std::abs(tgt[k]), target.rho); };

    std::vector<double> field(static_cast<std::size_t>(T) * static_cast<std::size_t>(law.M_max));
    std::vector<double> tbuf;
    std::vector<double> best_field;
    double best_err = std::numeric_limits<double>::infinity();

    FamilyEval ev = eval_moments(law, grid, x, &field, &tbuf);
    if (!ev.finite)
        throw convergence_error("discrete_maxwellian: initial guess not finite");

    const int active = degenerate ? n + 2 : n + 3;  // reduced system drops the rho row
    auto pack = [&](const Eigen::VectorXd& full) {
        Eigen::VectorXd r(active);
        if (degenerate) {
            for (int d = 0; d <= n; ++d) r[d] = full[d];        // P, N
            r[n + 1] = full[n + 2];                             // E
        } else {
            r = full;
        }
        return r;
    };

    for (int iter = 0; iter < 50; ++iter) {
        Eigen::VectorXd resid = ev.mom - tgt;
        double err = 0.0;
        for (int k = 0; k < n + 3; ++k)
            err = std::max(err, std::abs(resid[k]) / scale(k));
        if (err < best_err) {
            best_err = err;
            best_field = field;
        }
        if (err <= 3e-15) break;

        Eigen::MatrixXd Hfull = eval_hessian(law, grid, field);
        Eigen::MatrixXd H(active, active);
        if (degenerate) {
            int map[5];
            for (int d = 0; d <= n; ++d) map[d] = d;
            map[n + 1] = n + 2;
            for (int a = 0; a < active; ++a)
                for (int b = 0; b < active; ++b) H(a, b) = Hfull(map[a], map[b]);
        } else {
            H = Hfull;
        }
        Eigen::VectorXd r = pack(resid);
        Eigen::LDLT<Eigen::MatrixXd> solver(H);
        if (solver.info() != Eigen::Success)
            throw convergence_error("discrete_maxwellian: Hessian factorization failed");
        Eigen::VectorXd step = solver.solve(r);

        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            Eigen::VectorXd xn = x;
            if (degenerate) {
                for (int d = 0; d <= n; ++d) xn[d] -= alpha * step[d];
                xn[n + 2] -= alpha * step[n + 1];
            } else {
                xn -= alpha * step;
            }
            FamilyEval evn = eval_moments(law, grid, xn, &field, &tbuf);
            if (evn.finite) {
                double errn = 0.0;
                for (int k = 0; k < n + 3; ++k)
                    errn = std::max(errn, std::abs(evn.mom[k] - tgt[k]) / scale(k));
                if (errn < err || alpha < 1e-6) {
                    x = xn;
                    ev = evn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) break;  // stuck at round-off floor; best_field holds the winner
    }

    if (best_err > 1e-12) {
        std::ostringstream os;
        os << "discrete_maxwellian: moment match stalled at relative error " << best_err;
        throw convergence_error(os.str());
    }
    return best_field;
}

} // namespace kinex
