#include "kinex/thermo.hpp"

#include "kinex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kinex {

namespace {

double axial_norm2(const MassLaw& law, const Vec3& v) {
    double s = 0.0;
    for (int k = 0; k < law.n; ++k) s += v[k] * v[k];
    return s;
}

int wrap(int i, int cells, BoundaryKind bc) {
    if (bc == BoundaryKind::periodic) return (i % cells + cells) % cells;
    return std::clamp(i, 0, cells - 1);
}

// (0,0) spatial entry of every block, the coefficient matrix of a slab
// problem where only x-gradients survive; u has the axial component only
Eigen::MatrixXd slab_X(int n, double eps, double mu, double kappa, double nu, double Theta,
                       double ux) {
    const int s = n + 3;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(s, s);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double val = (a == b) ? 1.0 : 0.0;
            if (a == 0 && b == 0) val += 1.0 - 2.0 / n;
            S(a, b) = eps * mu * Theta * val;
        }
    S(n, n) = eps * nu;
    S(n, n + 2) = (n + 2) * eps * nu * Theta;
    S(n + 2, n) = S(n, n + 2);
    double me = 4.0 * eps * mu * Theta * ux * (n - 1) / n;
    S(0, n + 2) += me;
    S(n + 2, 0) += me;
    S(n + 2, n + 2) = eps * Theta *
                      ((n + 2) * (n + 2) * nu * Theta + 4.0 * kappa * Theta +
                       4.0 * mu * ux * ux + 4.0 * (n - 2.0) / n * mu * ux * ux);
    return S;
}

} // namespace

Eigen::MatrixXd OnsagerMatrix::dense() const {
    const int s = n + 3;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(s * n, s * n);
    for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b)
            M.block(a * n, b * n, n, n) = block(a, b);
    return M;
}

EntropicState entropic_from_prim(const MassLaw& law, const PrimitiveState& p) {
    law.validate();
    if (!(p.rho > 0.0) || !(p.Theta > 0.0))
        throw std::domain_error("entropic_from_prim: need rho, Theta > 0");
    EntropicState a;
    a.C = -0.5 / p.Theta;
    for (int k = 0; k < law.n; ++k) a.D[k] = p.u[k] / p.Theta;
    double u2 = axial_norm2(law, p.u);
    a.B = p.beta - 0.5 * u2 / p.Theta;
    a.A = std::log(p.rho) - log_partition_Z(law, p.beta, p.Theta);
    return a;
}

PrimitiveState prim_from_entropic(const MassLaw& law, const EntropicState& a) {
    law.validate();
    if (!(a.C < 0.0)) throw std::domain_error("prim_from_entropic: C < 0 violated");
    PrimitiveState p;
    p.Theta = -0.5 / a.C;
    for (int k = 0; k < law.n; ++k) p.u[k] = a.D[k] * p.Theta;
    double d2 = axial_norm2(law, a.D);
    p.beta = a.B - 0.25 * d2 / a.C;
    p.rho = std::exp(a.A + log_partition_Z(law, p.beta, p.Theta));
    return p;
}

Eigen::VectorXd pack_entropic(const MassLaw& law, const EntropicState& a) {
    Eigen::VectorXd v(law.n + 3);
    for (int k = 0; k < law.n; ++k) v[k] = a.D[k];
    v[law.n] = a.A;
    v[law.n + 1] = a.B;
    v[law.n + 2] = a.C;
    return v;
}

EntropicState unpack_entropic(const MassLaw& law, const Eigen::VectorXd& v) {
    if (v.size() != law.n + 3)
        throw std::domain_error("unpack_entropic: vector length must be n+3");
    EntropicState a;
    for (int k = 0; k < law.n; ++k) a.D[k] = v[k];
    a.A = v[law.n];
    a.B = v[law.n + 1];
    a.C = v[law.n + 2];
    return a;
}

Eigen::VectorXd conserved_vector(const MassLaw& law, const ConservedState& c) {
    Eigen::VectorXd v(law.n + 3);
    for (int k = 0; k < law.n; ++k) v[k] = c.P[k];
    v[law.n] = c.N;
    v[law.n + 1] = c.rho;
    v[law.n + 2] = c.E;
    return v;
}

double massieu_sigma(const MassLaw& law, const EntropicState& a) {
    PrimitiveState p = prim_from_entropic(law, a);
    return p.rho * mean_inv_mass(law, p.beta);
}

Vec3 flux_potential_phi(const MassLaw& law, const EntropicState& a) {
    PrimitiveState p = prim_from_entropic(law, a);
    double sigma = p.rho * mean_inv_mass(law, p.beta);
    Vec3 out;
    for (int k = 0; k < law.n; ++k) out[k] = sigma * p.u[k];
    return out;
}

Eigen::MatrixXd hessian_sigma(const MassLaw& law, const EntropicState& a) {
    PrimitiveState p = prim_from_entropic(law, a);
    const int n = law.n;
    const double rho = p.rho;
    const double Th = p.Theta;
    const double im = mean_inv_mass(law, p.beta);
    const double mm = mean_mass(law, p.beta);
    const double u2 = axial_norm2(law, p.u);

    Eigen::MatrixXd H(n + 3, n + 3);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            H(i, j) = rho * (mm * p.u[i] * p.u[j] + (i == j ? Th : 0.0));
        H(i, n) = rho * p.u[i];
        H(i, n + 1) = rho * mm * p.u[i];
        H(i, n + 2) = rho * ((n + 2) * Th + mm * u2) * p.u[i];
    }
    H(n, n) = rho * im;
    H(n, n + 1) = rho;
    H(n, n + 2) = rho * (u2 + n * im * Th);
    H(n + 1, n + 1) = rho * mm;
    H(n + 1, n + 2) = rho * (u2 * mm + n * Th);
    H(n + 2, n + 2) = rho * ((n + 2) * Th * (n * Th * im + 2.0 * u2) + mm * u2 * u2);
    for (int i = 0; i < n + 3; ++i)
        for (int j = 0; j < i; ++j) H(i, j) = H(j, i);
    return H;
}

Eigen::MatrixXd reduced_hessian(const MassLaw& law, const PrimitiveState& p) {
    law.validate();
    if (!(p.Theta > 0.0)) throw std::domain_error("reduced_hessian: Theta > 0 violated");
    const int n = law.n;
    const double Th = p.Theta;
    const double im = mean_inv_mass(law, p.beta);
    const double mm = mean_mass(law, p.beta);
    const double r2 = axial_norm2(law, p.u);
    const double r = std::sqrt(r2);

    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(5, 5);
    S(0, 0) = Th;
    S(1, 1) = mm * r2 + Th;
    S(1, 2) = r;
    S(1, 3) = mm * r;
    S(1, 4) = ((n + 2) * Th + mm * r2) * r;
    S(2, 2) = im;
    S(2, 3) = 1.0;
    S(2, 4) = r2 + n * im * Th;
    S(3, 3) = mm;
    S(3, 4) = r2 * mm + n * Th;
    S(4, 4) = (n + 2) * Th * (n * Th * im + 2.0 * r2) + mm * r2 * r2;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < i; ++j) S(i, j) = S(j, i);
    return S;
}

std::array<double, 5> principal_minors(const MassLaw& law, const PrimitiveState& p) {
    law.validate();
    if (!(p.Theta > 0.0)) throw std::domain_error("principal_minors: Theta > 0 violated");
    const int n = law.n;
    const double Th = p.Theta;
    const double im = mean_inv_mass(law, p.beta);
    const double mm = mean_mass(law, p.beta);
    const double r2 = axial_norm2(law, p.u);
    const double gap = im * mm - 1.0;
    std::array<double, 5> d;
    d[0] = Th;
    d[1] = Th * (mm * r2 + Th);
    d[2] = Th * (gap * r2 + Th * im);
    d[3] = Th * Th * gap;
    d[4] = 2.0 * n * Th * Th * Th * Th * im * gap;
    return d;
}

double thermo_entropy(const MassLaw& law, const ConservedState& c) {
    PrimitiveState p = cons_to_prim(law, c);
    double im = mean_inv_mass(law, p.beta);
    double logZ = log_partition_Z(law, p.beta, p.Theta);
    return p.rho * (im * (std::log(p.rho) - logZ - 1.0 - 0.5 * law.n) + p.beta);
}

OnsagerMatrix onsager_X(const MassLaw& law, const PrimitiveState& p, double eps) {
    law.validate();
    TransportCoeffs tc = transport_coeffs(law, p);
    const int n = law.n;
    const int s = n + 3;
    const double Th = p.Theta;
    const double u2 = axial_norm2(law, p.u);

    OnsagerMatrix X;
    X.n = n;
    X.eps = eps;
    X.blocks.assign(static_cast<std::size_t>(s) * s, Eigen::MatrixXd::Zero(n, n));

    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Eigen::MatrixXd& M = X.block(a, b);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double val = 0.0;
                    if (i == j && a == b) val += 1.0;
                    if (i == b && j == a) val += 1.0;
                    if (i == a && j == b) val -= 2.0 / n;
                    M(i, j) = eps * tc.mu * Th * val;
                }
        }
    X.block(n, n) = eps * tc.nu * Eigen::MatrixXd::Identity(n, n);
    X.block(n, n + 2) = (n + 2) * eps * tc.nu * Th * Eigen::MatrixXd::Identity(n, n);
    X.block(n + 2, n) = X.block(n, n + 2).transpose();
    for (int a = 0; a < n; ++a) {
        Eigen::MatrixXd& M = X.block(a, n + 2);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double val = (i == j ? p.u[a] : 0.0);
                val += (j == a ? p.u[i] : 0.0);
                val -= (i == a ? 2.0 / n * p.u[j] : 0.0);
                M(i, j) = 2.0 * eps * tc.mu * Th * val;
            }
        X.block(n + 2, a) = M.transpose();
    }
    Eigen::MatrixXd& EE = X.block(n + 2, n + 2);
    double iso = ((n + 2) * (n + 2) * tc.nu * Th + 4.0 * tc.kappa * Th + 4.0 * tc.mu * u2);
    double aniso = 4.0 * (n - 2.0) / n * tc.mu;
    // group u_i u_j first so transposed entries are bitwise equal
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            EE(i, j) = eps * Th * ((i == j ? iso : 0.0) + aniso * (p.u[i] * p.u[j]));
    return X;
}

double X_quadratic_form_direct(const MassLaw& law, const PrimitiveState& p, double eps,
                               const std::vector<Vec3>& Y) {
    const int n = law.n;
    const int s = n + 3;
    if (Y.size() != static_cast<std::size_t>(s))
        throw std::domain_error("X_quadratic_form: Y must hold n+3 vectors");
    OnsagerMatrix X = onsager_X(law, p, eps);
    double total = 0.0;
    for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) {
            const Eigen::MatrixXd& M = X.block(a, b);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    total += Y[static_cast<std::size_t>(a)][i] * M(i, j) *
                             Y[static_cast<std::size_t>(b)][j];
        }
    return total;
}

double X_quadratic_form_sos(const MassLaw& law, const PrimitiveState& p, double eps,
                            const std::vector<Vec3>& Y) {
    const int n = law.n;
    const int s = n + 3;
    if (Y.size() != static_cast<std::size_t>(s))
        throw std::domain_error("X_quadratic_form: Y must hold n+3 vectors");
    TransportCoeffs tc = transport_coeffs(law, p);
    const double Th = p.Theta;
    const Vec3& Yp = Y[static_cast<std::size_t>(n)];      // population direction
    const Vec3& Ye = Y[static_cast<std::size_t>(n + 2)];  // energy direction

    double t1 = 0.0;
    for (int i = 0; i < n; ++i) {
        double c = Yp[i] + (n + 2) * Th * Ye[i];
        t1 += c * c;
    }
    t1 *= eps * tc.nu;

    double t2 = 4.0 * eps * tc.kappa * Th * Th * axial_norm2(law, Ye);

    double trY = 0.0, udotYe = 0.0;
    for (int j = 0; j < n; ++j) {
        trY += Y[static_cast<std::size_t>(j)][j];
        udotYe += p.u[j] * Ye[j];
    }
    double t3 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
            double dev = Y[static_cast<std::size_t>(a)][i] + Y[static_cast<std::size_t>(i)][a] -
                         (i == a ? 2.0 / n * trY : 0.0);
            dev += 2.0 * (p.u[i] * Ye[a] + p.u[a] * Ye[i] -
                          (i == a ? 2.0 / n * udotYe : 0.0));
            t3 += dev * dev;
        }
    t3 *= 0.5 * eps * tc.mu * Th;
    return t1 + t2 + t3;
}

std::vector<Eigen::VectorXd> entropic_rhs(const MassLaw& law,
                                          const std::vector<ConservedState>& states,
                                          const Grid1D& grid, double eps) {
    law.validate();
    if (grid.cells < 1 || static_cast<std::size_t>(grid.cells) != states.size())
        throw std::domain_error("entropic_rhs: grid.cells must match the state vector length");
    if (!(grid.dx > 0.0)) throw std::domain_error("entropic_rhs: dx must be positive");
    if (!(eps >= 0.0)) throw std::domain_error("entropic_rhs: eps must be >= 0");
    const int C = grid.cells;
    const int n = law.n;
    const int s = n + 3;

    std::vector<Eigen::VectorXd> avec(static_cast<std::size_t>(C));
    std::vector<double> Th(states.size()), ux(states.size()), mu(states.size()),
        ka(states.size()), nu(states.size());
    for (int i = 0; i < C; ++i) {
        PrimitiveState p = cons_to_prim(law, states[static_cast<std::size_t>(i)]);
        avec[static_cast<std::size_t>(i)] = pack_entropic(law, entropic_from_prim(law, p));
        TransportCoeffs tc = transport_coeffs(law, p);
        Th[static_cast<std::size_t>(i)] = p.Theta;
        ux[static_cast<std::size_t>(i)] = p.u[0];
        mu[static_cast<std::size_t>(i)] = tc.mu;
        ka[static_cast<std::size_t>(i)] = tc.kappa;
        nu[static_cast<std::size_t>(i)] = tc.nu;
    }

    std::vector<Eigen::VectorXd> flux(static_cast<std::size_t>(C) + 1);
    for (int k = 0; k <= C; ++k) {
        if (grid.bc == BoundaryKind::periodic && k == C) {
            flux[static_cast<std::size_t>(C)] = flux[0];
            break;
        }
        std::size_t l = static_cast<std::size_t>(wrap(k - 1, C, grid.bc));
        std::size_t r = static_cast<std::size_t>(wrap(k, C, grid.bc));
        Eigen::MatrixXd Xf = slab_X(n, eps, 0.5 * (mu[l] + mu[r]), 0.5 * (ka[l] + ka[r]),
                                    0.5 * (nu[l] + nu[r]), 0.5 * (Th[l] + Th[r]),
                                    0.5 * (ux[l] + ux[r]));
        Eigen::VectorXd grad = (avec[r] - avec[l]) / grid.dx;
        flux[static_cast<std::size_t>(k)] = Xf * grad;
    }

    std::vector<Eigen::VectorXd> rhs(static_cast<std::size_t>(C), Eigen::VectorXd::Zero(s));
    for (int i = 0; i < C; ++i)
        rhs[static_cast<std::size_t>(i)] =
            (flux[static_cast<std::size_t>(i) + 1] - flux[static_cast<std::size_t>(i)]) /
            grid.dx;
    return rhs;
}

double dissipation_rate(const MassLaw& law, const PrimitiveState& p, const Vec3& grad_chi,
                        const Vec3& grad_Theta, const Eigen::MatrixXd& sigma, double eps) {
    law.validate();
    if (sigma.rows() != law.n || sigma.cols() != law.n)
        throw std::domain_error("dissipation_rate: sigma must be n x n");
    TransportCoeffs tc = transport_coeffs(law, p);
    double gchi2 = axial_norm2(law, grad_chi);
    double gth2 = axial_norm2(law, grad_Theta);
    double ss = sigma.squaredNorm();
    return -eps * (tc.nu * gchi2 + tc.kappa * gth2 / (p.Theta * p.Theta) +
                   0.5 * tc.mu / p.Theta * ss);
}

Vec3 entropy_flux_tilde(const MassLaw& law, const PrimitiveState& p, const Vec3& grad_chi,
                        const Vec3& grad_Theta, double eps) {
    law.validate();
    TransportCoeffs tc = transport_coeffs(law, p);
    double im = mean_inv_mass(law, p.beta);
    double logZ = log_partition_Z(law, p.beta, p.Theta);
    double depth = std::log(p.rho) - logZ - 1.0 - 0.5 * law.n;
    double S = p.rho * (im * depth + p.beta);
    Vec3 out;
    for (int k = 0; k < law.n; ++k)
        out[k] = S * p.u[k] +
                 eps * (-tc.nu * depth * grad_chi[k] + tc.kappa * grad_Theta[k] / p.Theta);
    return out;
}

LinearizedRun linearized_energy_check(const MassLaw& law, const EntropicState& a0,
                                      const std::vector<Eigen::VectorXd>& perturbation,
                                      const Grid1D& grid, double eps,
                                      const LinearizedRunOptions& opts) {
    law.validate();
    const int n = law.n;
    const int s = n + 3;
    const int C = grid.cells;
    if (grid.bc != BoundaryKind::periodic)
        throw std::domain_error("linearized_energy_check: periodic boundaries required");
    if (C < 3 || static_cast<std::size_t>(C) != perturbation.size())
        throw std::domain_error("linearized_energy_check: need >= 3 cells matching the field");
    for (const Eigen::VectorXd& v : perturbation)
        if (v.size() != s)
            throw std::domain_error("linearized_energy_check: field entries must have length n+3");
    if (!(grid.dx > 0.0) || !(opts.dt > 0.0) || opts.steps < 1 || !(eps >= 0.0))
        throw std::domain_error("linearized_energy_check: bad grid, dt, steps, or eps");

    Eigen::MatrixXd H = hessian_sigma(law, a0);
    PrimitiveState p0 = prim_from_entropic(law, a0);
    OnsagerMatrix X = onsager_X(law, p0, eps);
    Eigen::MatrixXd Xs(s, s);
    for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) Xs(a, b) = X.block(a, b)(0, 0);

    // flux Jacobian in entropic variables by central differences, symmetrized
    Eigen::VectorXd v0 = pack_entropic(law, a0);
    auto flux_of = [&](const Eigen::VectorXd& v) {
        PrimitiveState p = prim_from_entropic(law, unpack_entropic(law, v));
        return conserved_vector(law, euler_flux(law, p));
    };
    Eigen::MatrixXd G(s, s);
    for (int j = 0; j < s; ++j) {
        double h = 1e-6 * (1.0 + std::abs(v0[j]));
        Eigen::VectorXd vp = v0, vm = v0;
        vp[j] += h;
        vm[j] -= h;
        G.col(j) = (flux_of(vp) - flux_of(vm)) / (2.0 * h);
    }
    G = 0.5 * (G + G.transpose()).eval();

    const int N = C * s;
    Eigen::MatrixXd Mp = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd Mm = Eigen::MatrixXd::Zero(N, N);
    const double c1 = 1.0 / (2.0 * grid.dx);
    const double c2 = 1.0 / (grid.dx * grid.dx);
    for (int i = 0; i < C; ++i) {
        int ip = (i + 1) % C;
        int im = (i + C - 1) % C;
        Mp.block(i * s, i * s, s, s) += H / opts.dt + Xs * c2;
        Mm.block(i * s, i * s, s, s) += H / opts.dt - Xs * c2;
        Eigen::MatrixXd off_p = G * c1 - Xs * c2;   // neighbor i+1
        Eigen::MatrixXd off_m = -G * c1 - Xs * c2;  // neighbor i-1
        Mp.block(i * s, ip * s, s, s) += 0.5 * off_p;
        Mp.block(i * s, im * s, s, s) += 0.5 * off_m;
        Mm.block(i * s, ip * s, s, s) -= 0.5 * off_p;
        Mm.block(i * s, im * s, s, s) -= 0.5 * off_m;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Mp);

    Eigen::VectorXd y(N);
    for (int i = 0; i < C; ++i) y.segment(i * s, s) = perturbation[static_cast<std::size_t>(i)];

    LinearizedRun run;
    auto record = [&]() {
        double e = 0.0, pn = 0.0;
        for (int i = 0; i < C; ++i) {
            Eigen::VectorXd yi = y.segment(i * s, s);
            e += yi.dot(H * yi);
            pn += yi.squaredNorm();
        }
        run.energy.push_back(0.5 * grid.dx * e);
        run.plain_norm.push_back(grid.dx * pn);
    };
    record();
    for (int k = 0; k < opts.steps; ++k) {
        y = lu.solve(Mm * y);
        record();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    double lmin = es.eigenvalues().minCoeff();
    double lmax = es.eigenvalues().maxCoeff();
    run.norm_bound = (lmin > 0.0) ? lmax / lmin : std::numeric_limits<double>::infinity();
    return run;
}

} // namespace kinex
