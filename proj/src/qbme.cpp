#include "kinex/errors.hpp"
#include "kinex/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>
#include <vector>

namespace kinex {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("KINEX_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

// Angular quadrature over the admissible half sphere, oriented per pair.
struct AngularRule {
    struct Node {
        double a = 0.0, b = 0.0, c = 0.0;  // coefficients on (g_hat, t1, t2)
        double weight = 0.0;
    };
    std::vector<Node> nodes;
};

AngularRule make_angular_rule(int n, int N_omega) {
    AngularRule rule;
    if (n == 1) {
        rule.nodes.push_back({-1.0, 0.0, 0.0, 1.0});
    } else if (n == 2) {
        // trapezoid on the half circle theta in [pi/2, 3pi/2] measured from g_hat
        double dth = kPi / N_omega;
        for (int l = 0; l <= N_omega; ++l) {
            double th = 0.5 * kPi + l * dth;
            double w = (l == 0 || l == N_omega) ? 0.5 * dth : dth;
            rule.nodes.push_back({std::cos(th), std::sin(th), 0.0, w});
        }
    } else {
        // product midpoint rule on the cap: polar cosine c in (0,1], azimuth psi
        int N_c = std::max(2, N_omega / 4);
        int N_psi = std::max(4, N_omega / 2);
        for (int p = 0; p < N_c; ++p) {
            double c = (p + 0.5) / N_c;
            double s = std::sqrt(std::max(0.0, 1.0 - c * c));
            for (int q = 0; q < N_psi; ++q) {
                double psi = 2.0 * kPi * (q + 0.5) / N_psi;
                rule.nodes.push_back({-c, s * std::cos(psi), s * std::sin(psi),
                                      (1.0 / N_c) * (2.0 * kPi / N_psi)});
            }
        }
    }
    return rule;
}

// Moment-corrected deposit stencil around an off-grid velocity. Base weights
// are multilinear on the surrounding cell; a minimum-norm correction over the
// 4-per-axis neighborhood restores the 1, v and |v|^2 balances exactly.
struct Stencil {
    int count = 0;
    int nodes[64];
    double w[64];
};

// Cholesky solve of the tiny SPD system M z = r (dim <= 5), in place.
bool solve_spd(double M[5][5], double r[5], int dim) {
    double scale = 0.0;
    for (int k = 0; k < dim; ++k) scale = std::max(scale, std::abs(M[k][k]));
    if (!(scale > 0.0)) return false;
    for (int k = 0; k < dim; ++k) {
        double d = M[k][k];
        for (int j = 0; j < k; ++j) d -= M[k][j] * M[k][j];
        if (d <= 1e-12 * scale) return false;
        d = std::sqrt(d);
        M[k][k] = d;
        for (int i = k + 1; i < dim; ++i) {
            double s = M[i][k];
            for (int j = 0; j < k; ++j) s -= M[i][j] * M[k][j];
            M[i][k] = s / d;
        }
    }
    for (int i = 0; i < dim; ++i) {
        double s = r[i];
        for (int j = 0; j < i; ++j) s -= M[i][j] * r[j];
        r[i] = s / M[i][i];
    }
    for (int i = dim - 1; i >= 0; --i) {
        double s = r[i];
        for (int j = i + 1; j < dim; ++j) s -= M[j][i] * r[j];
        r[i] = s / M[i][i];
    }
    return true;
}

bool build_stencil(const VelocityGrid& grid, const Vec3& v, Stencil& st) {
    const int n = grid.dim();
    const int Nv = grid.per_axis();
    const double h = grid.spacing();

    int k0[3] = {0, 0, 0};
    double xi[3] = {0.0, 0.0, 0.0};
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int d = 0; d < n; ++d) {
        double s = (v[d] + grid.vmax()) / h - 0.5;
        if (s < -1e-9 || s > Nv - 1 + 1e-9) return false;  // outside the node hull
        s = std::clamp(s, 0.0, static_cast<double>(Nv - 1));
        int k = static_cast<int>(std::floor(s));
        if (k > Nv - 2) k = Nv - 2;
        k0[d] = k;
        xi[d] = s - k;
        lo[d] = std::max(0, k - 1);
        hi[d] = std::min(Nv - 1, k + 2);
    }

    // collect stencil nodes with scaled offsets t = (index - k0) - xi
    int dim = n + 2;
    double M[5][5] = {};
    double r[5] = {};
    double tloc[64][3];
    st.count = 0;
    int span[3] = {hi[0] - lo[0] + 1, n > 1 ? hi[1] - lo[1] + 1 : 1, n > 2 ? hi[2] - lo[2] + 1 : 1};
    for (int c2 = 0; c2 < span[2]; ++c2)
        for (int c1 = 0; c1 < span[1]; ++c1)
            for (int c0 = 0; c0 < span[0]; ++c0) {
                int idx3[3] = {lo[0] + c0, lo[1] + c1, lo[2] + c2};
                int s = st.count++;
                st.nodes[s] = grid.flat(idx3[0], n > 1 ? idx3[1] : 0, n > 2 ? idx3[2] : 0);
                double b[5];
                b[0] = 1.0;
                double q = 0.0;
                for (int d = 0; d < n; ++d) {
                    double t = (idx3[d] - k0[d]) - xi[d];
                    tloc[s][d] = t;
                    b[1 + d] = t;
                    q += t * t;
                }
                b[n + 1] = q;
                for (int a = 0; a < dim; ++a)
                    for (int bb = 0; bb <= a; ++bb) M[a][bb] += b[a] * b[bb];
                // base multilinear weight on the inner cell
                double wbase = 1.0;
                bool inner = true;
                for (int d = 0; d < n; ++d) {
                    int off = idx3[d] - k0[d];
                    if (off == 0) wbase *= 1.0 - xi[d];
                    else if (off == 1) wbase *= xi[d];
                    else { inner = false; break; }
                }
                st.w[s] = inner ? wbase : 0.0;
            }
    for (int a = 0; a < dim; ++a)
        for (int bb = a + 1; bb < dim; ++bb) M[a][bb] = M[bb][a];

    // defect of the base weights: exact on 1 and v, short on |v|^2 by xi(1-xi) per axis
    double defect = 0.0;
    for (int d = 0; d < n; ++d) defect += xi[d] * (1.0 - xi[d]);
    r[n + 1] = -defect;

    if (!solve_spd(M, r, dim)) return false;
    for (int s = 0; s < st.count; ++s) {
        double q = 0.0, lin = 0.0;
        for (int d = 0; d < n; ++d) {
            lin += r[1 + d] * tloc[s][d];
            q += tloc[s][d] * tloc[s][d];
        }
        double wc = st.w[s] + r[0] + lin + r[n + 1] * q;
        if (std::abs(wc) > 32.0) return false;
        st.w[s] = wc;
    }
    return true;
}

struct ChannelGeom {
    int m_out, m_other;
    double fac_out, fac_other;  // prefactors of the deflected relative velocity
};

struct WorkerAccum {
    std::vector<double> Q;
    std::vector<double> gain;
    double D = 0.0;
};

} // namespace

QbmeResult qbme_assemble(const MassLaw& law, const VelocityGrid& grid, const double* f,
                         const Kernel& kernel, const QbmeOptions& opts) {
    law.validate();
    kernel.validate();
    if (law.n != grid.dim())
        throw std::domain_error("qbme: law.n must match grid dimension");
    const int n = law.n;
    const int T = grid.total();
    const int M = law.M_max;
    const double w = grid.weight();
    const double inv_w = 1.0 / w;

    AngularRule rule = make_angular_rule(n, opts.N_omega);
    const int n_ang = static_cast<int>(rule.nodes.size());

    // channel table and cost guard
    std::vector<std::vector<ChannelGeom>> chans(static_cast<std::size_t>(M) * M);
    double predicted = 0.0;
    for (int m = 1; m <= M; ++m)
        for (int m1 = 1; m1 <= M; ++m1) {
            auto& list = chans[static_cast<std::size_t>(m - 1) * M + (m1 - 1)];
            double base = std::sqrt(static_cast<double>(m) * m1) / (m + m1);
            for (int mo : allowed_channels(law, m, m1)) {
                int mo1 = m + m1 - mo;
                list.push_back({mo, mo1,
                                base * std::sqrt(static_cast<double>(mo1) / mo),
                                base * std::sqrt(static_cast<double>(mo) / mo1)});
            }
            predicted += static_cast<double>(list.size()) * T * T * n_ang;
        }
    if (predicted > 1e9) {
        std::ostringstream os;
        os << "qbme: predicted " << predicted << " interaction tuples exceeds the 1e9 cost guard";
        throw std::domain_error(os.str());
    }

    // negative entries are inadmissible; zeros are floored inside the logs only
    const std::size_t len = static_cast<std::size_t>(M) * T;
    for (std::size_t k = 0; k < len; ++k)
        if (f[k] < 0.0)
            throw std::domain_error("qbme: f >= 0 violated");

    // psi[m][i] = log(gamma_m f / m^{n/2}) with the 1e-300 floor
    std::vector<double> psi(len);
    for (int m = 1; m <= M; ++m) {
        double shift = std::log(law.gamma_of(m)) - 0.5 * n * std::log(static_cast<double>(m));
        const double* fm = f + static_cast<std::size_t>(T) * (m - 1);
        double* pm = psi.data() + static_cast<std::size_t>(T) * (m - 1);
        for (int i = 0; i < T; ++i) pm[i] = std::log(std::max(fm[i], 1e-300)) + shift;
    }

    std::vector<double> mass_pref(static_cast<std::size_t>(M) * M);
    for (int m = 1; m <= M; ++m)
        for (int m1 = 1; m1 <= M; ++m1)
            mass_pref[static_cast<std::size_t>(m - 1) * M + (m1 - 1)] =
                std::pow(static_cast<double>(m) * m1, 0.5 * n);

    const int workers = resolve_workers(opts.workers);
    std::vector<WorkerAccum> acc(static_cast<std::size_t>(workers));

    auto run_block = [&](int wid, int p_begin, int p_end) {
        WorkerAccum& a = acc[static_cast<std::size_t>(wid)];
        a.Q.assign(len, 0.0);
        if (opts.want_gain_norm) a.gain.assign(len, 0.0);
        Stencil sten_a, sten_b;
        for (int p1 = p_begin; p1 < p_end; ++p1) {
            const int m = p1 / T + 1;
            const int i = p1 % T;
            const Vec3 vi = grid.node(i);
            const double psi_i = psi[static_cast<std::size_t>(p1)];
            for (int m1 = 1; m1 <= M; ++m1) {
                const auto& list = chans[static_cast<std::size_t>(m - 1) * M + (m1 - 1)];
                if (list.empty()) continue;
                const double mm_pref = mass_pref[static_cast<std::size_t>(m - 1) * M + (m1 - 1)];
                const double* psi1 = psi.data() + static_cast<std::size_t>(T) * (m1 - 1);
                const double inv_msum = 1.0 / (m + m1);
                const double mu_red = static_cast<double>(m) * m1 * inv_msum;
                for (int j = 0; j < T; ++j) {
                    Vec3 g = vi - grid.node(j);
                    double g2 = norm2(g);
                    if (g2 == 0.0) continue;
                    double E_red = mu_red * g2;
                    double B_val = (kernel.kind == Kernel::Kind::maxwell)
                                       ? kernel.C_B
                                       : kernel.C_B * std::pow(E_red, kernel.omega_exp);
                    double pair_pref = 0.25 * mm_pref * B_val * w * w;
                    double lb = psi_i + psi1[j];
                    double b = std::exp(lb);
                    Vec3 vcm = inv_msum * (static_cast<double>(m) * vi +
                                           static_cast<double>(m1) * grid.node(j));
                    double gn = std::sqrt(g2);
                    Vec3 ghat = (1.0 / gn) * g;
                    // orthonormal frame completing g_hat
                    Vec3 t1{}, t2{};
                    if (n == 2) {
                        t1 = Vec3{-ghat[1], ghat[0], 0.0};
                    } else if (n == 3) {
                        int least = 0;
                        for (int d = 1; d < 3; ++d)
                            if (std::abs(ghat[d]) < std::abs(ghat[least])) least = d;
                        Vec3 e{};
                        e[least] = 1.0;
                        t1 = e - dot(e, ghat) * ghat;
                        t1 = (1.0 / norm(t1)) * t1;
                        t2 = Vec3{ghat[1] * t1[2] - ghat[2] * t1[1],
                                  ghat[2] * t1[0] - ghat[0] * t1[2],
                                  ghat[0] * t1[1] - ghat[1] * t1[0]};
                    }
                    for (const auto& node : rule.nodes) {
                        Vec3 omega = node.a * ghat + node.b * t1 + node.c * t2;
                        Vec3 defl = g - (2.0 * dot(g, omega)) * omega;
                        const double W_T = pair_pref * node.weight;
                        for (const auto& ch : list) {
                            Vec3 vp = vcm + ch.fac_out * defl;
                            Vec3 vp1 = vcm - ch.fac_other * defl;
                            if (!build_stencil(grid, vp, sten_a)) continue;
                            if (!build_stencil(grid, vp1, sten_b)) continue;
                            const double* psi_a = psi.data() + static_cast<std::size_t>(T) * (ch.m_out - 1);
                            const double* psi_b = psi.data() + static_cast<std::size_t>(T) * (ch.m_other - 1);
                            double la = 0.0;
                            for (int s = 0; s < sten_a.count; ++s)
                                la += sten_a.w[s] * psi_a[sten_a.nodes[s]];
                            for (int s = 0; s < sten_b.count; ++s)
                                la += sten_b.w[s] * psi_b[sten_b.nodes[s]];
                            double aa = std::exp(la);
                            double G = W_T * (aa - b);
                            a.D -= W_T * (la - lb) * (aa - b);
                            double dep = G * inv_w;
                            a.Q[static_cast<std::size_t>(p1)] += dep;
                            a.Q[static_cast<std::size_t>(T) * (m1 - 1) + j] += dep;
                            double* Qa = a.Q.data() + static_cast<std::size_t>(T) * (ch.m_out - 1);
                            double* Qb = a.Q.data() + static_cast<std::size_t>(T) * (ch.m_other - 1);
                            for (int s = 0; s < sten_a.count; ++s)
                                Qa[sten_a.nodes[s]] -= dep * sten_a.w[s];
                            for (int s = 0; s < sten_b.count; ++s)
                                Qb[sten_b.nodes[s]] -= dep * sten_b.w[s];
                            if (opts.want_gain_norm) {
                                double gd = W_T * aa * inv_w;
                                a.gain[static_cast<std::size_t>(p1)] += gd;
                                a.gain[static_cast<std::size_t>(T) * (m1 - 1) + j] += gd;
                            }
                        }
                    }
                }
            }
        }
    };

    const int total_p1 = M * T;
    if (workers == 1) {
        run_block(0, 0, total_p1);
    } else {
        std::vector<std::thread> pool;
        int chunk = (total_p1 + workers - 1) / workers;
        for (int wid = 0; wid < workers; ++wid) {
            int b = std::min(total_p1, wid * chunk);
            int e = std::min(total_p1, b + chunk);
            pool.emplace_back(run_block, wid, b, e);
        }
        for (auto& th : pool) th.join();
    }

    QbmeResult out;
    out.Q.assign(len, 0.0);
    std::vector<double> gain_field;
    if (opts.want_gain_norm) gain_field.assign(len, 0.0);
    for (const auto& a : acc) {
        for (std::size_t k = 0; k < len; ++k) out.Q[k] += a.Q[k];
        if (opts.want_gain_norm)
            for (std::size_t k = 0; k < len; ++k) gain_field[k] += a.gain[k];
        out.entropy_production += a.D;
    }
    if (opts.want_gain_norm) {
        double g1 = 0.0;
        for (std::size_t k = 0; k < len; ++k) g1 += std::abs(gain_field[k]);
        out.gain_l1 = g1 * w;
    }
    return out;
}

std::vector<double> q_bme(const KineticState& st, const Kernel& kernel, const QbmeOptions& opts,
                          int cell) {
    return qbme_assemble(st.law, st.grid, st.cell_data(cell), kernel, opts).Q;
}

double entropy_production(const KineticState& st, const Kernel& kernel, const QbmeOptions& opts,
                          int cell) {
    const double* f = st.cell_data(cell);
    const std::size_t len = st.cell_stride();
    for (std::size_t k = 0; k < len; ++k)
        if (!(f[k] > 0.0))
            throw std::domain_error("entropy_production: f > 0 entrywise violated");
    return qbme_assemble(st.law, st.grid, f, kernel, opts).entropy_production;
}

} // namespace kinex
