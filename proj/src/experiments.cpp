#include "kinex/experiments.hpp"

#include "kinex/dsmc.hpp"
#include "kinex/errors.hpp"
#include "kinex/rng.hpp"
#include "kinex/thermo.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

namespace kinex {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

void append_num(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void append_int(std::string& out, long long v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%lld", v);
    out += buf;
}

// One CSV row at a time; col() separates, nl() terminates.
struct Row {
    std::string& out;
    bool first = true;
    Row& col(double v) {
        if (!first) out += ',';
        append_num(out, v);
        first = false;
        return *this;
    }
    Row& col(long long v) {
        if (!first) out += ',';
        append_int(out, v);
        first = false;
        return *this;
    }
    Row& col(int v) { return col(static_cast<long long>(v)); }
    void nl() { out += '\n'; }
};

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << body;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string opath(const Scenario& scn, const std::string& name) {
    return scn.output_dir + "/" + name;
}

void emit(RunResult& res, const Scenario& scn, const std::string& name, const std::string& body) {
    const std::string p = opath(scn, name);
    write_file(p, body);
    res.outputs.push_back(p);
}

void emit_json(RunResult& res, const Scenario& scn, const std::string& name, const json& doc) {
    emit(res, scn, name, doc.dump(2) + "\n");
}

// --- initial-condition block parsing -------------------------------------
// Mirrors the top-level validation style: every error names its key path.

[[noreturn]] void ic_fail(const std::string& path, const std::string& msg) {
    throw std::domain_error("scenario config: /ic" + path + ": " + msg);
}

void ic_check_keys(const json& j, const std::string& path,
                   std::initializer_list<const char*> allowed) {
    if (!j.is_object()) ic_fail(path.empty() ? "" : path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = std::any_of(allowed.begin(), allowed.end(),
                                 [&](const char* k) { return it.key() == k; });
        if (!known) ic_fail(path + "/" + it.key(), "unknown key");
    }
}

double ic_num(const json& j, const std::string& path, const char* key, double fb) {
    if (!j.contains(key)) return fb;
    const json& v = j.at(key);
    if (!v.is_number()) ic_fail(path + "/" + key, "expected a number");
    return v.get<double>();
}

double ic_require_num(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) ic_fail(path + "/" + key, "required");
    return ic_num(j, path, key, 0.0);
}

int ic_int(const json& j, const std::string& path, const char* key, int fb) {
    if (!j.contains(key)) return fb;
    const json& v = j.at(key);
    if (!v.is_number_integer()) ic_fail(path + "/" + key, "expected an integer");
    return v.get<int>();
}

std::string ic_str(const json& j, const std::string& path, const char* key,
                   const std::string& fb) {
    if (!j.contains(key)) return fb;
    const json& v = j.at(key);
    if (!v.is_string()) ic_fail(path + "/" + key, "expected a string");
    return v.get<std::string>();
}

// A velocity may be given as a bare number (x component) or an array of up to
// three numbers; components beyond the active dimension must be zero.
Vec3 ic_vec(const json& j, const std::string& path, const char* key, int n, const Vec3& fb) {
    if (!j.contains(key)) return fb;
    const json& v = j.at(key);
    Vec3 r{};
    if (v.is_number()) {
        r[0] = v.get<double>();
    } else if (v.is_array() && !v.empty() && v.size() <= 3) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) ic_fail(path + "/" + key, "expected numbers");
            r[static_cast<int>(i)] = v[i].get<double>();
        }
    } else {
        ic_fail(path + "/" + key, "expected a number or an array of up to 3 numbers");
    }
    for (int i = n; i < 3; ++i)
        if (r[i] != 0.0) ic_fail(path + "/" + key, "component beyond the velocity dimension");
    return r;
}

// --- smooth periodic profile ---------------------------------------------

struct SmoothSpec {
    double rho0 = 1.0, drho = 0.2;
    double u0 = 0.0, du = 0.1;
    double Theta0 = 1.0, dTheta = 0.0;
    double beta0 = 0.0, dbeta = 0.3;
};

SmoothSpec smooth_from_ic(const json& ic, const std::string& path) {
    SmoothSpec s;
    s.rho0 = ic_num(ic, path, "rho0", s.rho0);
    s.drho = ic_num(ic, path, "drho", s.drho);
    s.u0 = ic_num(ic, path, "u0", s.u0);
    s.du = ic_num(ic, path, "du", s.du);
    s.Theta0 = ic_num(ic, path, "Theta0", s.Theta0);
    s.dTheta = ic_num(ic, path, "dTheta", s.dTheta);
    s.beta0 = ic_num(ic, path, "beta0", s.beta0);
    s.dbeta = ic_num(ic, path, "dbeta", s.dbeta);
    if (s.rho0 - std::abs(s.drho) <= 0.0) ic_fail(path, "rho must stay positive");
    if (s.Theta0 - std::abs(s.dTheta) <= 0.0) ic_fail(path, "Theta must stay positive");
    return s;
}

// distinct phases keep the four fields out of lockstep
MacroFields smooth_fields(const SmoothSpec& s, double t) {
    MacroFields f;
    f.rho = s.rho0 + s.drho * std::sin(t);
    f.u = Vec3{s.u0 + s.du * std::sin(t + 1.7), 0.0, 0.0};
    f.Theta = s.Theta0 + s.dTheta * std::sin(t + 0.6);
    f.beta = s.beta0 + s.dbeta * std::cos(t);
    return f;
}

std::array<double, 4> smooth_derivs(const SmoothSpec& s, double t, double dt_dx) {
    return {s.drho * std::cos(t) * dt_dx, s.du * std::cos(t + 1.7) * dt_dx,
            s.dTheta * std::cos(t + 0.6) * dt_dx, -s.dbeta * std::sin(t) * dt_dx};
}

// --- shared fluid writers -------------------------------------------------

std::string fluid_snapshot_csv(const MassLaw& law, const std::vector<ConservedState>& states,
                               double x_min, double dx) {
    std::string out = "x,rho,u,Theta,beta,N,E,S,chi,mu,kappa,nu\n";
    for (std::size_t i = 0; i < states.size(); ++i) {
        const ConservedState& c = states[i];
        PrimitiveState p = cons_to_prim(law, c);
        TransportCoeffs tc = transport_coeffs(law, p);
        Row r{out};
        r.col(x_min + (static_cast<double>(i) + 0.5) * dx)
            .col(p.rho)
            .col(p.u[0])
            .col(p.Theta)
            .col(p.beta)
            .col(c.N)
            .col(c.E)
            .col(thermo_entropy(law, c))
            .col(population_potential_chi(law, p))
            .col(tc.mu)
            .col(tc.kappa)
            .col(tc.nu);
        r.nl();
    }
    return out;
}

struct FluidTotals {
    double N = 0.0, rho = 0.0, Px = 0.0, E = 0.0, S = 0.0;
};

FluidTotals fluid_totals(const MassLaw& law, const std::vector<ConservedState>& states,
                         double dx) {
    FluidTotals t;
    for (const ConservedState& c : states) {
        t.N += c.N * dx;
        t.rho += c.rho * dx;
        t.Px += c.P[0] * dx;
        t.E += c.E * dx;
        t.S += thermo_entropy(law, c) * dx;
    }
    return t;
}

json totals_json(const FluidTotals& t) {
    return json{{"N", t.N}, {"rho", t.rho}, {"P_x", t.Px}, {"E", t.E}, {"S", t.S}};
}

double rel_drift(double now, double init) {
    return std::abs(now - init) / (std::abs(init) + 1e-300);
}

// --- collide_demo ---------------------------------------------------------

void run_collide_demo(const Scenario& scn, RunResult& res) {
    const MassLaw& law = scn.law;
    const int n = law.n;
    ic_check_keys(scn.ic, "", {"m", "m1", "v", "v1", "count"});
    const int m = ic_int(scn.ic, "", "m", 1);
    const int m1 = ic_int(scn.ic, "", "m1", 1);
    const int count = ic_int(scn.ic, "", "count", 8);
    if (m < 1 || m > law.M_max) ic_fail("/m", "must lie on the mass ladder");
    if (m1 < 1 || m1 > law.M_max) ic_fail("/m1", "must lie on the mass ladder");
    if (count < 1) ic_fail("/count", "must be >= 1");
    Particle p{m, ic_vec(scn.ic, "", "v", n, Vec3{1.0, 0.0, 0.0})};
    Particle q{m1, ic_vec(scn.ic, "", "v1", n, Vec3{-1.0, 0.0, 0.0})};
    Vec3 g = p.v - q.v;
    if (norm(g) == 0.0) ic_fail("", "v and v1 must differ");

    const double e_red = reduced_energy(p, q);
    const Vec3 vc = com_velocity(p, q);
    const double mom_scale = m * norm(p.v) + m1 * norm(q.v) + 1e-300;
    const double en_scale = m * norm2(p.v) + m1 * norm2(q.v) + 1e-300;

    Philox rng(scn.seed, 11);
    std::string csv =
        "sample,m_out,omega_x,omega_y,omega_z,m_a,v_a_x,v_a_y,v_a_z,m_b,v_b_x,v_b_y,v_b_z,"
        "rate_A,kernel_B,d_mass,d_momentum,d_energy,roundtrip\n";
    std::vector<int> channels = allowed_channels(law, m, m1);
    for (int m_out : channels) {
        for (int s = 0; s < count; ++s) {
            Vec3 omega = sample_omega(rng, g, n);
            CollisionChannel ch{m_out, omega};
            auto [pa, pb] = collide_forward(p, q, ch);
            Vec3 dP = static_cast<double>(m) * p.v + static_cast<double>(m1) * q.v -
                      static_cast<double>(pa.m) * pa.v - static_cast<double>(pb.m) * pb.v;
            double dE = m * norm2(p.v) + m1 * norm2(q.v) - pa.m * norm2(pa.v) -
                        pb.m * norm2(pb.v);
            auto [ra, rb] = collide_inverse(pa, pb, CollisionChannel{m, (-1.0) * omega});
            double rt = (norm(ra.v - p.v) + norm(rb.v - q.v)) / (norm(p.v) + norm(q.v) + 1.0) +
                        std::abs(ra.m - p.m) + std::abs(rb.m - q.m);
            Row r{csv};
            r.col(s)
                .col(m_out)
                .col(omega[0])
                .col(omega[1])
                .col(omega[2])
                .col(pa.m)
                .col(pa.v[0])
                .col(pa.v[1])
                .col(pa.v[2])
                .col(pb.m)
                .col(pb.v[0])
                .col(pb.v[1])
                .col(pb.v[2])
                .col(channel_rate_A(law, m, m1, m_out))
                .col(kernel_B(scn.kernel, e_red))
                .col(static_cast<double>(pa.m + pb.m - m - m1))
                .col(norm(dP) / mom_scale)
                .col(std::abs(dE) / en_scale)
                .col(rt);
            r.nl();
        }
    }
    emit(res, scn, "collide_demo.csv", csv);

    json doc;
    doc["pair"] = {{"m", m}, {"m1", m1}, {"v", {p.v[0], p.v[1], p.v[2]}},
                   {"v1", {q.v[0], q.v[1], q.v[2]}}};
    doc["reduced_energy"] = e_red;
    doc["com_velocity"] = {vc[0], vc[1], vc[2]};
    doc["channels"] = channels;
    doc["samples_per_channel"] = count;
    emit_json(res, scn, "collide_demo.json", doc);
}

// --- qeval ----------------------------------------------------------------

void run_qeval(const Scenario& scn, RunResult& res) {
    const MassLaw& law = scn.law;
    ic_check_keys(scn.ic, "", {"rho", "u", "Theta", "beta", "amp"});
    MacroFields mac;
    mac.rho = ic_num(scn.ic, "", "rho", 1.0);
    mac.u = ic_vec(scn.ic, "", "u", law.n, Vec3{});
    mac.Theta = ic_num(scn.ic, "", "Theta", 1.0);
    mac.beta = ic_num(scn.ic, "", "beta", 0.0);
    const double amp = ic_num(scn.ic, "", "amp", 0.3);
    if (mac.rho <= 0.0) ic_fail("/rho", "must be > 0");
    if (mac.Theta <= 0.0) ic_fail("/Theta", "must be > 0");
    if (amp < 0.0 || amp >= 1.0) ic_fail("/amp", "must lie in [0, 1)");

    VelocityGrid grid(law.n, scn.N_v, scn.v_max);
    KineticState st(law, grid, 1);
    std::vector<double> fM = discrete_maxwellian(law, grid, mac);
    for (int m = 1; m <= law.M_max; ++m)
        for (int k = 0; k < grid.total(); ++k)
            st.at(0, m, k) =
                fM[static_cast<std::size_t>((m - 1) * grid.total() + k)] *
                (1.0 + amp * std::sin(2.0 * grid.node(k)[0]));

    QbmeOptions opts;
    opts.N_omega = scn.N_omega;
    opts.workers = scn.workers;
    opts.want_gain_norm = true;
    QbmeResult qr = qbme_assemble(law, grid, st.cell_data(0), scn.kernel, opts);
    RawMoments mq = raw_moments(law, grid, qr.Q.data());

    write_kinetic_csv(st, opath(scn, "qeval_f.csv"), opath(scn, "qeval_f.json"));
    res.outputs.push_back(opath(scn, "qeval_f.csv"));
    res.outputs.push_back(opath(scn, "qeval_f.json"));
    KineticState qst = st;
    qst.f = qr.Q;
    write_kinetic_csv(qst, opath(scn, "qeval_Q.csv"), opath(scn, "qeval_Q.json"));
    res.outputs.push_back(opath(scn, "qeval_Q.csv"));
    res.outputs.push_back(opath(scn, "qeval_Q.json"));

    const double scale = qr.gain_l1 + 1e-300;
    json doc;
    doc["state"] = {{"rho", mac.rho},
                    {"u", {mac.u[0], mac.u[1], mac.u[2]}},
                    {"Theta", mac.Theta},
                    {"beta", mac.beta},
                    {"amp", amp}};
    doc["gain_l1"] = qr.gain_l1;
    doc["entropy_production"] = qr.entropy_production;
    doc["moment_residuals"] = {{"number", mq.N},
                               {"mass", mq.rho},
                               {"momentum", {mq.P[0], mq.P[1], mq.P[2]}},
                               {"energy", mq.E}};
    doc["relative_residuals"] = {{"number", std::abs(mq.N) / scale},
                                 {"mass", std::abs(mq.rho) / scale},
                                 {"momentum", norm(mq.P) / scale},
                                 {"energy", std::abs(mq.E) / scale}};
    emit_json(res, scn, "qeval_summary.json", doc);
}

// --- relax_bgk ------------------------------------------------------------

void run_relax_bgk(const Scenario& scn, RunResult& res) {
    const MassLaw& law = scn.law;
    if (scn.eps <= 0.0)
        throw std::domain_error("scenario config: /eps: relax_bgk requires eps > 0");
    ic_check_keys(scn.ic, "", {"kind", "rho", "u", "Theta", "beta", "amp"});
    const std::string kind = ic_str(scn.ic, "", "kind", "perturbed");
    if (kind != "perturbed" && kind != "random")
        ic_fail("/kind", "expected perturbed or random");
    MacroFields mac;
    mac.rho = ic_num(scn.ic, "", "rho", 1.0);
    mac.u = ic_vec(scn.ic, "", "u", law.n, Vec3{});
    mac.Theta = ic_num(scn.ic, "", "Theta", 1.0);
    mac.beta = ic_num(scn.ic, "", "beta", 0.0);
    const double amp = ic_num(scn.ic, "", "amp", 0.5);
    if (mac.rho <= 0.0) ic_fail("/rho", "must be > 0");
    if (mac.Theta <= 0.0) ic_fail("/Theta", "must be > 0");
    if (amp < 0.0 || amp >= 1.0) ic_fail("/amp", "must lie in [0, 1)");

    VelocityGrid grid(law.n, scn.N_v, scn.v_max);
    KineticState st(law, grid, 1);
    std::vector<double> fM = discrete_maxwellian(law, grid, mac);
    Philox rng(scn.seed, 12);
    for (int m = 1; m <= law.M_max; ++m)
        for (int k = 0; k < grid.total(); ++k) {
            double factor = kind == "perturbed"
                                ? 1.0 + amp * std::sin(2.0 * grid.node(k)[0])
                                : 1.0 + amp * (2.0 * rng.next_double() - 1.0);
            st.at(0, m, k) =
                fM[static_cast<std::size_t>((m - 1) * grid.total() + k)] * factor;
        }

    const double dt = scn.dt > 0.0 ? scn.dt : scn.eps / 4.0;
    const int steps =
        scn.steps > 0 ? scn.steps
                      : std::max(1, static_cast<int>(std::ceil(scn.t_end / dt - 1e-9)));

    RawMoments mom0 = raw_moments(st, 0);
    MacroFields mac0 = macro_from_moments(law, mom0);
    std::vector<double> fstar = discrete_maxwellian(law, grid, mac0);
    const double mom_scale = mom0.rho * (norm(mac0.u) + std::sqrt(mac0.Theta)) + 1e-300;

    std::string csv = "step,time";
    csv += ",rho";
    for (int i = 0; i < law.n; ++i) csv += std::string(",u_") + "xyz"[i];
    csv += ",Theta,beta,entropy,residual_l1,drift_number,drift_mass,drift_momentum,drift_energy\n";

    auto push_sample = [&](int step, double time) {
        RawMoments mom = raw_moments(st, 0);
        MacroFields mc = macro_from_moments(law, mom);
        double resid = 0.0;
        for (std::size_t i = 0; i < st.f.size(); ++i)
            resid += std::abs(st.f[i] - fstar[i]);
        resid *= grid.weight();
        Row r{csv};
        r.col(step).col(time).col(mc.rho);
        for (int i = 0; i < law.n; ++i) r.col(mc.u[i]);
        r.col(mc.Theta)
            .col(mc.beta)
            .col(kinetic_entropy(st, 0))
            .col(resid)
            .col(rel_drift(mom.N, mom0.N))
            .col(rel_drift(mom.rho, mom0.rho))
            .col(norm(mom.P - mom0.P) / mom_scale)
            .col(rel_drift(mom.E, mom0.E));
        r.nl();
    };

    const int every = scn.output_every > 0 ? scn.output_every : 1;
    push_sample(0, 0.0);
    for (int s = 1; s <= steps; ++s) {
        bgk_step_homogeneous(st, dt, scn.eps);
        if (s % every == 0 || s == steps) push_sample(s, s * dt);
    }
    emit(res, scn, "relax_bgk.csv", csv);

    RawMoments momf = raw_moments(st, 0);
    json doc;
    doc["kind"] = kind;
    doc["dt"] = dt;
    doc["steps"] = steps;
    doc["eps"] = scn.eps;
    doc["initial"] = {{"rho", mac0.rho}, {"Theta", mac0.Theta}, {"beta", mac0.beta}};
    doc["final_drift"] = {{"number", rel_drift(momf.N, mom0.N)},
                          {"mass", rel_drift(momf.rho, mom0.rho)},
                          {"momentum", norm(momf.P - mom0.P) / mom_scale},
                          {"energy", rel_drift(momf.E, mom0.E)}};
    emit_json(res, scn, "relax_bgk.json", doc);
}

// --- relax_dsmc -----------------------------------------------------------

void run_relax_dsmc(const Scenario& scn, RunResult& res) {
    const MassLaw& law = scn.law;
    if (scn.particles < 100)
        throw std::domain_error(
            "scenario config: /ensemble/particles: relax_dsmc needs at least 100");
    ic_check_keys(scn.ic, "", {"kind", "u", "Theta", "beta", "masses", "v", "v1", "fraction"});
    const std::string kind = ic_str(scn.ic, "", "kind", "equilibrium");

    ParticleEnsemble ens;
    if (kind == "equilibrium") {
        Vec3 u = ic_vec(scn.ic, "", "u", law.n, Vec3{});
        double Theta = ic_num(scn.ic, "", "Theta", 1.0);
        double beta = ic_num(scn.ic, "", "beta", 0.0);
        if (Theta <= 0.0) ic_fail("/Theta", "must be > 0");
        ens = sample_equilibrium_ensemble(scn.seed, law, scn.particles, scn.weight, u, Theta,
                                          beta);
    } else if (kind == "beams") {
        int ma = 1, mb = law.M_max;
        if (scn.ic.contains("masses")) {
            const json& ms = scn.ic.at("masses");
            if (!ms.is_array() || ms.size() != 2 || !ms[0].is_number_integer() ||
                !ms[1].is_number_integer())
                ic_fail("/masses", "expected an array of two integers");
            ma = ms[0].get<int>();
            mb = ms[1].get<int>();
        }
        if (ma < 1 || ma > law.M_max || mb < 1 || mb > law.M_max)
            ic_fail("/masses", "must lie on the mass ladder");
        Vec3 v = ic_vec(scn.ic, "", "v", law.n, Vec3{1.0, 0.0, 0.0});
        Vec3 v1 = ic_vec(scn.ic, "", "v1", law.n, Vec3{-1.0, 0.0, 0.0});
        double frac = ic_num(scn.ic, "", "fraction", 0.5);
        if (frac < 0.0 || frac > 1.0) ic_fail("/fraction", "must lie in [0, 1]");
        int first = static_cast<int>(std::lround(frac * scn.particles));
        ens.particles.reserve(static_cast<std::size_t>(scn.particles));
        for (int i = 0; i < scn.particles; ++i)
            ens.particles.push_back(i < first ? Particle{ma, v} : Particle{mb, v1});
        ens.weight = scn.weight;
        ens.rng_seed = scn.seed;
    } else {
        ic_fail("/kind", "expected equilibrium or beams");
    }

    MajorantConfig maj = make_majorant(ens, law, scn.kernel);
    const double dt =
        scn.dt > 0.0 ? scn.dt : suggested_round_dt(ens, law, maj, scn.shards, 0.5);
    const int steps =
        scn.steps > 0 ? scn.steps
                      : std::max(1, static_cast<int>(std::ceil(scn.t_end / dt - 1e-9)));
    const int every = scn.output_every > 0 ? scn.output_every : std::max(1, steps / 200);

    EnsembleTotals tot0 = ensemble_totals(ens);
    const double mom_scale = tot0.mass * (std::sqrt(tot0.energy / (tot0.mass + 1e-300)) + 1.0);

    std::string csv = "time,rho";
    for (int i = 0; i < law.n; ++i) csv += std::string(",u_") + "xyz"[i];
    csv += ",Theta,beta,S_estimate";
    for (int m = 1; m <= law.M_max; ++m) csv += ",count_" + std::to_string(m);
    csv += '\n';

    auto push_sample = [&]() {
        MacroEstimate est = estimate_macro(ens, law);
        std::vector<long long> hist = mass_histogram(ens, law.M_max);
        Row r{csv};
        r.col(ens.time).col(est.mean.rho);
        for (int i = 0; i < law.n; ++i) r.col(est.mean.u[i]);
        r.col(est.mean.Theta)
            .col(est.mean.beta)
            .col(thermo_entropy(law, prim_to_cons(law, est.mean)));
        for (int m = 1; m <= law.M_max; ++m) r.col(hist[static_cast<std::size_t>(m)]);
        r.nl();
    };

    std::uint64_t candidates = 0, accepted = 0;
    int refreshes = 0;
    push_sample();
    for (int s = 1; s <= steps; ++s) {
        RoundStats rs = collide_round(ens, law, scn.kernel, maj, dt, scn.shards);
        candidates += rs.candidates;
        accepted += rs.accepted;
        refreshes += rs.majorant_refreshes;
        if (s % every == 0 || s == steps) push_sample();
    }
    emit(res, scn, "relax_dsmc.csv", csv);

    EnsembleTotals totf = ensemble_totals(ens);
    json doc;
    doc["kind"] = kind;
    doc["particles"] = scn.particles;
    doc["weight"] = scn.weight;
    doc["shards"] = scn.shards;
    doc["dt"] = dt;
    doc["steps"] = steps;
    doc["majorant"] = {{"B_max", maj.B_max},
                       {"channel_count_max", maj.channel_count_max},
                       {"gamma_max", maj.gamma_max},
                       {"refreshes", refreshes}};
    doc["candidates"] = candidates;
    doc["accepted"] = accepted;
    doc["totals_initial"] = {{"mass", tot0.mass},
                             {"momentum", {tot0.momentum[0], tot0.momentum[1], tot0.momentum[2]}},
                             {"energy", tot0.energy}};
    doc["totals_final"] = {{"mass", totf.mass},
                           {"momentum", {totf.momentum[0], totf.momentum[1], totf.momentum[2]}},
                           {"energy", totf.energy}};
    doc["conservation_drift"] = {{"mass", rel_drift(totf.mass, tot0.mass)},
                                 {"momentum", norm(totf.momentum - tot0.momentum) / mom_scale},
                                 {"energy", rel_drift(totf.energy, tot0.energy)}};
    emit_json(res, scn, "relax_dsmc.json", doc);
}

// --- euler_1d / nsme_1d ---------------------------------------------------

std::vector<ConservedState> fluid_ic(const Scenario& scn, double L, double dx) {
    const MassLaw& law = scn.law;
    const std::string kind = ic_str(scn.ic, "", "kind", "smooth");
    std::vector<ConservedState> states(static_cast<std::size_t>(scn.cells));

    if (kind == "smooth") {
        ic_check_keys(scn.ic, "", {"kind", "rho0", "drho", "u0", "du", "Theta0", "dTheta",
                                   "beta0", "dbeta"});
        SmoothSpec sp = smooth_from_ic(scn.ic, "");
        for (int i = 0; i < scn.cells; ++i) {
            double t = 2.0 * kPi * (static_cast<double>(i) + 0.5) * dx / L;
            states[static_cast<std::size_t>(i)] = prim_to_cons(law, smooth_fields(sp, t));
        }
    } else if (kind == "riemann") {
        ic_check_keys(scn.ic, "", {"kind", "left", "right", "x_split"});
        if (!scn.ic.contains("left") || !scn.ic.contains("right"))
            ic_fail("", "riemann needs left and right states");
        auto side = [&](const char* key) {
            const json& j = scn.ic.at(key);
            std::string path = std::string("/") + key;
            ic_check_keys(j, path, {"rho", "u", "Theta", "beta"});
            MacroFields f;
            f.rho = ic_require_num(j, path, "rho");
            f.u = ic_vec(j, path, "u", law.n, Vec3{});
            f.Theta = ic_require_num(j, path, "Theta");
            f.beta = ic_num(j, path, "beta", 0.0);
            if (f.rho <= 0.0) ic_fail(path + "/rho", "must be > 0");
            if (f.Theta <= 0.0) ic_fail(path + "/Theta", "must be > 0");
            return f;
        };
        MacroFields left = side("left");
        MacroFields right = side("right");
        double split = ic_num(scn.ic, "", "x_split", scn.x_min + 0.5 * L);
        for (int i = 0; i < scn.cells; ++i) {
            double x = scn.x_min + (static_cast<double>(i) + 0.5) * dx;
            states[static_cast<std::size_t>(i)] = prim_to_cons(law, x < split ? left : right);
        }
    } else if (kind == "contact") {
        ic_check_keys(scn.ic, "",
                      {"kind", "rho_left", "rho_right", "u", "pt", "beta_left", "beta_right",
                       "x_split"});
        double rl = ic_require_num(scn.ic, "", "rho_left");
        double rr = ic_require_num(scn.ic, "", "rho_right");
        double pt = ic_require_num(scn.ic, "", "pt");
        double u = ic_num(scn.ic, "", "u", 0.0);
        double bl = ic_num(scn.ic, "", "beta_left", 0.0);
        double br = ic_num(scn.ic, "", "beta_right", 0.0);
        double split = ic_num(scn.ic, "", "x_split", scn.x_min + 0.5 * L);
        if (rl <= 0.0 || rr <= 0.0) ic_fail("", "densities must be > 0");
        if (pt <= 0.0) ic_fail("/pt", "must be > 0");
        auto state = [&](double rho, double beta) {
            MacroFields f;
            f.rho = rho;
            f.u = Vec3{u, 0.0, 0.0};
            f.beta = beta;
            // uniform kinetic pressure: pt = rho Theta <m^-1>
            f.Theta = pt / (rho * mean_inv_mass(law, beta));
            return prim_to_cons(law, f);
        };
        ConservedState left = state(rl, bl);
        ConservedState right = state(rr, br);
        for (int i = 0; i < scn.cells; ++i) {
            double x = scn.x_min + (static_cast<double>(i) + 0.5) * dx;
            states[static_cast<std::size_t>(i)] = x < split ? left : right;
        }
    } else {
        ic_fail("/kind", "expected smooth, riemann or contact");
    }
    return states;
}

void run_fluid(const Scenario& scn, RunResult& res, bool diffusive) {
    const MassLaw& law = scn.law;
    const double eps = diffusive ? scn.eps : 0.0;
    if (diffusive && scn.eps <= 0.0)
        throw std::domain_error("scenario config: /eps: nsme_1d requires eps > 0");
    const double L = scn.x_max - scn.x_min;
    const double dx = L / scn.cells;
    Grid1D grid{scn.cells, dx, scn.bc, eps};
    std::vector<ConservedState> states = fluid_ic(scn, L, dx);
    FluidStepOptions opts;
    opts.cfl = scn.cfl;
    opts.second_order = scn.second_order;
    opts.limit = scn.limit;

    json meta;
    json snaps = json::array();
    FluidTotals tot0 = fluid_totals(law, states, dx);
    int snap_id = 0;
    auto snapshot = [&](int step, double time, const std::string& name) {
        emit(res, scn, name, fluid_snapshot_csv(law, states, scn.x_min, dx));
        FluidTotals t = fluid_totals(law, states, dx);
        snaps.push_back(json{{"file", name},
                             {"step", step},
                             {"time", time},
                             {"totals", totals_json(t)},
                             {"entropy_integral", t.S}});
    };
    char namebuf[48];
    std::snprintf(namebuf, sizeof namebuf, "state_%06d.csv", snap_id++);
    snapshot(0, 0.0, namebuf);

    const bool by_steps = scn.steps > 0;
    const int step_cap = by_steps ? scn.steps : 10000000;
    double t = 0.0;
    int step = 0;
    while (by_steps ? step < scn.steps : t < scn.t_end - 1e-12) {
        if (step >= step_cap) throw step_error("fluid run: step cap exceeded");
        double dt = scn.dt;
        if (dt <= 0.0) {
            double smax = 0.0, dmax = 0.0;
            for (const ConservedState& c : states) {
                PrimitiveState p = cons_to_prim(law, c);
                smax = std::max(smax, max_wave_speed(law, p));
                if (diffusive) {
                    TransportCoeffs tc = transport_coeffs(law, p);
                    dmax = std::max(dmax, std::max({2.0 * tc.kappa,
                                                    (law.n + 2) * tc.nu * p.Theta,
                                                    2.0 * tc.mu}) /
                                              p.rho);
                }
            }
            dt = scn.cfl * dx / (smax + 1e-300);
            if (diffusive && dmax > 0.0) dt = std::min(dt, 0.35 * dx * dx / (eps * dmax));
        }
        if (!by_steps) dt = std::min(dt, scn.t_end - t);
        if (diffusive)
            nsme_step(law, states, grid, dt, eps, opts);
        else
            eme_step(law, states, grid, dt, opts);
        ++step;
        t += dt;
        if (scn.output_every > 0 && step % scn.output_every == 0 && snap_id < 1000) {
            std::snprintf(namebuf, sizeof namebuf, "state_%06d.csv", snap_id++);
            snapshot(step, t, namebuf);
        }
    }
    snapshot(step, t, "state_final.csv");

    FluidTotals totf = fluid_totals(law, states, dx);
    meta["experiment"] = scn.experiment;
    meta["eps"] = eps;
    meta["dt_mode"] = scn.dt > 0.0 ? "fixed" : "adaptive";
    meta["steps_taken"] = step;
    meta["final_time"] = t;
    meta["snapshots"] = snaps;
    meta["conservation_drift"] = {{"N", rel_drift(totf.N, tot0.N)},
                                  {"rho", rel_drift(totf.rho, tot0.rho)},
                                  {"P_x", std::abs(totf.Px - tot0.Px) /
                                              (std::abs(tot0.Px) + tot0.rho + 1e-300)},
                                  {"E", rel_drift(totf.E, tot0.E)}};
    emit_json(res, scn, "run_meta.json", meta);
}

// --- chapman_enskog -------------------------------------------------------

void run_chapman(const Scenario& scn, RunResult& res) {
    ic_check_keys(scn.ic, "", {"rho0", "drho", "u0", "du", "Theta0", "dTheta", "beta0",
                               "dbeta", "prepared"});
    TwoScaleConfig cfg;
    cfg.law = scn.law;
    cfg.eps = scn.eps > 0.0 ? scn.eps : 2e-2;
    cfg.cells = scn.cells;
    cfg.N_v = scn.N_v;
    cfg.v_max = scn.v_max;
    cfg.x_min = scn.x_min;
    cfg.x_max = scn.x_max;
    cfg.t_end = scn.t_end;
    cfg.dt = scn.dt;
    cfg.scheme = scn.scheme;
    SmoothSpec sp = smooth_from_ic(scn.ic, "");
    cfg.rho0 = sp.rho0;
    cfg.drho = sp.drho;
    cfg.u0 = sp.u0;
    cfg.du = sp.du;
    cfg.Theta0 = sp.Theta0;
    cfg.dTheta = sp.dTheta;
    cfg.beta0 = sp.beta0;
    cfg.dbeta = sp.dbeta;
    if (scn.ic.contains("prepared")) {
        if (!scn.ic.at("prepared").is_boolean()) ic_fail("/prepared", "expected a boolean");
        cfg.prepared = scn.ic.at("prepared").get<bool>();
    }

    TwoScaleResult r = bgkme_vs_nsme(cfg);

    const double dx = (cfg.x_max - cfg.x_min) / cfg.cells;
    std::string csv =
        "x,rho_kinetic,rho_fluid,u_kinetic,u_fluid,Theta_kinetic,Theta_fluid,"
        "beta_kinetic,beta_fluid\n";
    for (int i = 0; i < cfg.cells; ++i) {
        const MacroFields& k = r.kinetic_fields[static_cast<std::size_t>(i)];
        const MacroFields& f = r.fluid_fields[static_cast<std::size_t>(i)];
        Row row{csv};
        row.col(cfg.x_min + (static_cast<double>(i) + 0.5) * dx)
            .col(k.rho)
            .col(f.rho)
            .col(k.u[0])
            .col(f.u[0])
            .col(k.Theta)
            .col(f.Theta)
            .col(k.beta)
            .col(f.beta);
        row.nl();
    }
    emit(res, scn, "comparison.csv", csv);

    json doc;
    doc["eps"] = cfg.eps;
    doc["dt"] = r.dt;
    doc["steps"] = r.steps;
    doc["cells"] = cfg.cells;
    doc["N_v"] = cfg.N_v;
    doc["prepared"] = cfg.prepared;
    doc["errors"] = {{"rho", r.err_rho},
                     {"u", r.err_u},
                     {"Theta", r.err_Theta},
                     {"beta", r.err_beta},
                     {"total", r.err_total}};
    emit_json(res, scn, "chapman_enskog.json", doc);
}

// --- thermo_verify --------------------------------------------------------

void run_thermo_verify(const Scenario& scn, RunResult& res) {
    std::vector<CheckLine> checks = verify_thermo(scn.seed);
    write_check_report(opath(scn, "thermo_report.json"), "thermo", checks);
    res.outputs.push_back(opath(scn, "thermo_report.json"));
    int failed = 0;
    for (const CheckLine& c : checks)
        if (!c.pass) ++failed;
    if (failed > 0) {
        json err;
        err["kind"] = "verification_failure";
        err["message"] = std::to_string(failed) + " of " + std::to_string(checks.size()) +
                         " thermo checks failed";
        emit_json(res, scn, "error.json", err);
        res.exit_code = 2;
    }
}

// --- verification battery helpers ----------------------------------------

PrimitiveState random_prim(Philox& rng, const MassLaw& law) {
    PrimitiveState p;
    p.rho = 0.3 + 2.0 * rng.next_double();
    for (int i = 0; i < law.n; ++i) p.u[i] = 1.2 * (rng.next_double() - 0.5);
    p.Theta = 0.4 + 1.6 * rng.next_double();
    p.beta = law.M_max == 1 ? 0.0 : 2.0 * (rng.next_double() - 0.5);
    return p;
}

ConservedState cons_from_vector(const MassLaw& law, const Eigen::VectorXd& v) {
    ConservedState c;
    for (int i = 0; i < law.n; ++i) c.P[i] = v[i];
    c.N = v[law.n];
    c.rho = v[law.n + 1];
    c.E = v[law.n + 2];
    return c;
}

// radial Simpson quadrature for the centered Gaussian moments
double gauss_scalar_by_quadrature(double m, double Theta, int n, int p) {
    const double surf = n == 1 ? 2.0 : n == 2 ? 2.0 * kPi : 4.0 * kPi;
    const double R = std::sqrt(2.0 * Theta / m) * (12.0 + std::sqrt(2.0 * p));
    const int N = 4000;
    const double h = R / N;
    double acc = 0.0;
    for (int k = 0; k <= N; ++k) {
        double r = k * h;
        double w = (k == 0 || k == N) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        double rad = n - 1 + 2 * p == 0 ? 1.0 : std::pow(r, n - 1 + 2 * p);
        acc += w * rad * std::exp(-m * r * r / (2.0 * Theta));
    }
    return surf * acc * h / 3.0;
}

} // namespace

// --- verification batteries -----------------------------------------------

std::vector<CheckLine> verify_thermo(std::uint64_t seed) {
    std::vector<CheckLine> out;
    std::vector<MassLaw> laws;
    laws.push_back(MassLaw::from_table(3, {1.0, 0.7, 1.9}));
    laws.push_back(MassLaw::from_family(2, 4, 0.5, -0.3, 1.2));
    Philox rng(seed, 77);

    double grad_err = 0.0, hess_err = 0.0, hess_asym = 0.0;
    double minor_err = 0.0, legendre_err = 0.0, ent_grad_err = 0.0;
    int chol_failures = 0;
    double X_asym = 0.0, sos_err = 0.0, neg_qf = 0.0, mass_row = 0.0;

    for (const MassLaw& law : laws) {
        const int dim = law.n + 3;
        for (int trial = 0; trial < 25; ++trial) {
            PrimitiveState p = random_prim(rng, law);
            EntropicState a = entropic_from_prim(law, p);
            Eigen::VectorXd av = pack_entropic(law, a);
            auto sigma_at = [&](const Eigen::VectorXd& v) {
                return massieu_sigma(law, unpack_entropic(law, v));
            };

            // gradient of the potential reproduces the conserved fields
            Eigen::VectorXd cons = conserved_vector(law, prim_to_cons(law, p));
            double cons_scale = cons.cwiseAbs().maxCoeff();
            for (int i = 0; i < dim; ++i) {
                double h = 1e-6 * (1.0 + std::abs(av[i]));
                Eigen::VectorXd vp = av, vm = av;
                vp[i] += h;
                vm[i] -= h;
                double fd = (sigma_at(vp) - sigma_at(vm)) / (2.0 * h);
                grad_err = std::max(grad_err, std::abs(fd - cons[i]) / cons_scale);
            }

            // closed-form Hessian against central second differences
            Eigen::MatrixXd H = hessian_sigma(law, a);
            double H_scale = H.cwiseAbs().maxCoeff();
            hess_asym = std::max(hess_asym, (H - H.transpose()).cwiseAbs().maxCoeff());
            for (int i = 0; i < dim; ++i) {
                double hi = 1e-4 * (1.0 + std::abs(av[i]));
                for (int j = i; j < dim; ++j) {
                    double hj = 1e-4 * (1.0 + std::abs(av[j]));
                    double fd;
                    if (i == j) {
                        Eigen::VectorXd vp = av, vm = av;
                        vp[i] += hi;
                        vm[i] -= hi;
                        fd = (sigma_at(vp) - 2.0 * sigma_at(av) + sigma_at(vm)) / (hi * hi);
                    } else {
                        Eigen::VectorXd vpp = av, vpm = av, vmp = av, vmm = av;
                        vpp[i] += hi;
                        vpp[j] += hj;
                        vpm[i] += hi;
                        vpm[j] -= hj;
                        vmp[i] -= hi;
                        vmp[j] += hj;
                        vmm[i] -= hi;
                        vmm[j] -= hj;
                        fd = (sigma_at(vpp) - sigma_at(vpm) - sigma_at(vmp) + sigma_at(vmm)) /
                             (4.0 * hi * hj);
                    }
                    hess_err = std::max(hess_err, std::abs(fd - H(i, j)) / H_scale);
                }
            }
            if (Eigen::LLT<Eigen::MatrixXd>(H).info() != Eigen::Success) ++chol_failures;

            // closed-form minors against assembled determinants
            Eigen::MatrixXd Sred = reduced_hessian(law, p);
            std::array<double, 5> minors = principal_minors(law, p);
            for (int k = 1; k <= 5; ++k) {
                double det = Sred.topLeftCorner(k, k).determinant();
                minor_err = std::max(minor_err,
                                     std::abs(det - minors[static_cast<std::size_t>(k - 1)]) /
                                         (std::abs(det) + 1e-300));
            }

            // Legendre identity and the entropy gradient
            ConservedState c = prim_to_cons(law, p);
            double S = thermo_entropy(law, c);
            double legendre = av.dot(cons) - massieu_sigma(law, a);
            legendre_err =
                std::max(legendre_err, std::abs(S - legendre) / (std::abs(S) + 1e-300));
            Eigen::VectorXd Mv = conserved_vector(law, c);
            for (int i = 0; i < dim; ++i) {
                double h = 1e-6 * (1.0 + std::abs(Mv[i]));
                Eigen::VectorXd vp = Mv, vm = Mv;
                vp[i] += h;
                vm[i] -= h;
                double fd = (thermo_entropy(law, cons_from_vector(law, vp)) -
                             thermo_entropy(law, cons_from_vector(law, vm))) /
                            (2.0 * h);
                ent_grad_err =
                    std::max(ent_grad_err, std::abs(fd - av[i]) / (1.0 + std::abs(av[i])));
            }

            // coefficient matrix: symmetry, zero mass row, quadratic form
            OnsagerMatrix X = onsager_X(law, p, 0.03);
            Eigen::MatrixXd Xd = X.dense();
            X_asym = std::max(X_asym, (Xd - Xd.transpose()).cwiseAbs().maxCoeff());
            for (int b = 0; b < dim; ++b) {
                mass_row = std::max(mass_row, X.block(law.n + 1, b).cwiseAbs().maxCoeff());
                mass_row = std::max(mass_row, X.block(b, law.n + 1).cwiseAbs().maxCoeff());
            }
            for (int rep = 0; rep < 8; ++rep) {
                std::vector<Vec3> Y(static_cast<std::size_t>(dim));
                for (int cmp = 0; cmp < dim; ++cmp)
                    for (int i = 0; i < law.n; ++i)
                        Y[static_cast<std::size_t>(cmp)][i] = 2.0 * rng.next_double() - 1.0;
                double direct = X_quadratic_form_direct(law, p, 0.03, Y);
                double sos = X_quadratic_form_sos(law, p, 0.03, Y);
                sos_err = std::max(sos_err,
                                   std::abs(direct - sos) / (std::abs(direct) + 1e-300));
                neg_qf = std::max(neg_qf, -std::min(0.0, direct));
            }
        }
    }

    // entropic assembly of the diffusive update against the flux form
    double assembly_err = 0.0;
    {
        const MassLaw& law = laws[1];
        const int cells = 16;
        const double dx = 1.0 / cells;
        const double eps = 0.01;
        SmoothSpec sp;
        sp.dTheta = 0.1;
        sp.du = 0.15;
        sp.dbeta = 0.25;
        std::vector<ConservedState> states(cells);
        for (int i = 0; i < cells; ++i)
            states[static_cast<std::size_t>(i)] =
                prim_to_cons(law, smooth_fields(sp, 2.0 * kPi * (i + 0.5) * dx));
        Grid1D grid{cells, dx, BoundaryKind::periodic, eps};
        std::vector<Eigen::VectorXd> ent = entropic_rhs(law, states, grid, eps);
        std::vector<DiffusiveFlux> flx = nsme_diffusive_fluxes(law, states, grid, eps);
        double scale = 0.0;
        for (const Eigen::VectorXd& v : ent) scale = std::max(scale, v.cwiseAbs().maxCoeff());
        for (int i = 0; i < cells; ++i) {
            std::size_t k = static_cast<std::size_t>(i);
            double dN = (flx[k + 1].N - flx[k].N) / dx;
            double dP = (flx[k + 1].P - flx[k].P) / dx;
            double dE = (flx[k + 1].E - flx[k].E) / dx;
            assembly_err = std::max(assembly_err, std::abs(ent[k][0] - dP) / scale);
            for (int tr = 1; tr < law.n; ++tr)
                assembly_err = std::max(assembly_err, std::abs(ent[k][tr]) / scale);
            assembly_err = std::max(assembly_err, std::abs(ent[k][law.n] - dN) / scale);
            assembly_err = std::max(assembly_err, std::abs(ent[k][law.n + 1]) / scale);
            assembly_err = std::max(assembly_err, std::abs(ent[k][law.n + 2] - dE) / scale);
        }
    }

    // weighted norm decay of the linearized periodic problem
    double decay_violation = 0.0;
    {
        const MassLaw& law = laws[1];
        const int cells = 32;
        PrimitiveState base;
        base.rho = 1.0;
        base.u = Vec3{0.2, 0.0, 0.0};
        base.Theta = 0.9;
        base.beta = 0.1;
        EntropicState a0 = entropic_from_prim(law, base);
        std::vector<Eigen::VectorXd> pert(cells);
        for (int i = 0; i < cells; ++i) {
            pert[static_cast<std::size_t>(i)] = Eigen::VectorXd::Zero(law.n + 3);
            for (int j = 0; j < law.n + 3; ++j)
                pert[static_cast<std::size_t>(i)][j] =
                    1e-3 * (std::sin(2.0 * kPi * (i + 0.3 * j) / cells) +
                            0.5 * rng.next_normal());
        }
        Grid1D grid{cells, 1.0 / cells, BoundaryKind::periodic, 0.01};
        LinearizedRunOptions opts;
        opts.steps = 60;
        opts.dt = 2e-3;
        LinearizedRun run = linearized_energy_check(law, a0, pert, grid, 0.01, opts);
        for (std::size_t k = 0; k + 1 < run.energy.size(); ++k)
            decay_violation = std::max(
                decay_violation, (run.energy[k + 1] - run.energy[k]) / (run.energy[0] + 1e-300));
        decay_violation = std::max(0.0, decay_violation);
    }

    // Gaussian moment helpers against quadrature and trace identities
    double quad_err = 0.0, trace_err = 0.0;
    for (double m : {1.0, 2.5})
        for (double Theta : {0.7, 1.3})
            for (int n = 1; n <= 3; ++n) {
                for (int p = 0; p <= 3; ++p) {
                    double exact = gauss_moment_scalar(m, Theta, n, p);
                    double quad = gauss_scalar_by_quadrature(m, Theta, n, p);
                    quad_err = std::max(quad_err, std::abs(exact - quad) / exact);
                    double t2 = gauss_moment_tensor2_coef(m, Theta, n, p) * n;
                    trace_err = std::max(
                        trace_err, std::abs(t2 - gauss_moment_scalar(m, Theta, n, p + 1)) / t2);
                }
                double t4 = gauss_moment_tensor4_coef(m, Theta, n) * n * (n + 2);
                trace_err = std::max(trace_err,
                                     std::abs(t4 - gauss_moment_scalar(m, Theta, n, 2)) / t4);
            }

    auto add = [&](const char* name, double tol, double measured) {
        out.push_back(CheckLine{name, tol, measured, measured <= tol});
    };
    add("sigma_gradient_matches_conserved", 1e-6, grad_err);
    add("hessian_matches_fd", 1e-6, hess_err);
    add("hessian_symmetric", 0.0, hess_asym);
    add("hessian_positive_definite", 0.0, static_cast<double>(chol_failures));
    add("reduced_minors_match", 1e-8, minor_err);
    add("legendre_identity", 1e-10, legendre_err);
    add("entropy_gradient_is_entropic_state", 1e-6, ent_grad_err);
    add("coefficient_matrix_symmetric", 0.0, X_asym);
    add("coefficient_matrix_mass_row_zero", 0.0, mass_row);
    add("quadratic_form_matches_sos", 1e-12, sos_err);
    add("quadratic_form_nonnegative", 0.0, neg_qf);
    add("diffusive_assembly_match", 1e-10, assembly_err);
    add("linearized_energy_decay", 1e-12, decay_violation);
    add("gaussian_moments_vs_quadrature", 1e-8, quad_err);
    add("gaussian_moment_traces", 1e-12, trace_err);
    return out;
}

std::vector<CheckLine> verify_collision(std::uint64_t seed) {
    std::vector<CheckLine> out;
    std::vector<MassLaw> laws;
    laws.push_back(MassLaw::from_table(3, {1.0, 0.5, 2.0, 0.8}));
    laws.push_back(MassLaw::from_family(2, 3, 1.0, -0.4, 0.7));
    Kernel maxwell;
    maxwell.C_B = 0.8;
    Kernel power;
    power.kind = Kernel::Kind::power_law;
    power.C_B = 1.1;
    power.omega_exp = 0.4;
    Philox rng(seed, 101);

    double worst_mass = 0.0, worst_mom = 0.0, worst_en = 0.0, worst_rt = 0.0;
    double worst_jac = 0.0, worst_omega = 0.0, worst_kernel = 0.0;
    int chan_violations = 0;

    for (const MassLaw& law : laws) {
        for (int trial = 0; trial < 300; ++trial) {
            Particle p, q;
            p.m = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(law.M_max)));
            q.m = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(law.M_max)));
            for (int i = 0; i < law.n; ++i) {
                p.v[i] = 1.5 * rng.next_normal();
                q.v[i] = 1.5 * rng.next_normal();
            }
            Vec3 g = p.v - q.v;
            if (norm(g) < 1e-9) {
                p.v[0] += 0.5;
                g = p.v - q.v;
            }
            std::vector<int> chans = allowed_channels(law, p.m, q.m);
            int m_out = chans[rng.next_below(chans.size())];
            Vec3 omega = sample_omega(rng, g, law.n);
            worst_omega = std::max(worst_omega, std::abs(norm(omega) - 1.0));
            worst_omega = std::max(worst_omega, std::max(0.0, dot(omega, g) / norm(g)));

            auto [pa, pb] = collide_forward(p, q, CollisionChannel{m_out, omega});
            worst_mass = std::max(worst_mass,
                                  std::abs(static_cast<double>(pa.m + pb.m - p.m - q.m)));
            Vec3 dP = static_cast<double>(p.m) * p.v + static_cast<double>(q.m) * q.v -
                      static_cast<double>(pa.m) * pa.v - static_cast<double>(pb.m) * pb.v;
            double scaleP = p.m * norm(p.v) + q.m * norm(q.v) + 1e-300;
            worst_mom = std::max(worst_mom, norm(dP) / scaleP);
            double dE = p.m * norm2(p.v) + q.m * norm2(q.v) - pa.m * norm2(pa.v) -
                        pb.m * norm2(pb.v);
            double scaleE = p.m * norm2(p.v) + q.m * norm2(q.v) + 1e-300;
            worst_en = std::max(worst_en, std::abs(dE) / scaleE);

            auto [ra, rb] = collide_inverse(pa, pb, CollisionChannel{p.m, (-1.0) * omega});
            double rt = (norm(ra.v - p.v) + norm(rb.v - q.v)) /
                            (norm(p.v) + norm(q.v) + 1.0) +
                        std::abs(ra.m - p.m) + std::abs(rb.m - q.m);
            worst_rt = std::max(worst_rt, rt);

            int m_out2 = p.m + q.m - m_out;
            double prod = velocity_jacobian(p.m, q.m, m_out, law.n) *
                          velocity_jacobian(m_out, m_out2, p.m, law.n);
            worst_jac = std::max(worst_jac, std::abs(prod - 1.0));

            double e_red = reduced_energy(p, q);
            worst_kernel = std::max(worst_kernel, -std::min(0.0, kernel_B(maxwell, e_red)));
            worst_kernel =
                std::max(worst_kernel, -std::min(0.0, kernel_B(power, e_red, -0.3)));
        }
        for (int m = 1; m <= law.M_max; ++m)
            for (int m1 = 1; m1 <= law.M_max; ++m1)
                for (int mo : allowed_channels(law, m, m1)) {
                    std::vector<int> rev = allowed_channels(law, mo, m + m1 - mo);
                    if (std::find(rev.begin(), rev.end(), m) == rev.end()) ++chan_violations;
                }
    }

    auto add = [&](const char* name, double tol, double measured) {
        out.push_back(CheckLine{name, tol, measured, measured <= tol});
    };
    add("collision_mass_exact", 0.0, worst_mass);
    add("collision_momentum", 1e-12, worst_mom);
    add("collision_energy", 1e-12, worst_en);
    add("collision_inverse_roundtrip", 1e-12, worst_rt);
    add("collision_jacobian_reciprocal", 1e-12, worst_jac);
    add("collision_channel_symmetry", 0.0, static_cast<double>(chan_violations));
    add("scatter_direction_half_sphere", 1e-12, worst_omega);
    add("kernel_nonnegative", 0.0, worst_kernel);
    return out;
}

std::vector<CheckLine> verify_kinetic(std::uint64_t seed) {
    std::vector<CheckLine> out;
    MassLaw law = MassLaw::from_table(2, {1.0, 1.3});
    VelocityGrid grid(law.n, 12, 5.0);
    Kernel kernel;
    Philox rng(seed, 202);

    // equilibrium construction hits its moment targets
    double match_err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        MacroFields t;
        t.rho = 0.4 + 1.6 * rng.next_double();
        for (int i = 0; i < law.n; ++i) t.u[i] = 1.6 * (rng.next_double() - 0.5);
        t.Theta = 0.5 + 1.1 * rng.next_double();
        t.beta = 2.0 * (rng.next_double() - 0.5);
        std::vector<double> fM = discrete_maxwellian(law, grid, t);
        RawMoments mom = raw_moments(law, grid, fM.data());
        ConservedState want = prim_to_cons(law, t);
        double su = t.rho * (norm(t.u) + std::sqrt(t.Theta));
        match_err = std::max(match_err, std::abs(mom.N - want.N) / want.N);
        match_err = std::max(match_err, std::abs(mom.rho - want.rho) / want.rho);
        match_err = std::max(match_err, norm(mom.P - want.P) / su);
        match_err = std::max(match_err, std::abs(mom.E - want.E) / want.E);
    }

    // collision operator: conservation, entropy sign, equilibrium residual
    MacroFields mac;
    mac.rho = 1.1;
    mac.u = Vec3{0.2, -0.1, 0.0};
    mac.Theta = 0.9;
    mac.beta = 0.4;
    std::vector<double> fM = discrete_maxwellian(law, grid, mac);
    std::vector<double> f = fM;
    for (int m = 1; m <= law.M_max; ++m)
        for (int k = 0; k < grid.total(); ++k)
            f[static_cast<std::size_t>((m - 1) * grid.total() + k)] *=
                1.0 + 0.3 * std::sin(2.0 * grid.node(k)[0]);
    QbmeOptions qopts;
    qopts.N_omega = 16;
    qopts.want_gain_norm = true;
    QbmeResult qr = qbme_assemble(law, grid, f.data(), kernel, qopts);
    RawMoments mq = raw_moments(law, grid, qr.Q.data());
    double scale = qr.gain_l1 + 1e-300;
    double cons_resid = std::max({std::abs(mq.N), std::abs(mq.rho), norm(mq.P),
                                  std::abs(mq.E)}) /
                        scale;
    double entropy_sign = std::max(0.0, qr.entropy_production);

    QbmeResult qeq = qbme_assemble(law, grid, fM.data(), kernel, qopts);
    double eq_l1 = 0.0;
    for (double v : qeq.Q) eq_l1 += std::abs(v);
    double eq_resid = eq_l1 * grid.weight() / (qeq.gain_l1 + 1e-300);

    // transport conserves the cell totals and keeps upwind states nonnegative
    double adv_drift = 0.0, adv_neg = 0.0;
    {
        KineticState st(law, grid, 8, 0.1);
        for (double& v : st.f) v = 0.1 + rng.next_double();
        double before = 0.0;
        for (double v : st.f) before += v;
        KineticState lim = st;
        advect_1d(lim, 0.4 * 0.1 / grid.vmax(), AdvectionScheme::minmod);
        double after = 0.0;
        for (double v : lim.f) after += v;
        adv_drift = std::abs(after - before) / before;
        KineticState low = st;
        advect_1d(low, 0.4 * 0.1 / grid.vmax(), AdvectionScheme::first_order);
        double mn = 0.0;
        for (double v : low.f) mn = std::min(mn, v);
        adv_neg = -mn;
    }

    // relaxation conserves moments and dissipates the entropy functional
    double bgk_drift = 0.0, bgk_entropy_rise = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        MacroFields t;
        t.rho = 0.5 + rng.next_double();
        for (int i = 0; i < law.n; ++i) t.u[i] = rng.next_double() - 0.5;
        t.Theta = 0.6 + rng.next_double();
        t.beta = rng.next_double() - 0.5;
        std::vector<double> base = discrete_maxwellian(law, grid, t);
        KineticState st(law, grid, 1);
        for (std::size_t i = 0; i < base.size(); ++i)
            st.f[i] = base[i] * (1.0 + 0.4 * (rng.next_double() - 0.5));
        RawMoments m0 = raw_moments(st, 0);
        double su = m0.rho * (norm(t.u) + std::sqrt(t.Theta));
        double S_prev = kinetic_entropy(st, 0);
        double S0 = std::abs(S_prev) + 1e-300;
        for (int s = 0; s < 20; ++s) {
            bgk_step_homogeneous(st, 0.3, 0.7);
            RawMoments m1 = raw_moments(st, 0);
            bgk_drift = std::max(bgk_drift, std::abs(m1.N - m0.N) / m0.N);
            bgk_drift = std::max(bgk_drift, std::abs(m1.rho - m0.rho) / m0.rho);
            bgk_drift = std::max(bgk_drift, norm(m1.P - m0.P) / su);
            bgk_drift = std::max(bgk_drift, std::abs(m1.E - m0.E) / m0.E);
            double S_now = kinetic_entropy(st, 0);
            bgk_entropy_rise = std::max(bgk_entropy_rise, (S_now - S_prev) / S0);
            S_prev = S_now;
        }
    }
    bgk_entropy_rise = std::max(0.0, bgk_entropy_rise);

    auto add = [&](const char* name, double tol, double measured) {
        out.push_back(CheckLine{name, tol, measured, measured <= tol});
    };
    add("equilibrium_moment_match", 1e-11, match_err);
    add("collision_moment_residuals", 1e-12, cons_resid);
    add("collision_entropy_sign", 0.0, entropy_sign);
    add("collision_equilibrium_residual", 1e-10, eq_resid);
    add("advection_conserves_total", 1e-13, adv_drift);
    add("advection_upwind_nonnegative", 0.0, adv_neg);
    add("relaxation_conserves_moments", 1e-12, bgk_drift);
    add("relaxation_entropy_monotone", 1e-10, bgk_entropy_rise);
    return out;
}

void write_check_report(const std::string& path, const std::string& suite,
                        const std::vector<CheckLine>& checks) {
    json doc;
    doc["suite"] = suite;
    json arr = json::array();
    bool all = true;
    for (const CheckLine& c : checks) {
        arr.push_back(json{{"name", c.name},
                           {"tolerance", c.tolerance},
                           {"measured", c.measured},
                           {"pass", c.pass}});
        all = all && c.pass;
    }
    doc["checks"] = arr;
    doc["all_pass"] = all;
    write_file(path, doc.dump(2) + "\n");
}

// --- two-scale comparison -------------------------------------------------

TwoScaleResult bgkme_vs_nsme(const TwoScaleConfig& cfg) {
    const MassLaw& law = cfg.law;
    const int n = law.n;
    const int C = cfg.cells;
    if (C < 4) throw std::domain_error("bgkme_vs_nsme: needs at least 4 cells");
    if (cfg.eps <= 0.0) throw std::domain_error("bgkme_vs_nsme: eps must be > 0");
    const double L = cfg.x_max - cfg.x_min;
    const double dx = L / C;
    VelocityGrid grid(n, cfg.N_v, cfg.v_max);

    SmoothSpec sp;
    sp.rho0 = cfg.rho0;
    sp.drho = cfg.drho;
    sp.u0 = cfg.u0;
    sp.du = cfg.du;
    sp.Theta0 = cfg.Theta0;
    sp.dTheta = cfg.dTheta;
    sp.beta0 = cfg.beta0;
    sp.dbeta = cfg.dbeta;
    if (sp.rho0 - std::abs(sp.drho) <= 0.0 || sp.Theta0 - std::abs(sp.dTheta) <= 0.0)
        throw std::domain_error("bgkme_vs_nsme: profile leaves the admissible set");

    KineticState st(law, grid, C, dx);
    std::vector<ConservedState> fl(static_cast<std::size_t>(C));
    double smax = 0.0, dmax = 0.0;
    for (int i = 0; i < C; ++i) {
        double t = 2.0 * kPi * (static_cast<double>(i) + 0.5) * dx / L;
        MacroFields mf = smooth_fields(sp, t);
        fl[static_cast<std::size_t>(i)] = prim_to_cons(law, mf);
        smax = std::max(smax, max_wave_speed(law, mf));
        TransportCoeffs tc = transport_coeffs(law, mf);
        dmax = std::max(dmax, std::max({2.0 * tc.kappa, (n + 2) * tc.nu * mf.Theta,
                                        2.0 * tc.mu}) /
                                  mf.rho);

        std::vector<double> fM = discrete_maxwellian(law, grid, mf);
        if (cfg.prepared) {
            // first-order expansion state: the gradient-driven correction is
            // subtracted from the local equilibrium so the kinetic run starts
            // on the slow manifold instead of relaxing onto it
            std::array<double, 4> d = smooth_derivs(sp, t, 2.0 * kPi / L);
            const double im = mean_inv_mass(law, mf.beta);
            const double mm = mean_mass(law, mf.beta);
            const double glog_rho = d[0] / mf.rho;
            const double ux = mf.u[0];
            for (int m = 1; m <= law.M_max; ++m)
                for (int k = 0; k < grid.total(); ++k) {
                    const Vec3& v = grid.node(k);
                    double cx = v[0] - ux;
                    double c2 = grid.node_sq(k) - v[0] * v[0] + cx * cx;
                    double bracket =
                        (m / mf.Theta) * (cx * cx - c2 / n) * d[1] +
                        (1.0 - m * im) * cx * (glog_rho - mm * d[3]) +
                        (m * c2 / mf.Theta - n - 2.0 * m * im) * cx * d[2] /
                            (2.0 * mf.Theta);
                    fM[static_cast<std::size_t>((m - 1) * grid.total() + k)] *=
                        1.0 - cfg.eps * bracket;
                }
        }
        std::copy(fM.begin(), fM.end(), st.cell_data(i));
    }

    double dt = cfg.dt;
    if (dt <= 0.0) {
        dt = 0.4 * dx / grid.vmax();
        dt = std::min(dt, 0.4 * dx / (smax + 1e-300));
        if (dmax > 0.0) dt = std::min(dt, 0.3 * dx * dx / (cfg.eps * dmax));
    }
    int steps = std::max(1, static_cast<int>(std::ceil(cfg.t_end / dt - 1e-9)));
    dt = cfg.t_end / steps;

    for (int s = 0; s < steps; ++s) bgkme_step_1d(st, dt, cfg.eps, cfg.scheme);

    Grid1D g1{C, dx, BoundaryKind::periodic, cfg.eps};
    FluidStepOptions fopts;
    fopts.cfl = 0.45;
    fopts.second_order = true;
    fopts.limit = false;  // central slopes; the profiles stay smooth
    for (int s = 0; s < steps; ++s) nsme_step(law, fl, g1, dt, cfg.eps, fopts);

    TwoScaleResult r;
    r.dt = dt;
    r.steps = steps;
    r.kinetic_fields.resize(static_cast<std::size_t>(C));
    r.fluid_fields.resize(static_cast<std::size_t>(C));
    for (int i = 0; i < C; ++i) {
        MacroFields mk = macro_from_moments(law, raw_moments(st, i));
        MacroFields mf = cons_to_prim(law, fl[static_cast<std::size_t>(i)]);
        r.kinetic_fields[static_cast<std::size_t>(i)] = mk;
        r.fluid_fields[static_cast<std::size_t>(i)] = mf;
        r.err_rho += std::abs(mk.rho - mf.rho);
        r.err_u += std::abs(mk.u[0] - mf.u[0]);
        r.err_Theta += std::abs(mk.Theta - mf.Theta);
        r.err_beta += std::abs(mk.beta - mf.beta);
    }
    r.err_rho /= C;
    r.err_u /= C;
    r.err_Theta /= C;
    r.err_beta /= C;
    r.err_total = r.err_rho + r.err_u + r.err_Theta + r.err_beta;
    return r;
}

// --- dispatcher -----------------------------------------------------------

RunResult run_scenario(const Scenario& scn) {
    std::filesystem::create_directories(scn.output_dir);
    RunResult res;
    auto t0 = std::chrono::steady_clock::now();
    try {
        if (scn.experiment == "collide_demo")
            run_collide_demo(scn, res);
        else if (scn.experiment == "qeval")
            run_qeval(scn, res);
        else if (scn.experiment == "relax_bgk")
            run_relax_bgk(scn, res);
        else if (scn.experiment == "relax_dsmc")
            run_relax_dsmc(scn, res);
        else if (scn.experiment == "euler_1d")
            run_fluid(scn, res, false);
        else if (scn.experiment == "nsme_1d")
            run_fluid(scn, res, true);
        else if (scn.experiment == "chapman_enskog")
            run_chapman(scn, res);
        else if (scn.experiment == "thermo_verify")
            run_thermo_verify(scn, res);
        else
            throw std::domain_error("scenario config: /experiment: unknown experiment '" +
                                    scn.experiment + "'");
    } catch (const std::exception& ex) {
        const std::string msg = ex.what();
        if (msg.rfind("scenario config:", 0) == 0) throw;
        json err;
        err["experiment"] = scn.experiment;
        err["kind"] = dynamic_cast<const step_error*>(&ex)          ? "step"
                      : dynamic_cast<const convergence_error*>(&ex) ? "convergence"
                                                                    : "domain";
        err["message"] = msg;
        write_file(opath(scn, "error.json"), err.dump(2) + "\n");
        res.outputs.push_back(opath(scn, "error.json"));
        res.exit_code = 2;
        return res;
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json man;
    man["experiment"] = scn.experiment;
    man["config"] = scn.echo;
    json names = json::array();
    for (const std::string& p : res.outputs)
        names.push_back(std::filesystem::path(p).filename().string());
    man["outputs"] = names;
    man["wall_seconds"] = wall;
    man["exit_code"] = res.exit_code;
    write_file(opath(scn, "manifest.json"), man.dump(2) + "\n");
    res.outputs.push_back(opath(scn, "manifest.json"));
    return res;
}

} // namespace kinex
