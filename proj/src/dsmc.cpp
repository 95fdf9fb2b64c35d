#include "kinex/dsmc.hpp"

#include "kinex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kinex {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

double half_sphere_measure(int n) {
    switch (n) {
        case 1: return 1.0;
        case 2: return kPi;
        default: return 2.0 * kPi;
    }
}

int channel_count(const MassLaw& law, int m, int m1) {
    int lo = std::max(1, m + m1 - law.M_max);
    int hi = std::min(law.M_max, m + m1 - 1);
    return hi - lo + 1;
}

void check_ensemble(const ParticleEnsemble& ens, const MassLaw& law) {
    if (ens.particles.size() < 2)
        throw std::domain_error("dsmc: ensemble needs at least 2 particles");
    if (!(ens.weight > 0.0))
        throw std::domain_error("dsmc: particle weight must be positive");
    for (const Particle& p : ens.particles)
        if (p.m < 1 || p.m > law.M_max)
            throw std::domain_error("dsmc: particle mass outside 1..M_max");
}

} // namespace

MajorantConfig make_majorant(const ParticleEnsemble& ens, const MassLaw& law,
                             const Kernel& kernel) {
    law.validate();
    kernel.validate();
    check_ensemble(ens, law);
    MajorantConfig maj;
    for (int m = 1; m <= law.M_max; ++m)
        maj.gamma_max = std::max(maj.gamma_max, law.gamma_of(m));
    for (int m = 1; m <= law.M_max; ++m)
        for (int m1 = 1; m1 <= law.M_max; ++m1)
            maj.channel_count_max = std::max(maj.channel_count_max, channel_count(law, m, m1));
    if (kernel.kind == Kernel::Kind::maxwell) {
        maj.B_max = kernel.C_B;
    } else {
        double vmax2 = 0.0;
        for (const Particle& p : ens.particles) vmax2 = std::max(vmax2, norm2(p.v));
        double E_red_max = 0.5 * law.M_max * 4.0 * vmax2;
        maj.B_max = kernel.C_B * std::pow(E_red_max, kernel.omega_exp);
    }
    return maj;
}

Vec3 sample_omega(Philox& rng, const Vec3& g, int n) {
    if (!(norm2(g) > 0.0))
        throw std::domain_error("sample_omega: zero relative velocity");
    if (n == 1) return Vec3{g[0] > 0.0 ? -1.0 : 1.0, 0.0, 0.0};
    for (;;) {
        Vec3 omega{};
        for (int d = 0; d < n; ++d) omega[d] = rng.next_normal();
        double r2 = norm2(omega);
        if (r2 < 1e-24) continue;
        omega = (1.0 / std::sqrt(r2)) * omega;
        double d = dot(omega, g);
        if (d == 0.0) continue;
        if (d > 0.0) omega = -1.0 * omega;
        return omega;
    }
}

RoundStats collide_round(ParticleEnsemble& ens, const MassLaw& law, const Kernel& kernel,
                         MajorantConfig& maj, double dt, int shards) {
    law.validate();
    kernel.validate();
    check_ensemble(ens, law);
    if (!(dt >= 0.0)) throw std::domain_error("collide_round: dt must be >= 0");
    if (maj.channel_count_max < 1 || !(maj.gamma_max > 0.0) || !(maj.B_max >= 0.0))
        throw std::domain_error("collide_round: invalid majorant");
    const int N = static_cast<int>(ens.particles.size());
    shards = std::clamp(shards, 1, N / 2);

    const int n = law.n;
    const double omega_half = half_sphere_measure(n);
    std::vector<Particle> snapshot = ens.particles;

    RoundStats stats;
    for (int attempt = 0; attempt < 60; ++attempt) {
        bool violated = false;
        double B_seen = maj.B_max;
        const double rate_den = maj.gamma_max * maj.gamma_max * maj.channel_count_max * maj.B_max;
        stats.candidates = 0;
        stats.accepted = 0;

        // validate every shard before touching any particle so a guard
        // failure leaves the ensemble unchanged
        for (int s = 0; s < shards; ++s) {
            int begin = static_cast<int>(static_cast<long long>(N) * s / shards);
            int end = static_cast<int>(static_cast<long long>(N) * (s + 1) / shards);
            int Ns = end - begin;
            if (Ns < 2) continue;
            double vol = static_cast<double>(Ns) / N;
            double pair_rate = rate_den * omega_half * ens.weight / vol;
            if ((Ns - 1) * pair_rate * dt > 1.0) {
                ens.particles = snapshot;
                throw step_error("collide_round: dt gives more than one candidate per particle");
            }
            if (0.5 * static_cast<double>(Ns) * (Ns - 1) * pair_rate * dt > 2e9) {
                ens.particles = snapshot;
                throw step_error("collide_round: candidate count out of range");
            }
        }

        for (int s = 0; s < shards && !violated; ++s) {
            int begin = static_cast<int>(static_cast<long long>(N) * s / shards);
            int end = static_cast<int>(static_cast<long long>(N) * (s + 1) / shards);
            int Ns = end - begin;
            if (Ns < 2) continue;
            // shard volume scales with its share so the pair rate per particle
            // matches the full ensemble
            double vol = static_cast<double>(Ns) / N;
            double pair_rate = rate_den * omega_half * ens.weight / vol;
            double lambda = 0.5 * static_cast<double>(Ns) * (Ns - 1) * pair_rate;
            double mean_cand = lambda * dt;

            Philox rng(ens.rng_seed,
                       (ens.round_index << 24) ^ (static_cast<std::uint64_t>(attempt) << 16) ^
                           static_cast<std::uint64_t>(s));
            std::uint64_t n_cand = static_cast<std::uint64_t>(std::floor(mean_cand));
            if (rng.next_double() < mean_cand - std::floor(mean_cand)) ++n_cand;

            for (std::uint64_t c = 0; c < n_cand; ++c) {
                ++stats.candidates;
                int i = begin + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(Ns)));
                int j = i;
                while (j == i)
                    j = begin + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(Ns)));
                Particle& p = ens.particles[static_cast<std::size_t>(i)];
                Particle& q = ens.particles[static_cast<std::size_t>(j)];
                Vec3 g = p.v - q.v;
                double g2 = norm2(g);
                if (g2 == 0.0) continue;
                double B_val = kernel_B(kernel, reduced_energy(p, q));
                if (B_val > maj.B_max * (1.0 + 1e-12)) {
                    B_seen = std::max(B_seen, B_val);
                    violated = true;
                    break;
                }
                double num = law.gamma_of(p.m) * law.gamma_of(q.m) * channel_count(law, p.m, q.m) *
                             B_val;
                if (rng.next_double() * rate_den >= num) continue;
                int lo = std::max(1, p.m + q.m - law.M_max);
                int hi = std::min(law.M_max, p.m + q.m - 1);
                int m_out = lo + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(hi - lo + 1)));
                CollisionChannel ch{m_out, sample_omega(rng, g, n)};
                auto out = collide_forward(p, q, ch);
                p = out.first;
                q = out.second;
                ++stats.accepted;
            }
        }

        if (!violated) {
            ens.time += dt;
            ens.round_index += 1;
            return stats;
        }
        // majorant refresh: restore the pre-round state and repeat with a
        // bound above the largest kernel value seen
        ens.particles = snapshot;
        maj.B_max = B_seen * 1.2;
        ++stats.majorant_refreshes;
    }
    throw std::runtime_error("collide_round: majorant refresh did not stabilize");
}

double suggested_round_dt(const ParticleEnsemble& ens, const MassLaw& law,
                          const MajorantConfig& maj, int shards, double fill) {
    law.validate();
    check_ensemble(ens, law);
    if (!(fill > 0.0) || fill > 1.0)
        throw std::domain_error("suggested_round_dt: fill must lie in (0, 1]");
    const int N = static_cast<int>(ens.particles.size());
    shards = std::clamp(shards, 1, N / 2);
    const double rate_den = maj.gamma_max * maj.gamma_max * maj.channel_count_max * maj.B_max;
    if (!(rate_den > 0.0))
        throw std::domain_error("suggested_round_dt: majorant rate must be positive");
    double dt = std::numeric_limits<double>::infinity();
    for (int s = 0; s < shards; ++s) {
        int begin = static_cast<int>(static_cast<long long>(N) * s / shards);
        int end = static_cast<int>(static_cast<long long>(N) * (s + 1) / shards);
        int Ns = end - begin;
        if (Ns < 2) continue;
        double vol = static_cast<double>(Ns) / N;
        double pair_rate = rate_den * half_sphere_measure(law.n) * ens.weight / vol;
        dt = std::min(dt, 1.0 / ((Ns - 1) * pair_rate));
    }
    return fill * dt;
}

EnsembleTotals ensemble_totals(const ParticleEnsemble& ens) {
    EnsembleTotals tot;
    for (const Particle& p : ens.particles) {
        tot.mass += ens.weight * p.m;
        tot.momentum += (ens.weight * p.m) * p.v;
        tot.energy += ens.weight * p.m * norm2(p.v);
    }
    return tot;
}

MacroEstimate estimate_macro(const ParticleEnsemble& ens, const MassLaw& law, int blocks) {
    law.validate();
    check_ensemble(ens, law);
    const int N = static_cast<int>(ens.particles.size());
    if (N < 100) throw std::domain_error("estimate_macro: need at least 100 particles");
    blocks = std::clamp(blocks, 2, N / 5);

    const int n = law.n;
    struct Sums {
        double cnt = 0.0, rho = 0.0, E = 0.0;
        Vec3 P{};
    };
    std::vector<Sums> block(static_cast<std::size_t>(blocks));
    Sums total;
    for (int i = 0; i < N; ++i) {
        int b = static_cast<int>(static_cast<long long>(i) * blocks / N);
        const Particle& p = ens.particles[static_cast<std::size_t>(i)];
        auto add = [&](Sums& s) {
            s.cnt += 1.0;
            s.rho += p.m;
            s.P += static_cast<double>(p.m) * p.v;
            s.E += p.m * norm2(p.v);
        };
        add(block[static_cast<std::size_t>(b)]);
        add(total);
    }

    auto macro_of = [&](const Sums& s, double volume) {
        RawMoments raw;
        raw.N = ens.weight * s.cnt / volume;
        raw.rho = ens.weight * s.rho / volume;
        raw.P = (ens.weight / volume) * s.P;
        raw.E = ens.weight * s.E / volume;
        return macro_from_moments(law, raw);
    };

    MacroEstimate est;
    est.blocks = blocks;
    est.mean = macro_of(total, 1.0);

    std::vector<MacroFields> loo(static_cast<std::size_t>(blocks));
    for (int b = 0; b < blocks; ++b) {
        const Sums& s = block[static_cast<std::size_t>(b)];
        Sums rest;
        rest.cnt = total.cnt - s.cnt;
        rest.rho = total.rho - s.rho;
        rest.P = total.P - s.P;
        rest.E = total.E - s.E;
        loo[static_cast<std::size_t>(b)] = macro_of(rest, rest.cnt / total.cnt);
    }

    auto jack_se = [&](auto pick) {
        double mean = 0.0;
        for (const auto& v : loo) mean += pick(v);
        mean /= blocks;
        double ss = 0.0;
        for (const auto& v : loo) {
            double d = pick(v) - mean;
            ss += d * d;
        }
        return std::sqrt(ss * (blocks - 1) / static_cast<double>(blocks));
    };

    est.se.rho = jack_se([](const MacroFields& f) { return f.rho; });
    for (int d = 0; d < n; ++d)
        est.se.u[d] = jack_se([d](const MacroFields& f) { return f.u[d]; });
    est.se.Theta = jack_se([](const MacroFields& f) { return f.Theta; });
    est.se.beta = jack_se([](const MacroFields& f) { return f.beta; });
    return est;
}

std::vector<long long> mass_histogram(const ParticleEnsemble& ens, int M_hint) {
    int top = M_hint;
    for (const Particle& p : ens.particles) top = std::max(top, p.m);
    std::vector<long long> counts(static_cast<std::size_t>(top) + 1, 0);
    for (const Particle& p : ens.particles) counts[static_cast<std::size_t>(p.m)] += 1;
    return counts;
}

ParticleEnsemble sample_equilibrium_ensemble(std::uint64_t seed, const MassLaw& law, int count,
                                             double weight, const Vec3& u, double Theta,
                                             double beta) {
    law.validate();
    if (count < 2) throw std::domain_error("sample_equilibrium_ensemble: count must be >= 2");
    if (!(Theta > 0.0) || !(weight > 0.0))
        throw std::domain_error("sample_equilibrium_ensemble: Theta and weight must be positive");

    // number fractions ~ e^{beta m} / gamma_m, normalized with a max shift
    std::vector<double> logp(static_cast<std::size_t>(law.M_max));
    double shift = -1e300;
    for (int m = 1; m <= law.M_max; ++m) {
        logp[static_cast<std::size_t>(m - 1)] = beta * m - std::log(law.gamma_of(m));
        shift = std::max(shift, logp[static_cast<std::size_t>(m - 1)]);
    }
    std::vector<double> cum(static_cast<std::size_t>(law.M_max));
    double z = 0.0;
    for (int m = 1; m <= law.M_max; ++m) {
        z += std::exp(logp[static_cast<std::size_t>(m - 1)] - shift);
        cum[static_cast<std::size_t>(m - 1)] = z;
    }

    ParticleEnsemble ens;
    ens.weight = weight;
    ens.rng_seed = seed;
    ens.particles.reserve(static_cast<std::size_t>(count));
    Philox rng(seed, 0);
    for (int i = 0; i < count; ++i) {
        double r = rng.next_double() * z;
        int m = law.M_max;
        for (int k = 1; k <= law.M_max; ++k)
            if (r < cum[static_cast<std::size_t>(k - 1)]) {
                m = k;
                break;
            }
        Particle p;
        p.m = m;
        double sd = std::sqrt(Theta / m);
        for (int d = 0; d < law.n; ++d) p.v[d] = u[d] + sd * rng.next_normal();
        ens.particles.push_back(p);
    }
    return ens;
}

} // namespace kinex
