#pragma once

#include "kinex/collision.hpp"
#include "kinex/kinetic.hpp"
#include "kinex/mass_law.hpp"
#include "kinex/rng.hpp"

#include <cstdint>
#include <vector>

namespace kinex {

// Stochastic particle simulator for the spatially homogeneous exchange gas.
// Pairs are selected at a majorant rate; null collisions keep the sampling
// unbiased while the accepted collisions apply the exact microscopic law.

struct ParticleEnsemble {
    std::vector<Particle> particles;
    double weight = 1.0;          // physical number per simulated particle
    std::uint64_t rng_seed = 0;
    double time = 0.0;
    std::uint64_t round_index = 0;  // advances the counter-based RNG substream
};

struct MajorantConfig {
    double B_max = 0.0;            // upper bound on the kernel over reachable energies
    int channel_count_max = 0;     // bound on |allowed_channels|
    double gamma_max = 0.0;        // max rate factor
};

// Majorant built from the current ensemble: exact for the constant kernel, a
// speed-based energy bound for the power-law kernel.
MajorantConfig make_majorant(const ParticleEnsemble& ens, const MassLaw& law,
                             const Kernel& kernel);

// Uniform direction on the half sphere {omega : omega . g <= 0}.
Vec3 sample_omega(Philox& rng, const Vec3& g, int n);

struct RoundStats {
    std::uint64_t candidates = 0;
    std::uint64_t accepted = 0;
    int majorant_refreshes = 0;
};

// One majorant-rate collision round over dt. Shards partition the ensemble
// into independently colliding blocks, each with its own RNG substream.
RoundStats collide_round(ParticleEnsemble& ens, const MassLaw& law, const Kernel& kernel,
                         MajorantConfig& maj, double dt, int shards = 1);

// Largest dt accepted by collide_round's candidate-per-particle guard, scaled
// by fill in (0, 1].
double suggested_round_dt(const ParticleEnsemble& ens, const MassLaw& law,
                          const MajorantConfig& maj, int shards = 1, double fill = 0.5);

struct EnsembleTotals {
    double mass = 0.0;
    Vec3 momentum{};
    double energy = 0.0;
};

EnsembleTotals ensemble_totals(const ParticleEnsemble& ens);

struct MacroEstimate {
    MacroFields mean;
    MacroFields se;   // delete-one-block jackknife standard errors
    int blocks = 0;
};

MacroEstimate estimate_macro(const ParticleEnsemble& ens, const MassLaw& law, int blocks = 20);

// Counts indexed by mass, entry [0] unused. With M_hint = 0 the vector is
// sized by the largest mass present.
std::vector<long long> mass_histogram(const ParticleEnsemble& ens, int M_hint = 0);

// Draws count particles from the equilibrium state: masses with number
// fractions proportional to e^{beta m}/gamma_m, velocities Gaussian with
// variance Theta/m per axis.
ParticleEnsemble sample_equilibrium_ensemble(std::uint64_t seed, const MassLaw& law, int count,
                                             double weight, const Vec3& u, double Theta,
                                             double beta);

} // namespace kinex
