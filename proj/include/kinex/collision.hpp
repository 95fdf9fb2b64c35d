#pragma once

#include "kinex/mass_law.hpp"
#include "kinex/vec.hpp"

#include <utility>
#include <vector>

namespace kinex {

struct Particle {
    int m = 1;    // mass units
    Vec3 v{};     // velocity, first law.n components active
};

/// One resolved collision channel: the mass carried away by the first outgoing
/// particle and the scattering direction. Valid channels satisfy
/// omega . (v - v1) <= 0 for the incoming pair and |omega| = 1.
struct CollisionChannel {
    int m_out = 1;
    Vec3 omega{};
};

/// Scattering kernel B(E_red, cos). Both kinds are isotropic in the cosine;
/// the power-law kind scales with reduced energy.
struct Kernel {
    enum class Kind { maxwell, power_law };
    Kind kind = Kind::maxwell;
    double C_B = 1.0;        // > 0
    double omega_exp = 0.0;  // exponent in [0, 1/2], power_law only

    void validate() const;
};

Vec3 com_velocity(const Particle& p, const Particle& q);

/// Reduced energy of a pair, (m m1/(m+m1)) |v - v1|^2.
double reduced_energy(const Particle& p, const Particle& q);

/// Apply the mass-exchange collision law. The outgoing pair conserves particle
/// number, mass, momentum and kinetic energy m|v|^2 exactly (up to round-off).
std::pair<Particle, Particle> collide_forward(const Particle& p, const Particle& q,
                                              const CollisionChannel& ch);

/// Inverse collision: reconstructs the pre-collision pair from an outgoing one.
/// The channel carries the mass of the first reconstructed particle and the
/// reversed scattering direction (forward omega negated).
std::pair<Particle, Particle> collide_inverse(const Particle& p, const Particle& q,
                                              const CollisionChannel& ch);

/// Velocity-space Jacobian of the collision map, (m' m'_1 / (m m1))^{n/2}.
double velocity_jacobian(int m, int m1, int m_out, int n);

/// Channels m' with both outgoing masses on the ladder:
/// max(1, m+m1-M_max) <= m' <= min(M_max, m+m1-1). Removal at the top of the
/// ladder is symmetric, so the reverse of every allowed channel stays allowed.
std::vector<int> allowed_channels(const MassLaw& law, int m, int m1);

/// Multiplicative channel rate gamma_m gamma_m1, zero off the allowed set.
double channel_rate_A(const MassLaw& law, int m, int m1, int m_out);

double kernel_B(const Kernel& k, double E_red, double cosine = 0.0);

} // namespace kinex
