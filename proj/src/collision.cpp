#include "kinex/collision.hpp"
#include "kinex/errors.hpp"

#include <cmath>
#include <sstream>

namespace kinex {

void Kernel::validate() const {
    if (!(C_B > 0.0))
        throw std::domain_error("Kernel: C_B > 0 violated");
    if (kind == Kind::power_law && (omega_exp < 0.0 || omega_exp > 0.5))
        throw std::domain_error("Kernel: omega_exp in [0, 1/2] violated");
}

Vec3 com_velocity(const Particle& p, const Particle& q) {
    double inv = 1.0 / (p.m + q.m);
    return inv * (static_cast<double>(p.m) * p.v + static_cast<double>(q.m) * q.v);
}

double reduced_energy(const Particle& p, const Particle& q) {
    double mu = static_cast<double>(p.m) * q.m / (p.m + q.m);
    return mu * norm2(p.v - q.v);
}

namespace {

void check_channel(const Particle& p, const Particle& q, const CollisionChannel& ch) {
    if (ch.m_out < 1 || ch.m_out > p.m + q.m - 1) {
        std::ostringstream os;
        os << "collision: 1 <= m_out <= m+m1-1 violated (m_out = " << ch.m_out
           << ", m+m1 = " << p.m + q.m << ")";
        throw std::domain_error(os.str());
    }
    double nrm = norm(ch.omega);
    if (std::abs(nrm - 1.0) > 1e-12)
        throw std::domain_error("collision: |omega| = 1 violated");
    Vec3 g = p.v - q.v;
    if (dot(ch.omega, g) > 1e-12 * (1.0 + norm(g)))
        throw std::domain_error("collision: omega . (v - v1) <= 0 violated");
}

} // namespace

std::pair<Particle, Particle> collide_forward(const Particle& p, const Particle& q,
                                              const CollisionChannel& ch) {
    check_channel(p, q, ch);
    int m = p.m, m1 = q.m;
    int mo = ch.m_out, mo1 = m + m1 - mo;
    Vec3 vcm = com_velocity(p, q);
    Vec3 g = p.v - q.v;
    Vec3 defl = g - (2.0 * dot(g, ch.omega)) * ch.omega;
    double pref = std::sqrt(static_cast<double>(m) * m1) / (m + m1);
    Particle out0{mo, vcm + (pref * std::sqrt(static_cast<double>(mo1) / mo)) * defl};
    Particle out1{mo1, vcm - (pref * std::sqrt(static_cast<double>(mo) / mo1)) * defl};
    return {out0, out1};
}

std::pair<Particle, Particle> collide_inverse(const Particle& p, const Particle& q,
                                              const CollisionChannel& ch) {
    // With the scattering direction reversed the inverse law has the same
    // algebraic shape as the forward one, applied to the outgoing pair.
    return collide_forward(p, q, ch);
}

double velocity_jacobian(int m, int m1, int m_out, int n) {
    int mo1 = m + m1 - m_out;
    if (m < 1 || m1 < 1 || m_out < 1 || mo1 < 1)
        throw std::domain_error("velocity_jacobian: all four masses must be >= 1");
    double ratio = static_cast<double>(m_out) * mo1 / (static_cast<double>(m) * m1);
    return std::pow(ratio, 0.5 * n);
}

std::vector<int> allowed_channels(const MassLaw& law, int m, int m1) {
    if (m < 1 || m > law.M_max || m1 < 1 || m1 > law.M_max)
        throw std::domain_error("allowed_channels: incoming masses must lie on the ladder");
    int lo = std::max(1, m + m1 - law.M_max);
    int hi = std::min(law.M_max, m + m1 - 1);
    std::vector<int> out;
    for (int mp = lo; mp <= hi; ++mp) out.push_back(mp);
    return out;
}

double channel_rate_A(const MassLaw& law, int m, int m1, int m_out) {
    int lo = std::max(1, m + m1 - law.M_max);
    int hi = std::min(law.M_max, m + m1 - 1);
    if (m_out < lo || m_out > hi) return 0.0;
    return law.gamma_of(m) * law.gamma_of(m1);
}

double kernel_B(const Kernel& k, double E_red, double /*cosine*/) {
    k.validate();
    if (!(E_red >= 0.0))
        throw std::domain_error("kernel_B: E_red >= 0 violated");
    if (k.kind == Kernel::Kind::maxwell) return k.C_B;
    return k.C_B * std::pow(E_red, k.omega_exp);
}

} // namespace kinex
