#include "kinex/collision.hpp"
#include "kinex/rng.hpp"

#include <doctest.h>
#include <Eigen/Dense>

#include "oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace kinex;

namespace {

Vec3 random_unit(Philox& rng, int n) {
    Vec3 w{};
    double nn = 0.0;
    while (nn < 1e-8) {
        for (int d = 0; d < n; ++d) w[d] = rng.next_normal();
        nn = norm(w);
    }
    return (1.0 / nn) * w;
}

// admissible scattering direction for the pair: omega . (v - v1) <= 0
Vec3 random_omega(Philox& rng, const Particle& p, const Particle& q, int n) {
    Vec3 w = random_unit(rng, n);
    if (dot(w, p.v - q.v) > 0.0) w = (-1.0) * w;
    return w;
}

Particle random_particle(Philox& rng, int n, int M) {
    Particle out;
    out.m = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(M)));
    for (int d = 0; d < n; ++d) out.v[d] = 3.0 * (rng.next_double() - 0.5);
    return out;
}

double total_energy(const Particle& a, const Particle& b) {
    return a.m * norm2(a.v) + b.m * norm2(b.v);
}

} // namespace

TEST_CASE("center of mass velocity") {
    Particle p{1, Vec3{2.0, 0.0, 0.0}};
    Particle q{3, Vec3{0.0, 0.0, 0.0}};
    Vec3 c = com_velocity(p, q);
    CHECK(c[0] == 0.5);
    CHECK(c[1] == 0.0);
    CHECK(std::abs(reduced_energy(p, q) - 3.0) <= 1e-15);
}

TEST_CASE("worked exchange collision in the plane") {
    Particle p{1, Vec3{2.0, 0.0, 0.0}};
    Particle q{3, Vec3{0.0, 0.0, 0.0}};
    CollisionChannel ch{2, Vec3{0.0, 1.0, 0.0}};
    auto [a, b] = collide_forward(p, q, ch);

    double root3 = std::sqrt(3.0);
    CHECK(a.m == 2);
    CHECK(b.m == 2);
    CHECK(std::abs(a.v[0] - (0.5 + 0.5 * root3)) <= 1e-12);
    CHECK(std::abs(b.v[0] - (0.5 - 0.5 * root3)) <= 1e-12);
    CHECK(std::abs(a.v[1]) <= 1e-12);
    CHECK(std::abs(b.v[1]) <= 1e-12);

    CHECK(std::abs(2.0 * a.v[0] + 2.0 * b.v[0] - 2.0) <= 1e-12);
    CHECK(std::abs(total_energy(a, b) - 4.0) <= 1e-12);
}

TEST_CASE("equal masses, perpendicular direction: identity map") {
    Particle p{2, Vec3{1.2, -0.4, 0.0}};
    Particle q{2, Vec3{0.1, 0.5, 0.0}};
    Vec3 g = p.v - q.v;
    Vec3 perp{-g[1], g[0], 0.0};
    perp = (1.0 / norm(perp)) * perp;
    auto [a, b] = collide_forward(p, q, CollisionChannel{2, perp});
    for (int d = 0; d < 2; ++d) {
        CHECK(std::abs(a.v[d] - p.v[d]) <= 1e-14);
        CHECK(std::abs(b.v[d] - q.v[d]) <= 1e-14);
    }
}

TEST_CASE("equal masses, head-on direction: velocity swap") {
    Particle p{3, Vec3{0.9, 0.2, -0.3}};
    Particle q{3, Vec3{-0.5, 0.8, 0.1}};
    Vec3 g = p.v - q.v;
    Vec3 head = (-1.0 / norm(g)) * g;
    auto [a, b] = collide_forward(p, q, CollisionChannel{3, head});
    for (int d = 0; d < 3; ++d) {
        CHECK(std::abs(a.v[d] - q.v[d]) <= 1e-13);
        CHECK(std::abs(b.v[d] - p.v[d]) <= 1e-13);
    }
}

TEST_CASE("channel validation") {
    Particle p{1, Vec3{1.0, 0.0, 0.0}};
    Particle q{1, Vec3{-1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(collide_forward(p, q, CollisionChannel{2, Vec3{-1.0, 0.0, 0.0}}),
                    std::domain_error);  // m_out exhausts the pair
    CHECK_THROWS_AS(collide_forward(p, q, CollisionChannel{1, Vec3{-0.5, 0.0, 0.0}}),
                    std::domain_error);  // not unit
    CHECK_THROWS_AS(collide_forward(p, q, CollisionChannel{1, Vec3{1.0, 0.0, 0.0}}),
                    std::domain_error);  // points into the forbidden half space
}

TEST_CASE("conservation and reduced-energy invariance under fuzz") {
    Philox rng(77, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 1 + static_cast<int>(rng.next_below(3));
        Particle p = random_particle(rng, n, 6);
        Particle q = random_particle(rng, n, 6);
        int span = p.m + q.m - 1;
        CollisionChannel ch;
        ch.m_out = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(span)));
        ch.omega = random_omega(rng, p, q, n);
        auto [a, b] = collide_forward(p, q, ch);

        CHECK(a.m + b.m == p.m + q.m);
        CHECK(a.m == ch.m_out);

        Vec3 P_in = static_cast<double>(p.m) * p.v + static_cast<double>(q.m) * q.v;
        Vec3 P_out = static_cast<double>(a.m) * a.v + static_cast<double>(b.m) * b.v;
        double pscale = 1.0 + norm(P_in);
        for (int d = 0; d < n; ++d) CHECK(std::abs(P_out[d] - P_in[d]) <= 1e-12 * pscale);

        double E_in = total_energy(p, q);
        CHECK(std::abs(total_energy(a, b) - E_in) <= 1e-12 * (1.0 + E_in));

        double lhs = std::sqrt(static_cast<double>(p.m) * q.m) * norm(p.v - q.v);
        double rhs = std::sqrt(static_cast<double>(a.m) * b.m) * norm(a.v - b.v);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + lhs));
        CHECK(std::abs(reduced_energy(a, b) - reduced_energy(p, q)) <=
              1e-12 * (1.0 + reduced_energy(p, q)));
    }
}

TEST_CASE("inverse collision restores the incoming pair") {
    Philox rng(78, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 1 + static_cast<int>(rng.next_below(3));
        Particle p = random_particle(rng, n, 5);
        Particle q = random_particle(rng, n, 5);
        int span = p.m + q.m - 1;
        CollisionChannel ch;
        ch.m_out = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(span)));
        ch.omega = random_omega(rng, p, q, n);
        auto [a, b] = collide_forward(p, q, ch);
        auto [r, s] = collide_inverse(a, b, CollisionChannel{p.m, (-1.0) * ch.omega});
        CHECK(r.m == p.m);
        CHECK(s.m == q.m);
        double scale = 1.0 + norm(p.v) + norm(q.v);
        for (int d = 0; d < n; ++d) {
            CHECK(std::abs(r.v[d] - p.v[d]) <= 1e-12 * scale);
            CHECK(std::abs(s.v[d] - q.v[d]) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("velocity-space Jacobian") {
    CHECK(std::abs(velocity_jacobian(1, 3, 2, 2) - 4.0 / 3.0) <= 1e-15);
    CHECK(velocity_jacobian(2, 2, 2, 3) == 1.0);

    // reciprocal pairing between a channel and its reverse
    for (int m = 1; m <= 4; ++m)
        for (int m1 = 1; m1 <= 4; ++m1)
            for (int mo = 1; mo <= m + m1 - 1; ++mo)
                for (int n = 1; n <= 3; ++n) {
                    double fwd = velocity_jacobian(m, m1, mo, n);
                    double rev = velocity_jacobian(mo, m + m1 - mo, m, n);
                    CHECK(std::abs(fwd * rev - 1.0) <= 1e-14);
                }
    CHECK_THROWS_AS(velocity_jacobian(1, 1, 2, 2), std::domain_error);
}

TEST_CASE("Jacobian matches the differentiated reconstruction map") {
    // Differentiate the map taking an outgoing pair back to the incoming one;
    // its volume factor is the claimed closed form.
    struct Config {
        int n, m, m1, mo;
    };
    Config cases[] = {{2, 1, 3, 2}, {2, 2, 2, 1}, {3, 1, 2, 2}, {3, 3, 2, 4}, {1, 2, 3, 1}};
    Philox rng(79, 1);
    for (const Config& c : cases) {
        Particle p{c.m, Vec3{}}, q{c.m1, Vec3{}};
        for (int d = 0; d < c.n; ++d) {
            p.v[d] = 2.0 * (rng.next_double() - 0.5);
            q.v[d] = 2.0 * (rng.next_double() - 0.5);
        }
        // strictly admissible direction so finite differences stay in range
        Vec3 g = p.v - q.v;
        Vec3 w = random_unit(rng, c.n);
        w = w - (dot(w, g) / norm2(g)) * g;
        Vec3 ghat = (1.0 / norm(g)) * g;
        w = w - 0.7 * ghat;  // tilt toward -g
        w = (1.0 / norm(w)) * w;
        if (dot(w, g) > 0.0) w = (-1.0) * w;

        auto [a0, b0] = collide_forward(p, q, CollisionChannel{c.mo, w});
        CollisionChannel back{c.m, (-1.0) * w};

        const int dim = 2 * c.n;
        Eigen::MatrixXd J(dim, dim);
        const double h = 1e-5;
        for (int k = 0; k < dim; ++k) {
            auto eval = [&](double sgn) {
                Particle a = a0, b = b0;
                (k < c.n ? a.v[k] : b.v[k - c.n]) += sgn * h;
                auto [r, s] = collide_inverse(a, b, back);
                Eigen::VectorXd out(dim);
                for (int d = 0; d < c.n; ++d) {
                    out[d] = r.v[d];
                    out[c.n + d] = s.v[d];
                }
                return out;
            };
            J.col(k) = (eval(1.0) - eval(-1.0)) / (2.0 * h);
        }
        double want = velocity_jacobian(c.m, c.m1, c.mo, c.n);
        CHECK(std::abs(std::abs(J.determinant()) - want) <= 1e-8 * want);
    }
}

TEST_CASE("allowed channels") {
    MassLaw law3 = MassLaw::from_table(2, {1.0, 1.0, 1.0});
    CHECK(allowed_channels(law3, 2, 2) == std::vector<int>{1, 2, 3});

    MassLaw law2 = MassLaw::from_table(2, {1.0, 1.0});
    CHECK(allowed_channels(law2, 2, 2) == std::vector<int>{2});

    MassLaw law6 = MassLaw::from_table(3, std::vector<double>(6, 1.0));
    CHECK(allowed_channels(law6, 2, 3) == std::vector<int>{1, 2, 3, 4});

    CHECK_THROWS_AS(allowed_channels(law2, 3, 1), std::domain_error);

    // the reverse of every allowed channel is allowed
    for (int M : {4, 5}) {
        MassLaw law = MassLaw::from_table(2, std::vector<double>(static_cast<std::size_t>(M), 1.0));
        for (int m = 1; m <= M; ++m)
            for (int m1 = 1; m1 <= M; ++m1)
                for (int mo : allowed_channels(law, m, m1)) {
                    int mo1 = m + m1 - mo;
                    auto rev = allowed_channels(law, mo, mo1);
                    bool found = false;
                    for (int r : rev) found = found || (r == m);
                    CHECK(found);
                }
    }
}

TEST_CASE("channel rates") {
    MassLaw law = MassLaw::from_table(2, {1.0, 2.0, 3.0, 4.0});
    for (int mo : allowed_channels(law, 2, 3))
        CHECK(channel_rate_A(law, 2, 3, mo) == 6.0);
    CHECK(channel_rate_A(law, 2, 3, 2) == channel_rate_A(law, 3, 2, 2));
    CHECK(channel_rate_A(law, 2, 2, 4) == 0.0);   // off the truncated ladder
    CHECK(channel_rate_A(law, 1, 1, 1) == 1.0);
}

TEST_CASE("scattering kernel") {
    Kernel maxwell{Kernel::Kind::maxwell, 0.8, 0.0};
    CHECK(kernel_B(maxwell, 0.0) == 0.8);
    CHECK(kernel_B(maxwell, 17.3) == 0.8);

    Kernel power{Kernel::Kind::power_law, 1.0, 0.5};
    CHECK(std::abs(kernel_B(power, 4.0) - 2.0) <= 1e-15);
    CHECK(kernel_B(power, 0.0) == 0.0);

    Kernel power2{Kernel::Kind::power_law, 2.5, 0.25};
    CHECK(std::abs(kernel_B(power2, 16.0) - 5.0) <= 1e-14);

    CHECK_THROWS_AS(kernel_B(power, -1.0), std::domain_error);
    Kernel bad_cb{Kernel::Kind::maxwell, 0.0, 0.0};
    CHECK_THROWS_AS(bad_cb.validate(), std::domain_error);
    Kernel bad_exp{Kernel::Kind::power_law, 1.0, 0.7};
    CHECK_THROWS_AS(bad_exp.validate(), std::domain_error);
}
