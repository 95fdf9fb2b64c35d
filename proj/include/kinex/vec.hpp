#pragma once

#include <cmath>

namespace kinex {

// Small fixed-capacity velocity vector. Only the first n components of a state
// are active (n = 1..3); inactive ones are kept at zero so dot/norm stay valid.
struct Vec3 {
    double c[3] = {0.0, 0.0, 0.0};

    Vec3() = default;
    Vec3(double x, double y, double z) : c{x, y, z} {}

    double& operator[](int i) { return c[i]; }
    double operator[](int i) const { return c[i]; }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.c[0] + b.c[0], a.c[1] + b.c[1], a.c[2] + b.c[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.c[0] - b.c[0], a.c[1] - b.c[1], a.c[2] - b.c[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.c[0], s * a.c[1], s * a.c[2]}; }
inline Vec3& operator+=(Vec3& a, const Vec3& b) { a.c[0] += b.c[0]; a.c[1] += b.c[1]; a.c[2] += b.c[2]; return a; }

inline double dot(const Vec3& a, const Vec3& b) { return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2]; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

} // namespace kinex
