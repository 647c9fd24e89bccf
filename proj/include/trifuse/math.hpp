// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace trifuse {

// Float vectors are used on the field-evaluation side, doubles on the
// camera/warp side where oracle tolerances are tighter.

struct vec3f {
    float x = 0.0f, y = 0.0f, z = 0.0f;
};

inline vec3f operator+(const vec3f& a, const vec3f& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline vec3f operator-(const vec3f& a, const vec3f& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline vec3f operator*(float s, const vec3f& a) { return {s * a.x, s * a.y, s * a.z}; }

struct vec3d {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline vec3d operator+(const vec3d& a, const vec3d& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline vec3d operator-(const vec3d& a, const vec3d& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline vec3d operator*(double s, const vec3d& a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(const vec3d& a, const vec3d& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline vec3d cross(const vec3d& a, const vec3d& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const vec3d& a) { return std::sqrt(dot(a, a)); }
inline vec3d normalize(const vec3d& a) {
    double len = length(a);
    return {a.x / len, a.y / len, a.z / len};
}
inline vec3f to_float(const vec3d& a) {
    return {static_cast<float>(a.x), static_cast<float>(a.y), static_cast<float>(a.z)};
}
inline vec3d to_double(const vec3f& a) { return {a.x, a.y, a.z}; }

// Row-major 3x3.
struct mat3d {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double& operator()(int r, int c) { return m[r * 3 + c]; }
    double operator()(int r, int c) const { return m[r * 3 + c]; }
};

inline vec3d operator*(const mat3d& a, const vec3d& v) {
    return {a.m[0] * v.x + a.m[1] * v.y + a.m[2] * v.z,
            a.m[3] * v.x + a.m[4] * v.y + a.m[5] * v.z,
            a.m[6] * v.x + a.m[7] * v.y + a.m[8] * v.z};
}

inline mat3d operator*(const mat3d& a, const mat3d& b) {
    mat3d r;
    for (int i = 0; i < 3; i++)
        for (int j = 0; j < 3; j++) {
            double s = 0;
            for (int k = 0; k < 3; k++) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

inline mat3d transpose(const mat3d& a) {
    mat3d r;
    for (int i = 0; i < 3; i++)
        for (int j = 0; j < 3; j++) r(i, j) = a(j, i);
    return r;
}

inline double determinant(const mat3d& a) {
    return a.m[0] * (a.m[4] * a.m[8] - a.m[5] * a.m[7]) -
           a.m[1] * (a.m[3] * a.m[8] - a.m[5] * a.m[6]) +
           a.m[2] * (a.m[3] * a.m[7] - a.m[4] * a.m[6]);
}

// Adjugate inverse; caller checks the determinant for near-singularity.
inline mat3d inverse(const mat3d& a) {
    double det = determinant(a);
    mat3d r;
    r.m[0] = (a.m[4] * a.m[8] - a.m[5] * a.m[7]) / det;
    r.m[1] = (a.m[2] * a.m[7] - a.m[1] * a.m[8]) / det;
    r.m[2] = (a.m[1] * a.m[5] - a.m[2] * a.m[4]) / det;
    r.m[3] = (a.m[5] * a.m[6] - a.m[3] * a.m[8]) / det;
    r.m[4] = (a.m[0] * a.m[8] - a.m[2] * a.m[6]) / det;
    r.m[5] = (a.m[2] * a.m[3] - a.m[0] * a.m[5]) / det;
    r.m[6] = (a.m[3] * a.m[7] - a.m[4] * a.m[6]) / det;
    r.m[7] = (a.m[1] * a.m[6] - a.m[0] * a.m[7]) / det;
    r.m[8] = (a.m[0] * a.m[4] - a.m[1] * a.m[3]) / det;
    return r;
}

// Row-major 4x4 rigid transform (rotation + translation, last row 0 0 0 1).
struct mat4d {
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    double& operator()(int r, int c) { return m[r * 4 + c]; }
    double operator()(int r, int c) const { return m[r * 4 + c]; }

    mat3d rotation() const {
        mat3d r;
        for (int i = 0; i < 3; i++)
            for (int j = 0; j < 3; j++) r(i, j) = (*this)(i, j);
        return r;
    }
    vec3d translation() const { return {m[3], m[7], m[11]}; }

    vec3d transform_point(const vec3d& p) const {
        return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
                m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
                m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
    }
};

template <typename T>
T clamp(T v, T lo, T hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

inline float clamp01(float v) { return clamp(v, 0.0f, 1.0f); }

constexpr double kPi = 3.14159265358979323846;

inline double radians(double deg) { return deg * kPi / 180.0; }
inline double degrees(double rad) { return rad * 180.0 / kPi; }

}  // namespace trifuse
