#pragma once

#include "qshnn/types.hpp"

#include <cmath>
#include <functional>
#include <iosfwd>

namespace qshnn {

/// Hypercomplex number s + x i + y j + z k. Component order everywhere in
/// this project, including the R^4 embedding vec(q), is (s, x, y, z).
struct Quaternion {
    double s = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Quaternion() = default;
    constexpr Quaternion(double s_, double x_, double y_, double z_) : s(s_), x(x_), y(y_), z(z_) {}

    static constexpr Quaternion one() { return {1, 0, 0, 0}; }
    static constexpr Quaternion i() { return {0, 1, 0, 0}; }
    static constexpr Quaternion j() { return {0, 0, 1, 0}; }
    static constexpr Quaternion k() { return {0, 0, 0, 1}; }
    static constexpr Quaternion zero() { return {0, 0, 0, 0}; }

    static Quaternion from_vec(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
    Eigen::Vector4d to_vec() const { return {s, x, y, z}; }

    Quaternion conj() const { return {s, -x, -y, -z}; }
    double squared_norm() const { return s * s + x * x + y * y + z * z; }
    double norm() const { return std::sqrt(squared_norm()); }

    /// q^-1 = q^dagger / |q|^2, so that q * q^-1 = 1. Throws on |q| = 0.
    Quaternion inverse() const;

    bool is_zero() const { return s == 0.0 && x == 0.0 && y == 0.0 && z == 0.0; }
    bool all_finite() const {
        return std::isfinite(s) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }

    Quaternion& operator+=(const Quaternion& r) {
        s += r.s;
        x += r.x;
        y += r.y;
        z += r.z;
        return *this;
    }
    Quaternion& operator-=(const Quaternion& r) {
        s -= r.s;
        x -= r.x;
        y -= r.y;
        z -= r.z;
        return *this;
    }
    Quaternion& operator*=(double a) {
        s *= a;
        x *= a;
        y *= a;
        z *= a;
        return *this;
    }
};

inline Quaternion operator+(Quaternion a, const Quaternion& b) { return a += b; }
inline Quaternion operator-(Quaternion a, const Quaternion& b) { return a -= b; }
inline Quaternion operator-(const Quaternion& a) { return {-a.s, -a.x, -a.y, -a.z}; }
inline Quaternion operator*(Quaternion a, double c) { return a *= c; }
inline Quaternion operator*(double c, Quaternion a) { return a *= c; }

/// Hamilton product a * b (non-commutative), component expansion with
/// i*j = k, j*k = i, k*i = j and i^2 = j^2 = k^2 = -1.
inline Quaternion operator*(const Quaternion& a, const Quaternion& b) {
    return {a.s * b.s - a.x * b.x - a.y * b.y - a.z * b.z,
            a.s * b.x + b.s * a.x + a.y * b.z - b.y * a.z,
            a.s * b.y + b.s * a.y + a.z * b.x - b.z * a.x,
            a.s * b.z + b.s * a.z + a.x * b.y - b.x * a.y};
}

inline bool operator==(const Quaternion& a, const Quaternion& b) {
    return a.s == b.s && a.x == b.x && a.y == b.y && a.z == b.z;
}

std::ostream& operator<<(std::ostream& os, const Quaternion& q);

/// The 4x4 real matrix L(q) with L(q) * vec(p) = vec(q * p). The map
/// q -> L(q) is an algebra isomorphism onto the left-multiplication
/// subspace span{L(1), L(i), L(j), L(k)}.
Matrix4 left_mult_matrix(const Quaternion& q);

/// mu * q * mu^-1: rotates the vector part of q by the rotation encoded in
/// mu, leaving scalar part and norm unchanged. Throws on |mu| = 0.
Quaternion rotate(const Quaternion& q, const Quaternion& mu);

/// Left GHR derivative of f at q with rotation factor mu, computed from the
/// four component partials (central differences, step 1e-6 * max(1, |q|))
/// combined against the rotated basis {1, i^mu, j^mu, k^mu}:
///
///   plain side:      (1/4) (df/dq_a - df/dq_b * i^mu - df/dq_c * j^mu - df/dq_d * k^mu)
///   conjugate side:  (1/4) (df/dq_a + df/dq_b * i^mu + df/dq_c * j^mu + df/dq_d * k^mu)
///
/// Throws std::domain_error on |mu| = 0 and std::runtime_error if f produces
/// non-finite values near q.
Quaternion ghr_derivative(const std::function<Quaternion(const Quaternion&)>& f,
                          const Quaternion& q, const Quaternion& mu, bool conjugate_side);

}  // namespace qshnn
