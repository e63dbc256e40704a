#include "qshnn/quaternion.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace qshnn {

Quaternion Quaternion::inverse() const {
    const double n2 = squared_norm();
    if (n2 == 0.0) {
        throw std::domain_error("inverse of zero quaternion");
    }
    return {s / n2, -x / n2, -y / n2, -z / n2};
}

std::ostream& operator<<(std::ostream& os, const Quaternion& q) {
    return os << "(" << q.s << " + " << q.x << "i + " << q.y << "j + " << q.z << "k)";
}

Matrix4 left_mult_matrix(const Quaternion& q) {
    Matrix4 m;
    // Left factor of the matrix form of q1 * q2, columns acting on (s, x, y, z).
    m << q.s, -q.x, -q.y, -q.z,
         q.x,  q.s, -q.z,  q.y,
         q.y,  q.z,  q.s, -q.x,
         q.z, -q.y,  q.x,  q.s;
    return m;
}

Quaternion rotate(const Quaternion& q, const Quaternion& mu) {
    if (mu.is_zero()) {
        throw std::domain_error("rotation by zero quaternion");
    }
    return mu * q * mu.inverse();
}

Quaternion ghr_derivative(const std::function<Quaternion(const Quaternion&)>& f,
                          const Quaternion& q, const Quaternion& mu, bool conjugate_side) {
    if (mu.is_zero()) {
        throw std::domain_error("GHR derivative needs a nonzero rotation factor");
    }
    const double h = 1e-6 * std::max(1.0, q.norm());

    const auto partial = [&](const Quaternion& dir) {
        const Quaternion fp = f(q + h * dir);
        const Quaternion fm = f(q - h * dir);
        if (!fp.all_finite() || !fm.all_finite()) {
            throw std::runtime_error("GHR derivative: f is non-finite near evaluation point");
        }
        return (fp - fm) * (1.0 / (2.0 * h));
    };

    const Quaternion da = partial(Quaternion::one());
    const Quaternion db = partial(Quaternion::i());
    const Quaternion dc = partial(Quaternion::j());
    const Quaternion dd = partial(Quaternion::k());

    const Quaternion i_mu = rotate(Quaternion::i(), mu);
    const Quaternion j_mu = rotate(Quaternion::j(), mu);
    const Quaternion k_mu = rotate(Quaternion::k(), mu);

    const double sign = conjugate_side ? 1.0 : -1.0;
    return 0.25 * (da + sign * (db * i_mu) + sign * (dc * j_mu) + sign * (dd * k_mu));
}

}  // namespace qshnn
