#ifndef AIRTHROW_MATH_QUAT_HPP
#define AIRTHROW_MATH_QUAT_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace airthrow {

// Quaternions are stored scalar-first (w, x, y, z), Hamilton convention.
// R(q) maps body-frame vectors into the world frame.
using Quat = Eigen::Vector4d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline Mat3 skew(const Vec3 &v)
{
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
        v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return m;
}

inline Quat quat_identity() { return Quat(1.0, 0.0, 0.0, 0.0); }

inline Quat quat_normalized(const Quat &q) { return q / q.norm(); }

inline Quat quat_conjugate(const Quat &q)
{
    return Quat(q(0), -q(1), -q(2), -q(3));
}

inline Quat quat_multiply(const Quat &a, const Quat &b)
{
    return Quat(
        a(0) * b(0) - a(1) * b(1) - a(2) * b(2) - a(3) * b(3),
        a(0) * b(1) + a(1) * b(0) + a(2) * b(3) - a(3) * b(2),
        a(0) * b(2) - a(1) * b(3) + a(2) * b(0) + a(3) * b(1),
        a(0) * b(3) + a(1) * b(2) - a(2) * b(1) + a(3) * b(0));
}

inline Mat3 quat_to_rot(const Quat &q)
{
    if (std::abs(q.norm() - 1.0) > 1e-6)
    {
        throw std::invalid_argument("quat_to_rot: quaternion is not unit length");
    }
    const double w = q(0), x = q(1), y = q(2), z = q(3);
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

inline Mat3 quat_to_rot_unchecked(const Quat &q)
{
    const double w = q(0), x = q(1), y = q(2), z = q(3);
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

// q_dot = 1/2 q (x) (0, omega), omega in body frame
inline Quat quat_derivative(const Quat &q, const Vec3 &omega)
{
    return 0.5 * quat_multiply(q, Quat(0.0, omega.x(), omega.y(), omega.z()));
}

inline Quat quat_from_rot(const Mat3 &r)
{
    Quat q;
    const double tr = r.trace();
    if (tr > 0.0)
    {
        double s = std::sqrt(tr + 1.0) * 2.0;
        q << 0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s,
            (r(1, 0) - r(0, 1)) / s;
    }
    else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2))
    {
        double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
        q << (r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s,
            (r(0, 2) + r(2, 0)) / s;
    }
    else if (r(1, 1) > r(2, 2))
    {
        double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
        q << (r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s,
            (r(1, 2) + r(2, 1)) / s;
    }
    else
    {
        double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
        q << (r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s,
            (r(1, 2) + r(2, 1)) / s, 0.25 * s;
    }
    if (q(0) < 0.0) q = -q;
    return quat_normalized(q);
}

} // namespace airthrow

#endif
