#ifndef AIRTHROW_MODEL_FLATNESS_HPP
#define AIRTHROW_MODEL_FLATNESS_HPP

#include "airthrow/model/types.hpp"

namespace airthrow {

struct TranslationalKinematics
{
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 a = Vec3::Zero();
};

/// End-effector world kinematics to quadrotor-center world kinematics.
/// The velocity level carries the omega transport term; at the acceleration
/// level the single-hat term is the angular-acceleration transport
/// omega_dot x (R p_e_B).
inline TranslationalKinematics end_effector_to_quad(
    const Vec3 &p_e_W, const Vec3 &v_e_W, const Vec3 &a_e_W,
    const ArmState &arm, const Quat &q, const Vec3 &omega, const Vec3 &omega_dot)
{
    if (!(p_e_W.allFinite() && v_e_W.allFinite() && a_e_W.allFinite() &&
          omega.allFinite() && omega_dot.allFinite()))
        throw std::invalid_argument("end_effector_to_quad: non-finite input");
    const Mat3 r = quat_to_rot(q);
    TranslationalKinematics out;
    out.p = p_e_W - r * arm.p_e_B;
    out.v = v_e_W - r * (arm.v_e_B + omega.cross(arm.p_e_B));
    out.a = a_e_W - r * (arm.a_e_B + 2.0 * omega.cross(arm.v_e_B) +
                         omega_dot.cross(arm.p_e_B) +
                         omega.cross(omega.cross(arm.p_e_B)));
    return out;
}

/// Inverse direction: quadrotor state plus arm offset to end-effector world
/// position/velocity (used at payload detach).
inline std::pair<Vec3, Vec3> quad_to_end_effector(const VehicleState &x, const ArmState &arm)
{
    const Mat3 r = quat_to_rot_unchecked(x.q);
    const Vec3 p_e = x.p_q + r * arm.p_e_B;
    const Vec3 v_e = x.v_q + r * (arm.v_e_B + x.omega.cross(arm.p_e_B));
    return {p_e, v_e};
}

/// Flat reference recovered from translational derivatives at zero yaw:
/// attitude from the thrust direction, body rate from jerk.
struct FlatReference
{
    Quat q = quat_identity();
    Vec3 omega = Vec3::Zero();
    double thrust = 0.0;         // [N]
    Vec3 z_b = Vec3::UnitZ();
};

inline FlatReference flat_reference_from_accel(const Vec3 &a, const Vec3 &jerk,
                                               const VehicleParams &params)
{
    FlatReference ref;
    const Vec3 f = a - params.gravity();      // required specific thrust [m/s^2]
    const double fn = f.norm();
    if (fn < 1e-6)
    {
        // free-fall singularity: keep level attitude
        ref.thrust = 0.0;
        return ref;
    }
    const Vec3 z_b = f / fn;
    const Vec3 x_c = Vec3::UnitX();           // zero yaw
    Vec3 y_b = z_b.cross(x_c);
    if (y_b.norm() < 1e-6) y_b = Vec3::UnitY();
    y_b.normalize();
    const Vec3 x_b = y_b.cross(z_b);
    Mat3 r;
    r.col(0) = x_b;
    r.col(1) = y_b;
    r.col(2) = z_b;
    ref.q = quat_from_rot(r);
    ref.z_b = z_b;
    ref.thrust = params.m * fn;
    // d/dt of thrust direction gives the tilt rates; yaw rate held at zero
    ref.omega.x() = -y_b.dot(jerk) / fn;
    ref.omega.y() = x_b.dot(jerk) / fn;
    ref.omega.z() = 0.0;
    return ref;
}

} // namespace airthrow

#endif
