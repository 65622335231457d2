#ifndef AIRTHROW_MODEL_TYPES_HPP
#define AIRTHROW_MODEL_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>

#include "airthrow/math/quat.hpp"

namespace airthrow {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Full rigid-body state of the aerial manipulator.
struct VehicleState
{
    Vec3 p_q = Vec3::Zero();      // world position [m]
    Vec3 v_q = Vec3::Zero();      // world velocity [m/s]
    Quat q = quat_identity();     // world->body attitude, scalar-first Hamilton
    Vec3 omega = Vec3::Zero();    // body angular rate [rad/s]

    bool finite() const
    {
        return p_q.allFinite() && v_q.allFinite() && q.allFinite() && omega.allFinite();
    }
};

/// End-effector offset and its body-frame derivatives.
struct ArmState
{
    Vec3 p_e_B = Vec3::Zero();
    Vec3 v_e_B = Vec3::Zero();
    Vec3 a_e_B = Vec3::Zero();
};

struct VehicleParams
{
    double m = 1.59;              // total mass [kg]
    Mat3 inertia = (Eigen::Vector3d(8.5e-3, 8.5e-3, 1.5e-2)).asDiagonal();
    double l_x = 0.125;           // rotor half-span along x_B [m]
    double l_y = 0.125;           // rotor half-span along y_B [m]
    double c_t = 1.6e-5;          // thrust coefficient [N s^2]
    double c_m = 2.6e-7;          // rotor torque coefficient [N m s^2]
    double I_r = 6.0e-6;          // propeller inertia [kg m^2]
    double g_mag = 9.81;
    double rotor_speed_max = 1500.0;  // [rad/s]
    double thrust_min = 0.0;          // collective thrust bounds [N]
    double thrust_max = 40.0;
    double omega_max = 6.0;           // body-rate command bound [rad/s]

    Vec3 gravity() const { return Vec3(0.0, 0.0, -g_mag); }

    void validate() const
    {
        if (!(m > 0.0)) throw std::invalid_argument("VehicleParams: m must be positive");
        if (!(c_t > 0.0 && c_m > 0.0 && l_x > 0.0 && l_y > 0.0))
            throw std::invalid_argument("VehicleParams: geometry/coefficients must be positive");
        if (!inertia.isApprox(inertia.transpose(), 1e-12) ||
            inertia.llt().info() != Eigen::Success)
            throw std::invalid_argument("VehicleParams: inertia must be symmetric positive-definite");
    }
};

struct ControlWrench
{
    double T = 0.0;               // collective thrust [N]
    Vec3 tau = Vec3::Zero();      // body torque [N m]
};

} // namespace airthrow

#endif
