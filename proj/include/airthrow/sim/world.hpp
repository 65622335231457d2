#ifndef AIRTHROW_SIM_WORLD_HPP
#define AIRTHROW_SIM_WORLD_HPP

#include <cmath>
#include <stdexcept>

#include "airthrow/model/dynamics.hpp"
#include "airthrow/model/flatness.hpp"
#include "airthrow/projectile/projectile.hpp"

namespace airthrow {

/// Ground-truth plant state. The payload is modeled as a rigidly attached
/// point mass until detach, then as a free ballistic point.
struct WorldState
{
    VehicleState vehicle;
    Vec4 rotor_speeds = Vec4::Zero();
    double clock = 0.0;

    bool payload_attached = true;
    Vec3 payload_p = Vec3::Zero();
    Vec3 payload_v = Vec3::Zero();
    bool payload_released = false;
};

struct PlantOutput
{
    Vec3 accel = Vec3::Zero();    // true translational acceleration [m/s^2], world frame
    Vec3 omega_dot = Vec3::Zero();
    ControlWrench wrench;
};

/// Advances the plant by one simulation step of length dt.
///
/// Rotor speeds follow first-order lag dynamics toward rotor_cmd and the
/// wrench is evaluated from the speeds (and their lag rate, for the
/// gyroscopic yaw term) at the start of the step. While the payload is
/// attached the translational mass is m + m_p and the attachment exerts the
/// reaction torque r_att x (m_p R^T (g - a)) on the airframe.
inline PlantOutput step_plant(WorldState &world, const Vec4 &rotor_cmd, double dt,
                              const VehicleParams &params, double payload_mass,
                              const Vec3 &payload_offset, double motor_time_constant)
{
    if (!world.vehicle.finite())
        throw std::runtime_error("step_plant: non-finite vehicle state");

    const Vec4 cmd = rotor_cmd.cwiseMax(0.0).cwiseMin(params.rotor_speed_max);
    const Vec4 rotor_rate = (cmd - world.rotor_speeds) / motor_time_constant;
    const ControlWrench wrench = rotor_map(world.rotor_speeds, rotor_rate, params);

    const double m_p = world.payload_attached ? payload_mass : 0.0;
    VehicleParams eff = params;
    eff.m = params.m + m_p;

    const Mat3 r = quat_to_rot(world.vehicle.q);
    const Vec3 z_b = r.col(2);
    const Vec3 g_vec = params.gravity();
    const Vec3 accel = wrench.T * z_b / eff.m + g_vec;
    Vec3 tau_ext = Vec3::Zero();
    if (world.payload_attached)
        tau_ext = payload_offset.cross(m_p * (r.transpose() * (g_vec - accel)));

    world.vehicle =
        rk4_step(world.vehicle, wrench.T, wrench.tau, Vec3::Zero(), tau_ext, eff, dt);
    world.rotor_speeds =
        cmd + (world.rotor_speeds - cmd) * std::exp(-dt / motor_time_constant);
    world.clock += dt;

    if (world.payload_released && !world.payload_attached)
    {
        world.payload_p += world.payload_v * dt + 0.5 * g_vec * dt * dt;
        world.payload_v += g_vec * dt;
    }

    if (!world.vehicle.finite())
        throw std::runtime_error("step_plant: state diverged");

    PlantOutput out;
    out.accel = accel;
    out.wrench = wrench;
    out.omega_dot = params.inertia.ldlt().solve(
        wrench.tau - world.vehicle.omega.cross(params.inertia * world.vehicle.omega) +
        tau_ext);
    return out;
}

/// Detaches the payload, seeding its free-flight state from the attachment
/// point kinematics of the current vehicle state.
inline ReleaseState detach_payload(WorldState &world, const Vec3 &payload_offset)
{
    if (!world.payload_attached)
        throw std::logic_error("detach_payload: payload already detached");
    ArmState arm;
    arm.p_e_B = payload_offset;
    const auto [p_e, v_e] = quad_to_end_effector(world.vehicle, arm);
    world.payload_attached = false;
    world.payload_released = true;
    world.payload_p = p_e;
    world.payload_v = v_e;
    ReleaseState rs;
    rs.p = p_e;
    rs.v = v_e;
    rs.t_release = world.clock;
    return rs;
}

} // namespace airthrow

#endif
