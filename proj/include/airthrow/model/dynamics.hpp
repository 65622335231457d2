#ifndef AIRTHROW_MODEL_DYNAMICS_HPP
#define AIRTHROW_MODEL_DYNAMICS_HPP

#include "airthrow/model/types.hpp"

namespace airthrow {

/// a = (T z_B + f_ext) / m + g
inline Vec3 translational_accel(const VehicleState &state, double thrust,
                                const Vec3 &f_ext, const VehicleParams &params)
{
    const Vec3 z_b = quat_to_rot_unchecked(state.q).col(2);
    return (thrust * z_b + f_ext) / params.m + params.gravity();
}

/// q_dot = 1/2 q (x) (0, omega);  omega_dot = I^-1 (tau - omega x I omega + tau_ext)
inline std::pair<Quat, Vec3> rotational_derivatives(const Quat &q, const Vec3 &omega,
                                                    const Vec3 &tau, const Vec3 &tau_ext,
                                                    const VehicleParams &params)
{
    const Quat q_dot = quat_derivative(q, omega);
    const Vec3 omega_dot = params.inertia.ldlt().solve(
        tau - omega.cross(params.inertia * omega) + tau_ext);
    return {q_dot, omega_dot};
}

/// Rotor geometry matrix: [T; tau] = G1 Omega^o2 + G2 Omega_dot
inline Mat4 rotor_matrix_g1(const VehicleParams &p)
{
    Mat4 g1;
    g1 << p.c_t, p.c_t, p.c_t, p.c_t,
        p.l_y * p.c_t, -p.l_y * p.c_t, -p.l_y * p.c_t, p.l_y * p.c_t,
        -p.l_x * p.c_t, -p.l_x * p.c_t, p.l_x * p.c_t, p.l_x * p.c_t,
        -p.c_m, p.c_m, -p.c_m, p.c_m;
    return g1;
}

inline Mat4 rotor_matrix_g2(const VehicleParams &p)
{
    Mat4 g2 = Mat4::Zero();
    g2(3, 0) = p.I_r;
    g2(3, 1) = -p.I_r;
    g2(3, 2) = p.I_r;
    g2(3, 3) = -p.I_r;
    return g2;
}

inline ControlWrench rotor_map(const Vec4 &omega_rotors, const Vec4 &omega_rotors_dot,
                               const VehicleParams &params)
{
    const Vec4 wrench = rotor_matrix_g1(params) * omega_rotors.cwiseProduct(omega_rotors) +
                        rotor_matrix_g2(params) * omega_rotors_dot;
    ControlWrench w;
    w.T = wrench(0);
    w.tau = wrench.tail<3>();
    return w;
}

/// One RK4 step of the rigid-body model with constant wrench and disturbances
/// over the step; quaternion renormalized afterwards.
inline VehicleState rk4_step(const VehicleState &x, double thrust, const Vec3 &tau,
                             const Vec3 &f_ext, const Vec3 &tau_ext,
                             const VehicleParams &params, double dt)
{
    struct Deriv
    {
        Vec3 dp, dv, domega;
        Quat dq;
    };
    auto f = [&](const VehicleState &s) {
        Deriv d;
        d.dp = s.v_q;
        d.dv = translational_accel(s, thrust, f_ext, params);
        auto [q_dot, omega_dot] = rotational_derivatives(s.q, s.omega, tau, tau_ext, params);
        d.dq = q_dot;
        d.domega = omega_dot;
        return d;
    };
    auto advance = [](const VehicleState &s, const Deriv &d, double h) {
        VehicleState n;
        n.p_q = s.p_q + h * d.dp;
        n.v_q = s.v_q + h * d.dv;
        n.q = s.q + h * d.dq;
        n.omega = s.omega + h * d.domega;
        return n;
    };
    const Deriv k1 = f(x);
    const Deriv k2 = f(advance(x, k1, 0.5 * dt));
    const Deriv k3 = f(advance(x, k2, 0.5 * dt));
    const Deriv k4 = f(advance(x, k3, dt));
    VehicleState out;
    out.p_q = x.p_q + dt / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
    out.v_q = x.v_q + dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    out.q = quat_normalized(x.q + dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq));
    out.omega = x.omega + dt / 6.0 * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega);
    return out;
}

} // namespace airthrow

#endif
