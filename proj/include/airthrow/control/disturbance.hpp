#ifndef AIRTHROW_CONTROL_DISTURBANCE_HPP
#define AIRTHROW_CONTROL_DISTURBANCE_HPP

#include <Eigen/Dense>
#include <stdexcept>

#include "airthrow/control/filters.hpp"
#include "airthrow/model/dynamics.hpp"

namespace airthrow {

// Nonlinear disturbance observer on the translational residual
// m(a - g) - T z_B with a first-order recursion of gain c/m, followed by a
// second-order Butterworth low-pass.
struct ObserverState
{
    Vec3 f_ext_hat = Vec3::Zero();   // filtered estimate
    Vec3 f_raw = Vec3::Zero();       // pre-filter recursion state
    double c = 5.0;                  // observer gain [1/s]
    Butterworth2<3> filter;

    ObserverState() = default;
    ObserverState(double gain, double f_cut, double f_s) : c(gain), filter(f_cut, f_s)
    {
        if (!(c > 0.0)) throw std::invalid_argument("ObserverState: c must be positive");
    }
};

inline ObserverState ndob_update(ObserverState obs, const Vec3 &a_meas, double thrust,
                                 const Vec3 &z_b, double m, const Vec3 &g_vec,
                                 double dt_sensor)
{
    if (!(dt_sensor > 0.0)) throw std::invalid_argument("ndob_update: dt must be positive");
    const Vec3 residual = m * (a_meas - g_vec) - thrust * z_b;
    obs.f_raw += (obs.c / m) * (residual - obs.f_raw) * dt_sensor;
    obs.f_ext_hat = obs.filter.update(obs.f_raw);
    return obs;
}

struct IndiState
{
    Vec3 k_rate = Vec3::Constant(20.0);  // diagonal rate-loop gain [1/s]
    double motor_time_constant = 0.03;   // [s]
    Vec3 omega_f = Vec3::Zero();
    Vec3 omega_dot_f = Vec3::Zero();
    Vec4 rotor_speed_f = Vec4::Zero();
    Vec3 tau_f = Vec3::Zero();

    Butterworth2<3> omega_filter;
    Butterworth2<3> omega_dot_filter;
    Butterworth2<4> rotor_filter;
    Vec3 omega_f_prev = Vec3::Zero();
    bool have_prev = false;
};

inline IndiState make_indi_state(const Vec3 &k_rate, double motor_time_constant,
                                 double f_cut, double f_s)
{
    IndiState s;
    s.k_rate = k_rate;
    s.motor_time_constant = motor_time_constant;
    s.omega_filter.configure(f_cut, f_s);
    s.omega_dot_filter.configure(f_cut, f_s);
    s.rotor_filter.configure(f_cut, f_s);
    return s;
}

/// omega_dot_d = K (omega_ref - omega_f) + omega_dot_ref
inline Vec3 angular_accel_setpoint(const Vec3 &omega_ref, const Vec3 &omega_dot_ref,
                                   const Vec3 &omega_f, const Vec3 &k_rate)
{
    return k_rate.cwiseProduct(omega_ref - omega_f) + omega_dot_ref;
}

/// tau_d = tau_f + I (omega_dot_d - omega_dot_f)
inline Vec3 indi_torque(const Vec3 &tau_f, const Mat3 &inertia,
                        const Vec3 &omega_dot_d, const Vec3 &omega_dot_f)
{
    return tau_f + inertia * (omega_dot_d - omega_dot_f);
}

/// Updates the measurement path of the INDI loop: filtered body rate, its
/// finite-difference derivative (refiltered), filtered rotor speeds, and the
/// feedback torque from the rotor model.
inline void indi_measure(IndiState &s, const Vec3 &omega_meas, const Vec4 &rotor_meas,
                         const Vec4 &rotor_cmd_prev, const VehicleParams &params,
                         double dt_sensor)
{
    s.omega_f = s.omega_filter.update(omega_meas);
    if (!s.have_prev)
    {
        s.omega_f_prev = s.omega_f;
        s.have_prev = true;
    }
    const Vec3 omega_dot_raw = (s.omega_f - s.omega_f_prev) / dt_sensor;
    s.omega_f_prev = s.omega_f;
    s.omega_dot_f = s.omega_dot_filter.update(omega_dot_raw);
    s.rotor_speed_f = s.rotor_filter.update(rotor_meas);
    const Vec4 rotor_rate = (rotor_cmd_prev - s.rotor_speed_f) / s.motor_time_constant;
    const ControlWrench w = rotor_map(s.rotor_speed_f, rotor_rate, params);
    s.tau_f = w.tau;
}

struct AllocationResult
{
    Vec4 rotor_speeds = Vec4::Zero();
    bool saturated = false;
};

/// Inverts [T_d; tau_d] = G1 Omega_d^o2 + dt^-1 G2 (Omega_r - Omega_f).
/// Negative squared speeds are clamped before the square root and the result
/// saturated to the rotor-speed limit; both cases set the saturation flag.
inline AllocationResult allocate(double thrust_d, const Vec3 &tau_d, const Vec4 &rotor_cmd_prev,
                                 const Vec4 &rotor_speed_f, const VehicleParams &params,
                                 double motor_time_constant)
{
    Vec4 wrench;
    wrench << thrust_d, tau_d;
    wrench -= rotor_matrix_g2(params) * (rotor_cmd_prev - rotor_speed_f) /
              motor_time_constant;
    Vec4 sq = rotor_matrix_g1(params).partialPivLu().solve(wrench);
    AllocationResult out;
    for (int i = 0; i < 4; ++i)
    {
        if (sq(i) < 0.0)
        {
            sq(i) = 0.0;
            out.saturated = true;
        }
        double w = std::sqrt(sq(i));
        if (w > params.rotor_speed_max)
        {
            w = params.rotor_speed_max;
            out.saturated = true;
        }
        out.rotor_speeds(i) = w;
    }
    return out;
}

} // namespace airthrow

#endif
