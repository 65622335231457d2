#ifndef AIRTHROW_CONTROL_NMPC_HPP
#define AIRTHROW_CONTROL_NMPC_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "airthrow/control/qp.hpp"
#include "airthrow/model/dynamics.hpp"
#include "airthrow/model/flatness.hpp"
#include "airthrow/planner/trajectory.hpp"

namespace airthrow {

struct NmpcConfig
{
    int horizon_steps = 20;       // N
    double horizon_length = 0.4;  // h [s]
    Vec3 q_p = Vec3::Constant(200.0);
    Vec3 q_v = Vec3::Constant(20.0);
    Vec3 q_q = Vec3::Constant(50.0);
    Vec4 q_u = Vec4(1.0, 10.0, 10.0, 10.0);
    double q_n_scale = 2.0;       // terminal weight = scale * stage weight
    int sqp_iterations = 1;

    double dt() const { return horizon_length / horizon_steps; }

    void validate() const
    {
        if (horizon_steps < 5) throw std::invalid_argument("NmpcConfig: N must be >= 5");
        if (!(horizon_length > 0.0)) throw std::invalid_argument("NmpcConfig: h must be positive");
        if ((q_p.array() < 0).any() || (q_v.array() < 0).any() ||
            (q_q.array() < 0).any() || (q_u.array() < 0).any())
            throw std::invalid_argument("NmpcConfig: weights must be nonnegative");
    }
};

struct NmpcReference
{
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Quat q = quat_identity();
    Vec4 u = Vec4::Zero();        // (thrust, omega_ref)
};

struct NmpcSolution
{
    Vec4 u0 = Vec4::Zero();       // first input (T, omega_ref)
    std::vector<VehicleState> predicted_states; // N+1, omega holds the applied rate input
    std::vector<double> timestamps;
    std::vector<Vec4> predicted_inputs;         // N
    double kkt_residual = 0.0;
    bool degraded = false;
};

/// Samples quadrotor references from the end-effector flat trajectory:
/// attitude and thrust from the flatness map, body rate from jerk, the
/// quadrotor center displaced by the (constant) arm offset. Beyond the
/// trajectory end the terminal state is held.
inline std::vector<NmpcReference> reference_from_trajectory(
    const SplineTrajectory &traj, const Vec3 &arm_offset, double t_now,
    const VehicleParams &params, const NmpcConfig &cfg)
{
    std::vector<NmpcReference> refs(cfg.horizon_steps + 1);
    const double t_total = traj.total_duration();
    ArmState arm;
    arm.p_e_B = arm_offset;
    for (int k = 0; k <= cfg.horizon_steps; ++k)
    {
        const double t = std::min(std::max(t_now + k * cfg.dt(), 0.0), t_total);
        const Vec3 p_e = traj.position(t);
        const Vec3 v_e = traj.velocity(t);
        const Vec3 a_e = traj.acceleration(t);
        const Vec3 j_e = traj.jerk(t);
        const FlatReference flat = flat_reference_from_accel(a_e, j_e, params);
        const TranslationalKinematics kin = end_effector_to_quad(
            p_e, v_e, a_e, arm, flat.q, flat.omega, Vec3::Zero());
        NmpcReference &r = refs[k];
        r.p = kin.p;
        r.v = kin.v;
        r.q = flat.q;
        r.u << flat.thrust, flat.omega;
    }
    return refs;
}

namespace detail {

using StateVec = Eigen::Matrix<double, 10, 1>;

inline StateVec pack_state(const Vec3 &p, const Vec3 &v, const Quat &q)
{
    StateVec x;
    x << p, v, q;
    return x;
}

// Discrete prediction model: one RK4 step of the thrust/body-rate model
// with quaternion renormalization.
inline StateVec nmpc_step(const StateVec &x, const Vec4 &u, const Vec3 &f_ext,
                          const VehicleParams &params, double dt)
{
    auto deriv = [&](const StateVec &s) {
        StateVec d;
        const Quat q = s.segment<4>(6);
        const Vec3 z_b = quat_to_rot_unchecked(q / q.norm()).col(2);
        d.segment<3>(0) = s.segment<3>(3);
        d.segment<3>(3) = (u(0) * z_b + f_ext) / params.m + params.gravity();
        d.segment<4>(6) = quat_derivative(q, u.segment<3>(1));
        return d;
    };
    const StateVec k1 = deriv(x);
    const StateVec k2 = deriv(x + 0.5 * dt * k1);
    const StateVec k3 = deriv(x + 0.5 * dt * k2);
    const StateVec k4 = deriv(x + dt * k3);
    StateVec out = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.segment<4>(6).normalize();
    return out;
}

} // namespace detail

/// Open-loop rollout of the NMPC prediction model.
inline std::vector<VehicleState> predict(const VehicleState &x0,
                                         const std::vector<Vec4> &inputs,
                                         const Vec3 &f_ext_est, double dt,
                                         const VehicleParams &params)
{
    std::vector<VehicleState> out;
    out.reserve(inputs.size() + 1);
    detail::StateVec x = detail::pack_state(x0.p_q, x0.v_q, x0.q);
    VehicleState s = x0;
    out.push_back(s);
    for (const Vec4 &u : inputs)
    {
        x = detail::nmpc_step(x, u, f_ext_est, params, dt);
        if (!x.allFinite()) throw std::runtime_error("predict: non-finite state");
        s.p_q = x.segment<3>(0);
        s.v_q = x.segment<3>(3);
        s.q = x.segment<4>(6);
        s.omega = u.segment<3>(1);
        out.push_back(s);
    }
    return out;
}

// Real-time-iteration NMPC: per call, a configurable number of Gauss-Newton
// iterations over the input sequence with the shooting states re-rolled
// nonlinearly, and the box-constrained QP solved by a warm-started
// active-set method.
class NmpcSolver
{
public:
    NmpcSolver(const VehicleParams &params, const NmpcConfig &cfg)
        : params_(params), cfg_(cfg)
    {
        cfg_.validate();
        const int n = 4 * cfg_.horizon_steps;
        u_seq_ = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < cfg_.horizon_steps; ++k)
            u_seq_(4 * k) = params_.m * params_.g_mag;
        warm_valid_ = false;
    }

    NmpcSolution solve(const VehicleState &x_now,
                       const std::vector<NmpcReference> &refs,
                       const Vec3 &f_ext_est)
    {
        if (!x_now.finite()) throw std::runtime_error("NmpcSolver: non-finite state");
        const int n_steps = cfg_.horizon_steps;
        if (static_cast<int>(refs.size()) != n_steps + 1)
            throw std::invalid_argument("NmpcSolver: reference length must be N+1");
        const double dt = cfg_.dt();
        const int n_u = 4 * n_steps;

        if (!warm_valid_)
        {
            for (int k = 0; k < n_steps; ++k) u_seq_.segment<4>(4 * k) = refs[k].u;
            warm_valid_ = true;
        }

        Eigen::VectorXd lo(n_u), hi(n_u);
        for (int k = 0; k < n_steps; ++k)
        {
            lo.segment<4>(4 * k) << params_.thrust_min, -params_.omega_max,
                -params_.omega_max, -params_.omega_max;
            hi.segment<4>(4 * k) << params_.thrust_max, params_.omega_max,
                params_.omega_max, params_.omega_max;
        }
        u_seq_ = u_seq_.cwiseMax(lo).cwiseMin(hi);

        NmpcSolution sol;
        const Vec3 w_p = cfg_.q_p.cwiseSqrt();
        const Vec3 w_v = cfg_.q_v.cwiseSqrt();
        const Vec3 w_q = cfg_.q_q.cwiseSqrt();
        const Vec4 w_u = cfg_.q_u.cwiseSqrt();
        const double w_n = std::sqrt(cfg_.q_n_scale);

        for (int sqp = 0; sqp < cfg_.sqp_iterations; ++sqp)
        {
            // nonlinear rollout
            std::vector<detail::StateVec> xs(n_steps + 1);
            xs[0] = detail::pack_state(x_now.p_q, x_now.v_q, x_now.q);
            for (int k = 0; k < n_steps; ++k)
            {
                xs[k + 1] = detail::nmpc_step(xs[k], u_seq_.segment<4>(4 * k),
                                              f_ext_est, params_, dt);
                if (!xs[k + 1].allFinite())
                    throw std::runtime_error("NmpcSolver: prediction diverged");
            }

            Eigen::MatrixXd h_mat = Eigen::MatrixXd::Zero(n_u, n_u);
            Eigen::VectorXd g_vec = Eigen::VectorXd::Zero(n_u);
            Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(10, n_u); // dx_k / dU

            for (int k = 0; k <= n_steps; ++k)
            {
                const NmpcReference &r = refs[k];
                const double scale = (k == n_steps) ? w_n : 1.0;
                // state residual (9) and its Jacobian w.r.t. the state
                Eigen::Matrix<double, 9, 10> c_mat = Eigen::Matrix<double, 9, 10>::Zero();
                Eigen::Matrix<double, 9, 1> resid;
                Quat q_cur = xs[k].segment<4>(6);
                Quat q_ref = r.q;
                if (q_cur.dot(q_ref) < 0.0) q_ref = -q_ref;
                const Quat q_err = quat_multiply(quat_conjugate(q_ref), q_cur);
                resid.segment<3>(0) = scale * w_p.cwiseProduct(xs[k].segment<3>(0) - r.p);
                resid.segment<3>(3) = scale * w_v.cwiseProduct(xs[k].segment<3>(3) - r.v);
                resid.segment<3>(6) = scale * w_q.cwiseProduct(q_err.tail<3>());
                for (int i = 0; i < 3; ++i)
                {
                    c_mat(i, i) = scale * w_p(i);
                    c_mat(3 + i, 3 + i) = scale * w_v(i);
                }
                // vec(q_ref^-1 (x) q) is linear in q
                const Quat qc = quat_conjugate(q_ref);
                Eigen::Matrix<double, 3, 4> jq;
                jq << qc(1), qc(0), -qc(3), qc(2),
                    qc(2), qc(3), qc(0), -qc(1),
                    qc(3), -qc(2), qc(1), qc(0);
                for (int i = 0; i < 3; ++i)
                    c_mat.block<1, 4>(6 + i, 6) = scale * w_q(i) * jq.row(i);

                const Eigen::Matrix<double, 9, Eigen::Dynamic> j_state = c_mat * sens;
                h_mat.noalias() += j_state.transpose() * j_state;
                g_vec.noalias() += j_state.transpose() * resid;

                if (k == n_steps) break;

                // input residual occupies only block k
                const Vec4 u_k = u_seq_.segment<4>(4 * k);
                for (int i = 0; i < 4; ++i)
                {
                    h_mat(4 * k + i, 4 * k + i) += w_u(i) * w_u(i);
                    g_vec(4 * k + i) += w_u(i) * w_u(i) * (u_k(i) - r.u(i));
                }

                // forward-difference Jacobians of the discrete step
                Eigen::Matrix<double, 10, 10> a_k;
                Eigen::Matrix<double, 10, 4> b_k;
                const detail::StateVec x_next = xs[k + 1];
                constexpr double eps = 1e-6;
                for (int i = 0; i < 10; ++i)
                {
                    detail::StateVec xp = xs[k];
                    xp(i) += eps;
                    a_k.col(i) = (detail::nmpc_step(xp, u_k, f_ext_est, params_, dt) -
                                  x_next) / eps;
                }
                for (int i = 0; i < 4; ++i)
                {
                    Vec4 up = u_k;
                    up(i) += eps;
                    b_k.col(i) = (detail::nmpc_step(xs[k], up, f_ext_est, params_, dt) -
                                  x_next) / eps;
                }
                sens = a_k * sens;
                sens.block<10, 4>(0, 4 * k) += b_k;
            }

            h_mat.diagonal().array() += 1e-9;
            const BoxQpSolver::Result qp = qp_.solve(
                h_mat, g_vec, lo - u_seq_, hi - u_seq_, Eigen::VectorXd::Zero(n_u));
            if (!qp.solved && qp.x.size() == 0)
            {
                sol.degraded = true;
                break;
            }
            u_seq_ += qp.x;
            u_seq_ = u_seq_.cwiseMax(lo).cwiseMin(hi);
            sol.kkt_residual = qp.projected_grad_norm;
        }

        // final predicted sequence with the accepted inputs
        sol.predicted_inputs.resize(n_steps);
        for (int k = 0; k < n_steps; ++k) sol.predicted_inputs[k] = u_seq_.segment<4>(4 * k);
        VehicleState x0 = x_now;
        sol.predicted_states = predict(x0, sol.predicted_inputs, f_ext_est, dt, params_);
        sol.timestamps.resize(n_steps + 1);
        for (int k = 0; k <= n_steps; ++k) sol.timestamps[k] = k * dt;
        sol.u0 = sol.predicted_inputs.front();
        return sol;
    }

    const NmpcConfig &config() const { return cfg_; }

private:
    VehicleParams params_;
    NmpcConfig cfg_;
    Eigen::VectorXd u_seq_;
    bool warm_valid_ = false;
    BoxQpSolver qp_;
};

} // namespace airthrow

#endif
