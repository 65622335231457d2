#ifndef AIRTHROW_PLANNER_PLANNER_HPP
#define AIRTHROW_PLANNER_PLANNER_HPP

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>

#include "airthrow/planner/lbfgs.hpp"
#include "airthrow/planner/minco.hpp"
#include "airthrow/planner/smoothing.hpp"
#include "airthrow/planner/trajectory.hpp"
#include "airthrow/projectile/projectile.hpp"

namespace airthrow {

struct PlannerConfig
{
    double rho = 20.0;              // time-regularization weight
    double mu = 0.05;               // relaxation smoothness [s]
    double tau = 0.2;               // release-window half-width [s]
    double v_max = 5.0;
    double a_max = 5.0;
    double omega_max = 4.0;
    double thrust_acc_min = 2.0;    // bounds on |a - g| [m/s^2]
    double thrust_acc_max = 18.0;
    double w_feas = 1.0e4;
    double w_landing = 1.0e4;
    double w_nocross = 1.0e3;
    int samples_per_piece = 48;     // K
    int pieces = 4;                 // M
    Vec3 target = Vec3::Zero();
    bool use_corridor = false;
    Vec3 corridor_lo = Vec3::Zero();
    Vec3 corridor_hi = Vec3::Zero();
    double w_corridor = 1.0e4;
    double window_tolerance = 0.05; // [m]
    int max_iterations = 6000;
    double grad_tolerance = 1e-5;
    double g_mag = 9.81;

    void validate() const
    {
        if (!(rho > 0.0)) throw std::invalid_argument("PlannerConfig: rho must be positive");
        if (!(mu > 0.0 && mu <= 0.5)) throw std::invalid_argument("PlannerConfig: mu must be in (0, 0.5]");
        if (tau < 0.0) throw std::invalid_argument("PlannerConfig: tau must be nonnegative");
        if (samples_per_piece < 8) throw std::invalid_argument("PlannerConfig: K must be >= 8");
        if (pieces < 1) throw std::invalid_argument("PlannerConfig: pieces must be >= 1");
    }
};

// Penalty density at one sample, with partial derivatives.
struct PenaltyDensity
{
    double value = 0.0;
    Vec3 d_pos = Vec3::Zero();
    Vec3 d_vel = Vec3::Zero();
    Vec3 d_acc = Vec3::Zero();
    Vec3 d_jrk = Vec3::Zero();
    double d_t_abs = 0.0;   // activation chain at fixed sampled states
    double d_t_r = 0.0;
};

// Windowed ballistic landing penalty at one sampled state of the
// end-effector trajectory. Weight = smooth_step(1 - |t - t_r| + tau, mu);
// the squared in-plane miss flows through the drag-free ballistic map.
inline PenaltyDensity landing_penalty_point(const Vec3 &pos, const Vec3 &vel,
                                            double t_abs, double t_r,
                                            const PlannerConfig &cfg)
{
    PenaltyDensity out;
    const double delta = t_abs - t_r;
    const double arg = 1.0 - std::abs(delta) + cfg.tau;
    const double wgt = smooth_step(arg, cfg.mu);
    const double wgt_d = smooth_step_derivative(arg, cfg.mu);
    if (wgt == 0.0 && wgt_d == 0.0) return out;
    const double sgn = delta >= 0.0 ? 1.0 : -1.0;
    const double g = cfg.g_mag;

    const double z = pos.z() - cfg.target.z();
    const double vz = vel.z();
    const double disc = vz * vz + 2.0 * g * z;
    double base; // penalty magnitude before the activation weight
    constexpr double disc_eps = 1e-6;
    if (disc <= disc_eps)
    {
        // sample cannot reach the plane: smooth barrier on the discriminant
        const double viol = disc_eps - disc;
        base = cfg.w_nocross * viol * viol;
        const double d_disc = -2.0 * cfg.w_nocross * wgt * viol;
        out.d_vel.z() += d_disc * 2.0 * vz;
        out.d_pos.z() += d_disc * 2.0 * g;
    }
    else
    {
        const double s = std::sqrt(disc);
        const double t_fall = (vz + s) / g;
        const Eigen::Vector2d miss =
            pos.head<2>() + vel.head<2>() * t_fall - cfg.target.head<2>();
        base = cfg.w_landing * miss.squaredNorm();
        out.d_pos.head<2>() += cfg.w_landing * wgt * 2.0 * miss;
        out.d_vel.head<2>() += cfg.w_landing * wgt * 2.0 * miss * t_fall;
        const double d_tfall = cfg.w_landing * wgt * 2.0 * miss.dot(vel.head<2>());
        out.d_vel.z() += d_tfall * (1.0 + vz / s) / g;
        out.d_pos.z() += d_tfall / s;
    }
    out.value = wgt * base;
    out.d_t_abs = -sgn * wgt_d * base;
    out.d_t_r = sgn * wgt_d * base;
    return out;
}

// Quadratic-hinge feasibility density on speed, acceleration, thrust
// magnitude (via |a - g|), jerk-based body-rate proxy, and an optional
// axis-aligned corridor.
inline PenaltyDensity feasibility_point(const Vec3 &pos, const Vec3 &vel,
                                        const Vec3 &acc, const Vec3 &jrk,
                                        const PlannerConfig &cfg)
{
    PenaltyDensity out;
    const double w = cfg.w_feas;

    const double ev = vel.squaredNorm() - cfg.v_max * cfg.v_max;
    out.value += w * cubic_hinge(ev);
    out.d_vel += w * cubic_hinge_derivative(ev) * 2.0 * vel;

    const double ea = acc.squaredNorm() - cfg.a_max * cfg.a_max;
    out.value += w * cubic_hinge(ea);
    out.d_acc += w * cubic_hinge_derivative(ea) * 2.0 * acc;

    const Vec3 f = acc + Vec3(0.0, 0.0, cfg.g_mag); // a - g_vec
    const double f2 = f.squaredNorm();
    const double e_hi = f2 - cfg.thrust_acc_max * cfg.thrust_acc_max;
    out.value += w * cubic_hinge(e_hi);
    out.d_acc += w * cubic_hinge_derivative(e_hi) * 2.0 * f;
    const double e_lo = cfg.thrust_acc_min * cfg.thrust_acc_min - f2;
    out.value += w * cubic_hinge(e_lo);
    out.d_acc -= w * cubic_hinge_derivative(e_lo) * 2.0 * f;

    // |jerk| <= omega_max * |a - g| as a smooth body-rate proxy
    const double ew = jrk.squaredNorm() - cfg.omega_max * cfg.omega_max * f2;
    out.value += w * cubic_hinge(ew);
    const double ew_d = cubic_hinge_derivative(ew);
    out.d_jrk += w * ew_d * 2.0 * jrk;
    out.d_acc -= w * ew_d * cfg.omega_max * cfg.omega_max * 2.0 * f;

    if (cfg.use_corridor)
    {
        for (int k = 0; k < 3; ++k)
        {
            const double up = pos(k) - cfg.corridor_hi(k);
            const double lo = cfg.corridor_lo(k) - pos(k);
            out.value += cfg.w_corridor * (cubic_hinge(up) + cubic_hinge(lo));
            out.d_pos(k) += cfg.w_corridor *
                            (cubic_hinge_derivative(up) - cubic_hinge_derivative(lo));
        }
    }
    return out;
}

/// Windowed landing penalty of a whole trajectory sample (test/analysis view).
inline std::tuple<double, Vec3, Vec3> landing_penalty(const SplineTrajectory &traj,
                                                      double t, double t_r,
                                                      const PlannerConfig &cfg)
{
    const PenaltyDensity d =
        landing_penalty_point(traj.position(t), traj.velocity(t), t, t_r, cfg);
    return {d.value, d.d_pos, d.d_vel};
}

/// Integrated feasibility penalty of a trajectory (trapezoidal quadrature).
inline double feasibility_penalties(const SplineTrajectory &traj, const PlannerConfig &cfg)
{
    double cost = 0.0;
    double offset = 0.0;
    const int k_samples = cfg.samples_per_piece;
    for (int i = 0; i < traj.piece_count(); ++i)
    {
        const double t_i = traj.durations[i];
        for (int j = 0; j <= k_samples; ++j)
        {
            const double t = offset + t_i * j / k_samples;
            const double w = ((j == 0 || j == k_samples) ? 0.5 : 1.0) * t_i / k_samples;
            cost += w * feasibility_point(traj.position(t), traj.velocity(t),
                                          traj.acceleration(t), traj.jerk(t), cfg)
                            .value;
        }
        offset += t_i;
    }
    return cost;
}

// Unconstrained objective over waypoints, duration variables, and the
// release variable. Decision layout: [waypoints (3(M-1)) ; time vars (M) ; eta].
class PlannerProblem
{
public:
    PlannerProblem(const MincoS4::Boundary &head, const MincoS4::Boundary &tail,
                   const PlannerConfig &cfg)
        : cfg_(cfg), head_(head), tail_(tail)
    {
        cfg_.validate();
        minco_.setConditions(head, tail, cfg_.pieces);
    }

    int dimension() const { return 3 * (cfg_.pieces - 1) + cfg_.pieces + 1; }

    struct Unpacked
    {
        Eigen::Matrix3Xd waypoints;
        Eigen::VectorXd durations;
        double eta = 0.0;
        double t_r = 0.0;
    };

    Unpacked unpack(const Eigen::VectorXd &x) const
    {
        const int m = cfg_.pieces;
        Unpacked u;
        u.waypoints.resize(3, m - 1);
        for (int i = 0; i < m - 1; ++i) u.waypoints.col(i) = x.segment<3>(3 * i);
        u.durations.resize(m);
        for (int i = 0; i < m; ++i) u.durations(i) = time_forward(x(3 * (m - 1) + i));
        u.eta = x(x.size() - 1);
        u.t_r = u.durations.sum() * sigmoid(u.eta);
        return u;
    }

    double evaluate(const Eigen::VectorXd &x, Eigen::VectorXd &grad)
    {
        const int m = cfg_.pieces;
        const int k_samples = cfg_.samples_per_piece;
        const Unpacked u = unpack(x);
        minco_.setParameters(u.waypoints, u.durations);

        const double t_sigma = u.durations.sum();
        const double sig = sigmoid(u.eta);
        const double t_r = u.t_r;

        Eigen::MatrixXd grad_c = Eigen::MatrixXd::Zero(MincoS4::kC * m, 3);
        Eigen::VectorXd grad_t_partial = Eigen::VectorXd::Constant(m, cfg_.rho);
        double cost = minco_.energy() + cfg_.rho * t_sigma;
        minco_.energyGrad(grad_c, grad_t_partial);

        double g_tr = 0.0;
        double offset = 0.0;
        const Eigen::MatrixXd &coeffs = minco_.coefficients();
        for (int i = 0; i < m; ++i)
        {
            const double t_i = u.durations(i);
            const auto c_i = coeffs.block<MincoS4::kC, 3>(MincoS4::kC * i, 0);
            for (int j = 0; j <= k_samples; ++j)
            {
                const double frac = static_cast<double>(j) / k_samples;
                const double t_loc = t_i * frac;
                const double cw = (j == 0 || j == k_samples) ? 0.5 : 1.0;
                const double w = cw * t_i / k_samples;

                const auto b0 = SplineTrajectory::basis(t_loc, 0);
                const auto b1 = SplineTrajectory::basis(t_loc, 1);
                const auto b2 = SplineTrajectory::basis(t_loc, 2);
                const auto b3 = SplineTrajectory::basis(t_loc, 3);
                const auto b4 = SplineTrajectory::basis(t_loc, 4);
                const Vec3 pos = c_i.transpose() * b0;
                const Vec3 vel = c_i.transpose() * b1;
                const Vec3 acc = c_i.transpose() * b2;
                const Vec3 jrk = c_i.transpose() * b3;
                const Vec3 snp = c_i.transpose() * b4;

                PenaltyDensity d = feasibility_point(pos, vel, acc, jrk, cfg_);
                const PenaltyDensity l =
                    landing_penalty_point(pos, vel, offset + t_loc, t_r, cfg_);
                d.value += l.value;
                d.d_pos += l.d_pos;
                d.d_vel += l.d_vel;
                d.d_t_abs += l.d_t_abs;
                d.d_t_r += l.d_t_r;

                if (d.value == 0.0 && d.d_t_abs == 0.0) continue;

                cost += w * d.value;
                grad_c.block<MincoS4::kC, 3>(MincoS4::kC * i, 0) +=
                    w * (b0 * d.d_pos.transpose() + b1 * d.d_vel.transpose() +
                         b2 * d.d_acc.transpose() + b3 * d.d_jrk.transpose());

                const double state_t = d.d_pos.dot(vel) + d.d_vel.dot(acc) +
                                       d.d_acc.dot(jrk) + d.d_jrk.dot(snp);
                grad_t_partial(i) += cw / k_samples * d.value +
                                     w * frac * (state_t + d.d_t_abs);
                for (int p = 0; p < i; ++p) grad_t_partial(p) += w * d.d_t_abs;
                g_tr += w * d.d_t_r;
            }
            offset += t_i;
        }

        Eigen::Matrix3Xd grad_wp;
        Eigen::VectorXd grad_t_total;
        minco_.propagateGrad(grad_c, grad_t_partial, grad_wp, grad_t_total);

        // release variable coupling: t_r = T_sigma * sigmoid(eta)
        grad_t_total.array() += g_tr * sig;
        const double g_eta = g_tr * t_sigma * sig * (1.0 - sig);

        grad.resize(dimension());
        for (int i = 0; i < m - 1; ++i) grad.segment<3>(3 * i) = grad_wp.col(i);
        for (int i = 0; i < m; ++i)
            grad(3 * (m - 1) + i) =
                grad_t_total(i) * time_forward_derivative(x(3 * (m - 1) + i));
        grad(grad.size() - 1) = g_eta;
        return cost;
    }

    SplineTrajectory trajectory() const { return minco_.trajectory(); }
    const PlannerConfig &config() const { return cfg_; }

private:
    PlannerConfig cfg_;
    MincoS4::Boundary head_, tail_;
    MincoS4 minco_;
};

struct PlanResult
{
    SplineTrajectory trajectory;
    ReleaseWindow window;
    bool converged = false;
    double final_grad_norm = 0.0;
    double worst_window_error = 0.0;
    int iterations = 0;
};

/// Predicted landing error if released from the trajectory state at time t.
inline double trajectory_landing_error(const SplineTrajectory &traj, double t,
                                       const Vec3 &target, double g_mag = 9.81)
{
    ReleaseState rel;
    rel.p = traj.position(t);
    rel.v = traj.velocity(t);
    rel.t_release = t;
    try
    {
        return landing_error(rel, target, g_mag);
    }
    catch (const NoCrossingError &)
    {
        return std::numeric_limits<double>::infinity();
    }
}

/// Length of the connected interval around t_r where the predicted landing
/// error stays at or below the threshold (1 ms sampling).
inline double release_window_duration(const SplineTrajectory &traj, double t_r,
                                      double threshold, const Vec3 &target,
                                      double g_mag = 9.81)
{
    constexpr double dt = 1e-3;
    const double t_total = traj.total_duration();
    if (t_r < 0.0 || t_r > t_total) return 0.0;
    if (trajectory_landing_error(traj, t_r, target, g_mag) > threshold) return 0.0;
    double lo = t_r, hi = t_r;
    while (lo - dt >= 0.0 &&
           trajectory_landing_error(traj, lo - dt, target, g_mag) <= threshold)
        lo -= dt;
    while (hi + dt <= t_total &&
           trajectory_landing_error(traj, hi + dt, target, g_mag) <= threshold)
        hi += dt;
    return hi - lo;
}

inline PlanResult plan_trajectory(const MincoS4::Boundary &head,
                                  const MincoS4::Boundary &tail,
                                  const PlannerConfig &cfg)
{
    const int m = cfg.pieces;

    Eigen::VectorXd x(3 * (m - 1) + m + 1);
    const Vec3 p0 = head.col(0), pf = tail.col(0);
    for (int i = 0; i < m - 1; ++i)
        x.segment<3>(3 * i) = p0 + (pf - p0) * (static_cast<double>(i + 1) / m);
    const double dist = (pf - p0).norm();
    const double total_guess =
        std::max({2.0 * dist / cfg.v_max, 2.0, 4.0 * (cfg.tau + 2.0 * cfg.mu)});
    for (int i = 0; i < m; ++i)
        x(3 * (m - 1) + i) = time_backward(total_guess / m);
    x(x.size() - 1) = 0.0;

    // Wide windows are prone to poor local minima when solved cold, so grow
    // tau in stages and warm-start each stage from the previous solution.
    constexpr double kTauStage = 0.1;
    std::vector<double> stages;
    for (double t = std::min(cfg.tau, kTauStage); t < cfg.tau - 1e-12;
         t += kTauStage)
        stages.push_back(t);
    stages.push_back(cfg.tau);

    LbfgsOptions opt;
    opt.max_iterations = cfg.max_iterations;
    opt.grad_tolerance = cfg.grad_tolerance;

    PlannerConfig stage_cfg = cfg;
    LbfgsResult lr;
    int total_iterations = 0;
    for (double tau_stage : stages)
    {
        stage_cfg.tau = tau_stage;
        PlannerProblem stage_problem(head, tail, stage_cfg);
        lr = lbfgs_minimize(
            x,
            [&](const Eigen::VectorXd &v, Eigen::VectorXd &g) {
                return stage_problem.evaluate(v, g);
            },
            opt);
        total_iterations += lr.iterations;
    }

    PlannerProblem problem(head, tail, cfg);
    Eigen::VectorXd g_unused;
    problem.evaluate(x, g_unused); // leave MINCO at the final iterate
    const auto u = problem.unpack(x);

    PlanResult result;
    result.trajectory = problem.trajectory();
    result.window.t_r = u.t_r;
    result.window.tau = cfg.tau;
    result.final_grad_norm = lr.grad_norm;
    result.iterations = total_iterations;

    double worst = 0.0;
    const double t0 = std::max(0.0, u.t_r - cfg.tau);
    const double t1 = std::min(result.trajectory.total_duration(), u.t_r + cfg.tau);
    for (double t = t0; t <= t1 + 1e-12; t += 1e-3)
        worst = std::max(worst,
                         trajectory_landing_error(result.trajectory, std::min(t, t1),
                                                  cfg.target, cfg.g_mag));
    result.worst_window_error = worst;
    result.converged = worst <= cfg.window_tolerance;
    return result;
}

} // namespace airthrow

#endif
