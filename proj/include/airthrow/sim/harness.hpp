#ifndef AIRTHROW_SIM_HARNESS_HPP
#define AIRTHROW_SIM_HARNESS_HPP

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "airthrow/control/disturbance.hpp"
#include "airthrow/control/nmpc.hpp"
#include "airthrow/planner/planner.hpp"
#include "airthrow/release/release.hpp"
#include "airthrow/sim/scenario.hpp"
#include "airthrow/sim/world.hpp"

namespace airthrow {

struct StateRecord
{
    double t = 0.0;
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 ref_p = Vec3::Zero();
    double thrust_cmd = 0.0;
};

struct ObserverRecord
{
    double t = 0.0;
    Vec3 f_hat = Vec3::Zero();
};

struct DecisionRecord
{
    double t = 0.0;
    int k_star = 0;
    double t_r = 0.0;
    bool triggered = false;
};

struct FlightResult
{
    bool failed = false;
    std::string failure_reason;
    bool plan_converged = false;
    double plan_t_r = 0.0;
    double plan_duration = 0.0;

    bool released = false;
    double release_time = -1.0;
    double v_release = 0.0;
    Vec3 landing_point = Vec3::Zero();
    double landing_error = std::numeric_limits<double>::infinity();
    double tracking_rmse = 0.0;
    double final_return_error = std::numeric_limits<double>::infinity();
    bool timed_out = false;
    long alloc_saturation_count = 0;

    std::vector<StateRecord> states;
    std::vector<ObserverRecord> observer;
    std::vector<DecisionRecord> decisions;
};

inline MincoS4::Boundary rest_boundary(const Vec3 &p)
{
    MincoS4::Boundary b = MincoS4::Boundary::Zero();
    b.col(0) = p;
    return b;
}

inline PlanResult plan_for_scenario(const ScenarioConfig &sc)
{
    PlannerConfig cfg = sc.planner;
    cfg.g_mag = sc.vehicle.g_mag;
    return plan_trajectory(rest_boundary(sc.start), rest_boundary(sc.goal), cfg);
}

/// Runs one closed-loop flight. Pass a pre-computed plan to amortize the
/// planning cost across repeated flights of the same scenario.
inline FlightResult run_flight(const ScenarioConfig &sc,
                               const PlanResult *preplanned = nullptr)
{
    sc.validate();
    FlightResult res;

    PlanResult local_plan;
    const PlanResult *plan = preplanned;
    if (plan == nullptr)
    {
        local_plan = plan_for_scenario(sc);
        plan = &local_plan;
    }
    res.plan_converged = plan->converged;
    if (!plan->converged)
    {
        res.failed = true;
        res.failure_reason = "planner did not converge";
        return res;
    }
    const SplineTrajectory &traj = plan->trajectory;
    res.plan_t_r = plan->window.t_r;
    res.plan_duration = traj.total_duration();

    const VehicleParams &params = sc.vehicle;
    const double dt_sim = 1.0 / sc.rates.sim_hz;
    const double dt_sensor = 1.0 / sc.rates.sensor_hz;
    const double dt_ctrl = 1.0 / sc.rates.control_hz;
    const int sens_div = static_cast<int>(std::lround(sc.rates.sim_hz / sc.rates.sensor_hz));
    const int ctrl_div = static_cast<int>(std::lround(sc.rates.sim_hz / sc.rates.control_hz));

    WorldState world;
    world.vehicle.p_q = sc.start - sc.arm_offset;
    world.vehicle.q = quat_identity();
    const double m_total = params.m + sc.payload_mass;
    world.rotor_speeds =
        Vec4::Constant(std::sqrt(m_total * params.g_mag / (4.0 * params.c_t)));

    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    // Explicit return type: auto would deduce the lazy Eigen product
    // expression, which dangles once the temporary operand dies.
    const auto noise3 = [&](double std_dev) -> Vec3 {
        // Fixed draw order keeps runs bit-identical.
        const double x = gauss(rng), y = gauss(rng), z = gauss(rng);
        return Vec3(x, y, z) * std_dev;
    };

    ObserverState obs(sc.observer_gain, sc.observer_cutoff_hz, sc.rates.sensor_hz);
    IndiState indi = make_indi_state(sc.indi_k, sc.motor_time_constant,
                                     sc.indi_cutoff_hz, sc.rates.sensor_hz);
    NmpcSolver solver(params, sc.nmpc);

    ArmState arm;
    arm.p_e_B = sc.arm_offset;
    ArmState attach;
    attach.p_e_B = sc.payload_offset;

    ReleaseDecision decision;
    decision.t_r_current = plan->window.t_r;
    NominalTrigger nominal;

    const Vec3 g_vec = params.gravity();
    const double plane_z = sc.planner.target.z();
    const Vec3 terminal_quad_p =
        reference_from_trajectory(traj, sc.arm_offset, traj.total_duration(), params,
                                  sc.nmpc)[0]
            .p;

    Vec4 rotor_cmd = world.rotor_speeds;
    double thrust_d = m_total * params.g_mag;
    Vec3 omega_ref = Vec3::Zero();
    Vec3 last_accel = Vec3::Zero();
    bool detach_commanded = false;
    double detach_time = std::numeric_limits<double>::infinity();
    double landing_time = std::numeric_limits<double>::infinity();
    double track_sq_sum = 0.0;
    long track_count = 0;

    const long max_steps = static_cast<long>(std::llround(sc.timeout * sc.rates.sim_hz));

    try
    {
        for (long i = 0; i <= max_steps; ++i)
        {
            const double t = i * dt_sim;

            if (i % sens_div == 0)
            {
                const Vec3 a_meas = last_accel + noise3(sc.noise.accel_std);
                const Vec3 w_meas = world.vehicle.omega + noise3(sc.noise.gyro_std);
                const Mat3 r = quat_to_rot(world.vehicle.q);
                const double thrust_meas =
                    params.c_t * world.rotor_speeds.squaredNorm();
                obs = ndob_update(obs, a_meas, thrust_meas, r.col(2), params.m, g_vec,
                                  dt_sensor);
                indi_measure(indi, w_meas, world.rotor_speeds, rotor_cmd, params,
                             dt_sensor);
                res.observer.push_back({t, obs.f_ext_hat});
            }

            if (i % ctrl_div == 0)
            {
                auto refs = reference_from_trajectory(traj, sc.arm_offset, t,
                                                      params, sc.nmpc);
                const Vec3 f_est =
                    sc.ndob_enabled() ? Vec3(obs.f_ext_hat) : Vec3(Vec3::Zero());
                // Consistent input reference: thrust must also carry the
                // estimated external force, or the input penalty pulls the
                // hover point away from the position reference.
                for (auto &r : refs)
                    r.u(0) -= f_est.dot(quat_to_rot_unchecked(r.q).col(2));
                const NmpcSolution sol = solver.solve(world.vehicle, refs, f_est);
                thrust_d = sol.u0(0);
                omega_ref = sol.u0.tail<3>();

                if (t <= traj.total_duration() + 1e-12)
                {
                    track_sq_sum += (world.vehicle.p_q - refs[0].p).squaredNorm();
                    ++track_count;
                }
                res.states.push_back(
                    {t, world.vehicle.p_q, world.vehicle.v_q, refs[0].p, thrust_d});

                if (!detach_commanded)
                {
                    if (sc.trigger == TriggerMode::Reassess)
                    {
                        const std::vector<VehicleState> future(
                            sol.predicted_states.begin() + 1,
                            sol.predicted_states.end());
                        const std::vector<double> errors = predicted_landing_errors(
                            future, attach, sc.planner.target, params.g_mag);
                        decision = reassess(decision, errors, t, sc.nmpc.dt(),
                                            sc.nmpc.horizon_length,
                                            sc.delay_compensation);
                        res.decisions.push_back(
                            {t, decision.k_star, decision.t_r_current,
                             decision.triggered});
                        if (decision.triggered)
                        {
                            detach_commanded = true;
                            detach_time = t + sc.actuator_delay;
                        }
                    }
                    else if (nominal.update(t + sc.delay_compensation, plan->window.t_r))
                    {
                        detach_commanded = true;
                        detach_time = t + sc.actuator_delay;
                        res.decisions.push_back({t, 0, plan->window.t_r, true});
                    }
                }
            }

            if (world.payload_attached && detach_commanded && t >= detach_time - 1e-12)
            {
                ReleaseState rel = detach_payload(world, sc.payload_offset);
                const LandingPrediction pred =
                    landing_point(rel, plane_z, params.g_mag);
                res.released = true;
                res.release_time = t;
                res.v_release = rel.v.norm();
                res.landing_point = pred.point;
                res.landing_error =
                    (pred.point.head<2>() - sc.planner.target.head<2>()).norm();
                landing_time = t + pred.fall_time;
            }

            const PlantOutput out =
                step_plant(world, rotor_cmd, dt_sim, params, sc.payload_mass,
                           sc.payload_offset, sc.motor_time_constant);
            last_accel = out.accel;

            if (i % sens_div == 0)
            {
                const Vec3 omega_dot_d = angular_accel_setpoint(
                    omega_ref, Vec3::Zero(), indi.omega_f, indi.k_rate);
                Vec3 tau_d;
                if (sc.indi_enabled())
                    tau_d = indi_torque(indi.tau_f, params.inertia, omega_dot_d,
                                        indi.omega_dot_f);
                else
                    tau_d = params.inertia * omega_dot_d +
                            indi.omega_f.cross(params.inertia * indi.omega_f);
                const AllocationResult alloc =
                    allocate(thrust_d, tau_d, rotor_cmd, indi.rotor_speed_f, params,
                             sc.motor_time_constant);
                rotor_cmd = alloc.rotor_speeds;
                if (alloc.saturated) ++res.alloc_saturation_count;
            }

            if (res.released && world.clock >= landing_time)
            {
                res.final_return_error = (world.vehicle.p_q - terminal_quad_p).norm();
                if (res.final_return_error <= sc.return_tolerance) break;
            }
            if (i == max_steps) res.timed_out = true;
        }
    }
    catch (const std::exception &e)
    {
        res.failed = true;
        res.failure_reason = e.what();
        return res;
    }

    res.tracking_rmse =
        track_count > 0 ? std::sqrt(track_sq_sum / track_count) : 0.0;
    if (!res.released)
    {
        res.failed = true;
        res.failure_reason = res.timed_out ? "timeout before release" : "no release";
    }
    return res;
}

struct CampaignRow
{
    std::string scenario_id;
    std::uint64_t seed = 0;
    TriggerMode trigger = TriggerMode::Nominal;
    Ablation ablation = Ablation::Full;
    double v_release = 0.0;
    double landing_error = std::numeric_limits<double>::infinity();
    double release_time = -1.0;
    double tracking_rmse = 0.0;
    bool failed = true;
};

struct CampaignSummary
{
    std::string scenario_id;
    int flights = 0;
    int failures = 0;
    double rmse = 0.0;   // landing-error RMSE over successful flights
    double mean = 0.0;
    double max = 0.0;
};

struct CampaignResult
{
    std::vector<CampaignRow> rows;
    std::vector<CampaignSummary> summaries;
    std::vector<FlightResult> flights;   // same order as rows
};

/// Runs |scenarios| x |seeds| flights. Planning happens serially per
/// scenario and is shared across seeds; flights run on a worker pool.
/// Results are indexed, not appended, so the output is independent of the
/// thread count and scheduling order.
inline CampaignResult run_campaign(const std::vector<ScenarioConfig> &scenarios,
                                   const std::vector<std::uint64_t> &seeds,
                                   int threads = 0)
{
    std::vector<PlanResult> plans(scenarios.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        plans[i] = plan_for_scenario(scenarios[i]);

    const std::size_t total = scenarios.size() * seeds.size();
    CampaignResult out;
    out.rows.resize(total);
    out.flights.resize(total);

    if (threads <= 0)
        threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;)
        {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= total) return;
            const std::size_t si = idx / seeds.size();
            ScenarioConfig sc = scenarios[si];
            sc.seed = seeds[idx % seeds.size()];
            FlightResult fr = run_flight(sc, &plans[si]);
            CampaignRow row;
            row.scenario_id = sc.name;
            row.seed = sc.seed;
            row.trigger = sc.trigger;
            row.ablation = sc.ablation;
            row.v_release = fr.v_release;
            row.landing_error = fr.landing_error;
            row.release_time = fr.release_time;
            row.tracking_rmse = fr.tracking_rmse;
            row.failed = fr.failed;
            out.rows[idx] = std::move(row);
            out.flights[idx] = std::move(fr);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto &th : pool) th.join();

    std::map<std::string, std::vector<const CampaignRow *>> by_id;
    for (const auto &row : out.rows) by_id[row.scenario_id].push_back(&row);
    for (const auto &[id, group] : by_id)
    {
        CampaignSummary s;
        s.scenario_id = id;
        s.flights = static_cast<int>(group.size());
        double sq = 0.0, sum = 0.0, mx = 0.0;
        int ok = 0;
        for (const CampaignRow *row : group)
        {
            if (row->failed)
            {
                ++s.failures;
                continue;
            }
            ++ok;
            sq += row->landing_error * row->landing_error;
            sum += row->landing_error;
            mx = std::max(mx, row->landing_error);
        }
        if (ok > 0)
        {
            s.rmse = std::sqrt(sq / ok);
            s.mean = sum / ok;
            s.max = mx;
        }
        out.summaries.push_back(s);
    }
    return out;
}

namespace detail {

inline std::string fmt_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

} // namespace detail

inline void write_metrics_csv(std::ostream &os, const std::vector<CampaignRow> &rows)
{
    os << "scenario_id,seed,trigger_mode,ablation,v_release,landing_error_m,"
          "release_time_s,tracking_rmse_m,failed\n";
    for (const auto &r : rows)
    {
        os << r.scenario_id << ',' << r.seed << ',' << to_string(r.trigger) << ','
           << to_string(r.ablation) << ',' << detail::fmt_double(r.v_release) << ','
           << detail::fmt_double(r.landing_error) << ','
           << detail::fmt_double(r.release_time) << ','
           << detail::fmt_double(r.tracking_rmse) << ',' << (r.failed ? 1 : 0)
           << '\n';
    }
}

inline void write_summary_csv(std::ostream &os,
                              const std::vector<CampaignSummary> &summaries)
{
    os << "scenario_id,flights,failures,landing_rmse_m,landing_mean_m,landing_max_m\n";
    for (const auto &s : summaries)
    {
        os << s.scenario_id << ',' << s.flights << ',' << s.failures << ','
           << detail::fmt_double(s.rmse) << ',' << detail::fmt_double(s.mean) << ','
           << detail::fmt_double(s.max) << '\n';
    }
}

inline nlohmann::json flight_to_json(const FlightResult &fr, bool full_states = false)
{
    nlohmann::json j;
    j["failed"] = fr.failed;
    j["failure_reason"] = fr.failure_reason;
    j["plan_converged"] = fr.plan_converged;
    j["plan_t_r"] = fr.plan_t_r;
    j["plan_duration"] = fr.plan_duration;
    j["released"] = fr.released;
    j["release_time"] = fr.release_time;
    j["v_release"] = fr.v_release;
    j["landing_point"] = {fr.landing_point.x(), fr.landing_point.y(),
                          fr.landing_point.z()};
    j["landing_error"] = fr.landing_error;
    j["tracking_rmse"] = fr.tracking_rmse;
    j["final_return_error"] = fr.final_return_error;
    j["timed_out"] = fr.timed_out;
    nlohmann::json obs = nlohmann::json::array();
    for (const auto &o : fr.observer)
        obs.push_back({o.t, o.f_hat.x(), o.f_hat.y(), o.f_hat.z()});
    j["observer"] = std::move(obs);
    nlohmann::json dec = nlohmann::json::array();
    for (const auto &d : fr.decisions)
        dec.push_back({d.t, d.k_star, d.t_r, d.triggered});
    j["decisions"] = std::move(dec);
    if (full_states)
    {
        nlohmann::json st = nlohmann::json::array();
        for (const auto &s : fr.states)
            st.push_back({s.t, s.p.x(), s.p.y(), s.p.z(), s.v.x(), s.v.y(), s.v.z(),
                          s.ref_p.x(), s.ref_p.y(), s.ref_p.z(), s.thrust_cmd});
        j["states"] = std::move(st);
    }
    return j;
}

/// Writes metrics.csv, summary.csv, and traces.jsonl (one JSON object per
/// flight) into the given directory. Paths use '/' joining; the directory
/// must exist.
inline void export_results(const CampaignResult &campaign, const std::string &dir)
{
    {
        std::ofstream os(dir + "/metrics.csv");
        if (!os) throw std::runtime_error("cannot write " + dir + "/metrics.csv");
        write_metrics_csv(os, campaign.rows);
    }
    {
        std::ofstream os(dir + "/summary.csv");
        if (!os) throw std::runtime_error("cannot write " + dir + "/summary.csv");
        write_summary_csv(os, campaign.summaries);
    }
    {
        std::ofstream os(dir + "/traces.jsonl");
        if (!os) throw std::runtime_error("cannot write " + dir + "/traces.jsonl");
        for (std::size_t i = 0; i < campaign.flights.size(); ++i)
        {
            nlohmann::json j = flight_to_json(campaign.flights[i]);
            j["scenario_id"] = campaign.rows[i].scenario_id;
            j["seed"] = campaign.rows[i].seed;
            os << j.dump() << '\n';
        }
    }
}

} // namespace airthrow

#endif
