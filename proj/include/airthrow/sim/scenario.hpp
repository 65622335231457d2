#ifndef AIRTHROW_SIM_SCENARIO_HPP
#define AIRTHROW_SIM_SCENARIO_HPP

#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "airthrow/control/nmpc.hpp"
#include "airthrow/planner/planner.hpp"

namespace airthrow {

enum class TriggerMode { Nominal, Reassess };
enum class Ablation { None, Ndob, Indi, Full };

inline std::string to_string(TriggerMode m)
{
    return m == TriggerMode::Nominal ? "nominal" : "reassess";
}

inline std::string to_string(Ablation a)
{
    switch (a)
    {
    case Ablation::None: return "none";
    case Ablation::Ndob: return "ndob";
    case Ablation::Indi: return "indi";
    default: return "full";
    }
}

inline TriggerMode trigger_from_string(const std::string &s)
{
    if (s == "nominal") return TriggerMode::Nominal;
    if (s == "reassess") return TriggerMode::Reassess;
    throw std::invalid_argument("unknown trigger mode: " + s);
}

inline Ablation ablation_from_string(const std::string &s)
{
    if (s == "none") return Ablation::None;
    if (s == "ndob") return Ablation::Ndob;
    if (s == "indi") return Ablation::Indi;
    if (s == "full") return Ablation::Full;
    throw std::invalid_argument("unknown ablation: " + s);
}

struct NoiseConfig
{
    double accel_std = 0.05;   // [m/s^2]
    double gyro_std = 0.005;   // [rad/s]
};

struct RatesConfig
{
    double sim_hz = 1000.0;
    double control_hz = 100.0;
    double sensor_hz = 500.0;
};

struct ScenarioConfig
{
    std::string name = "scenario";
    VehicleParams vehicle;
    PlannerConfig planner;
    Vec3 start = Vec3(0.0, 0.0, 1.0);   // end-effector rest endpoints
    Vec3 goal = Vec3(4.0, 0.0, 1.0);
    Vec3 arm_offset = Vec3(0.0, 0.0, -0.2);
    double payload_mass = 0.2;
    Vec3 payload_offset = Vec3(0.0, 0.0, -0.2);  // rigid attachment, body frame
    NmpcConfig nmpc;
    double observer_gain = 5.0;
    double observer_cutoff_hz = 50.0;
    Vec3 indi_k = Vec3::Constant(20.0);
    double indi_cutoff_hz = 30.0;
    double motor_time_constant = 0.03;
    NoiseConfig noise;
    double actuator_delay = 0.0;        // true electromagnet latency [s]
    double delay_compensation = 0.0;    // known latency used by the trigger [s]
    TriggerMode trigger = TriggerMode::Nominal;
    Ablation ablation = Ablation::Full;
    std::uint64_t seed = 1;
    RatesConfig rates;
    double timeout = 30.0;
    double return_tolerance = 0.05;

    bool ndob_enabled() const
    {
        return ablation == Ablation::Ndob || ablation == Ablation::Full;
    }
    bool indi_enabled() const
    {
        return ablation == Ablation::Indi || ablation == Ablation::Full;
    }

    void validate() const
    {
        vehicle.validate();
        planner.validate();
        nmpc.validate();
        const auto divisible = [](double a, double b) {
            const double r = a / b;
            return std::abs(r - std::round(r)) < 1e-9;
        };
        if (!divisible(rates.sim_hz, rates.control_hz) ||
            !divisible(rates.sim_hz, rates.sensor_hz))
            throw std::invalid_argument("ScenarioConfig: rates must divide sim rate");
    }
};

namespace detail {

inline void require_keys(const nlohmann::json &j, const std::set<std::string> &allowed,
                         const std::string &where)
{
    for (const auto &item : j.items())
        if (!allowed.count(item.key()))
            throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
}

inline Vec3 vec3_from(const nlohmann::json &j)
{
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("expected a 3-element array");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

template <typename T>
void maybe(const nlohmann::json &j, const char *key, T &out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline void maybe_vec3(const nlohmann::json &j, const char *key, Vec3 &out)
{
    if (j.contains(key)) out = vec3_from(j.at(key));
}

} // namespace detail

inline ScenarioConfig scenario_from_json(const nlohmann::json &j)
{
    using detail::maybe;
    using detail::maybe_vec3;
    detail::require_keys(
        j,
        {"name", "vehicle", "planner", "start", "goal", "arm_offset", "payload",
         "nmpc", "observer", "indi", "noise", "actuator_delay", "delay_compensation",
         "trigger", "ablation", "seed", "rates", "timeout", "return_tolerance"},
        "scenario");

    ScenarioConfig s;
    maybe(j, "name", s.name);
    if (j.contains("vehicle"))
    {
        const auto &v = j.at("vehicle");
        detail::require_keys(v,
                             {"mass", "inertia_diag", "l_x", "l_y", "c_t", "c_m", "I_r",
                              "g", "rotor_speed_max", "thrust_min", "thrust_max",
                              "omega_max"},
                             "vehicle");
        maybe(v, "mass", s.vehicle.m);
        if (v.contains("inertia_diag"))
            s.vehicle.inertia = detail::vec3_from(v.at("inertia_diag")).asDiagonal();
        maybe(v, "l_x", s.vehicle.l_x);
        maybe(v, "l_y", s.vehicle.l_y);
        maybe(v, "c_t", s.vehicle.c_t);
        maybe(v, "c_m", s.vehicle.c_m);
        maybe(v, "I_r", s.vehicle.I_r);
        maybe(v, "g", s.vehicle.g_mag);
        maybe(v, "rotor_speed_max", s.vehicle.rotor_speed_max);
        maybe(v, "thrust_min", s.vehicle.thrust_min);
        maybe(v, "thrust_max", s.vehicle.thrust_max);
        maybe(v, "omega_max", s.vehicle.omega_max);
    }
    if (j.contains("planner"))
    {
        const auto &p = j.at("planner");
        detail::require_keys(p,
                             {"rho", "mu", "tau", "v_max", "a_max", "omega_max",
                              "thrust_acc_min", "thrust_acc_max", "w_feas", "w_landing",
                              "w_nocross", "samples_per_piece", "pieces", "target",
                              "corridor_lo", "corridor_hi", "w_corridor",
                              "window_tolerance", "max_iterations", "grad_tolerance"},
                             "planner");
        maybe(p, "rho", s.planner.rho);
        maybe(p, "mu", s.planner.mu);
        maybe(p, "tau", s.planner.tau);
        maybe(p, "v_max", s.planner.v_max);
        maybe(p, "a_max", s.planner.a_max);
        maybe(p, "omega_max", s.planner.omega_max);
        maybe(p, "thrust_acc_min", s.planner.thrust_acc_min);
        maybe(p, "thrust_acc_max", s.planner.thrust_acc_max);
        maybe(p, "w_feas", s.planner.w_feas);
        maybe(p, "w_landing", s.planner.w_landing);
        maybe(p, "w_nocross", s.planner.w_nocross);
        maybe(p, "samples_per_piece", s.planner.samples_per_piece);
        maybe(p, "pieces", s.planner.pieces);
        maybe_vec3(p, "target", s.planner.target);
        if (p.contains("corridor_lo") || p.contains("corridor_hi"))
        {
            s.planner.use_corridor = true;
            maybe_vec3(p, "corridor_lo", s.planner.corridor_lo);
            maybe_vec3(p, "corridor_hi", s.planner.corridor_hi);
            maybe(p, "w_corridor", s.planner.w_corridor);
        }
        maybe(p, "window_tolerance", s.planner.window_tolerance);
        maybe(p, "max_iterations", s.planner.max_iterations);
        maybe(p, "grad_tolerance", s.planner.grad_tolerance);
        s.planner.g_mag = s.vehicle.g_mag;
    }
    maybe_vec3(j, "start", s.start);
    maybe_vec3(j, "goal", s.goal);
    maybe_vec3(j, "arm_offset", s.arm_offset);
    if (j.contains("payload"))
    {
        const auto &p = j.at("payload");
        detail::require_keys(p, {"mass", "attach_offset"}, "payload");
        maybe(p, "mass", s.payload_mass);
        maybe_vec3(p, "attach_offset", s.payload_offset);
    }
    if (j.contains("nmpc"))
    {
        const auto &n = j.at("nmpc");
        detail::require_keys(n,
                             {"horizon_steps", "horizon_length", "q_p", "q_v", "q_q",
                              "q_u", "q_n_scale", "sqp_iterations"},
                             "nmpc");
        maybe(n, "horizon_steps", s.nmpc.horizon_steps);
        maybe(n, "horizon_length", s.nmpc.horizon_length);
        maybe_vec3(n, "q_p", s.nmpc.q_p);
        maybe_vec3(n, "q_v", s.nmpc.q_v);
        maybe_vec3(n, "q_q", s.nmpc.q_q);
        if (n.contains("q_u"))
        {
            const auto &qu = n.at("q_u");
            for (int i = 0; i < 4; ++i) s.nmpc.q_u(i) = qu.at(i).get<double>();
        }
        maybe(n, "q_n_scale", s.nmpc.q_n_scale);
        maybe(n, "sqp_iterations", s.nmpc.sqp_iterations);
    }
    if (j.contains("observer"))
    {
        const auto &o = j.at("observer");
        detail::require_keys(o, {"gain", "cutoff_hz"}, "observer");
        maybe(o, "gain", s.observer_gain);
        maybe(o, "cutoff_hz", s.observer_cutoff_hz);
    }
    if (j.contains("indi"))
    {
        const auto &i = j.at("indi");
        detail::require_keys(i, {"k_rate", "cutoff_hz", "motor_time_constant"}, "indi");
        maybe_vec3(i, "k_rate", s.indi_k);
        maybe(i, "cutoff_hz", s.indi_cutoff_hz);
        maybe(i, "motor_time_constant", s.motor_time_constant);
    }
    if (j.contains("noise"))
    {
        const auto &n = j.at("noise");
        detail::require_keys(n, {"accel_std", "gyro_std"}, "noise");
        maybe(n, "accel_std", s.noise.accel_std);
        maybe(n, "gyro_std", s.noise.gyro_std);
    }
    maybe(j, "actuator_delay", s.actuator_delay);
    maybe(j, "delay_compensation", s.delay_compensation);
    if (j.contains("trigger")) s.trigger = trigger_from_string(j.at("trigger").get<std::string>());
    if (j.contains("ablation")) s.ablation = ablation_from_string(j.at("ablation").get<std::string>());
    maybe(j, "seed", s.seed);
    if (j.contains("rates"))
    {
        const auto &r = j.at("rates");
        detail::require_keys(r, {"sim_hz", "control_hz", "sensor_hz"}, "rates");
        maybe(r, "sim_hz", s.rates.sim_hz);
        maybe(r, "control_hz", s.rates.control_hz);
        maybe(r, "sensor_hz", s.rates.sensor_hz);
    }
    maybe(j, "timeout", s.timeout);
    maybe(j, "return_tolerance", s.return_tolerance);
    s.validate();
    return s;
}

inline ScenarioConfig scenario_from_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    nlohmann::json j;
    in >> j;
    return scenario_from_json(j);
}

} // namespace airthrow

#endif
