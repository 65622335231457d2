// Command-line front end: plan a throw trajectory, fly a single closed-loop
// flight, run a multi-flight campaign, or sweep the release-window half-width.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "airthrow/sim/harness.hpp"

namespace {

airthrow::ScenarioConfig load_scenario(const std::string &path,
                                       const std::string &trigger,
                                       const std::string &ablation,
                                       std::int64_t seed)
{
    airthrow::ScenarioConfig sc = airthrow::scenario_from_file(path);
    if (!trigger.empty()) sc.trigger = airthrow::trigger_from_string(trigger);
    if (!ablation.empty()) sc.ablation = airthrow::ablation_from_string(ablation);
    if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
    return sc;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Desk-scale aerial throwing simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_path;
    std::string trigger;
    std::string ablation;
    std::int64_t seed = -1;
    int repeats = 1;
    int threads = 0;
    std::vector<std::string> scenario_paths;
    std::vector<double> taus;

    auto *plan_cmd = app.add_subcommand("plan", "Plan a trajectory and report the release window");
    plan_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    plan_cmd->add_option("--out", out_path, "Write the trajectory as JSON");

    auto *fly_cmd = app.add_subcommand("fly", "Run one closed-loop flight");
    fly_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    fly_cmd->add_option("--seed", seed, "Override the scenario seed");
    fly_cmd->add_option("--trigger", trigger, "nominal|reassess")
        ->check(CLI::IsMember({"nominal", "reassess"}));
    fly_cmd->add_option("--ablation", ablation, "none|ndob|indi|full")
        ->check(CLI::IsMember({"none", "ndob", "indi", "full"}));
    fly_cmd->add_option("--out", out_path, "Write the full flight trace as JSON");

    auto *camp_cmd = app.add_subcommand("campaign", "Run a batch of flights");
    camp_cmd->add_option("--scenario", scenario_paths, "Scenario JSON files")->required();
    camp_cmd->add_option("--seed", seed, "First seed (default 1)");
    camp_cmd->add_option("--repeats", repeats, "Flights per scenario")->check(CLI::PositiveNumber);
    camp_cmd->add_option("--trigger", trigger, "Override for all scenarios")
        ->check(CLI::IsMember({"nominal", "reassess"}));
    camp_cmd->add_option("--ablation", ablation, "Override for all scenarios")
        ->check(CLI::IsMember({"none", "ndob", "indi", "full"}));
    camp_cmd->add_option("--threads", threads, "Worker threads (0 = hardware)");
    camp_cmd->add_option("--out", out_path, "Output directory")->required();

    auto *sweep_cmd = app.add_subcommand("sweep-tau", "Sweep the release-window half-width");
    sweep_cmd->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    sweep_cmd->add_option("--tau", taus, "Half-width values [s]")->required();
    sweep_cmd->add_option("--out", out_path, "Write the sweep as CSV");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*plan_cmd)
        {
            const airthrow::ScenarioConfig sc = load_scenario(scenario_path, "", "", -1);
            const airthrow::PlanResult plan = airthrow::plan_for_scenario(sc);
            const double window = airthrow::release_window_duration(
                plan.trajectory, plan.window.t_r, sc.planner.window_tolerance,
                sc.planner.target, sc.vehicle.g_mag);
            std::printf("converged: %s\n", plan.converged ? "yes" : "no");
            std::printf("duration_s: %.6f\n", plan.trajectory.total_duration());
            std::printf("release_time_s: %.6f\n", plan.window.t_r);
            std::printf("worst_window_error_m: %.6f\n", plan.worst_window_error);
            std::printf("window_duration_s: %.6f\n", window);
            std::printf("iterations: %d\n", plan.iterations);
            if (!out_path.empty())
            {
                std::ofstream os(out_path);
                os << airthrow::trajectory_to_json(plan.trajectory, plan.window).dump(2)
                   << '\n';
            }
            return plan.converged ? 0 : 1;
        }
        if (*fly_cmd)
        {
            const airthrow::ScenarioConfig sc =
                load_scenario(scenario_path, trigger, ablation, seed);
            const airthrow::FlightResult fr = airthrow::run_flight(sc);
            std::printf("failed: %s\n", fr.failed ? fr.failure_reason.c_str() : "no");
            std::printf("release_time_s: %.6f\n", fr.release_time);
            std::printf("v_release_mps: %.6f\n", fr.v_release);
            std::printf("landing_error_m: %.6f\n", fr.landing_error);
            std::printf("tracking_rmse_m: %.6f\n", fr.tracking_rmse);
            if (!out_path.empty())
            {
                std::ofstream os(out_path);
                os << airthrow::flight_to_json(fr, true).dump() << '\n';
            }
            return fr.failed ? 1 : 0;
        }
        if (*camp_cmd)
        {
            std::vector<airthrow::ScenarioConfig> scenarios;
            for (const auto &p : scenario_paths)
                scenarios.push_back(load_scenario(p, trigger, ablation, -1));
            std::vector<std::uint64_t> seeds(static_cast<std::size_t>(repeats));
            std::iota(seeds.begin(), seeds.end(),
                      seed >= 0 ? static_cast<std::uint64_t>(seed) : 1u);
            const airthrow::CampaignResult result =
                airthrow::run_campaign(scenarios, seeds, threads);
            std::filesystem::create_directories(out_path);
            airthrow::export_results(result, out_path);
            airthrow::write_summary_csv(std::cout, result.summaries);
            int failures = 0;
            for (const auto &row : result.rows) failures += row.failed ? 1 : 0;
            return failures == 0 ? 0 : 1;
        }
        if (*sweep_cmd)
        {
            const airthrow::ScenarioConfig sc = load_scenario(scenario_path, "", "", -1);
            std::ostream *os = &std::cout;
            std::ofstream file;
            if (!out_path.empty())
            {
                file.open(out_path);
                os = &file;
            }
            *os << "tau_s,converged,release_time_s,window_duration_s,duration_s\n";
            for (const double tau : taus)
            {
                airthrow::ScenarioConfig cur = sc;
                cur.planner.tau = tau;
                const airthrow::PlanResult plan = airthrow::plan_for_scenario(cur);
                const double window = airthrow::release_window_duration(
                    plan.trajectory, plan.window.t_r, cur.planner.window_tolerance,
                    cur.planner.target, cur.vehicle.g_mag);
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%.9g,%d,%.9g,%.9g,%.9g\n", tau,
                              plan.converged ? 1 : 0, plan.window.t_r, window,
                              plan.trajectory.total_duration());
                *os << buf;
            }
            return 0;
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
