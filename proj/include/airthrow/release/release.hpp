#ifndef AIRTHROW_RELEASE_HPP
#define AIRTHROW_RELEASE_HPP

#include <limits>
#include <vector>

#include "airthrow/model/flatness.hpp"
#include "airthrow/projectile/projectile.hpp"

namespace airthrow {

struct ReleaseDecision
{
    double t_r_current = 0.0;
    bool triggered = false;
    std::vector<double> error_sequence;
    int k_star = 0;               // 1-based argmin index
};

/// Predicted landing error for each NMPC state (end-effector offset applied);
/// states that cannot reach the plane get an infinite sentinel.
inline std::vector<double> predicted_landing_errors(
    const std::vector<VehicleState> &predicted_states, const ArmState &arm,
    const Vec3 &target, double g_mag = 9.81)
{
    if (predicted_states.empty())
        throw std::invalid_argument("predicted_landing_errors: empty sequence");
    std::vector<double> errors;
    errors.reserve(predicted_states.size());
    for (const VehicleState &s : predicted_states)
    {
        const auto [p_e, v_e] = quad_to_end_effector(s, arm);
        ReleaseState rel;
        rel.p = p_e;
        rel.v = v_e;
        try
        {
            errors.push_back(landing_error(rel, target, g_mag));
        }
        catch (const NoCrossingError &)
        {
            errors.push_back(std::numeric_limits<double>::infinity());
        }
    }
    return errors;
}

/// One reassessment tick. `errors[i-1]` is the predicted landing error when
/// releasing at t_now + i*dt (i = 1..N). Active only while the planned
/// release lies within +-h of now; the stopping branch latches the trigger
/// once the predicted optimum is at most one step (plus the known actuation
/// delay) ahead.
inline ReleaseDecision reassess(ReleaseDecision decision, const std::vector<double> &errors,
                                double t_now, double dt, double h,
                                double actuation_delay = 0.0)
{
    if (decision.triggered) return decision;
    if (std::abs(decision.t_r_current - t_now) > h) return decision;
    if (errors.empty()) return decision;

    int k_star = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(errors.size()); ++i)
    {
        if (errors[i] < best)
        {
            best = errors[i];
            k_star = i + 1;
        }
    }
    if (k_star < 0) return decision; // all samples below the plane this tick

    decision.error_sequence = errors;
    decision.k_star = k_star;
    const double delta_t = k_star * dt;
    decision.t_r_current = t_now + delta_t;
    if (delta_t <= dt + actuation_delay) decision.triggered = true;
    return decision;
}

/// Baseline trigger: fires on the first tick at or past the planned time.
class NominalTrigger
{
public:
    bool update(double t_now, double t_r_planned)
    {
        if (fired_) return false;
        if (t_now >= t_r_planned)
        {
            fired_ = true;
            return true;
        }
        return false;
    }

private:
    bool fired_ = false;
};

} // namespace airthrow

#endif
