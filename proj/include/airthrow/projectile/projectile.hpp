#ifndef AIRTHROW_PROJECTILE_HPP
#define AIRTHROW_PROJECTILE_HPP

#include <cmath>
#include <stdexcept>

#include "airthrow/math/quat.hpp"

namespace airthrow {

struct ReleaseState
{
    Vec3 p = Vec3::Zero();     // world position at release [m]
    Vec3 v = Vec3::Zero();     // world velocity at release [m/s]
    double t_release = 0.0;    // absolute release time [s]
};

struct LandingPrediction
{
    Vec3 point = Vec3::Zero(); // world landing position, point.z on the plane
    double fall_time = 0.0;    // [s]
    double error = 0.0;        // in-plane distance to target [m]
};

struct NoCrossingError : std::runtime_error
{
    NoCrossingError() : std::runtime_error("projectile never reaches the target plane") {}
};

/// Time for a drag-free payload at height z_rel above the plane with vertical
/// velocity z_dot to reach the plane: (z_dot + sqrt(z_dot^2 + 2 g z_rel)) / g.
inline double fall_time(double z_rel, double z_dot, double g_mag)
{
    const double disc = z_dot * z_dot + 2.0 * g_mag * z_rel;
    if (disc < 0.0) throw NoCrossingError();
    return (z_dot + std::sqrt(disc)) / g_mag;
}

inline LandingPrediction landing_point(const ReleaseState &release,
                                       double target_plane_z, double g_mag)
{
    LandingPrediction out;
    out.fall_time = fall_time(release.p.z() - target_plane_z, release.v.z(), g_mag);
    out.point.head<2>() = release.p.head<2>() + release.v.head<2>() * out.fall_time;
    out.point.z() = target_plane_z;
    return out;
}

inline double landing_error(const ReleaseState &release, const Vec3 &target)
{
    LandingPrediction pred = landing_point(release, target.z(), 9.81);
    return (pred.point.head<2>() - target.head<2>()).norm();
}

inline double landing_error(const ReleaseState &release, const Vec3 &target, double g_mag)
{
    LandingPrediction pred = landing_point(release, target.z(), g_mag);
    return (pred.point.head<2>() - target.head<2>()).norm();
}

} // namespace airthrow

#endif
