#ifndef AIRTHROW_PLANNER_TRAJECTORY_HPP
#define AIRTHROW_PLANNER_TRAJECTORY_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "airthrow/math/quat.hpp"

namespace airthrow {

// Piecewise polynomial in the flat-output space. Each piece stores an
// (2s) x D coefficient matrix over the natural basis (1, t, t^2, ...)
// in piece-local time.
struct SplineTrajectory
{
    static constexpr int kOrder = 4;               // integrator-chain order s
    static constexpr int kCoeffs = 2 * kOrder;     // 8 coefficients per piece
    static constexpr int kDim = 3;

    using PieceCoeffs = Eigen::Matrix<double, kCoeffs, kDim>;

    std::vector<PieceCoeffs> pieces;
    std::vector<double> durations;

    double total_duration() const
    {
        double t = 0.0;
        for (double d : durations) t += d;
        return t;
    }

    int piece_count() const { return static_cast<int>(pieces.size()); }

    // beta^(order)(t) over the natural basis
    static Eigen::Matrix<double, kCoeffs, 1> basis(double t, int order)
    {
        Eigen::Matrix<double, kCoeffs, 1> b = Eigen::Matrix<double, kCoeffs, 1>::Zero();
        if (order >= kCoeffs) return b;
        double tn = 1.0;
        for (int j = order; j < kCoeffs; ++j)
        {
            double coef = 1.0;
            for (int k = 0; k < order; ++k) coef *= static_cast<double>(j - k);
            b(j) = coef * tn;
            tn *= t;
        }
        return b;
    }

    // Locates a piece; right-continuous at junctions, the final instant
    // belongs to the last piece.
    int locate(double t, double &t_local) const
    {
        const double t_total = total_duration();
        if (t < -1e-12 || t > t_total + 1e-12)
            throw std::out_of_range("eval_trajectory: time outside [0, T_sigma]");
        t = std::min(std::max(t, 0.0), t_total);
        double offset = 0.0;
        for (int i = 0; i + 1 < piece_count(); ++i)
        {
            if (t < offset + durations[i])
            {
                t_local = t - offset;
                return i;
            }
            offset += durations[i];
        }
        t_local = t - offset;
        return piece_count() - 1;
    }

    Vec3 eval(double t, int order) const
    {
        double t_local = 0.0;
        const int i = locate(t, t_local);
        return pieces[i].transpose() * basis(t_local, order);
    }

    Vec3 position(double t) const { return eval(t, 0); }
    Vec3 velocity(double t) const { return eval(t, 1); }
    Vec3 acceleration(double t) const { return eval(t, 2); }
    Vec3 jerk(double t) const { return eval(t, 3); }
};

/// Feasible release interval [t_r - tau, t_r + tau] around the nominal time.
struct ReleaseWindow
{
    double t_r = 0.0;
    double tau = 0.0;

    double begin() const { return t_r - tau; }
    double end() const { return t_r + tau; }
};

inline nlohmann::json trajectory_to_json(const SplineTrajectory &traj,
                                         const ReleaseWindow &window)
{
    nlohmann::json j;
    j["s"] = SplineTrajectory::kOrder;
    j["D"] = SplineTrajectory::kDim;
    j["durations"] = traj.durations;
    nlohmann::json pieces = nlohmann::json::array();
    for (const auto &c : traj.pieces)
    {
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < SplineTrajectory::kCoeffs; ++r)
            rows.push_back({c(r, 0), c(r, 1), c(r, 2)});
        pieces.push_back(rows);
    }
    j["pieces"] = pieces;
    j["t_r"] = window.t_r;
    j["tau"] = window.tau;
    return j;
}

inline std::pair<SplineTrajectory, ReleaseWindow> trajectory_from_json(const nlohmann::json &j)
{
    if (j.at("s").get<int>() != SplineTrajectory::kOrder ||
        j.at("D").get<int>() != SplineTrajectory::kDim)
        throw std::invalid_argument("trajectory_from_json: unsupported s or D");
    SplineTrajectory traj;
    traj.durations = j.at("durations").get<std::vector<double>>();
    for (const auto &rows : j.at("pieces"))
    {
        SplineTrajectory::PieceCoeffs c;
        for (int r = 0; r < SplineTrajectory::kCoeffs; ++r)
            for (int d = 0; d < SplineTrajectory::kDim; ++d)
                c(r, d) = rows.at(r).at(d).get<double>();
        traj.pieces.push_back(c);
    }
    if (traj.pieces.size() != traj.durations.size())
        throw std::invalid_argument("trajectory_from_json: piece/duration mismatch");
    ReleaseWindow w;
    w.t_r = j.at("t_r").get<double>();
    w.tau = j.at("tau").get<double>();
    return {traj, w};
}

} // namespace airthrow

#endif
