#ifndef AIRTHROW_PLANNER_MINCO_HPP
#define AIRTHROW_PLANNER_MINCO_HPP

#include <Eigen/Dense>
#include <stdexcept>

#include "airthrow/planner/banded.hpp"
#include "airthrow/planner/trajectory.hpp"

namespace airthrow {

// Minimum-control-effort spline for s = 4 (degree-7 pieces, D = 3).
// Maps waypoints q_1..q_{M-1} and durations T to polynomial coefficients
// through a banded linear system, and propagates cost gradients back to
// the waypoints and durations through the adjoint of that system.
class MincoS4
{
public:
    static constexpr int kC = SplineTrajectory::kCoeffs; // 8
    static constexpr int kD = SplineTrajectory::kDim;    // 3

    using Boundary = Eigen::Matrix<double, kD, 4>;       // columns: p, v, a, j

    void setConditions(const Boundary &head, const Boundary &tail, int piece_count)
    {
        if (piece_count < 1)
            throw std::invalid_argument("MincoS4: piece count must be >= 1");
        m_ = piece_count;
        head_ = head;
        tail_ = tail;
        n_ = kC * m_;
        a_.create(n_, 11, 8);
        b_.setZero(n_, kD);
        coeffs_.setZero(n_, kD);
        times_.setZero(m_);
    }

    int pieceCount() const { return m_; }

    // waypoints: 3 x (M-1); times: M positive durations
    void setParameters(const Eigen::Matrix3Xd &waypoints, const Eigen::VectorXd &times)
    {
        if (waypoints.cols() != m_ - 1 || times.size() != m_)
            throw std::invalid_argument("MincoS4: parameter dimensions do not match piece count");
        if ((times.array() <= 0.0).any())
            throw std::invalid_argument("MincoS4: durations must be positive");
        times_ = times;

        // Lower reach 11: the order-k continuity row kC*i+8+k touches column
        // kC*i, an offset of 8+k with k up to 3.
        a_.create(n_, 11, 8);
        b_.setZero(n_, kD);

        // head conditions: derivatives 0..3 at t = 0 of piece 0
        for (int k = 0; k < 4; ++k)
        {
            a_(k, k) = factorial(k);
            b_.row(k) = head_.col(k).transpose();
        }
        // interior junctions: high-order continuity first, then the waypoint
        // row, then low-order continuity; this ordering keeps every pivot
        // nonzero for the no-pivot banded LU.
        for (int i = 0; i < m_ - 1; ++i)
        {
            const int r = kC * i + 4;
            const int c0 = kC * i;
            const auto beta = [&](int order) { return SplineTrajectory::basis(times_(i), order); };
            for (int k = 4; k <= 6; ++k)
            {
                const auto bk = beta(k);
                for (int j = 0; j < kC; ++j) a_(r + k - 4, c0 + j) = bk(j);
                a_(r + k - 4, c0 + kC + k) = -factorial(k);
            }
            // waypoint hit at the end of piece i
            const auto b0 = beta(0);
            for (int j = 0; j < kC; ++j) a_(r + 3, c0 + j) = b0(j);
            b_.row(r + 3) = waypoints.col(i).transpose();
            // derivative continuity, orders 0..3
            for (int k = 0; k <= 3; ++k)
            {
                const auto bk = beta(k);
                for (int j = 0; j < kC; ++j) a_(r + 4 + k, c0 + j) = bk(j);
                a_(r + 4 + k, c0 + kC + k) = -factorial(k);
            }
        }
        // tail conditions: derivatives 0..3 at t = T_M of the last piece
        {
            const int r = n_ - 4;
            const int c0 = kC * (m_ - 1);
            for (int k = 0; k < 4; ++k)
            {
                const auto bk = SplineTrajectory::basis(times_(m_ - 1), k);
                for (int j = 0; j < kC; ++j) a_(r + k, c0 + j) = bk(j);
                b_.row(r + k) = tail_.col(k).transpose();
            }
        }

        a_.factorizeLU();
        coeffs_ = b_;
        a_.solve(coeffs_);
    }

    SplineTrajectory trajectory() const
    {
        SplineTrajectory traj;
        traj.pieces.resize(m_);
        traj.durations.resize(m_);
        for (int i = 0; i < m_; ++i)
        {
            traj.pieces[i] = coeffs_.block<kC, kD>(kC * i, 0);
            traj.durations[i] = times_(i);
        }
        return traj;
    }

    const Eigen::MatrixXd &coefficients() const { return coeffs_; }
    const Eigen::VectorXd &times() const { return times_; }

    // Integral of the squared s-th derivative over all pieces.
    double energy() const
    {
        double e = 0.0;
        for (int i = 0; i < m_; ++i)
        {
            const auto d = snapCoeffs(i);
            const double t = times_(i);
            // E_i = sum_{j,k} d_j . d_k * T^{j+k+1} / (j+k+1)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                    e += d.row(j).dot(d.row(k)) * std::pow(t, j + k + 1) /
                         static_cast<double>(j + k + 1);
        }
        return e;
    }

    // Adds dE/dc and dE/dT to the given accumulators.
    void energyGrad(Eigen::MatrixXd &grad_coeffs, Eigen::VectorXd &grad_times) const
    {
        for (int i = 0; i < m_; ++i)
        {
            const auto d = snapCoeffs(i);
            const double t = times_(i);
            for (int j = 0; j < 4; ++j)
            {
                Eigen::RowVector3d g = Eigen::RowVector3d::Zero();
                for (int k = 0; k < 4; ++k)
                    g += 2.0 * d.row(k) * std::pow(t, j + k + 1) /
                         static_cast<double>(j + k + 1);
                grad_coeffs.row(kC * i + 4 + j) += g * snapFactor(j);
            }
            // d/dT of the integral upper limit: |p^(4)(T)|^2
            Eigen::RowVector3d p4 = Eigen::RowVector3d::Zero();
            for (int j = 0; j < 4; ++j) p4 += d.row(j) * std::pow(t, j);
            grad_times(i) += p4.squaredNorm();
        }
    }

    // Converts partial gradients w.r.t. coefficients and times into total
    // gradients w.r.t. waypoints and times via the adjoint system.
    void propagateGrad(const Eigen::MatrixXd &partial_grad_coeffs,
                       const Eigen::VectorXd &partial_grad_times,
                       Eigen::Matrix3Xd &grad_waypoints,
                       Eigen::VectorXd &grad_times) const
    {
        Eigen::MatrixXd lambda = partial_grad_coeffs;
        a_.solveAdj(lambda);

        grad_waypoints.setZero(kD, std::max(m_ - 1, 0));
        grad_times = partial_grad_times;

        for (int i = 0; i < m_ - 1; ++i)
            grad_waypoints.col(i) = lambda.row(kC * i + 7).transpose();
        // rows that depend on T_i: the eight junction rows of piece i, or the
        // four tail rows for the last piece
        for (int i = 0; i < m_; ++i)
        {
            const auto c_i = coeffs_.block<kC, kD>(kC * i, 0);
            const bool last = (i == m_ - 1);
            const int r = last ? n_ - 4 : kC * i + 4;
            static constexpr int kJunctionOrders[8] = {4, 5, 6, 0, 0, 1, 2, 3};
            static constexpr int kTailOrders[4] = {0, 1, 2, 3};
            const int *orders = last ? kTailOrders : kJunctionOrders;
            const int rows = last ? 4 : 8;
            double acc = 0.0;
            for (int k = 0; k < rows; ++k)
            {
                const Eigen::RowVector3d d_row =
                    (c_i.transpose() * SplineTrajectory::basis(times_(i), orders[k] + 1))
                        .transpose();
                acc += lambda.row(r + k).dot(d_row);
            }
            grad_times(i) -= acc;
        }
    }

private:
    static double factorial(int k)
    {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    }

    static double snapFactor(int j)
    {
        // d^4/dt^4 t^(4+j) = (4+j)! / j! * t^j
        return factorial(4 + j) / factorial(j);
    }

    // rows j = 0..3 of the snap polynomial p^(4)(t) = sum_j d_j t^j
    Eigen::Matrix<double, 4, 3> snapCoeffs(int i) const
    {
        Eigen::Matrix<double, 4, 3> d;
        for (int j = 0; j < 4; ++j)
            d.row(j) = coeffs_.row(kC * i + 4 + j) * snapFactor(j);
        return d;
    }

    int m_ = 0;
    int n_ = 0;
    Boundary head_ = Boundary::Zero();
    Boundary tail_ = Boundary::Zero();
    BandedSystem a_;
    Eigen::MatrixXd b_;
    Eigen::MatrixXd coeffs_;
    Eigen::VectorXd times_;
};

} // namespace airthrow

#endif
