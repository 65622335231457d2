#ifndef AIRTHROW_CONTROL_QP_HPP
#define AIRTHROW_CONTROL_QP_HPP

#include <Eigen/Dense>
#include <vector>

namespace airthrow {

// Primal active-set solver for strictly convex box-constrained QPs:
//   min 1/2 x' H x + g' x   s.t.  lo <= x <= hi
// The active set persists across calls through the `at_lower`/`at_upper`
// warm-start flags.
class BoxQpSolver
{
public:
    struct Result
    {
        Eigen::VectorXd x;
        bool solved = false;
        int iterations = 0;
        double projected_grad_norm = 0.0;
    };

    Result solve(const Eigen::MatrixXd &h, const Eigen::VectorXd &g,
                 const Eigen::VectorXd &lo, const Eigen::VectorXd &hi,
                 const Eigen::VectorXd &x_warm)
    {
        const int n = static_cast<int>(g.size());
        Result res;
        res.x = x_warm.cwiseMax(lo).cwiseMin(hi);
        if ((lo.array() > hi.array()).any()) return res;

        if (static_cast<int>(at_lower_.size()) != n)
        {
            at_lower_.assign(n, false);
            at_upper_.assign(n, false);
        }
        for (int i = 0; i < n; ++i)
        {
            at_lower_[i] = res.x(i) <= lo(i);
            at_upper_[i] = !at_lower_[i] && res.x(i) >= hi(i);
            if (at_lower_[i]) res.x(i) = lo(i);
            if (at_upper_[i]) res.x(i) = hi(i);
        }

        constexpr double kTol = 1e-10;
        const int max_iter = 20 * n + 50;
        for (int iter = 0; iter < max_iter; ++iter)
        {
            res.iterations = iter;
            std::vector<int> free_idx;
            free_idx.reserve(n);
            for (int i = 0; i < n; ++i)
                if (!at_lower_[i] && !at_upper_[i]) free_idx.push_back(i);

            const Eigen::VectorXd y = h * res.x + g;

            Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
            if (!free_idx.empty())
            {
                const int nf = static_cast<int>(free_idx.size());
                Eigen::MatrixXd h_ff(nf, nf);
                Eigen::VectorXd y_f(nf);
                for (int a = 0; a < nf; ++a)
                {
                    y_f(a) = y(free_idx[a]);
                    for (int b = 0; b < nf; ++b)
                        h_ff(a, b) = h(free_idx[a], free_idx[b]);
                }
                const Eigen::VectorXd d_f = h_ff.ldlt().solve(-y_f);
                for (int a = 0; a < nf; ++a) d(free_idx[a]) = d_f(a);
            }

            if (d.lpNorm<Eigen::Infinity>() < kTol)
            {
                // KKT check on the bound multipliers
                int worst = -1;
                double worst_viol = kTol;
                for (int i = 0; i < n; ++i)
                {
                    if (at_lower_[i] && y(i) < -worst_viol)
                    {
                        worst_viol = -y(i);
                        worst = i;
                    }
                    else if (at_upper_[i] && y(i) > worst_viol)
                    {
                        worst_viol = y(i);
                        worst = i;
                    }
                }
                if (worst < 0)
                {
                    res.solved = true;
                    break;
                }
                at_lower_[worst] = at_upper_[worst] = false;
                continue;
            }

            // longest feasible step along d
            double alpha = 1.0;
            int blocking = -1;
            bool block_low = false;
            for (int i = 0; i < n; ++i)
            {
                if (d(i) > kTol)
                {
                    const double a = (hi(i) - res.x(i)) / d(i);
                    if (a < alpha)
                    {
                        alpha = a;
                        blocking = i;
                        block_low = false;
                    }
                }
                else if (d(i) < -kTol)
                {
                    const double a = (lo(i) - res.x(i)) / d(i);
                    if (a < alpha)
                    {
                        alpha = a;
                        blocking = i;
                        block_low = true;
                    }
                }
            }
            res.x += alpha * d;
            if (blocking >= 0)
            {
                res.x(blocking) = block_low ? lo(blocking) : hi(blocking);
                at_lower_[blocking] = block_low;
                at_upper_[blocking] = !block_low;
            }
            else if (alpha >= 1.0 - 1e-15)
            {
                continue; // full Newton step taken; re-check KKT next pass
            }
        }

        // projected gradient norm as the optimality certificate
        const Eigen::VectorXd y = h * res.x + g;
        double pg = 0.0;
        for (int i = 0; i < n; ++i)
        {
            double gi = y(i);
            if (res.x(i) <= lo(i) + kTol) gi = std::min(gi, 0.0);
            if (res.x(i) >= hi(i) - kTol) gi = std::max(gi, 0.0);
            pg = std::max(pg, std::abs(gi));
        }
        res.projected_grad_norm = pg;
        res.solved = res.solved || pg < 1e-8;
        return res;
    }

private:
    std::vector<bool> at_lower_, at_upper_;
};

} // namespace airthrow

#endif
