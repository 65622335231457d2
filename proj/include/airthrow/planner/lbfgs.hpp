#ifndef AIRTHROW_PLANNER_LBFGS_HPP
#define AIRTHROW_PLANNER_LBFGS_HPP

#include <Eigen/Dense>
#include <deque>
#include <functional>

namespace airthrow {

struct LbfgsOptions
{
    int max_iterations = 3000;
    int memory = 16;
    double grad_tolerance = 1e-5;     // stop when ||g||_inf below this
    double armijo = 1e-4;
    double wolfe = 0.9;
    int max_line_search = 60;
};

struct LbfgsResult
{
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Limited-memory BFGS with a bracketing weak-Wolfe line search.
// Objective returns the value and fills the gradient.
inline LbfgsResult lbfgs_minimize(
    Eigen::VectorXd &x,
    const std::function<double(const Eigen::VectorXd &, Eigen::VectorXd &)> &objective,
    const LbfgsOptions &opt = LbfgsOptions())
{
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd g(n), g_new(n), x_new(n), d(n);
    double f = objective(x, g);

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    LbfgsResult res;
    for (int iter = 0; iter < opt.max_iterations; ++iter)
    {
        res.iterations = iter;
        res.value = f;
        res.grad_norm = g.lpNorm<Eigen::Infinity>();
        if (res.grad_norm < opt.grad_tolerance)
        {
            res.converged = true;
            return res;
        }

        // two-loop recursion
        d = -g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i)
        {
            alpha[i] = rho_hist[i] * s_hist[i].dot(d);
            d -= alpha[i] * y_hist[i];
        }
        if (!y_hist.empty())
        {
            const double gamma = s_hist.back().dot(y_hist.back()) /
                                 y_hist.back().squaredNorm();
            d *= gamma;
        }
        for (size_t i = 0; i < s_hist.size(); ++i)
        {
            const double beta = rho_hist[i] * y_hist[i].dot(d);
            d += (alpha[i] - beta) * s_hist[i];
        }

        double dg = g.dot(d);
        if (dg >= 0.0)
        {
            d = -g;
            dg = -g.squaredNorm();
        }

        // weak-Wolfe line search by bisection bracketing
        double step = (iter == 0) ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;
        double lo = 0.0, hi = 0.0;
        double f_new = f;
        bool ok = false;
        for (int ls = 0; ls < opt.max_line_search; ++ls)
        {
            x_new = x + step * d;
            f_new = objective(x_new, g_new);
            if (!std::isfinite(f_new) || f_new > f + opt.armijo * step * dg)
            {
                hi = step;
                step = 0.5 * (lo + hi);
                continue;
            }
            if (g_new.dot(d) < opt.wolfe * dg)
            {
                lo = step;
                step = (hi > 0.0) ? 0.5 * (lo + hi) : 2.0 * step;
                continue;
            }
            ok = true;
            break;
        }
        if (!ok)
        {
            // accept any decrease; otherwise give up
            if (!(std::isfinite(f_new) && f_new < f))
            {
                res.value = f;
                res.grad_norm = g.lpNorm<Eigen::Infinity>();
                return res;
            }
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm())
        {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.memory)
            {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
    res.value = f;
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
    return res;
}

} // namespace airthrow

#endif
