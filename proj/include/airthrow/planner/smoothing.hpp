#ifndef AIRTHROW_PLANNER_SMOOTHING_HPP
#define AIRTHROW_PLANNER_SMOOTHING_HPP

#include <algorithm>
#include <cmath>

namespace airthrow {

// C1 four-branch relaxation: 0 below 1-2mu, 1 above 1, cubic blend between.
inline double smooth_step(double x, double mu)
{
    if (x <= 1.0 - 2.0 * mu) return 0.0;
    if (x > 1.0) return 1.0;
    const double inv = 1.0 / (2.0 * mu * mu * mu * mu);
    if (x <= 1.0 - mu)
    {
        const double a = x + 2.0 * mu - 1.0;
        return inv * a * a * a * (1.0 - x);
    }
    const double b = x - 1.0;
    return inv * b * b * b * (x + 2.0 * mu - 1.0) + 1.0;
}

inline double smooth_step_derivative(double x, double mu)
{
    if (x <= 1.0 - 2.0 * mu || x > 1.0) return 0.0;
    const double inv = 1.0 / (2.0 * mu * mu * mu * mu);
    if (x <= 1.0 - mu)
    {
        const double a = x + 2.0 * mu - 1.0;
        return inv * a * a * (3.0 * (1.0 - x) - a);
    }
    const double b = x - 1.0;
    return inv * b * b * (3.0 * (x + 2.0 * mu - 1.0) + b);
}

// Smooth one-sided penalty: max(v, 0)^3 with derivative 3 max(v, 0)^2.
inline double cubic_hinge(double v) { return v > 0.0 ? v * v * v : 0.0; }
inline double cubic_hinge_derivative(double v) { return v > 0.0 ? 3.0 * v * v : 0.0; }

// C2 positive map for unconstrained duration variables and its inverse.
inline double time_forward(double tau)
{
    return tau > 0.0 ? (0.5 * tau + 1.0) * tau + 1.0
                     : 1.0 / ((0.5 * tau - 1.0) * tau + 1.0);
}

inline double time_forward_derivative(double tau)
{
    if (tau > 0.0) return tau + 1.0;
    const double den = (0.5 * tau - 1.0) * tau + 1.0;
    return (1.0 - tau) / (den * den);
}

inline double time_backward(double t)
{
    return t > 1.0 ? std::sqrt(2.0 * t - 1.0) - 1.0
                   : 1.0 - std::sqrt(2.0 / t - 1.0);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace airthrow

#endif
