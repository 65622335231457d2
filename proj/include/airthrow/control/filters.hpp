#ifndef AIRTHROW_CONTROL_FILTERS_HPP
#define AIRTHROW_CONTROL_FILTERS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace airthrow {

// Second-order Butterworth low-pass as a transposed direct-form-II biquad
// (bilinear transform, unity DC gain). Vector-valued samples of dimension N.
template <int N>
class Butterworth2
{
public:
    using Sample = Eigen::Matrix<double, N, 1>;

    Butterworth2() = default;

    Butterworth2(double f_cut, double f_s) { configure(f_cut, f_s); }

    void configure(double f_cut, double f_s)
    {
        if (!(f_cut > 0.0) || f_cut >= 0.5 * f_s)
            throw std::invalid_argument("Butterworth2: cutoff must lie in (0, fs/2)");
        const double w0 = 2.0 * M_PI * f_cut / f_s;
        const double alpha = std::sin(w0) / std::sqrt(2.0);
        const double a0 = 1.0 + alpha;
        b0_ = (1.0 - std::cos(w0)) / 2.0 / a0;
        b1_ = (1.0 - std::cos(w0)) / a0;
        b2_ = b0_;
        a1_ = -2.0 * std::cos(w0) / a0;
        a2_ = (1.0 - alpha) / a0;
        configured_ = true;
        primed_ = false;
    }

    /// Seed the filter at steady state for the given input value.
    void reset(const Sample &x0)
    {
        z2_ = (b2_ - a2_) * x0;
        z1_ = (b1_ - a1_) * x0 + z2_;
        primed_ = true;
    }

    Sample update(const Sample &x)
    {
        if (!configured_) throw std::runtime_error("Butterworth2: not configured");
        if (!primed_) reset(x);
        const Sample y = b0_ * x + z1_;
        z1_ = b1_ * x - a1_ * y + z2_;
        z2_ = b2_ * x - a2_ * y;
        return y;
    }

    bool is_configured() const { return configured_; }

private:
    double b0_ = 0.0, b1_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
    Sample z1_ = Sample::Zero(), z2_ = Sample::Zero();
    bool configured_ = false;
    bool primed_ = false;
};

/// Scalar convenience form of the filter update used in tests.
inline std::pair<Butterworth2<1>, double> butterworth2(Butterworth2<1> state, double x,
                                                       double f_cut, double f_s)
{
    if (!state.is_configured()) state.configure(f_cut, f_s);
    const double y = state.update(Eigen::Matrix<double, 1, 1>(x))(0);
    return {state, y};
}

} // namespace airthrow

#endif
