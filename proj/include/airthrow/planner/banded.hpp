#ifndef AIRTHROW_PLANNER_BANDED_HPP
#define AIRTHROW_PLANNER_BANDED_HPP

#include <Eigen/Dense>
#include <stdexcept>

namespace airthrow {

// Banded square matrix with in-place LU (no pivoting) and transpose solve.
// Row-major band storage: entry (i, j) lives at (i - j + upper_bw, j).
class BandedSystem
{
public:
    void create(int n, int lower_bw, int upper_bw)
    {
        n_ = n;
        lb_ = lower_bw;
        ub_ = upper_bw;
        data_.setZero(lb_ + ub_ + 1, n_);
    }

    double &operator()(int i, int j) { return data_(i - j + ub_, j); }
    double operator()(int i, int j) const { return data_(i - j + ub_, j); }

    void factorizeLU()
    {
        for (int k = 0; k < n_ - 1; ++k)
        {
            const double piv = (*this)(k, k);
            if (piv == 0.0)
                throw std::runtime_error("BandedSystem: singular system (zero pivot)");
            const int i_max = std::min(k + lb_, n_ - 1);
            for (int i = k + 1; i <= i_max; ++i)
            {
                const double l = (*this)(i, k) / piv;
                (*this)(i, k) = l;
                const int j_max = std::min(k + ub_, n_ - 1);
                for (int j = k + 1; j <= j_max; ++j)
                {
                    (*this)(i, j) -= l * (*this)(k, j);
                }
            }
        }
        if ((*this)(n_ - 1, n_ - 1) == 0.0)
            throw std::runtime_error("BandedSystem: singular system (zero pivot)");
    }

    // Solves A x = b in place after factorizeLU.
    template <typename Derived>
    void solve(Eigen::MatrixBase<Derived> &b) const
    {
        for (int k = 0; k < n_; ++k)
        {
            const int i_max = std::min(k + lb_, n_ - 1);
            for (int i = k + 1; i <= i_max; ++i)
                b.row(i) -= (*this)(i, k) * b.row(k);
        }
        for (int k = n_ - 1; k >= 0; --k)
        {
            b.row(k) /= (*this)(k, k);
            const int i_min = std::max(k - ub_, 0);
            for (int i = i_min; i < k; ++i)
                b.row(i) -= (*this)(i, k) * b.row(k);
        }
    }

    // Solves A^T x = b in place after factorizeLU.
    template <typename Derived>
    void solveAdj(Eigen::MatrixBase<Derived> &b) const
    {
        // A = L U with unit-diagonal L; A^T = U^T L^T.
        for (int k = 0; k < n_; ++k)
        {
            b.row(k) /= (*this)(k, k);
            const int i_max = std::min(k + ub_, n_ - 1);
            for (int i = k + 1; i <= i_max; ++i)
                b.row(i) -= (*this)(k, i) * b.row(k);
        }
        for (int k = n_ - 1; k >= 0; --k)
        {
            const int i_min = std::max(k - lb_, 0);
            for (int i = i_min; i < k; ++i)
                b.row(i) -= (*this)(k, i) * b.row(k);
        }
    }

private:
    int n_ = 0, lb_ = 0, ub_ = 0;
    Eigen::MatrixXd data_;
};

} // namespace airthrow

#endif
