#pragma once

#include <cmath>
#include <complex>

namespace ncqsm {

// Neumaier's variant of Kahan summation. Order of add() calls is the
// summation order; results are bit-reproducible for a fixed order.
class compensated_sum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        abs_sum_ += std::abs(x);
    }

    double value() const noexcept { return sum_ + comp_; }
    double abs_sum() const noexcept { return abs_sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
    double abs_sum_ = 0.0;
};

class compensated_complex_sum {
public:
    void add(std::complex<double> z) noexcept
    {
        re_.add(z.real());
        im_.add(z.imag());
        abs_sum_ += std::abs(z);
    }

    std::complex<double> value() const noexcept { return {re_.value(), im_.value()}; }
    double abs_sum() const noexcept { return abs_sum_; }

private:
    compensated_sum re_;
    compensated_sum im_;
    double abs_sum_ = 0.0;
};

} // namespace ncqsm
