#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>

#include "errors.hpp"

namespace ncqsm {

using cplx = std::complex<double>;

// A truncated sum together with a bound on |exact - value| that covers
// both the discarded tail and floating rounding.
struct SeriesValue {
    cplx value{};
    double tail_bound = 0.0;
    std::size_t terms_used = 0;

    double real() const noexcept { return value.real(); }

    // True when the exact quantity x is consistent with this value.
    bool contains(cplx x, double slack = 0.0) const noexcept
    {
        return std::abs(x - value) <= tail_bound + slack;
    }
};

// Rounding allowance for a compensated sum of terms c_n n^{-s}: each term
// carries a relative error of roughly (2 + |s| ln N) ulps from exp/log,
// and the compensated accumulation adds a couple more.
inline double rounding_allowance(double abs_sum, cplx s, std::size_t n_max) noexcept
{
    constexpr double u = std::numeric_limits<double>::epsilon();
    const double log_n = n_max > 1 ? std::log(static_cast<double>(n_max)) : 0.0;
    return (4.0 + std::abs(s) * log_n) * u * abs_sum;
}

// a/b with a bound propagated from both operands:
// |A/B - a/b| <= (ea|b| + |a|eb) / (|b|(|b| - eb)).
inline SeriesValue series_ratio(const SeriesValue& num, const SeriesValue& den)
{
    const double b = std::abs(den.value);
    if (!(b > den.tail_bound))
        throw domain_error("series_ratio: denominator not bounded away from zero");
    SeriesValue out;
    out.value = num.value / den.value;
    out.tail_bound = (num.tail_bound * b + std::abs(num.value) * den.tail_bound) /
                         (b * (b - den.tail_bound)) +
                     4.0 * std::numeric_limits<double>::epsilon() * std::abs(out.value);
    out.terms_used = std::max(num.terms_used, den.terms_used);
    return out;
}

inline SeriesValue series_reciprocal(const SeriesValue& den)
{
    SeriesValue one;
    one.value = 1.0;
    return series_ratio(one, den);
}

inline SeriesValue series_difference(const SeriesValue& a, const SeriesValue& b)
{
    SeriesValue out;
    out.value = a.value - b.value;
    out.tail_bound = a.tail_bound + b.tail_bound +
                     2.0 * std::numeric_limits<double>::epsilon() * std::abs(out.value);
    out.terms_used = std::max(a.terms_used, b.terms_used);
    return out;
}

} // namespace ncqsm
