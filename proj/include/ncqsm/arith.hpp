#pragma once

// Sieved arithmetic functions and tail-bounded Dirichlet series.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rational.hpp"
#include "series.hpp"
#include "summation.hpp"

namespace ncqsm {

inline constexpr std::size_t default_sieve_cap = 100'000'000;

// mu, lambda, Omega, squarefree flag and smallest prime factor for 1 <= n <= N.
// Index 0 is unused and holds zeros.
class ArithTable {
public:
    explicit ArithTable(std::size_t limit, std::size_t cap = default_sieve_cap)
        : limit_(limit)
    {
        if (limit == 0)
            throw domain_error("sieve: limit must be >= 1");
        if (limit > cap)
            throw capacity_error("sieve: limit " + std::to_string(limit) +
                                 " exceeds cap " + std::to_string(cap));
        build();
    }

    std::size_t limit() const noexcept { return limit_; }

    int mobius(std::size_t n) const { return mobius_[check(n)]; }
    int liouville(std::size_t n) const { return liouville_[check(n)]; }
    int big_omega(std::size_t n) const { return big_omega_[check(n)]; }
    bool squarefree(std::size_t n) const { return mobius_[check(n)] != 0; }
    std::uint32_t spf(std::size_t n) const { return spf_[check(n)]; }

    std::span<const std::int8_t> mobius_values() const noexcept { return mobius_; }
    std::span<const std::int8_t> liouville_values() const noexcept { return liouville_; }

private:
    std::size_t check(std::size_t n) const
    {
        if (n == 0 || n > limit_)
            throw capacity_error("ArithTable: index " + std::to_string(n) +
                                 " outside [1, " + std::to_string(limit_) + "]");
        return n;
    }

    void build()
    {
        const std::size_t n_max = limit_;
        spf_.assign(n_max + 1, 0);
        mobius_.assign(n_max + 1, 0);
        liouville_.assign(n_max + 1, 0);
        big_omega_.assign(n_max + 1, 0);

        // Linear sieve: every composite is struck exactly once by its spf.
        std::vector<std::uint32_t> primes;
        for (std::size_t i = 2; i <= n_max; ++i) {
            if (spf_[i] == 0) {
                spf_[i] = static_cast<std::uint32_t>(i);
                primes.push_back(static_cast<std::uint32_t>(i));
            }
            for (std::uint32_t p : primes) {
                const std::size_t ip = i * p;
                if (p > spf_[i] || ip > n_max)
                    break;
                spf_[ip] = p;
            }
        }

        mobius_[1] = 1;
        liouville_[1] = 1;
        for (std::size_t n = 2; n <= n_max; ++n) {
            const std::size_t p = spf_[n];
            const std::size_t m = n / p;
            big_omega_[n] = static_cast<std::uint8_t>(big_omega_[m] + 1);
            liouville_[n] = static_cast<std::int8_t>(-liouville_[m]);
            mobius_[n] = (m % p == 0) ? 0 : static_cast<std::int8_t>(-mobius_[m]);
        }
    }

    std::size_t limit_;
    std::vector<std::int8_t> mobius_;
    std::vector<std::int8_t> liouville_;
    std::vector<std::uint8_t> big_omega_;
    std::vector<std::uint32_t> spf_;
};

inline ArithTable sieve(std::size_t n, std::size_t cap = default_sieve_cap)
{
    return ArithTable(n, cap);
}

enum class ArithCoeff { one, mobius, liouville, abs_mobius };

inline std::string to_string(ArithCoeff c)
{
    switch (c) {
    case ArithCoeff::one: return "one";
    case ArithCoeff::mobius: return "mobius";
    case ArithCoeff::liouville: return "liouville";
    case ArithCoeff::abs_mobius: return "abs_mobius";
    }
    return "?";
}

// n^{-s}; the real branch goes through pow for the last ulp.
inline cplx power_minus(double n, cplx s)
{
    if (s.imag() == 0.0)
        return std::pow(n, -s.real());
    return std::exp(-s * std::log(n));
}

// zeta_r^n = exp(2 pi i a p n / q), with the phase reduced exactly mod q.
inline cplx root_of_unity_power(const QZ& r, std::uint64_t n, std::int64_t twist = 1)
{
    const auto q = static_cast<__int128>(r.den());
    __int128 k = (static_cast<__int128>(r.num()) * twist) % q;
    if (k < 0)
        k += q;
    k = (k * static_cast<__int128>(n % static_cast<std::uint64_t>(r.den()))) % q;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(q);
    if (k == 0)
        return 1.0;
    if (2 * k == q)
        return -1.0;
    return {std::cos(angle), std::sin(angle)};
}

inline void check_galois_twist(const QZ& r, std::int64_t twist)
{
    if (std::gcd(twist < 0 ? -twist : twist, r.den()) != 1)
        throw domain_error("galois twist " + std::to_string(twist) +
                           " is not a unit modulo " + std::to_string(r.den()));
}

// Sum_{n<=N} c(n) n^{-s} in ascending n, compensated. coeff_sup bounds
// |c(n)| for all n (including n > N) and feeds the integral-test tail.
template <class Coeff>
SeriesValue dirichlet_series(Coeff&& coeff, cplx s, std::size_t n_terms, double coeff_sup,
                             double abscissa = 1.0)
{
    if (!(s.real() > abscissa))
        throw domain_error("dirichlet_series: Re(s) = " + std::to_string(s.real()) +
                           " is not above the abscissa " + std::to_string(abscissa));
    compensated_complex_sum acc;
    for (std::size_t n = 1; n <= n_terms; ++n) {
        const cplx c = coeff(n);
        if (c != cplx{})
            acc.add(c * power_minus(static_cast<double>(n), s));
    }
    SeriesValue out;
    out.value = acc.value();
    out.terms_used = n_terms;
    const double sigma = s.real();
    out.tail_bound = coeff_sup * std::pow(static_cast<double>(n_terms), 1.0 - sigma) / (sigma - 1.0) +
                     rounding_allowance(acc.abs_sum(), s, n_terms);
    return out;
}

inline SeriesValue dirichlet_series(const ArithTable& table, ArithCoeff kind, cplx s, std::size_t n_terms)
{
    if (n_terms > table.limit())
        throw capacity_error("dirichlet_series: N = " + std::to_string(n_terms) +
                             " exceeds table limit " + std::to_string(table.limit()));
    const auto mu = table.mobius_values();
    const auto la = table.liouville_values();
    switch (kind) {
    case ArithCoeff::one:
        return dirichlet_series([](std::size_t) { return cplx(1.0); }, s, n_terms, 1.0);
    case ArithCoeff::mobius:
        return dirichlet_series([&](std::size_t n) { return cplx(mu[n]); }, s, n_terms, 1.0);
    case ArithCoeff::liouville:
        return dirichlet_series([&](std::size_t n) { return cplx(la[n]); }, s, n_terms, 1.0);
    case ArithCoeff::abs_mobius:
        return dirichlet_series([&](std::size_t n) { return cplx(mu[n] != 0 ? 1.0 : 0.0); }, s, n_terms, 1.0);
    }
    throw domain_error("dirichlet_series: unknown coefficient kind");
}

// coeff[k] is the coefficient of (k+1)^{-s}.
inline SeriesValue dirichlet_series(std::span<const cplx> coeff, cplx s)
{
    double sup = 0.0;
    for (const cplx& c : coeff)
        sup = std::max(sup, std::abs(c));
    return dirichlet_series([&](std::size_t n) { return coeff[n - 1]; }, s, coeff.size(), sup);
}

// Li_s(zeta_r) truncated at N.
inline SeriesValue polylog_root_of_unity(const QZ& r, cplx s, std::size_t n_terms, std::int64_t twist = 1)
{
    check_galois_twist(r, twist);
    const auto q = static_cast<std::size_t>(r.den());
    std::vector<cplx> roots;
    if (q <= std::max<std::size_t>(n_terms, 1)) {
        roots.reserve(q);
        for (std::size_t k = 0; k < q; ++k)
            roots.push_back(root_of_unity_power(r, k, twist));
        return dirichlet_series([&](std::size_t n) { return roots[n % q]; }, s, n_terms, 1.0);
    }
    return dirichlet_series([&](std::size_t n) { return root_of_unity_power(r, n, twist); }, s, n_terms, 1.0);
}

// b_n = Sum_{d|n} mu(n/d) a_d for n <= a.size(); a[k] holds a_{k+1}.
template <class T>
std::vector<T> mobius_invert(std::span<const T> a, const ArithTable& table)
{
    const std::size_t n_max = a.size();
    if (n_max > table.limit())
        throw capacity_error("mobius_invert: length exceeds table limit");
    const auto mu = table.mobius_values();
    std::vector<T> b(n_max, T{});
    for (std::size_t d = 1; d <= n_max; ++d) {
        const T& ad = a[d - 1];
        for (std::size_t k = 1, n = d; n <= n_max; ++k, n += d) {
            if (mu[k] > 0)
                b[n - 1] += ad;
            else if (mu[k] < 0)
                b[n - 1] -= ad;
        }
    }
    return b;
}

// a_n = Sum_{d|n} b_d, the inverse of mobius_invert.
template <class T>
std::vector<T> dirichlet_convolve_one(std::span<const T> b)
{
    const std::size_t n_max = b.size();
    std::vector<T> a(n_max, T{});
    for (std::size_t d = 1; d <= n_max; ++d)
        for (std::size_t n = d; n <= n_max; n += d)
            a[n - 1] += b[d - 1];
    return a;
}

// Bound on Sum_{n>N} tau(n) n^{-sigma} through the hyperbola split
// Sum_{de>N} (de)^{-sigma}. Used for coefficients dominated by the
// divisor function, such as Mobius-inverted root-of-unity sequences.
inline double divisor_tail_bound(double sigma, std::size_t n_terms)
{
    if (!(sigma > 1.0))
        throw domain_error("divisor_tail_bound: sigma must exceed 1");
    const double n = static_cast<double>(n_terms);
    compensated_sum acc;
    for (std::size_t d = 1; d <= n_terms; ++d) {
        const double m = static_cast<double>(n_terms / d);
        acc.add(std::pow(static_cast<double>(d), -sigma) * std::pow(m, 1.0 - sigma) / (sigma - 1.0));
    }
    const double zeta_upper = 1.0 + 1.0 / (sigma - 1.0);
    return acc.value() + zeta_upper * std::pow(n, 1.0 - sigma) / (sigma - 1.0);
}

} // namespace ncqsm
