#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

#include "errors.hpp"

namespace ncqsm {

// An element r = p/q of Q/Z kept in lowest terms with 0 <= p < q.
class QZ {
public:
    constexpr QZ() = default;

    QZ(std::int64_t p, std::int64_t q)
    {
        if (q <= 0)
            throw domain_error("QZ: denominator must be positive");
        p %= q;
        if (p < 0)
            p += q;
        const std::int64_t g = std::gcd(p, q);
        p_ = p / g;
        q_ = q / g;
    }

    // Accepts "p/q", "p", or "0".
    static QZ parse(std::string_view text)
    {
        auto to_int = [](std::string_view s) {
            std::int64_t v = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size())
                throw std::invalid_argument("QZ: malformed rational '" + std::string(s) + "'");
            return v;
        };
        const auto slash = text.find('/');
        if (slash == std::string_view::npos)
            return QZ(to_int(text), 1);
        return QZ(to_int(text.substr(0, slash)), to_int(text.substr(slash + 1)));
    }

    constexpr std::int64_t num() const noexcept { return p_; }
    constexpr std::int64_t den() const noexcept { return q_; }
    constexpr bool is_zero() const noexcept { return p_ == 0; }

    double to_double() const noexcept { return static_cast<double>(p_) / static_cast<double>(q_); }

    std::string str() const { return std::to_string(p_) + "/" + std::to_string(q_); }

    friend QZ operator+(QZ a, QZ b)
    {
        const std::int64_t l = std::lcm(a.q_, b.q_);
        return QZ(a.p_ * (l / a.q_) + b.p_ * (l / b.q_), l);
    }
    friend QZ operator-(QZ a) { return QZ(-a.p_, a.q_); }

    // sigma_n(e(r)) = e(n r)
    QZ times(std::int64_t n) const
    {
        return QZ(static_cast<std::int64_t>((static_cast<__int128>(p_) * n) % q_), q_);
    }

    // All s with n s = r in Q/Z: s = (r + k)/n, k = 0..n-1.
    QZ divided(std::int64_t n, std::int64_t k) const { return QZ(p_ + k * q_, q_ * n); }

    friend constexpr bool operator==(const QZ&, const QZ&) = default;
    friend constexpr auto operator<=>(const QZ& a, const QZ& b)
    {
        // Order by value, then by denominator (values equal iff both equal in lowest terms).
        const __int128 lhs = static_cast<__int128>(a.p_) * b.q_;
        const __int128 rhs = static_cast<__int128>(b.p_) * a.q_;
        if (lhs < rhs)
            return std::strong_ordering::less;
        if (lhs > rhs)
            return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

private:
    std::int64_t p_ = 0;
    std::int64_t q_ = 1;
};

} // namespace ncqsm
