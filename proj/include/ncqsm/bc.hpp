#pragma once

// The Bost-Connes system on l2({1..N}): group-ring and monomial algebra,
// the truncated representation, Gibbs and KMS functionals, the Liouville
// sign and the twisted commutator certificate.

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "arith.hpp"
#include "errors.hpp"
#include "linop.hpp"
#include "rational.hpp"
#include "series.hpp"

namespace ncqsm {

// Finite combination Sum c_r e(r) in C[Q/Z].
class GroupRingElement {
public:
    GroupRingElement() = default;

    static GroupRingElement unit() { return e(QZ(0, 1)); }

    static GroupRingElement e(const QZ& r, cplx c = 1.0)
    {
        GroupRingElement x;
        x.add(r, c);
        return x;
    }

    void add(const QZ& r, cplx c)
    {
        if (c == cplx{})
            return;
        auto [it, inserted] = terms_.try_emplace(r, c);
        if (!inserted) {
            it->second += c;
            if (it->second == cplx{})
                terms_.erase(it);
        }
    }

    const std::map<QZ, cplx>& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }

    double coeff_abs_sum() const
    {
        double s = 0.0;
        for (const auto& [r, c] : terms_)
            s += std::abs(c);
        return s;
    }

    // pi_alpha(x) on e_j: Sum c_r zeta_r^{a j}.
    cplx evaluate(std::uint64_t j, std::int64_t twist = 1) const
    {
        cplx v = 0.0;
        for (const auto& [r, c] : terms_)
            v += c * root_of_unity_power(r, j, twist);
        return v;
    }

    GroupRingElement scaled(cplx s) const
    {
        GroupRingElement out;
        for (const auto& [r, c] : terms_)
            out.add(r, c * s);
        return out;
    }

    GroupRingElement adjoint() const
    {
        GroupRingElement out;
        for (const auto& [r, c] : terms_)
            out.add(-r, std::conj(c));
        return out;
    }

    // sigma_n(e(r)) = e(n r)
    GroupRingElement sigma(std::uint64_t n) const
    {
        GroupRingElement out;
        for (const auto& [r, c] : terms_)
            out.add(r.times(static_cast<std::int64_t>(n)), c);
        return out;
    }

    // rho_n(e(r)) = (1/n) Sum_{n s = r} e(s)
    GroupRingElement rho(std::uint64_t n) const
    {
        GroupRingElement out;
        const double w = 1.0 / static_cast<double>(n);
        for (const auto& [r, c] : terms_)
            for (std::uint64_t k = 0; k < n; ++k)
                out.add(r.divided(static_cast<std::int64_t>(n), static_cast<std::int64_t>(k)), c * w);
        return out;
    }

    friend GroupRingElement operator*(const GroupRingElement& a, const GroupRingElement& b)
    {
        GroupRingElement out;
        for (const auto& [r, c] : a.terms_)
            for (const auto& [s, d] : b.terms_)
                out.add(r + s, c * d);
        return out;
    }

    friend GroupRingElement operator+(const GroupRingElement& a, const GroupRingElement& b)
    {
        GroupRingElement out = a;
        for (const auto& [s, d] : b.terms_)
            out.add(s, d);
        return out;
    }

    std::string str() const
    {
        if (terms_.empty())
            return "0";
        std::string s;
        for (const auto& [r, c] : terms_) {
            if (!s.empty())
                s += " + ";
            s += "(" + std::to_string(c.real()) + (c.imag() < 0 ? "" : "+") + std::to_string(c.imag()) + "i)e(" +
                 r.str() + ")";
        }
        return s;
    }

private:
    std::map<QZ, cplx> terms_;
};

// x mu_n mu_m^*
struct BCMonomial {
    GroupRingElement x = GroupRingElement::unit();
    std::uint64_t n = 1;
    std::uint64_t m = 1;

    static BCMonomial group(const GroupRingElement& x) { return {x, 1, 1}; }
    static BCMonomial e(const QZ& r) { return {GroupRingElement::e(r), 1, 1}; }
    static BCMonomial mu(std::uint64_t n) { return {GroupRingElement::unit(), n, 1}; }
    static BCMonomial mu_star(std::uint64_t m) { return {GroupRingElement::unit(), 1, m}; }

    std::string str() const
    {
        return x.str() + " mu_" + std::to_string(n) + " mu*_" + std::to_string(m);
    }
};

inline void validate(const BCMonomial& a)
{
    if (a.n == 0 || a.m == 0)
        throw domain_error("BCMonomial: mu indices must be positive");
}

// (x mu_a mu_b^*)(y mu_c mu_d^*) = x rho_a(sigma_b(y)) mu_{a c'} mu_{d b'}^*
// with g = gcd(b, c), b = g b', c = g c'.
inline BCMonomial operator*(const BCMonomial& p, const BCMonomial& q)
{
    validate(p);
    validate(q);
    const std::uint64_t g = std::gcd(p.m, q.n);
    const std::uint64_t bp = p.m / g;
    const std::uint64_t cp = q.n / g;
    BCMonomial out;
    out.x = p.x * q.x.sigma(p.m).rho(p.n);
    out.n = p.n * cp;
    out.m = q.m * bp;
    return out;
}

inline BCMonomial adjoint(const BCMonomial& a)
{
    // (x mu_n mu_m^*)^* = mu_m mu_n^* x^* = rho_m(sigma_n(x^*)) mu_m mu_n^*
    BCMonomial out;
    out.x = a.x.adjoint().sigma(a.n).rho(a.m);
    out.n = a.m;
    out.m = a.n;
    return out;
}

// sigma_{i beta}(x mu_n mu_m^*) = n^{-beta} m^{beta} x mu_n mu_m^*
inline BCMonomial sigma_i_beta(const BCMonomial& a, double beta)
{
    BCMonomial out = a;
    out.x = a.x.scaled(std::pow(static_cast<double>(a.n), -beta) * std::pow(static_cast<double>(a.m), beta));
    return out;
}

inline constexpr double default_clip_threshold = 0.9;
inline constexpr double default_kms_tolerance = 1e-6;

class BCRepresentation {
public:
    explicit BCRepresentation(std::size_t n_max, std::int64_t twist = 1, bool strict = false,
                              double clip_threshold = default_clip_threshold)
        : n_(n_max), twist_(twist), strict_(strict), clip_threshold_(clip_threshold),
          table_(std::make_shared<const ArithTable>(n_max))
    {
    }

    std::size_t size() const noexcept { return n_; }
    std::int64_t twist() const noexcept { return twist_; }
    bool strict() const noexcept { return strict_; }
    double clip_threshold() const noexcept { return clip_threshold_; }
    const ArithTable& table() const noexcept { return *table_; }
    std::shared_ptr<const ArithTable> table_ptr() const noexcept { return table_; }
    std::string tag() const { return "bc:l2(1.." + std::to_string(n_) + ")"; }

private:
    std::size_t n_;
    std::int64_t twist_;
    bool strict_;
    double clip_threshold_;
    std::shared_ptr<const ArithTable> table_;
};

// #{l <= N : m | l, n l / m > N} / N
inline double clipped_fraction(const BCMonomial& a, std::size_t n_max)
{
    validate(a);
    const std::uint64_t k_max = n_max / a.m;
    const std::uint64_t kept = std::min<std::uint64_t>(k_max, n_max / a.n);
    return static_cast<double>(k_max - kept) / static_cast<double>(n_max);
}

inline void check_twist(const GroupRingElement& x, std::int64_t twist)
{
    for (const auto& [r, c] : x.terms())
        check_galois_twist(r, twist);
}

// pi_alpha(x) mu_n mu_m^*: e_l -> x(n l / m) e_{n l / m} when m | l and n l / m <= N.
inline TruncatedOperator represent(const BCMonomial& a, const BCRepresentation& rep)
{
    validate(a);
    check_twist(a.x, rep.twist());
    const std::size_t n_max = rep.size();
    const double clipped = clipped_fraction(a, n_max);
    if (rep.strict() && clipped > rep.clip_threshold())
        throw truncation_error("represent: clipped fraction " + std::to_string(clipped) + " exceeds threshold " +
                               std::to_string(rep.clip_threshold()) + " for " + a.str());
    const bool diagonal = a.n == a.m;
    std::vector<std::size_t> targets(n_max, no_target);
    std::vector<cplx> scalars(n_max, 0.0);
    for (std::uint64_t k = 1; k * a.m <= n_max; ++k) {
        const std::uint64_t l = k * a.m;
        const std::uint64_t t = k * a.n;
        if (t > n_max)
            break;
        targets[l - 1] = t - 1;
        scalars[l - 1] = a.x.evaluate(t, rep.twist());
    }
    if (diagonal)
        return TruncatedOperator::diagonal(std::move(scalars), rep.tag());
    return TruncatedOperator::monomial(std::move(targets), std::move(scalars), rep.tag());
}

// diag(log n)
inline TruncatedOperator hamiltonian(const BCRepresentation& rep)
{
    std::vector<cplx> v(rep.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = std::log(static_cast<double>(k + 1));
    return TruncatedOperator::diagonal(std::move(v), rep.tag());
}

// F = diag(lambda(n))
inline TruncatedOperator liouville_sign(const BCRepresentation& rep)
{
    const auto la = rep.table().liouville_values();
    std::vector<cplx> v(rep.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = static_cast<double>(la[k + 1]);
    return TruncatedOperator::diagonal(std::move(v), rep.tag());
}

// sigma(x mu_n mu_m^*) = lambda(n) lambda(m) x mu_n mu_m^*
inline BCMonomial sigma_automorphism(const BCMonomial& a)
{
    validate(a);
    auto la = [](std::uint64_t n) {
        int omega = 0;
        for (std::uint64_t p = 2; p * p <= n; ++p)
            while (n % p == 0) {
                n /= p;
                ++omega;
            }
        if (n > 1)
            ++omega;
        return omega % 2 == 0 ? 1.0 : -1.0;
    };
    BCMonomial out = a;
    out.x = a.x.scaled(la(a.n) * la(a.m));
    return out;
}

namespace detail {

inline void require_above_one(double beta, const char* op)
{
    if (!(beta > 1.0))
        throw domain_error(std::string(op) + ": beta = " + std::to_string(beta) +
                           " must exceed 1; zeta(beta) diverges at and below the critical temperature");
}

inline std::vector<cplx> boltzmann_weights(std::size_t n_max, double beta)
{
    std::vector<cplx> w(n_max);
    for (std::size_t k = 0; k < n_max; ++k)
        w[k] = std::pow(static_cast<double>(k + 1), -beta);
    return w;
}

// Tr(A e^{-beta H}) with the integral tail for diagonal entries bounded by sup.
inline SeriesValue boltzmann_trace(const TruncatedOperator& a, double beta, double sup)
{
    const auto w = boltzmann_weights(a.dim(), beta);
    SeriesValue v = weighted_trace(a, w);
    v.tail_bound += sup * std::pow(static_cast<double>(a.dim()), 1.0 - beta) / (beta - 1.0) +
                    rounding_allowance(std::abs(v.value) + sup, beta, a.dim());
    return v;
}

} // namespace detail

// Tr(e^{-beta H}) = zeta(beta) truncated.
inline SeriesValue bc_partition(double beta, const BCRepresentation& rep)
{
    detail::require_above_one(beta, "bc_partition");
    return dirichlet_series(rep.table(), ArithCoeff::one, beta, rep.size());
}

// Tr(F e^{-beta H}) = Sum lambda(n) n^{-beta}.
inline SeriesValue bc_eta(double beta, const BCRepresentation& rep)
{
    detail::require_above_one(beta, "bc_eta");
    return detail::boltzmann_trace(liouville_sign(rep), beta, 1.0);
}

// Tr(pi(a) e^{-beta H}) / Tr(e^{-beta H}).
inline SeriesValue gibbs_state(const BCMonomial& a, double beta, const BCRepresentation& rep)
{
    detail::require_above_one(beta, "gibbs_state");
    const auto op = represent(a, rep);
    const SeriesValue num = detail::boltzmann_trace(op, beta, a.x.coeff_abs_sum());
    return series_ratio(num, bc_partition(beta, rep));
}

// Sum b_n n^{-beta} with b_n = Sum_{d|n} mu(n/d) zeta_r^d; already normalized.
inline SeriesValue gibbs_state_mobius_form(const QZ& r, double beta, const BCRepresentation& rep)
{
    detail::require_above_one(beta, "gibbs_state_mobius_form");
    check_galois_twist(r, rep.twist());
    const std::size_t n_max = rep.size();
    std::vector<cplx> a(n_max);
    for (std::size_t k = 0; k < n_max; ++k)
        a[k] = root_of_unity_power(r, k + 1, rep.twist());
    const auto b = mobius_invert<cplx>(a, rep.table());
    SeriesValue v = dirichlet_series(std::span<const cplx>(b), beta);
    double abs_sum = 0.0;
    for (std::size_t k = 0; k < n_max; ++k)
        abs_sum += std::abs(b[k]) * std::pow(static_cast<double>(k + 1), -beta);
    v.tail_bound = divisor_tail_bound(beta, n_max) + rounding_allowance(abs_sum, beta, n_max);
    return v;
}

struct KmsReport {
    double residual = 0.0;
    cplx lhs{};
    cplx rhs{};
    double tail_bound = 0.0;
    double clipped_mass = 0.0;
    double tolerance = default_kms_tolerance;
    bool pass = false;
};

// |phi(ab) - phi(b sigma_{i beta}(a))| for the truncated Gibbs state.
inline KmsReport kms_residual(const BCMonomial& a, const BCMonomial& b, double beta, const BCRepresentation& rep,
                              double tolerance = default_kms_tolerance)
{
    detail::require_above_one(beta, "kms_residual");
    const auto pa = represent(a, rep);
    const auto pb = represent(b, rep);
    const auto psa = represent(sigma_i_beta(a, beta), rep);
    const SeriesValue z = bc_partition(beta, rep);
    const double sup = a.x.coeff_abs_sum() * b.x.coeff_abs_sum();
    const auto lhs = series_ratio(detail::boltzmann_trace(compose(pa, pb), beta, sup), z);
    const double scale_a = std::pow(static_cast<double>(a.n), -beta) * std::pow(static_cast<double>(a.m), beta);
    const auto rhs = series_ratio(detail::boltzmann_trace(compose(pb, psa), beta, sup * scale_a), z);
    KmsReport r;
    r.lhs = lhs.value;
    r.rhs = rhs.value;
    r.residual = std::abs(lhs.value - rhs.value);
    r.tail_bound = lhs.tail_bound + rhs.tail_bound;
    r.clipped_mass = std::max(clipped_fraction(a, rep.size()), clipped_fraction(b, rep.size()));
    r.tolerance = tolerance * (1.0 + r.clipped_mass);
    r.pass = r.residual <= r.tolerance;
    return r;
}

// |Tr(F ab e^{-beta H}) - Tr(F b sigma_{i beta}(sigma(a)) e^{-beta H})|
inline KmsReport twisted_kms_residual(const BCMonomial& a, const BCMonomial& b, double beta,
                                      const BCRepresentation& rep, double tolerance = default_kms_tolerance)
{
    detail::require_above_one(beta, "twisted_kms_residual");
    const auto f = liouville_sign(rep);
    const auto pa = represent(a, rep);
    const auto pb = represent(b, rep);
    const auto pssa = represent(sigma_i_beta(sigma_automorphism(a), beta), rep);
    const double sup = a.x.coeff_abs_sum() * b.x.coeff_abs_sum();
    const double scale_a = std::pow(static_cast<double>(a.n), -beta) * std::pow(static_cast<double>(a.m), beta);
    const auto lhs = detail::boltzmann_trace(compose(f, compose(pa, pb)), beta, sup);
    const auto rhs = detail::boltzmann_trace(compose(f, compose(pb, pssa)), beta, sup * scale_a);
    KmsReport r;
    r.lhs = lhs.value;
    r.rhs = rhs.value;
    r.residual = std::abs(lhs.value - rhs.value);
    r.tail_bound = lhs.tail_bound + rhs.tail_bound;
    r.clipped_mass = std::max(clipped_fraction(a, rep.size()), clipped_fraction(b, rep.size()));
    r.tolerance = tolerance * (1.0 + r.clipped_mass);
    r.pass = r.residual <= r.tolerance;
    return r;
}

struct CommutatorCertificate {
    std::uint64_t n = 0;
    int liouville_n = 1;
    std::vector<std::size_t> sizes;
    std::vector<double> twisted;
    std::vector<double> untwisted;
    std::vector<double> lipschitz;

    bool twisted_constant(double expected, double tol) const
    {
        for (double v : twisted)
            if (std::abs(v - expected) > tol)
                return false;
        return !twisted.empty();
    }
};

inline bool strictly_increasing(const std::vector<double>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1]))
            return false;
    return v.size() >= 2;
}

// D = F diag(log l): norms of D mu_n - sigma(mu_n) D, [D, mu_n] and |D| mu_n - sigma(mu_n) |D|.
inline CommutatorCertificate twisted_commutator_certificate(std::uint64_t n, const std::vector<std::size_t>& sizes)
{
    if (n < 2)
        throw domain_error("twisted_commutator_certificate: n must be >= 2");
    CommutatorCertificate cert;
    cert.n = n;
    cert.sizes = sizes;
    for (std::size_t size : sizes) {
        if (size < n)
            throw domain_error("twisted_commutator_certificate: truncation smaller than n");
        const BCRepresentation rep(size);
        cert.liouville_n = rep.table().liouville(n);
        const auto h = hamiltonian(rep);
        const auto d = compose(liouville_sign(rep), h);
        const auto mu = represent(BCMonomial::mu(n), rep);
        const auto smu = represent(sigma_automorphism(BCMonomial::mu(n)), rep);
        cert.twisted.push_back(op_norm(twisted_commutator(d, mu, smu)).value);
        cert.untwisted.push_back(op_norm(commutator(d, mu)).value);
        cert.lipschitz.push_back(op_norm(twisted_commutator(h, mu, smu)).value);
    }
    return cert;
}

} // namespace ncqsm
