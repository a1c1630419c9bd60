#pragma once

// The spectral triple on the boundary of the rank-g free group tree:
// reduced words, cylinder measure, the filtration by word length, the
// Gram-Schmidt eigenbasis of |D|, zeta functions and the derived QSM.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <Eigen/Dense>
#include <Eigen/LU>

#include "errors.hpp"
#include "linop.hpp"
#include "series.hpp"
#include "summation.hpp"

namespace ncqsm {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

// Letters 0..2g-1: 2i is a_{i+1}, 2i+1 its inverse. Numeric order is the
// lexicographic order a_1 < a_1^{-1} < a_2 < ...
using Letter = std::uint8_t;
using Word = std::vector<Letter>;

inline constexpr unsigned max_rank = 26;

inline Letter inverse_letter(Letter x) { return static_cast<Letter>(x ^ 1u); }

inline void check_rank(unsigned g)
{
    if (g < 2)
        throw domain_error("free group rank must be >= 2, got " + std::to_string(g));
    if (g > max_rank)
        throw capacity_error("free group rank " + std::to_string(g) + " exceeds " + std::to_string(max_rank));
}

inline bool is_reduced(const Word& w, unsigned g)
{
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] >= 2 * g)
            return false;
        if (i > 0 && w[i] == inverse_letter(w[i - 1]))
            return false;
    }
    return true;
}

inline void check_word(const Word& w, unsigned g)
{
    if (!is_reduced(w, g))
        throw domain_error("word is not reduced over the rank-" + std::to_string(g) + " alphabet");
}

// "a" = a_1, "A" = a_1^{-1}, "b" = a_2, ...; "1" or "" is the identity.
inline Word parse_word(const std::string& text, unsigned g)
{
    check_rank(g);
    Word w;
    if (text == "1")
        return w;
    for (char c : text) {
        Letter x;
        if (c >= 'a' && c <= 'z')
            x = static_cast<Letter>(2 * (c - 'a'));
        else if (c >= 'A' && c <= 'Z')
            x = static_cast<Letter>(2 * (c - 'A') + 1);
        else
            throw std::invalid_argument("parse_word: unexpected character '" + std::string(1, c) + "'");
        if (x >= 2 * g)
            throw domain_error("parse_word: letter '" + std::string(1, c) + "' outside rank " + std::to_string(g));
        w.push_back(x);
    }
    check_word(w, g);
    return w;
}

inline std::string word_string(const Word& w)
{
    if (w.empty())
        return "1";
    std::string s;
    for (Letter x : w)
        s += static_cast<char>((x % 2 == 0 ? 'a' : 'A') + x / 2);
    return s;
}

inline Word word_inverse(const Word& w)
{
    Word out(w.rbegin(), w.rend());
    for (auto& x : out)
        x = inverse_letter(x);
    return out;
}

// Free reduction of the concatenation.
inline Word word_product(const Word& a, const Word& b)
{
    Word out = a;
    for (Letter x : b) {
        if (!out.empty() && out.back() == inverse_letter(x))
            out.pop_back();
        else
            out.push_back(x);
    }
    return out;
}

inline std::size_t common_prefix(const Word& a, const Word& b)
{
    std::size_t k = 0;
    while (k < a.size() && k < b.size() && a[k] == b[k])
        ++k;
    return k;
}

// d_n = number of reduced words of length n.
inline std::uint64_t word_count(unsigned g, unsigned n)
{
    if (n == 0)
        return 1;
    std::uint64_t d = 2 * g;
    for (unsigned i = 1; i < n; ++i) {
        if (d > std::numeric_limits<std::uint64_t>::max() / (2 * g - 1))
            throw capacity_error("word_count: d_n overflows 64 bits");
        d *= 2 * g - 1;
    }
    return d;
}

// Position of w among reduced words of length |w| in lexicographic order.
inline std::uint64_t word_index(const Word& w, unsigned g)
{
    check_word(w, g);
    if (w.empty())
        return 0;
    const std::uint64_t q = 2 * g - 1;
    std::uint64_t idx = w[0];
    for (std::size_t i = 1; i < w.size(); ++i) {
        const Letter forbidden = inverse_letter(w[i - 1]);
        idx = idx * q + (w[i] < forbidden ? w[i] : w[i] - 1u);
    }
    return idx;
}

inline Word word_at(unsigned g, unsigned n, std::uint64_t idx)
{
    if (n == 0)
        return {};
    const std::uint64_t q = 2 * g - 1;
    std::vector<std::uint64_t> digits(n);
    for (unsigned i = n; i-- > 1;) {
        digits[i] = idx % q;
        idx /= q;
    }
    digits[0] = idx;
    if (idx >= 2 * g)
        throw domain_error("word_at: index out of range");
    Word w(n);
    w[0] = static_cast<Letter>(digits[0]);
    for (unsigned i = 1; i < n; ++i) {
        const Letter forbidden = inverse_letter(w[i - 1]);
        w[i] = static_cast<Letter>(digits[i] < forbidden ? digits[i] : digits[i] + 1);
    }
    return w;
}

// All reduced words of length n, lexicographic, by depth-first extension.
inline std::vector<Word> enumerate_words(unsigned g, unsigned n)
{
    check_rank(g);
    std::vector<Word> out;
    Word w;
    auto rec = [&](auto&& self) -> void {
        if (w.size() == n) {
            out.push_back(w);
            return;
        }
        for (Letter x = 0; x < 2 * g; ++x) {
            if (!w.empty() && x == inverse_letter(w.back()))
                continue;
            w.push_back(x);
            self(self);
            w.pop_back();
        }
    };
    rec(rec);
    return out;
}

// mu(Lambda(w)) = (1/2g) (2g-1)^{-(|w|-1)}; the empty word has mass 1.
inline BigRational cylinder_measure(const Word& w, unsigned g)
{
    check_rank(g);
    check_word(w, g);
    if (w.empty())
        return BigRational(1);
    BigInt den = 2 * g;
    for (std::size_t i = 1; i < w.size(); ++i)
        den *= 2 * g - 1;
    return BigRational(BigInt(1), den);
}

struct Filtration {
    unsigned g = 2;
    unsigned depth = 0;
    std::vector<BigInt> dims;    // d_0..d_M
    std::vector<BigInt> mults;   // m_0 = 1, m_n = d_n - d_{n-1}
    std::vector<BigInt> lambdas; // lambda_n = d_n^3

    double log_dim(unsigned n) const
    {
        if (n == 0)
            return 0.0;
        return std::log(2.0 * g) + (n - 1) * std::log(2.0 * g - 1.0);
    }
};

inline constexpr unsigned enumeration_check_depth = 6;
inline constexpr std::uint64_t enumeration_check_words = 1'000'000;

inline Filtration build_filtration(unsigned g, unsigned depth)
{
    check_rank(g);
    if (depth < 1)
        throw domain_error("build_filtration: depth must be >= 1");
    Filtration f;
    f.g = g;
    f.depth = depth;
    BigInt d = 1;
    for (unsigned n = 0; n <= depth; ++n) {
        if (n == 1)
            d = 2 * g;
        else if (n > 1)
            d *= 2 * g - 1;
        f.dims.push_back(d);
        f.mults.push_back(n == 0 ? BigInt(1) : d - f.dims[n - 1]);
        f.lambdas.push_back(d * d * d);
    }
    if (!std::isfinite(f.lambdas.back().convert_to<double>()))
        throw capacity_error("build_filtration: lambda_M = d_M^3 is not representable as a double");
    const unsigned check = std::min(depth, enumeration_check_depth);
    for (unsigned n = 0; n <= check && word_count(g, n) <= enumeration_check_words; ++n)
        if (BigInt(enumerate_words(g, n).size()) != f.dims[n])
            throw structural_error("build_filtration: enumeration disagrees with closed form at n = " +
                                   std::to_string(n));
    return f;
}

// Locally constant function on the boundary at depth n; values indexed by
// word_index over reduced words of length n (a single value at depth 0).
struct BoundaryFunction {
    unsigned g = 2;
    unsigned depth = 0;
    std::vector<cplx> values;

    static BoundaryFunction constant(unsigned g, cplx c = 1.0) { return {g, 0, {c}}; }

    static BoundaryFunction indicator(const Word& w, unsigned g)
    {
        check_word(w, g);
        BoundaryFunction f{g, static_cast<unsigned>(w.size()),
                           std::vector<cplx>(word_count(g, static_cast<unsigned>(w.size())), 0.0)};
        f.values[word_index(w, g)] = 1.0;
        return f;
    }
};

inline std::uint64_t descendants(unsigned g, unsigned from, unsigned to)
{
    if (to < from)
        throw domain_error("descendants: target depth below source depth");
    if (from == 0)
        return word_count(g, to);
    std::uint64_t c = 1;
    for (unsigned i = from; i < to; ++i)
        c *= 2 * g - 1;
    return c;
}

// The same function seen at a finer depth.
inline BoundaryFunction refine(const BoundaryFunction& f, unsigned depth)
{
    if (depth < f.depth)
        throw domain_error("refine: cannot refine to a coarser depth");
    const std::uint64_t block = descendants(f.g, f.depth, depth);
    BoundaryFunction out{f.g, depth, std::vector<cplx>(word_count(f.g, depth))};
    for (std::size_t i = 0; i < f.values.size(); ++i)
        std::fill_n(out.values.begin() + static_cast<std::ptrdiff_t>(i * block), block, f.values[i]);
    return out;
}

// Conditional expectation onto depth m (m <= f.depth): cylinder averages.
inline BoundaryFunction expectation(const BoundaryFunction& f, unsigned m)
{
    if (m > f.depth)
        return f;
    const std::uint64_t block = descendants(f.g, m, f.depth);
    BoundaryFunction out{f.g, m, std::vector<cplx>(word_count(f.g, m))};
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        compensated_complex_sum s;
        for (std::uint64_t j = 0; j < block; ++j)
            s.add(f.values[i * block + j]);
        out.values[i] = s.value() / static_cast<double>(block);
    }
    return out;
}

inline cplx inner_product(const BoundaryFunction& a, const BoundaryFunction& b)
{
    const unsigned depth = std::max(a.depth, b.depth);
    const auto ra = refine(a, depth);
    const auto rb = refine(b, depth);
    compensated_complex_sum s;
    for (std::size_t i = 0; i < ra.values.size(); ++i)
        s.add(std::conj(ra.values[i]) * rb.values[i]);
    return s.value() / static_cast<double>(ra.values.size());
}

inline double norm(const BoundaryFunction& f) { return std::sqrt(std::abs(inner_product(f, f))); }

inline BoundaryFunction pointwise_product(const BoundaryFunction& a, const BoundaryFunction& b)
{
    const unsigned depth = std::max(a.depth, b.depth);
    auto out = refine(a, depth);
    const auto rb = refine(b, depth);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] *= rb.values[i];
    return out;
}

inline BoundaryFunction combine(const BoundaryFunction& a, const BoundaryFunction& b, cplx cb)
{
    const unsigned depth = std::max(a.depth, b.depth);
    auto out = refine(a, depth);
    const auto rb = refine(b, depth);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] += cb * rb.values[i];
    return out;
}

inline double max_abs(const BoundaryFunction& f)
{
    double m = 0.0;
    for (const cplx& v : f.values)
        m = std::max(m, std::abs(v));
    return m;
}

// The level-n orthonormal vectors live inside one parent cylinder each and
// share the same profile over the k_n children (the measure is uniform).
struct LevelBasis {
    unsigned g = 2;
    unsigned level = 1;
    std::size_t children = 0;              // k_n
    std::vector<std::vector<double>> local; // k_n - 1 profiles of length k_n
    std::uint64_t parents = 0;             // d_{n-1}

    std::size_t size() const { return static_cast<std::size_t>(parents) * local.size(); }
};

// Gram-Schmidt of 1_w (w of length n, lexicographic) against H_{n-1} and
// the vectors already produced.
inline LevelBasis gram_schmidt_local(unsigned g, unsigned n)
{
    check_rank(g);
    if (n < 1)
        throw domain_error("gram_schmidt_basis: level must be >= 1");
    LevelBasis b;
    b.g = g;
    b.level = n;
    b.children = n == 1 ? 2 * g : 2 * g - 1;
    b.parents = word_count(g, n - 1);
    const std::size_t k = b.children;
    // Inner products inside one parent block carry the common factor 1/d_n;
    // vectors are normalized in the full measure afterwards.
    const double dn = static_cast<double>(word_count(g, n));
    std::vector<std::vector<double>> done;
    done.emplace_back(k, 1.0 / std::sqrt(static_cast<double>(k)));
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> r(k, 0.0);
        r[j] = 1.0;
        for (const auto& u : done) {
            double c = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                c += u[i] * r[i];
            for (std::size_t i = 0; i < k; ++i)
                r[i] -= c * u[i];
        }
        double nr = 0.0;
        for (double x : r)
            nr += x * x;
        nr = std::sqrt(nr);
        if (nr < 1e-12)
            continue;
        for (double& x : r)
            x /= nr;
        done.push_back(r);
    }
    for (std::size_t i = 1; i < done.size(); ++i) {
        auto v = done[i];
        for (double& x : v)
            x *= std::sqrt(dn);
        b.local.push_back(std::move(v));
    }
    return b;
}

// Element i of I_n as a depth-n function (parent-major order).
inline BoundaryFunction basis_function(const LevelBasis& b, std::size_t i)
{
    const std::size_t per = b.local.size();
    const std::uint64_t parent = i / per;
    const auto& prof = b.local[i % per];
    BoundaryFunction f{b.g, b.level, std::vector<cplx>(word_count(b.g, b.level), 0.0)};
    for (std::size_t j = 0; j < b.children; ++j)
        f.values[parent * b.children + j] = prof[j];
    return f;
}

inline std::vector<BoundaryFunction> gram_schmidt_basis(unsigned g, unsigned n)
{
    const auto b = gram_schmidt_local(g, n);
    if (b.size() * word_count(g, n) > std::uint64_t(1) << 26)
        throw capacity_error("gram_schmidt_basis: expanded basis too large; use gram_schmidt_local");
    std::vector<BoundaryFunction> out;
    out.reserve(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
        out.push_back(basis_function(b, i));
    return out;
}

// Orthonormal eigenbasis of |D| on H_M in normalized cylinder coordinates
// (entries sqrt(mu(w)) f(w)); columns: constants, then I_1, ..., I_M.
struct Eigenbasis {
    unsigned g = 2;
    unsigned depth = 0;
    DenseMatrix vectors;
    std::vector<unsigned> levels;
    std::vector<double> lambdas;
};

inline Eigenbasis dense_eigenbasis(unsigned g, unsigned depth)
{
    const std::uint64_t d = word_count(g, depth);
    if (d > dense_cap)
        throw capacity_error("dense_eigenbasis: d_M = " + std::to_string(d) + " exceeds the dense cap");
    Eigenbasis e;
    e.g = g;
    e.depth = depth;
    const auto n = static_cast<Eigen::Index>(d);
    e.vectors = DenseMatrix::Zero(n, n);
    const double w = 1.0 / std::sqrt(static_cast<double>(d));
    Eigen::Index col = 0;
    auto put = [&](const BoundaryFunction& f, unsigned level) {
        const auto r = refine(f, depth);
        for (Eigen::Index i = 0; i < n; ++i)
            e.vectors(i, col) = w * r.values[static_cast<std::size_t>(i)];
        e.levels.push_back(level);
        const double dl = static_cast<double>(word_count(g, level));
        e.lambdas.push_back(dl * dl * dl);
        ++col;
    };
    put(BoundaryFunction::constant(g), 0);
    for (unsigned level = 1; level <= depth; ++level)
        for (const auto& f : gram_schmidt_basis(g, level))
            put(f, level);
    return e;
}

// Q_n in normalized cylinder coordinates.
inline DenseMatrix level_projection(const Eigenbasis& e, unsigned level)
{
    const auto n = e.vectors.rows();
    DenseMatrix q = DenseMatrix::Zero(n, n);
    for (Eigen::Index c = 0; c < e.vectors.cols(); ++c)
        if (e.levels[static_cast<std::size_t>(c)] == level)
            q += e.vectors.col(c) * e.vectors.col(c).adjoint();
    return q;
}

// Sum_{n=0}^{M} m_n lambda_n^{-s} without a domain check.
inline cplx partial_dirac_zeta(unsigned g, cplx s, unsigned depth)
{
    check_rank(g);
    compensated_complex_sum acc;
    acc.add(1.0);
    const double q = 2.0 * g - 1.0;
    for (unsigned n = 1; n <= depth; ++n) {
        const double log_d = std::log(2.0 * g) + (n - 1) * std::log(q);
        const double log_m = n == 1 ? std::log(q) : std::log(2.0 * g) + std::log(2.0 * g - 2.0) + (n - 2) * std::log(q);
        acc.add(std::exp(log_m - 3.0 * s * log_d));
    }
    return acc.value();
}

inline constexpr double cantor_abscissa = 1.0 / 3.0;

namespace detail {

inline void require_above_abscissa(cplx s, const char* op)
{
    if (!(s.real() > cantor_abscissa))
        throw domain_error(std::string(op) + ": Re(s) = " + std::to_string(s.real()) +
                           " is not above the abscissa 1/3");
}

// m_{M+1} lambda_{M+1}^{-sigma} / (1 - q^{1 - 3 sigma})
inline double cantor_tail(unsigned g, double sigma, unsigned depth)
{
    const double q = 2.0 * g - 1.0;
    const unsigned n = depth + 1;
    const double log_d = std::log(2.0 * g) + (n - 1) * std::log(q);
    const double log_m = std::log(2.0 * g) + std::log(2.0 * g - 2.0) + (n - 2) * std::log(q);
    return std::exp(log_m - 3.0 * sigma * log_d) / (1.0 - std::pow(q, 1.0 - 3.0 * sigma));
}

} // namespace detail

// Tr |D|^{-s} on H_M including the constants (lambda_0 = 1).
inline SeriesValue dirac_zeta(unsigned g, cplx s, unsigned depth)
{
    detail::require_above_abscissa(s, "dirac_zeta");
    SeriesValue v;
    v.value = partial_dirac_zeta(g, s, depth);
    v.terms_used = depth + 1;
    v.tail_bound = detail::cantor_tail(g, s.real(), depth) +
                   8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(s) * depth) * std::abs(v.value);
    return v;
}

struct ZetaPole {
    long k = 0;
    cplx location{};
    cplx residue{};
};

inline std::vector<ZetaPole> dirac_zeta_poles(unsigned g, long k_max)
{
    check_rank(g);
    const double q = 2.0 * g - 1.0;
    const double lq = std::log(q);
    std::vector<ZetaPole> out;
    for (long k = -k_max; k <= k_max; ++k) {
        ZetaPole p;
        p.k = k;
        p.location = cplx(1.0 / 3.0, 2.0 * std::numbers::pi * static_cast<double>(k) / (3.0 * lq));
        p.residue = 2.0 * g * (2.0 * g - 2.0) * std::exp(-3.0 * p.location * std::log(2.0 * g)) / (3.0 * q * lq);
        out.push_back(p);
    }
    return out;
}

// 1 + (2g-1)(2g)^{-3s} + 2g(2g-2)(2g)^{-3s} q^{-1} x/(1-x), x = q^{1-3s}.
inline cplx dirac_zeta_closed_form(unsigned g, cplx s)
{
    check_rank(g);
    const double q = 2.0 * g - 1.0;
    const cplx x = std::exp((1.0 - 3.0 * s) * std::log(q));
    if (std::abs(1.0 - x) < 64.0 * std::numeric_limits<double>::epsilon())
        throw domain_error("dirac_zeta_closed_form: s is a pole");
    const cplx a = std::exp(-3.0 * s * std::log(2.0 * g));
    return 1.0 + q * a + 2.0 * g * (2.0 * g - 2.0) * a / q * x / (1.0 - x);
}

struct AbscissaProbe {
    cplx s{};
    std::vector<unsigned> depths;
    std::vector<double> partial_sums;
    double term_ratio = 0.0; // q^{1 - 3 Re s}
    bool monotone = true;
    bool diverges = false;
};

inline AbscissaProbe abscissa_probe(unsigned g, double s, const std::vector<unsigned>& depths)
{
    AbscissaProbe p;
    p.s = s;
    p.depths = depths;
    for (unsigned m : depths)
        p.partial_sums.push_back(partial_dirac_zeta(g, s, m).real());
    for (std::size_t i = 1; i < p.partial_sums.size(); ++i)
        p.monotone = p.monotone && p.partial_sums[i] > p.partial_sums[i - 1];
    p.term_ratio = std::pow(2.0 * g - 1.0, 1.0 - 3.0 * s);
    p.diverges = p.term_ratio >= 1.0;
    return p;
}

// Tr(Q_n M_a) for n = 0..M: the constant term is the integral of a; for
// n >= 1 it is (1 - 1/k_n) Sum_{|c|=n} E[a|c].
inline std::vector<cplx> level_traces(const BoundaryFunction& a, unsigned depth)
{
    const unsigned g = a.g;
    std::vector<cplx> out(depth + 1);
    out[0] = expectation(a, 0).values[0];
    for (unsigned n = 1; n <= depth; ++n) {
        const double k = n == 1 ? 2.0 * g : 2.0 * g - 1.0;
        cplx level_sum;
        if (n <= a.depth) {
            compensated_complex_sum s;
            for (const cplx& v : expectation(a, n).values)
                s.add(v);
            level_sum = s.value();
        } else {
            compensated_complex_sum s;
            for (const cplx& v : a.values)
                s.add(v);
            level_sum = s.value() * static_cast<double>(descendants(g, a.depth, n));
        }
        out[n] = (1.0 - 1.0 / k) * level_sum;
    }
    return out;
}

// Tr(M_a |D|^{-s}) on H_M.
inline SeriesValue zeta_a(const BoundaryFunction& a, cplx s, unsigned depth)
{
    detail::require_above_abscissa(s, "zeta_a");
    const auto tr = level_traces(a, depth);
    compensated_complex_sum acc;
    for (unsigned n = 0; n <= depth; ++n) {
        const double log_d = n == 0 ? 0.0 : std::log(2.0 * a.g) + (n - 1) * std::log(2.0 * a.g - 1.0);
        acc.add(tr[n] * std::exp(-3.0 * s * log_d));
    }
    SeriesValue v;
    v.value = acc.value();
    v.terms_used = depth + 1;
    v.tail_bound = max_abs(a) * detail::cantor_tail(a.g, s.real(), depth) +
                   8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(s) * depth) *
                       (std::abs(v.value) + max_abs(a));
    return v;
}

enum class EvolutionConvention { corrected, as_printed };

inline const char* to_string(EvolutionConvention c)
{
    return c == EvolutionConvention::corrected ? "corrected" : "as_printed";
}

struct InnerEvolution {
    BoundaryFunction value;
    double discrepancy = 0.0; // against |D|^{it} M_phi |D|^{-it} psi
    double norm_value = 0.0;
    double norm_product = 0.0;
};

namespace detail {

inline DenseMatrix to_coordinates(const BoundaryFunction& f, unsigned depth)
{
    const auto r = refine(f, depth);
    const double w = 1.0 / std::sqrt(static_cast<double>(r.values.size()));
    DenseMatrix v(static_cast<Eigen::Index>(r.values.size()), 1);
    for (std::size_t i = 0; i < r.values.size(); ++i)
        v(static_cast<Eigen::Index>(i), 0) = w * r.values[i];
    return v;
}

inline double lambda_of(unsigned g, unsigned n)
{
    const double d = static_cast<double>(word_count(g, n));
    return d * d * d;
}

} // namespace detail

// sigma_t(phi) psi for phi = element i of I_n, psi = element j of I_l,
// by Sum_{m <= max(n,l)} (lambda_m / lambda_l)^{it} Q_m(phi psi); the
// as_printed convention divides by lambda_n instead.
inline InnerEvolution inner_time_evolution(unsigned g, unsigned n, std::size_t i, unsigned l, std::size_t j,
                                           double t, unsigned depth,
                                           EvolutionConvention conv = EvolutionConvention::corrected)
{
    check_rank(g);
    if (n < 1 || l < 1 || n > depth || l > depth)
        throw domain_error("inner_time_evolution: levels must lie in [1, depth]");
    const auto bn = gram_schmidt_local(g, n);
    const auto bl = gram_schmidt_local(g, l);
    if (i >= bn.size() || j >= bl.size())
        throw domain_error("inner_time_evolution: basis index out of range");
    const auto phi = basis_function(bn, i);
    const auto psi = basis_function(bl, j);
    const auto prod = pointwise_product(phi, psi);
    const unsigned top = std::max(n, l);
    const double ref = std::log(detail::lambda_of(g, conv == EvolutionConvention::corrected ? l : n));

    InnerEvolution out;
    out.value = BoundaryFunction{g, top, std::vector<cplx>(word_count(g, top), 0.0)};
    for (unsigned m = 0; m <= top; ++m) {
        auto qm = expectation(prod, m);
        if (m > 0)
            qm = combine(qm, expectation(prod, m - 1), -1.0);
        const cplx phase = std::exp(cplx(0.0, t * (std::log(detail::lambda_of(g, m)) - ref)));
        out.value = combine(out.value, qm, phase);
    }

    const auto e = dense_eigenbasis(g, depth);
    Eigen::VectorXcd lam_it(e.vectors.cols());
    for (Eigen::Index c = 0; c < lam_it.size(); ++c)
        lam_it(c) = std::exp(cplx(0.0, t * std::log(e.lambdas[static_cast<std::size_t>(c)])));
    const DenseMatrix u = e.vectors * lam_it.asDiagonal() * e.vectors.adjoint();
    const Eigen::VectorXcd phi_vals =
        detail::to_coordinates(phi, depth).col(0) * std::sqrt(static_cast<double>(word_count(g, depth)));
    const DenseMatrix mphi = phi_vals.asDiagonal();
    const DenseMatrix direct = u * mphi * u.adjoint() * detail::to_coordinates(psi, depth);
    const DenseMatrix formula = detail::to_coordinates(out.value, depth);
    out.discrepancy = (direct - formula).norm();
    out.norm_value = norm(out.value);
    out.norm_product = norm(prod);
    return out;
}

struct GibbsZetaCheck {
    cplx gibbs{};
    cplx zeta_ratio{};
    double residual = 0.0;
};

// phi_beta(a) = Tr(M_a e^{-beta H}) / Tr(e^{-beta H}) with H = log |D|, traced
// over the explicit basis vectors, against zeta_a(beta) / zeta_D(beta).
inline GibbsZetaCheck gibbs_equals_zeta(const BoundaryFunction& a, double beta, unsigned depth)
{
    detail::require_above_abscissa(beta, "gibbs_equals_zeta");
    const unsigned g = a.g;
    compensated_complex_sum num, den;
    num.add(expectation(a, 0).values[0]);
    den.add(1.0);
    for (unsigned n = 1; n <= depth; ++n) {
        const double w = std::pow(detail::lambda_of(g, n), -beta);
        const auto b = gram_schmidt_local(g, n);
        const unsigned ad = std::max(a.depth, n);
        const auto fine = refine(a, ad);
        const std::uint64_t below = descendants(g, n, ad);
        const double dn = static_cast<double>(word_count(g, n));
        // <phi, a phi> = (1/d_n) Sum_c |phi(c)|^2 E[a|c]
        compensated_complex_sum level;
        for (std::uint64_t p = 0; p < b.parents; ++p)
            for (const auto& prof : b.local)
                for (std::size_t c = 0; c < b.children; ++c) {
                    const std::uint64_t cyl = p * b.children + c;
                    cplx avg = 0.0;
                    for (std::uint64_t k = 0; k < below; ++k)
                        avg += fine.values[cyl * below + k];
                    avg /= static_cast<double>(below);
                    level.add(prof[c] * prof[c] / dn * avg);
                }
        num.add(w * level.value());
        den.add(w * static_cast<double>(b.size()));
    }
    GibbsZetaCheck r;
    r.gibbs = num.value() / den.value();
    r.zeta_ratio = zeta_a(a, beta, depth).value / dirac_zeta(g, beta, depth).value;
    r.residual = std::abs(r.gibbs - r.zeta_ratio);
    return r;
}

struct CommutantReport {
    unsigned g = 2;
    unsigned depth = 0;
    std::size_t dimension = 0;
    std::size_t expected = 0;
    bool all_diagonal = false;
};

// Dimension of {X : [M_{1_w}, X] = 0 for all |w| <= M} on H_M.
inline CommutantReport commutant_dimension(unsigned g, unsigned depth)
{
    check_rank(g);
    const std::uint64_t d = word_count(g, depth);
    if (d * d > 40'000)
        throw capacity_error("commutant_dimension: d_M^2 too large for the nullspace computation");
    const auto n = static_cast<Eigen::Index>(d);
    std::vector<Eigen::VectorXd> gens;
    for (unsigned level = 1; level <= depth; ++level)
        for (std::uint64_t w = 0; w < word_count(g, level); ++w) {
            BoundaryFunction f{g, level, std::vector<cplx>(word_count(g, level), 0.0)};
            f.values[w] = 1.0;
            const auto r = refine(f, depth);
            Eigen::VectorXd v(n);
            for (Eigen::Index i = 0; i < n; ++i)
                v(i) = r.values[static_cast<std::size_t>(i)].real();
            gens.push_back(v);
        }
    // [diag(v), X]_{ij} = (v_i - v_j) X_{ij}
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(gens.size()) * n * n, n * n);
    Eigen::Index row = 0;
    for (const auto& v : gens)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i, ++row)
                sys(row, j * n + i) = v(i) - v(j);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    const Eigen::MatrixXd kernel = lu.kernel();
    CommutantReport r;
    r.g = g;
    r.depth = depth;
    r.dimension = static_cast<std::size_t>(lu.dimensionOfKernel());
    r.expected = static_cast<std::size_t>(d);
    r.all_diagonal = true;
    for (Eigen::Index c = 0; c < kernel.cols() && r.dimension > 0; ++c)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                if (i != j && std::abs(kernel(j * n + i, c)) > 1e-12)
                    r.all_diagonal = false;
    return r;
}

struct GradingScan {
    std::uint64_t cases = 0;
    double min_norm = 0.0;
    double min_norm_nontrivial = 0.0;
    std::uint64_t argmin_grading = 0;
    std::uint64_t argmin_sign = 0;
};

inline constexpr std::uint64_t default_grading_case_cap = std::uint64_t(1) << 20;

// Every +-1 multiplication grading epsilon on depth-M cylinders against
// every +-1 sign F diagonal in the eigenbasis; D = F |D|.
inline GradingScan grading_scan(unsigned g, unsigned depth, std::uint64_t case_cap = default_grading_case_cap)
{
    check_rank(g);
    const std::uint64_t d = word_count(g, depth);
    if (d >= 32 || (std::uint64_t(1) << (2 * d)) > case_cap)
        throw capacity_error("grading_scan: 2^{d_M} x 2^{d_M} cases exceed the cap of " + std::to_string(case_cap));
    const auto e = dense_eigenbasis(g, depth);
    const Eigen::MatrixXd v = e.vectors.real();
    const auto n = static_cast<Eigen::Index>(d);
    GradingScan out;
    out.min_norm = std::numeric_limits<double>::infinity();
    out.min_norm_nontrivial = std::numeric_limits<double>::infinity();
    const std::uint64_t full = (std::uint64_t(1) << d) - 1;
    for (std::uint64_t eps = 0; eps <= full; ++eps) {
        Eigen::VectorXd ev(n);
        for (Eigen::Index i = 0; i < n; ++i)
            ev(i) = (eps >> i) & 1u ? -1.0 : 1.0;
        const Eigen::MatrixXd ee = v.transpose() * ev.asDiagonal() * v;
        for (std::uint64_t sign = 0; sign <= full; ++sign) {
            Eigen::VectorXd dv(n);
            for (Eigen::Index i = 0; i < n; ++i)
                dv(i) = ((sign >> i) & 1u ? -1.0 : 1.0) * e.lambdas[static_cast<std::size_t>(i)];
            const Eigen::MatrixXd anti = dv.asDiagonal() * ee + ee * dv.asDiagonal();
            const double nrm = Eigen::JacobiSVD<Eigen::MatrixXd>(anti).singularValues()(0);
            ++out.cases;
            if (nrm < out.min_norm) {
                out.min_norm = nrm;
                out.argmin_grading = eps;
                out.argmin_sign = sign;
            }
            if (eps != 0 && eps != full)
                out.min_norm_nontrivial = std::min(out.min_norm_nontrivial, nrm);
        }
    }
    return out;
}

struct GradingObstruction {
    CommutantReport commutant;
    std::optional<GradingScan> scan;
};

inline GradingObstruction grading_obstruction_check(unsigned g, unsigned depth,
                                                    std::uint64_t case_cap = default_grading_case_cap)
{
    GradingObstruction r;
    r.commutant = commutant_dimension(g, depth);
    r.scan = grading_scan(g, depth, case_cap);
    return r;
}

} // namespace ncqsm
