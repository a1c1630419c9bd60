#pragma once

// The crossed product C(Lambda) x| Gamma for the rank-g free group acting on
// the boundary of its tree: Busemann cocycle, the covariant representation on
// L^2(Lambda) (x) l^2(Gamma) compressed to depth-M cylinder functions and
// |gamma'| <= L, the Busemann Hamiltonian, the Patterson-Sullivan KMS state
// and the sign-twisted spectral triple.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cantor.hpp"
#include "errors.hpp"
#include "linop.hpp"

namespace ncqsm {

// B(x0, gamma x0, xi) = 2k - |gamma|, k = common prefix of gamma and xi.
inline long busemann(const Word& gamma, const Word& xi_prefix)
{
    if (xi_prefix.size() < gamma.size())
        throw resolution_error("busemann: boundary prefix of length " + std::to_string(xi_prefix.size()) +
                               " does not resolve |gamma| = " + std::to_string(gamma.size()));
    return 2 * static_cast<long>(common_prefix(gamma, xi_prefix)) - static_cast<long>(gamma.size());
}

// B(x, y, xi) = lim d(x, z) - d(y, z) for vertices x, y.
inline long busemann(const Word& x, const Word& y, const Word& xi_prefix)
{
    if (xi_prefix.size() < std::max(x.size(), y.size()))
        throw resolution_error("busemann: boundary prefix too short for the base points");
    const auto bx = static_cast<long>(x.size()) - 2 * static_cast<long>(common_prefix(x, xi_prefix));
    const auto by = static_cast<long>(y.size()) - 2 * static_cast<long>(common_prefix(y, xi_prefix));
    return bx - by;
}

// Depth-|gamma| function xi -> B(x0, gamma x0, xi).
inline BoundaryFunction busemann_function(const Word& gamma, unsigned g)
{
    check_word(gamma, g);
    const auto depth = static_cast<unsigned>(gamma.size());
    BoundaryFunction f{g, depth, std::vector<cplx>(word_count(g, depth))};
    for (std::uint64_t i = 0; i < f.values.size(); ++i)
        f.values[i] = static_cast<double>(busemann(gamma, word_at(g, depth, i)));
    return f;
}

inline double critical_exponent(unsigned g) { return std::log(2.0 * g - 1.0); }

// (alpha_gamma f)(xi) = f(gamma^{-1} xi), at depth depth(f) + |gamma|.
inline BoundaryFunction translate(const BoundaryFunction& f, const Word& gamma)
{
    check_word(gamma, f.g);
    const unsigned depth = f.depth + static_cast<unsigned>(gamma.size());
    const Word inv = word_inverse(gamma);
    BoundaryFunction out{f.g, depth, std::vector<cplx>(word_count(f.g, depth))};
    for (std::uint64_t i = 0; i < out.values.size(); ++i) {
        Word eta = word_product(inv, word_at(f.g, depth, i));
        eta.resize(f.depth);
        out.values[i] = f.values[word_index(eta, f.g)];
    }
    return out;
}

inline BoundaryFunction function_map(const BoundaryFunction& f, auto&& op)
{
    BoundaryFunction out = f;
    for (auto& v : out.values)
        v = op(v);
    return out;
}

struct CrossedMonomial {
    BoundaryFunction f;
    Word gamma;

    static CrossedMonomial unit(unsigned g) { return {BoundaryFunction::constant(g), {}}; }
    static CrossedMonomial group(const Word& gamma, unsigned g) { return {BoundaryFunction::constant(g), gamma}; }
};

inline void validate(const CrossedMonomial& m)
{
    check_rank(m.f.g);
    check_word(m.gamma, m.f.g);
    if (m.f.values.size() != word_count(m.f.g, m.f.depth))
        throw structural_error("CrossedMonomial: function values do not match its depth");
}

// (f1 U_1)(f2 U_2) = f1 alpha_1(f2) U_{12}
inline CrossedMonomial operator*(const CrossedMonomial& a, const CrossedMonomial& b)
{
    return {pointwise_product(a.f, translate(b.f, a.gamma)), word_product(a.gamma, b.gamma)};
}

// (f U)* = alpha_{gamma^{-1}}(conj f) U_{gamma^{-1}}
inline CrossedMonomial adjoint(const CrossedMonomial& m)
{
    const Word inv = word_inverse(m.gamma);
    return {translate(function_map(m.f, [](cplx v) { return std::conj(v); }), inv), inv};
}

// sigma_t(f U_gamma) = e^{i t B(x0, gamma x0, .)} f U_gamma
inline CrossedMonomial time_evolve(const CrossedMonomial& m, cplx t)
{
    const auto phase =
        function_map(busemann_function(m.gamma, m.f.g), [t](cplx b) { return std::exp(cplx(0.0, 1.0) * t * b); });
    return {pointwise_product(m.f, phase), m.gamma};
}

// Depth-M cylinder functions (x) l^2({|gamma'| <= L}); basis vector
// (w, gamma') sits at group_index(gamma') * d_M + word_index(w), and
// e_w = 1_w / sqrt(mu(w)).
class CrossedSpace {
public:
    CrossedSpace(unsigned g, unsigned depth, unsigned cutoff) : g_(g), depth_(depth), cutoff_(cutoff)
    {
        check_rank(g);
        if (depth < cutoff)
            throw domain_error("CrossedSpace: depth must be >= the group cutoff L");
        if (depth < 1)
            throw domain_error("CrossedSpace: depth must be >= 1");
        cylinders_ = word_count(g, depth);
        for (unsigned n = 0; n <= cutoff; ++n)
            for (auto& w : enumerate_words(g, n)) {
                index_.emplace(w, elements_.size());
                elements_.push_back(std::move(w));
            }
        if (dim() > std::size_t(1) << 24)
            throw capacity_error("CrossedSpace: dimension exceeds 2^24");
    }

    unsigned g() const noexcept { return g_; }
    unsigned depth() const noexcept { return depth_; }
    unsigned cutoff() const noexcept { return cutoff_; }
    std::size_t cylinders() const noexcept { return cylinders_; }
    std::size_t group_size() const noexcept { return elements_.size(); }
    std::size_t dim() const noexcept { return cylinders_ * elements_.size(); }
    const std::vector<Word>& elements() const noexcept { return elements_; }
    const Word& element(std::size_t k) const { return elements_.at(k); }

    std::size_t group_index(const Word& gamma) const
    {
        const auto it = index_.find(gamma);
        return it == index_.end() ? no_target : it->second;
    }

    std::size_t position(std::size_t cylinder, std::size_t element) const { return element * cylinders_ + cylinder; }

    std::string tag() const
    {
        return "crossed:g" + std::to_string(g_) + ":M" + std::to_string(depth_) + ":L" + std::to_string(cutoff_);
    }

private:
    unsigned g_;
    unsigned depth_;
    unsigned cutoff_;
    std::size_t cylinders_ = 0;
    std::vector<Word> elements_;
    std::map<Word, std::size_t> index_;
};

namespace detail {

inline void require_resolved(const CrossedMonomial& m, const CrossedSpace& space)
{
    validate(m);
    if (m.f.g != space.g())
        throw structural_error("crossed monomial and space have different ranks");
    if (m.gamma.size() >= space.depth())
        throw resolution_error("represent_crossed: depth must exceed |gamma|");
}

// P M_f upsilon_gamma P on depth-M cylinder functions in the e_w basis.
inline SparseBlock cylinder_block(const CrossedMonomial& m, const CrossedSpace& space)
{
    const unsigned g = space.g();
    const unsigned depth = space.depth();
    const double q = 2.0 * g - 1.0;
    const auto f = m.f.depth > depth ? expectation(m.f, depth) : refine(m.f, depth);
    std::vector<Eigen::Triplet<cplx>> entries;
    for (std::uint64_t v = 0; v < space.cylinders(); ++v) {
        const Word u = word_product(m.gamma, word_at(g, depth, v));
        if (u.size() <= depth) {
            // gamma Lambda(v) = Lambda(u) is a union of depth-M cylinders.
            const auto fan = descendants(g, static_cast<unsigned>(u.size()), depth);
            const std::uint64_t first = word_index(u, g) * fan;
            for (std::uint64_t w = first; w < first + fan; ++w) {
                const double rho = std::pow(q, static_cast<double>(busemann(m.gamma, word_at(g, depth, w))));
                entries.emplace_back(static_cast<int>(w), static_cast<int>(v), f.values[w] * std::sqrt(rho));
            }
        } else {
            Word w = u;
            w.resize(depth);
            const std::uint64_t row = word_index(w, g);
            const double rho = std::pow(q, static_cast<double>(busemann(m.gamma, u)));
            const double shrink = std::pow(q, -static_cast<double>(u.size() - depth));
            entries.emplace_back(static_cast<int>(row), static_cast<int>(v), f.values[row] * std::sqrt(rho) * shrink);
        }
    }
    const auto n = static_cast<Eigen::Index>(space.cylinders());
    SparseBlock block(n, n);
    block.setFromTriplets(entries.begin(), entries.end());
    block.prune(cplx(0.0));
    return block;
}

} // namespace detail

// pi(f U_gamma)(h (x) gamma') = f upsilon_gamma(h) (x) gamma gamma' with
// upsilon_gamma h = rho_gamma^{1/2} h(gamma^{-1} .), compressed.
inline TruncatedOperator represent_crossed(const CrossedMonomial& m, const CrossedSpace& space)
{
    detail::require_resolved(m, space);
    const SparseBlock block = detail::cylinder_block(m, space);
    const auto n = static_cast<Eigen::Index>(space.cylinders());
    std::vector<std::size_t> targets(space.group_size(), no_target);
    std::vector<SparseBlock> blocks(space.group_size(), SparseBlock(n, n));
    for (std::size_t k = 0; k < space.group_size(); ++k) {
        targets[k] = space.group_index(word_product(m.gamma, space.element(k)));
        if (targets[k] != no_target)
            blocks[k] = block;
    }
    return TruncatedOperator::block_monomial(space.cylinders(), std::move(targets), std::move(blocks), space.tag());
}

// Basis vectors whose image under pi(m) is not altered by the compression.
inline std::vector<char> unclipped_columns(const CrossedMonomial& m, const CrossedSpace& space)
{
    detail::require_resolved(m, space);
    std::vector<char> cyl(space.cylinders());
    for (std::uint64_t v = 0; v < space.cylinders(); ++v)
        cyl[v] = word_product(m.gamma, word_at(space.g(), space.depth(), v)).size() <= space.depth();
    std::vector<char> out(space.dim(), 0);
    for (std::size_t k = 0; k < space.group_size(); ++k)
        if (space.group_index(word_product(m.gamma, space.element(k))) != no_target)
            for (std::size_t v = 0; v < space.cylinders(); ++v)
                out[space.position(v, k)] = cyl[v];
    return out;
}

inline double clipped_fraction(const CrossedMonomial& m, const CrossedSpace& space)
{
    const auto mask = unclipped_columns(m, space);
    return 1.0 - static_cast<double>(std::count(mask.begin(), mask.end(), 1)) / static_cast<double>(mask.size());
}

// rho_gamma on depth-M cylinders as the exact ratio mu(gamma^{-1} Lambda(w)) / mu(Lambda(w)).
inline std::vector<BigRational> radon_nikodym(const Word& gamma, unsigned depth, unsigned g)
{
    check_word(gamma, g);
    if (depth <= gamma.size())
        throw resolution_error("radon_nikodym: depth must exceed |gamma|");
    const Word inv = word_inverse(gamma);
    std::vector<BigRational> out;
    out.reserve(word_count(g, depth));
    for (const auto& w : enumerate_words(g, depth))
        out.push_back(cylinder_measure(word_product(inv, w), g) / cylinder_measure(w, g));
    return out;
}

struct RnReport {
    BigRational max_deviation;
    BigRational max_chain_deviation;
    std::size_t cylinders = 0;
};

namespace detail {

inline BigRational rational_power(unsigned base, long e)
{
    BigInt p = 1;
    for (long i = 0; i < std::abs(e); ++i)
        p *= base;
    return e >= 0 ? BigRational(p) : BigRational(BigInt(1), p);
}

} // namespace detail

// rho_gamma = (2g-1)^{B(x0, gamma x0, .)} on every depth-M cylinder, and the
// chain rule rho_{gamma eta} = rho_gamma (rho_eta o gamma^{-1}) for each generator eta.
inline RnReport rn_equals_busemann(const Word& gamma, unsigned depth, unsigned g)
{
    const auto rho = radon_nikodym(gamma, depth, g);
    RnReport r;
    r.cylinders = rho.size();
    const Word inv = word_inverse(gamma);
    const auto words = enumerate_words(g, depth);
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto expected = detail::rational_power(2 * g - 1, busemann(gamma, words[i]));
        r.max_deviation = std::max(r.max_deviation, BigRational(abs(rho[i] - expected)));
    }
    if (depth > gamma.size() + 1) {
        for (Letter x = 0; x < 2 * g; ++x) {
            const Word eta{x};
            const Word prod = word_product(gamma, eta);
            for (const auto& w : words) {
                const auto lhs = cylinder_measure(word_product(word_inverse(prod), w), g) / cylinder_measure(w, g);
                const Word moved = word_product(inv, w);
                const auto rho_gamma = cylinder_measure(moved, g) / cylinder_measure(w, g);
                const auto rho_eta = cylinder_measure(word_product(word_inverse(eta), moved), g) /
                                     cylinder_measure(moved, g);
                r.max_chain_deviation = std::max(r.max_chain_deviation, BigRational(abs(lhs - rho_gamma * rho_eta)));
            }
        }
    }
    return r;
}

enum class AbsConvention { paper_literal, absolute };

inline const char* to_string(AbsConvention c) { return c == AbsConvention::paper_literal ? "paper_literal" : "absolute"; }

// H h (x) gamma' = B(x0, gamma' x0, xi) h (x) gamma'.
inline TruncatedOperator hamiltonian(const CrossedSpace& space)
{
    std::vector<cplx> values(space.dim());
    for (std::size_t k = 0; k < space.group_size(); ++k)
        for (std::uint64_t w = 0; w < space.cylinders(); ++w)
            values[space.position(w, k)] =
                static_cast<double>(busemann(space.element(k), word_at(space.g(), space.depth(), w)));
    return TruncatedOperator::diagonal(std::move(values), space.tag());
}

// |D| := H (paper_literal) or |H| (absolute).
inline TruncatedOperator abs_dirac(const CrossedSpace& space, AbsConvention conv = AbsConvention::paper_literal)
{
    auto h = hamiltonian(space);
    if (conv == AbsConvention::paper_literal)
        return h;
    auto v = h.diagonal_values();
    for (auto& x : v)
        x = std::abs(x);
    return TruncatedOperator::diagonal(std::move(v), space.tag());
}

inline TruncatedOperator exp_i_t(const TruncatedOperator& diag, double t)
{
    auto v = diag.diagonal_values();
    for (auto& x : v)
        x = std::exp(cplx(0.0, t) * x);
    return TruncatedOperator::diagonal(std::move(v), diag.tag());
}

// || e^{itH} pi(m) e^{-itH} - pi(sigma_t(m)) ||
inline double time_evolution_residual(const CrossedMonomial& m, double t, const CrossedSpace& space)
{
    const auto h = hamiltonian(space);
    const auto lhs = compose(compose(exp_i_t(h, t), represent_crossed(m, space)), exp_i_t(h, -t));
    return op_norm(subtract(lhs, represent_crossed(time_evolve(m, t), space))).value;
}

// phi(f U_gamma) = delta_{gamma, e} integral of f.
inline cplx ps_state(const CrossedMonomial& m)
{
    validate(m);
    if (!m.gamma.empty())
        return 0.0;
    return expectation(m.f, 0).values[0];
}

// |phi(ab) - phi(b sigma_{i beta}(a))|, sigma_{i beta}(f U) = e^{-beta B} f U.
inline double ps_kms_residual(const CrossedMonomial& a, const CrossedMonomial& b, double beta)
{
    validate(a);
    validate(b);
    const CrossedMonomial sa = time_evolve(a, cplx(0.0, beta));
    return std::abs(ps_state(a * b) - ps_state(b * sa));
}

inline double ps_kms_residual(const CrossedMonomial& a, const CrossedMonomial& b, unsigned g)
{
    return ps_kms_residual(a, b, critical_exponent(g));
}

struct KmsScan {
    std::vector<double> betas;
    std::vector<double> residuals;
    std::size_t zeros = 0; // grid points with residual <= tol
};

// beta = delta + step * k, k = -count..count, beta > 0.
inline KmsScan ps_kms_scan(const CrossedMonomial& a, const CrossedMonomial& b, double step = 0.1, int count = 10,
                           double tol = 1e-10)
{
    const double delta = critical_exponent(a.f.g);
    KmsScan s;
    for (int k = -count; k <= count; ++k) {
        const double beta = delta + step * k;
        if (beta <= 0.0)
            continue;
        s.betas.push_back(beta);
        s.residuals.push_back(ps_kms_residual(a, b, beta));
        if (s.residuals.back() <= tol)
            ++s.zeros;
    }
    return s;
}

// l : Gamma -> Z given on the generators.
struct Homomorphism {
    std::vector<long> on_generators;

    static Homomorphism exponent_sum(unsigned g) { return {std::vector<long>(g, 1)}; }

    long operator()(const Word& w) const
    {
        long s = 0;
        for (Letter x : w) {
            if (x / 2u >= on_generators.size())
                throw domain_error("Homomorphism: generator outside the given values");
            s += x % 2 == 0 ? on_generators[x / 2u] : -on_generators[x / 2u];
        }
        return s;
    }
};

inline double parity_sign(long l) { return l % 2 == 0 ? 1.0 : -1.0; }

// F h (x) gamma' = (-1)^{l(gamma')} h (x) gamma'.
inline TruncatedOperator sign_operator(const CrossedSpace& space, const Homomorphism& ell)
{
    std::vector<cplx> values(space.dim());
    for (std::size_t k = 0; k < space.group_size(); ++k) {
        const double s = parity_sign(ell(space.element(k)));
        for (std::size_t w = 0; w < space.cylinders(); ++w)
            values[space.position(w, k)] = s;
    }
    return TruncatedOperator::diagonal(std::move(values), space.tag());
}

inline TruncatedOperator crossed_dirac(const CrossedSpace& space, const Homomorphism& ell,
                                       AbsConvention conv = AbsConvention::paper_literal)
{
    return compose(sign_operator(space, ell), abs_dirac(space, conv));
}

// sigma(f U_gamma) = (-1)^{l(gamma)} f U_gamma
inline CrossedMonomial sign_twist(const CrossedMonomial& m, const Homomorphism& ell)
{
    const double s = parity_sign(ell(m.gamma));
    return {function_map(m.f, [s](cplx v) { return s * v; }), m.gamma};
}

struct Type3Certificate {
    Word gamma;
    long ell_gamma = 0;
    AbsConvention convention = AbsConvention::paper_literal;
    unsigned depth = 0;
    std::vector<unsigned> cutoffs;
    std::vector<double> twisted;
    std::vector<double> untwisted;
    std::vector<double> sign_commutator;  // ||[|D|, F]||
    std::vector<double> sign_conjugation; // ||F pi(m) F - pi(sigma(m))||
    std::vector<double> sigma_squared;    // ||pi(sigma^2(m)) - pi(m)||
    double busemann_sup = 0.0;            // max |B(x0, gamma x0, .)|
};

inline Type3Certificate type3_triple_certificate(const Homomorphism& ell, const CrossedMonomial& m, unsigned depth,
                                                 const std::vector<unsigned>& cutoffs,
                                                 AbsConvention conv = AbsConvention::paper_literal)
{
    validate(m);
    Type3Certificate c;
    c.gamma = m.gamma;
    c.ell_gamma = ell(m.gamma);
    c.convention = conv;
    c.depth = depth;
    c.cutoffs = cutoffs;
    c.busemann_sup = max_abs(busemann_function(m.gamma, m.f.g));
    const CrossedMonomial sm = sign_twist(m, ell);
    for (unsigned l : cutoffs) {
        const CrossedSpace space(m.f.g, depth, l);
        const auto f = sign_operator(space, ell);
        const auto abs_d = abs_dirac(space, conv);
        const auto d = compose(f, abs_d);
        const auto pm = represent_crossed(m, space);
        const auto psm = represent_crossed(sm, space);
        c.twisted.push_back(op_norm(twisted_commutator(d, pm, psm)).value);
        c.untwisted.push_back(op_norm(commutator(d, pm)).value);
        c.sign_commutator.push_back(op_norm(commutator(abs_d, f)).value);
        c.sign_conjugation.push_back(op_norm(subtract(compose(compose(f, pm), f), psm)).value);
        c.sigma_squared.push_back(op_norm(subtract(represent_crossed(sign_twist(sm, ell), space), pm)).value);
    }
    return c;
}

inline Type3Certificate type3_triple_certificate(const Homomorphism& ell, const Word& gamma, unsigned g,
                                                 unsigned depth, const std::vector<unsigned>& cutoffs,
                                                 AbsConvention conv = AbsConvention::paper_literal)
{
    return type3_triple_certificate(ell, CrossedMonomial::group(gamma, g), depth, cutoffs, conv);
}

} // namespace ncqsm
