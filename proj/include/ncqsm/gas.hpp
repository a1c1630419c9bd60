#pragma once

// The supersymmetric Riemann gas: compression of the Bost-Connes
// representation to squarefree indices, the generators mu~_n and their
// relations, the Mobius sign and the Witten index.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "arith.hpp"
#include "bc.hpp"
#include "errors.hpp"
#include "linop.hpp"
#include "series.hpp"

namespace ncqsm {

class FermionicBasis {
public:
    explicit FermionicBasis(const BCRepresentation& rep) : n_(rep.size()), twist_(rep.twist()), table_(rep.table_ptr())
    {
        build();
    }

    explicit FermionicBasis(std::size_t n_max) : n_(n_max), table_(std::make_shared<const ArithTable>(n_max))
    {
        build();
    }

    std::size_t limit() const noexcept { return n_; }
    std::size_t dim() const noexcept { return indices_.size(); }
    std::int64_t twist() const noexcept { return twist_; }
    const ArithTable& table() const noexcept { return *table_; }
    std::shared_ptr<const ArithTable> table_ptr() const noexcept { return table_; }
    const std::vector<std::uint64_t>& indices() const noexcept { return indices_; }

    // Position of n in the basis, or no_target when n is not squarefree or exceeds N.
    std::size_t position(std::uint64_t n) const noexcept { return n >= 1 && n <= n_ ? inverse_[n] : no_target; }

    std::string tag() const { return "gas:sqfree(1.." + std::to_string(n_) + ")"; }
    std::string source_tag() const { return "bc:l2(1.." + std::to_string(n_) + ")"; }

private:
    void build()
    {
        inverse_.assign(n_ + 1, no_target);
        for (std::size_t n = 1; n <= n_; ++n)
            if (table_->squarefree(n)) {
                inverse_[n] = indices_.size();
                indices_.push_back(n);
            }
    }

    std::size_t n_;
    std::int64_t twist_ = 1;
    std::shared_ptr<const ArithTable> table_;
    std::vector<std::uint64_t> indices_;
    std::vector<std::size_t> inverse_;
};

// Pi_F op Pi_F restricted to the squarefree indices.
inline TruncatedOperator compress(const TruncatedOperator& op, const FermionicBasis& basis)
{
    if (op.dim() != basis.limit() || op.tag() != basis.source_tag())
        throw structural_error("compress: operator on '" + op.tag() + "' does not act on '" + basis.source_tag() + "'");
    const std::size_t d = basis.dim();
    const auto& idx = basis.indices();
    if (op.structure() == Structure::diagonal) {
        std::vector<cplx> v(d);
        for (std::size_t k = 0; k < d; ++k)
            v[k] = op.diagonal_values()[idx[k] - 1];
        return TruncatedOperator::diagonal(std::move(v), basis.tag());
    }
    std::vector<std::size_t> targets(d, no_target);
    std::vector<cplx> scalars(d, 0.0);
    std::vector<char> hit(d, 0);
    bool monomial = true;
    for (std::size_t k = 0; k < d && monomial; ++k) {
        std::size_t found = 0;
        for (const auto& [row, v] : op.column(idx[k] - 1)) {
            const std::size_t pos = basis.position(row + 1);
            if (pos == no_target)
                continue;
            if (++found > 1 || hit[pos]) {
                monomial = false;
                break;
            }
            hit[pos] = 1;
            targets[k] = pos;
            scalars[k] = v;
        }
    }
    if (monomial)
        return TruncatedOperator::monomial(std::move(targets), std::move(scalars), basis.tag());
    if (d > dense_cap)
        throw capacity_error("compress: non-monomial compression exceeds the dense cap");
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k)
        for (const auto& [row, v] : op.column(idx[k] - 1)) {
            const std::size_t pos = basis.position(row + 1);
            if (pos != no_target)
                m(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(k)) = v;
        }
    return TruncatedOperator::dense(std::move(m), basis.tag());
}

inline bool trial_squarefree(std::uint64_t n)
{
    for (std::uint64_t p = 2; p * p <= n; ++p) {
        if (n % (p * p) == 0)
            return false;
        if (n % p == 0)
            n /= p;
    }
    return true;
}

struct MuTilde {
    TruncatedOperator op;
    bool squarefree = true;
    std::string note;
};

// mu~_n e_l = e_{n l} when n l is squarefree and <= N, else 0.
inline MuTilde mu_tilde(std::uint64_t n, const FermionicBasis& basis)
{
    if (n == 0)
        throw domain_error("mu_tilde: n must be positive");
    const std::size_t d = basis.dim();
    std::vector<std::size_t> targets(d, no_target);
    std::vector<cplx> scalars(d, 0.0);
    const bool sf = n <= basis.limit() ? basis.table().squarefree(n) : trial_squarefree(n);
    if (sf) {
        for (std::size_t k = 0; k < d; ++k) {
            const std::uint64_t l = basis.indices()[k];
            if (l > basis.limit() / n)
                break;
            const std::size_t pos = basis.position(n * l);
            if (pos != no_target) {
                targets[k] = pos;
                scalars[k] = 1.0;
            }
        }
    }
    MuTilde out{TruncatedOperator::monomial(std::move(targets), std::move(scalars), basis.tag()), sf, ""};
    if (!sf)
        out.note = std::to_string(n) + " is not squarefree; mu~_" + std::to_string(n) + " is the zero operator";
    return out;
}

// e(r) restricted to the squarefree indices.
inline TruncatedOperator gas_group_element(const GroupRingElement& x, const FermionicBasis& basis)
{
    check_twist(x, basis.twist());
    std::vector<cplx> v(basis.dim());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = x.evaluate(basis.indices()[k], basis.twist());
    return TruncatedOperator::diagonal(std::move(v), basis.tag());
}

// F = diag(mu(n)), |D~| as log: diag(log n), D = F |D|.
inline TruncatedOperator mobius_sign(const FermionicBasis& basis)
{
    std::vector<cplx> v(basis.dim());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = static_cast<double>(basis.table().mobius(basis.indices()[k]));
    return TruncatedOperator::diagonal(std::move(v), basis.tag());
}

inline TruncatedOperator gas_abs_dirac(const FermionicBasis& basis)
{
    std::vector<cplx> v(basis.dim());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = std::log(static_cast<double>(basis.indices()[k]));
    return TruncatedOperator::diagonal(std::move(v), basis.tag());
}

struct RelationWitness {
    std::uint64_t column = 0;
    std::uint64_t row = 0;
    cplx lhs{};
    cplx rhs{};
};

struct RelationResult {
    std::string relation_id;
    bool pass = true;
    RelationWitness witness;
};

struct RelationReport {
    std::size_t n_max = 0;
    std::uint64_t max_gen = 0;
    std::vector<RelationResult> results;

    std::size_t failures() const
    {
        std::size_t f = 0;
        for (const auto& r : results)
            f += !r.pass;
        return f;
    }
};

namespace detail {

// Compare a and b on the basis columns whose label l satisfies l * reach <= N.
inline RelationResult compare_columns(std::string id, const TruncatedOperator& a, const TruncatedOperator& b,
                                      const FermionicBasis& basis, std::uint64_t reach, double tol)
{
    RelationResult res{std::move(id), true, {}};
    for (std::size_t k = 0; k < basis.dim(); ++k) {
        const std::uint64_t l = basis.indices()[k];
        if (reach > 0 && l > basis.limit() / reach)
            break;
        auto ca = a.column(k);
        auto cb = b.column(k);
        std::size_t ia = 0, ib = 0;
        while (ia < ca.size() || ib < cb.size()) {
            std::size_t row;
            cplx va{}, vb{};
            if (ib == cb.size() || (ia < ca.size() && ca[ia].first < cb[ib].first)) {
                row = ca[ia].first;
                va = ca[ia++].second;
            } else if (ia == ca.size() || cb[ib].first < ca[ia].first) {
                row = cb[ib].first;
                vb = cb[ib++].second;
            } else {
                row = ca[ia].first;
                va = ca[ia++].second;
                vb = cb[ib++].second;
            }
            if (std::abs(va - vb) > tol) {
                res.pass = false;
                res.witness = {l, basis.indices()[row], va, vb};
                return res;
            }
        }
    }
    return res;
}

inline bool is_prime(std::uint64_t n)
{
    if (n < 2)
        return false;
    for (std::uint64_t p = 2; p * p <= n; ++p)
        if (n % p == 0)
            return false;
    return true;
}

} // namespace detail

// Relations among mu~_n, mu~_m^*, e(r) for 1 <= n, m <= max_gen, checked on
// the columns where no intermediate index exceeds N. Index relations are
// compared exactly; relations carrying roots of unity use tol.
inline RelationReport relation_suite(std::size_t n_max, std::uint64_t max_gen, const std::vector<QZ>& rs,
                                     double tol = 1e-12)
{
    const BCRepresentation rep(n_max);
    const FermionicBasis basis(rep);
    RelationReport report;
    report.n_max = n_max;
    report.max_gen = max_gen;
    const auto id = TruncatedOperator::identity(basis.dim(), basis.tag());
    const auto zero = TruncatedOperator::zero(basis.dim(), basis.tag());

    std::vector<TruncatedOperator> mu, mus;
    std::vector<bool> sf;
    mu.reserve(max_gen + 1);
    for (std::uint64_t n = 0; n <= max_gen; ++n) {
        if (n == 0) {
            mu.push_back(zero);
            mus.push_back(zero);
            sf.push_back(false);
            continue;
        }
        auto mt = mu_tilde(n, basis);
        sf.push_back(mt.squarefree);
        mus.push_back(adjoint(mt.op));
        mu.push_back(std::move(mt.op));
    }
    auto record = [&](RelationResult r) { report.results.push_back(std::move(r)); };
    auto label = [](const char* what, std::uint64_t n, std::uint64_t m) {
        return std::string(what) + "[" + std::to_string(n) + "," + std::to_string(m) + "]";
    };

    for (std::uint64_t n = 1; n <= max_gen; ++n) {
        for (std::uint64_t m = 1; m <= max_gen; ++m) {
            if (sf[n] && sf[m]) {
                const auto nm = compose(mu[n], mu[m]);
                if (std::gcd(n, m) != 1) {
                    record(detail::compare_columns(label("mu_n mu_m = 0", n, m), nm, zero, basis, 0, 0.0));
                } else {
                    record(detail::compare_columns(label("mu_n mu_m = mu_nm", n, m), nm, mu_tilde(n * m, basis).op,
                                                basis, n * m, 0.0));
                    record(detail::compare_columns(label("mu_n mu_m = mu_m mu_n", n, m), nm, compose(mu[m], mu[n]),
                                                basis, n * m, 0.0));
                    record(detail::compare_columns(label("mu*_m mu_n = mu_n mu*_m", n, m), compose(mus[m], mu[n]),
                                                compose(mu[n], mus[m]), basis, n, 0.0));
                }
            }
            // Pi_F mu_n mu_m^* Pi_F = Pi_F mu_n Pi_F mu_m^* Pi_F, any n, m.
            const auto lhs = compress(represent(BCMonomial{GroupRingElement::unit(), n, m}, rep), basis);
            const auto rhs = compose(compress(represent(BCMonomial::mu(n), rep), basis),
                                     compress(represent(BCMonomial::mu_star(m), rep), basis));
            record(detail::compare_columns(label("compression multiplicative", n, m), lhs, rhs, basis, n, 0.0));
        }
        if (!sf[n])
            continue;
        const auto p = compose(mus[n], mu[n]);
        const auto q = compose(mu[n], mus[n]);
        record(detail::compare_columns(label("P_n projection", n, n), compose(p, p), p, basis, 0, 0.0));
        record(detail::compare_columns(label("P_n selfadjoint", n, n), adjoint(p), p, basis, 0, 0.0));
        record(detail::compare_columns(label("Q_n projection", n, n), compose(q, q), q, basis, 0, 0.0));
        record(detail::compare_columns(label("Q_n selfadjoint", n, n), adjoint(q), q, basis, 0, 0.0));
        if (detail::is_prime(n))
            record(detail::compare_columns(label("P_p + Q_p = 1", n, n), add(p, q), id, basis, n, 0.0));
        for (const QZ& r : rs) {
            const auto x = GroupRingElement::e(r);
            const auto er = gas_group_element(x, basis);
            const auto sr = gas_group_element(x.sigma(n), basis);
            const auto rr = gas_group_element(x.rho(n), basis);
            const std::string rl = "(r=" + r.str() + ")";
            record(detail::compare_columns(label("mu*_n e(r) = sigma_n(e(r)) mu*_n", n, n) + rl, compose(mus[n], er),
                                        compose(sr, mus[n]), basis, 0, tol));
            record(detail::compare_columns(label("mu_n e(r) = rho_n(e(r)) mu_n", n, n) + rl, compose(mu[n], er),
                                        compose(rr, mu[n]), basis, n, tol));
            record(detail::compare_columns(label("e(r) mu_n = mu_n sigma_n(e(r))", n, n) + rl, compose(er, mu[n]),
                                        compose(mu[n], sr), basis, n, tol));
        }
    }
    return report;
}

namespace detail {

inline void gas_require_above_one(double beta, const char* op)
{
    if (!(beta > 1.0))
        throw domain_error(std::string(op) + ": beta = " + std::to_string(beta) +
                           " must exceed 1; the squarefree Dirichlet series diverges otherwise");
}

// Sum_k w_k d_k with weights n_k^{-beta}, tail for |d| <= sup.
inline SeriesValue gas_boltzmann_trace(const TruncatedOperator& a, const FermionicBasis& basis, double beta, double sup)
{
    std::vector<cplx> w(basis.dim());
    for (std::size_t k = 0; k < w.size(); ++k)
        w[k] = std::pow(static_cast<double>(basis.indices()[k]), -beta);
    SeriesValue v = weighted_trace(a, w);
    v.tail_bound += sup * std::pow(static_cast<double>(basis.limit()), 1.0 - beta) / (beta - 1.0) +
                    rounding_allowance(std::abs(v.value) + sup, beta, basis.limit());
    return v;
}

} // namespace detail

// Tr_{H_F}(F e^{-beta |D|}) = Sum mu(n) n^{-beta}.
inline SeriesValue witten_index(double beta, const FermionicBasis& basis)
{
    detail::gas_require_above_one(beta, "witten_index");
    return detail::gas_boltzmann_trace(mobius_sign(basis), basis, beta, 1.0);
}

// Tr_{H_F}(|D~|^{-beta}) = Sum |mu(n)| n^{-beta}.
inline SeriesValue gas_zeta(double beta, const FermionicBasis& basis)
{
    detail::gas_require_above_one(beta, "gas_zeta");
    return detail::gas_boltzmann_trace(TruncatedOperator::identity(basis.dim(), basis.tag()), basis, beta, 1.0);
}

// Tr_{H_F}(F compress(pi(a)) e^{-beta |D|}); for a = e(r) this is Sum mu(n) zeta_r^n n^{-beta}.
inline SeriesValue eta_functional(const BCMonomial& a, double beta, const FermionicBasis& basis)
{
    detail::gas_require_above_one(beta, "eta_functional");
    const BCRepresentation rep(basis.limit(), basis.twist());
    const auto op = compress(represent(a, rep), basis);
    return detail::gas_boltzmann_trace(compose(mobius_sign(basis), op), basis, beta, a.x.coeff_abs_sum());
}

inline SeriesValue eta_functional(const QZ& r, double beta, const FermionicBasis& basis)
{
    detail::gas_require_above_one(beta, "eta_functional");
    const auto x = GroupRingElement::e(r);
    return detail::gas_boltzmann_trace(compose(mobius_sign(basis), gas_group_element(x, basis)), basis, beta, 1.0);
}

struct GasCertificate {
    std::uint64_t n = 0;
    int mobius_n = 0;
    std::vector<std::size_t> sizes;
    std::vector<double> twisted;
    std::vector<double> untwisted;
    std::vector<double> lipschitz;
};

// D = F |D| with F = mu, sigma(mu~_n) = mu(n) mu~_n.
inline GasCertificate gas_twisted_certificate(std::uint64_t n, const std::vector<std::size_t>& sizes)
{
    if (n < 2)
        throw domain_error("gas_twisted_certificate: n must be >= 2");
    GasCertificate cert;
    cert.n = n;
    cert.sizes = sizes;
    for (std::size_t size : sizes) {
        if (size < n)
            throw domain_error("gas_twisted_certificate: truncation smaller than n");
        const FermionicBasis basis(size);
        const int mu_n = basis.table().mobius(n);
        if (mu_n == 0)
            throw domain_error("gas_twisted_certificate: n = " + std::to_string(n) + " is not squarefree");
        cert.mobius_n = mu_n;
        const auto absd = gas_abs_dirac(basis);
        const auto d = compose(mobius_sign(basis), absd);
        const auto mt = mu_tilde(n, basis).op;
        const auto smt = scale(mt, static_cast<double>(mu_n));
        cert.twisted.push_back(op_norm(twisted_commutator(d, mt, smt)).value);
        cert.untwisted.push_back(op_norm(commutator(d, mt)).value);
        cert.lipschitz.push_back(op_norm(twisted_commutator(absd, mt, smt)).value);
    }
    return cert;
}

} // namespace ncqsm
