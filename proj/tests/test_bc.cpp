#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ncqsm/bc.hpp"

using namespace ncqsm;

namespace {

constexpr double pi = std::numbers::pi;

const BCRepresentation& rep_1e6()
{
    static const BCRepresentation rep(1'000'000);
    return rep;
}

// Random monomial with small indices and a few roots of unity.
BCMonomial random_monomial(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> idx(1, 6);
    std::uniform_int_distribution<int> den(1, 6);
    std::normal_distribution<double> g;
    BCMonomial a;
    a.x = GroupRingElement();
    const int terms = 1 + static_cast<int>(rng() % 2);
    for (int t = 0; t < terms; ++t) {
        const int q = den(rng);
        a.x.add(QZ(static_cast<std::int64_t>(rng() % static_cast<unsigned>(q)), q), cplx(g(rng), g(rng)));
    }
    a.n = static_cast<std::uint64_t>(idx(rng));
    a.m = static_cast<std::uint64_t>(idx(rng));
    return a;
}

// Largest entry difference restricted to columns l (1-based) with l * reach <= N.
double unclipped_difference(const TruncatedOperator& a, const TruncatedOperator& b, std::uint64_t reach)
{
    double m = 0.0;
    for (std::size_t l = 1; l * reach <= a.dim(); ++l) {
        auto ca = a.column(l - 1);
        auto cb = b.column(l - 1);
        std::map<std::size_t, cplx> diff;
        for (auto& [i, v] : ca)
            diff[i] += v;
        for (auto& [i, v] : cb)
            diff[i] -= v;
        for (auto& [i, v] : diff)
            m = std::max(m, std::abs(v));
    }
    return m;
}

} // namespace

TEST(GroupRing, SigmaRhoRelations)
{
    const auto x = GroupRingElement::e(QZ(1, 4), 2.0) + GroupRingElement::e(QZ(2, 3), cplx(0.0, 1.0));
    for (std::uint64_t n : {2u, 3u, 5u}) {
        // sigma_n rho_n = id
        const auto back = x.rho(n).sigma(n);
        ASSERT_EQ(back.terms().size(), x.terms().size());
        for (const auto& [r, c] : x.terms())
            EXPECT_NEAR(std::abs(back.terms().at(r) - c), 0.0, 1e-15);
    }
    // e(r) e(s) = e(r + s)
    const auto p = GroupRingElement::e(QZ(1, 2)) * GroupRingElement::e(QZ(1, 2));
    EXPECT_EQ(p.terms().size(), 1u);
    EXPECT_EQ(p.terms().begin()->first, QZ(0, 1));
}

TEST(BCRepresent, UnitIsIdentity)
{
    const BCRepresentation rep(50);
    const auto op = represent(BCMonomial::e(QZ(0, 1)), rep);
    EXPECT_EQ(max_entry_difference(op, TruncatedOperator::identity(50, rep.tag())), 0.0);
}

TEST(BCRepresent, RangeProjectionOfMu2)
{
    const BCRepresentation rep(20);
    const auto p2 = represent(BCMonomial{GroupRingElement::unit(), 2, 2}, rep);
    EXPECT_EQ(p2.structure(), Structure::diagonal);
    const DenseMatrix dense = represent(BCMonomial::mu(2), rep).to_dense() * represent(BCMonomial::mu_star(2), rep).to_dense();
    for (Eigen::Index i = 0; i < 20; ++i) {
        EXPECT_EQ(p2.diagonal_entry(static_cast<std::size_t>(i)), cplx((i + 1) % 2 == 0 ? 1.0 : 0.0));
        for (Eigen::Index j = 0; j < 20; ++j)
            EXPECT_EQ(dense(i, j), p2.entry(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
    }
}

TEST(BCRepresent, RhoAndSigmaOnTruncation)
{
    // N = 24, q = 4.
    const BCRepresentation rep(24);
    const auto x = GroupRingElement::e(QZ(1, 4));
    const auto rho2 = represent(BCMonomial::group(GroupRingElement::e(QZ(1, 2)).rho(2)), rep);
    EXPECT_EQ(rho2.structure(), Structure::diagonal);
    // rho_2(e(1/2)) = mu_2 e(1/2) mu_2^*: on e_l it is zeta_{1/2}^{l/2} when l is even, else 0.
    const DenseMatrix oracle = represent(BCMonomial::mu(2), rep).to_dense() *
                               represent(BCMonomial::e(QZ(1, 2)), rep).to_dense() *
                               represent(BCMonomial::mu_star(2), rep).to_dense();
    EXPECT_LT((rho2.to_dense() - oracle).cwiseAbs().maxCoeff(), 1e-15);

    const auto sr = represent(BCMonomial::group(x.rho(2).sigma(2)), rep);
    EXPECT_LT(max_entry_difference(sr, represent(BCMonomial::group(x), rep)), 1e-15);

    // rho_n sigma_n (x) = pi_n x
    const auto rs = represent(BCMonomial::group(x.sigma(2).rho(2)), rep);
    const auto pi_x = compose(represent(BCMonomial{GroupRingElement::unit(), 2, 2}, rep), represent(BCMonomial::group(x), rep));
    EXPECT_LT(max_entry_difference(rs, pi_x), 1e-15);
}

TEST(BCRepresent, RelationsOnUnclippedIndices)
{
    const std::size_t n_max = 600;
    const BCRepresentation rep(n_max);
    for (std::uint64_t n : {2u, 3u, 5u, 6u}) {
        const auto mu = represent(BCMonomial::mu(n), rep);
        const auto mus = represent(BCMonomial::mu_star(n), rep);
        // mu_n^* mu_n = 1 on e_l with n l <= N
        EXPECT_EQ(unclipped_difference(compose(mus, mu), TruncatedOperator::identity(n_max, rep.tag()), n), 0.0);
        for (const QZ r : {QZ(1, 2), QZ(1, 3), QZ(3, 7)}) {
            const auto er = represent(BCMonomial::e(r), rep);
            const auto sr = represent(BCMonomial::e(r.times(static_cast<std::int64_t>(n))), rep);
            // mu_n^* e(r) = sigma_n(e(r)) mu_n^*, no clipping involved
            EXPECT_LT(max_entry_difference(compose(mus, er), compose(sr, mus)), 1e-12);
            // e(r) mu_n = mu_n sigma_n(e(r))
            EXPECT_LT(max_entry_difference(compose(er, mu), compose(mu, sr)), 1e-12);
        }
    }
}

TEST(BCRepresent, SymbolicProductMatchesOperatorProduct)
{
    std::mt19937_64 rng(101);
    const BCRepresentation rep(720);
    for (int trial = 0; trial < 60; ++trial) {
        const auto p = random_monomial(rng);
        const auto q = random_monomial(rng);
        const auto sym = represent(p * q, rep);
        const auto ops = compose(represent(p, rep), represent(q, rep));
        EXPECT_LT(unclipped_difference(sym, ops, p.n * q.n), 1e-12) << p.str() << " * " << q.str();
        EXPECT_LT(unclipped_difference(represent(adjoint(p), rep), adjoint(represent(p, rep)), p.n * p.m), 1e-12);
    }
}

TEST(BCRepresent, ClippingIsRecordedAndEscalated)
{
    EXPECT_DOUBLE_EQ(clipped_fraction(BCMonomial::mu(2), 100), 0.5);
    EXPECT_DOUBLE_EQ(clipped_fraction(BCMonomial::mu_star(2), 100), 0.0);
    EXPECT_DOUBLE_EQ(clipped_fraction(BCMonomial::e(QZ(1, 2)), 100), 0.0);
    const BCRepresentation strict(100, 1, true, 0.4);
    EXPECT_THROW(represent(BCMonomial::mu(2), strict), truncation_error);
    EXPECT_NO_THROW(represent(BCMonomial::mu(2), BCRepresentation(100)));
    EXPECT_THROW(represent(BCMonomial::e(QZ(1, 4)), BCRepresentation(10, 2)), domain_error);
}

TEST(GibbsState, HandValues)
{
    const auto& rep = rep_1e6();
    EXPECT_NEAR(gibbs_state(BCMonomial::e(QZ(0, 1)), 2.5, rep).value.real(), 1.0, 1e-14);
    const auto half = gibbs_state(BCMonomial::e(QZ(1, 2)), 2.0, rep);
    EXPECT_TRUE(half.contains(-0.5)) << half.value << " " << half.tail_bound;
    EXPECT_NEAR(half.value.real(), -0.5, 1e-5);
    const auto p2 = gibbs_state(BCMonomial{GroupRingElement::unit(), 2, 2}, 2.0, rep);
    EXPECT_TRUE(p2.contains(0.25));
    EXPECT_EQ(gibbs_state(BCMonomial::mu(2), 2.0, rep).value, cplx(0.0));
    EXPECT_THROW(gibbs_state(BCMonomial::e(QZ(1, 2)), 1.0, rep), domain_error);
}

TEST(GibbsState, PolylogOverZeta)
{
    const BCRepresentation rep(200'000);
    for (const QZ r : {QZ(1, 3), QZ(2, 5)}) {
        for (double beta : {2.0, 3.0}) {
            const auto li = polylog_root_of_unity(r, beta, rep.size());
            const auto z = dirichlet_series(rep.table(), ArithCoeff::one, beta, rep.size());
            const auto oracle = series_ratio(li, z);
            const auto v = gibbs_state(BCMonomial::e(r), beta, rep);
            EXPECT_LE(std::abs(v.value - oracle.value), v.tail_bound + oracle.tail_bound);
        }
    }
}

TEST(GibbsState, PositiveAndNormalized)
{
    std::mt19937_64 rng(7);
    const BCRepresentation rep(20'000);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_monomial(rng);
        const auto v = gibbs_state(adjoint(a) * a, 2.0, rep);
        EXPECT_GE(v.value.real(), -v.tail_bound);
        EXPECT_LE(std::abs(v.value.imag()), v.tail_bound + 1e-15);
    }
}

TEST(GibbsMobiusForm, AgreesWithPolylogPath)
{
    const auto& rep = rep_1e6();
    const auto unit = gibbs_state_mobius_form(QZ(0, 1), 2.0, rep);
    EXPECT_EQ(unit.value, cplx(1.0));
    const auto a = gibbs_state_mobius_form(QZ(1, 2), 2.0, rep);
    const auto b = gibbs_state(BCMonomial::e(QZ(1, 2)), 2.0, rep);
    EXPECT_LT(std::abs(a.value - b.value), 1e-6);
    const auto c = gibbs_state_mobius_form(QZ(1, 3), 3.0, rep);
    const auto d = gibbs_state(BCMonomial::e(QZ(1, 3)), 3.0, rep);
    EXPECT_LT(std::abs(c.value - d.value), 1e-8);
    EXPECT_LE(std::abs(c.value - d.value), c.tail_bound + d.tail_bound);
}

TEST(Kms, ExamplesAtLargeTruncation)
{
    const auto& rep = rep_1e6();
    const auto r1 = kms_residual(BCMonomial::mu(2), BCMonomial::mu_star(2), 2.0, rep);
    EXPECT_LT(r1.residual, 1e-8);
    EXPECT_NEAR(r1.lhs.real(), 0.25, 1e-6);
    const auto r2 = kms_residual(BCMonomial::e(QZ(1, 3)), BCMonomial::e(QZ(1, 2)), 2.0, rep);
    EXPECT_EQ(r2.residual, 0.0);
    BCMonomial b{GroupRingElement::e(QZ(1, 2)), 1, 2};
    const auto r3 = kms_residual(BCMonomial::mu(2), b, 3.0, rep);
    EXPECT_LT(r3.residual, 1e-8);
    EXPECT_TRUE(r3.pass);
}

TEST(Kms, DenseOracleAtSmallTruncation)
{
    const BCRepresentation rep(1000);
    const double beta = 3.0;
    const BCMonomial a = BCMonomial::mu(2);
    const BCMonomial b{GroupRingElement::e(QZ(1, 2)), 1, 2};
    const DenseMatrix pa = represent(a, rep).to_dense();
    const DenseMatrix pb = represent(b, rep).to_dense();
    Eigen::VectorXcd e(1000);
    for (Eigen::Index k = 0; k < 1000; ++k)
        e(k) = std::pow(static_cast<double>(k + 1), -beta);
    const DenseMatrix E = e.asDiagonal();
    const DenseMatrix Einv = e.cwiseInverse().asDiagonal();
    const cplx z = e.sum();
    const cplx lhs = (pa * pb * E).trace() / z;
    const cplx rhs = (pb * (E * pa * Einv) * E).trace() / z;
    EXPECT_LT(std::abs(lhs - rhs), 1e-14);
    const auto r = kms_residual(a, b, beta, rep);
    EXPECT_LT(std::abs(r.lhs - lhs), 1e-14);
    EXPECT_LT(std::abs(r.rhs - rhs), 1e-14);
}

TEST(Kms, TwistedExamples)
{
    const auto& rep = rep_1e6();
    EXPECT_EQ(twisted_kms_residual(BCMonomial::e(QZ(1, 3)), BCMonomial::e(QZ(2, 5)), 2.0, rep).residual, 0.0);
    const auto r1 = twisted_kms_residual(BCMonomial::mu(2), BCMonomial::mu_star(2), 2.0, rep);
    EXPECT_LT(r1.residual, 1e-8);
    // Both sides equal Sum lambda(2k) (2k)^{-2}.
    double oracle = 0.0;
    for (std::size_t k = 1; 2 * k <= rep.size(); ++k)
        oracle += rep.table().liouville(2 * k) * std::pow(2.0 * static_cast<double>(k), -2.0);
    EXPECT_NEAR(r1.lhs.real(), oracle, 1e-12);
    const auto r2 = twisted_kms_residual(BCMonomial::mu(3), BCMonomial{GroupRingElement::e(QZ(1, 2)), 1, 3}, 3.0, rep);
    EXPECT_LT(r2.residual, 1e-8);
}

TEST(LiouvilleSign, InvolutionAndCovariance)
{
    const BCRepresentation rep(500);
    const auto f = liouville_sign(rep);
    const auto id = TruncatedOperator::identity(500, rep.tag());
    EXPECT_EQ(max_entry_difference(compose(f, f), id), 0.0);
    EXPECT_EQ(op_norm(commutator(f, hamiltonian(rep))).value, 0.0);

    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = random_monomial(rng);
        const auto lhs = compose(f, compose(represent(a, rep), f));
        EXPECT_LT(max_entry_difference(lhs, represent(sigma_automorphism(a), rep)), 1e-15);
        const auto twice = sigma_automorphism(sigma_automorphism(a));
        EXPECT_LT(max_entry_difference(represent(twice, rep), represent(a, rep)), 1e-15);
    }
    const auto se = sigma_automorphism(BCMonomial::e(QZ(1, 3)));
    EXPECT_EQ(se.x.terms().at(QZ(1, 3)), cplx(1.0));
    EXPECT_EQ(sigma_automorphism(BCMonomial::mu(2)).x.terms().at(QZ(0, 1)), cplx(-1.0));
    EXPECT_EQ(sigma_automorphism(sigma_automorphism(BCMonomial::mu(6))).x.terms().at(QZ(0, 1)), cplx(1.0));
}

TEST(CommutatorCertificate, LiouvilleOddGenerator)
{
    const auto cert = twisted_commutator_certificate(2, {100, 1000, 10'000});
    EXPECT_EQ(cert.liouville_n, -1);
    EXPECT_TRUE(cert.twisted_constant(std::log(2.0), 1e-12));
    EXPECT_TRUE(strictly_increasing(cert.untwisted));
    EXPECT_TRUE(strictly_increasing(cert.lipschitz));
    for (std::size_t i = 0; i < cert.sizes.size(); ++i) {
        const double n = static_cast<double>(cert.sizes[i]);
        // max over l <= N/2 of log(2l) + log(l)
        EXPECT_NEAR(cert.untwisted[i], std::log(n) + std::log(n / 2.0), 1e-10);
    }
    // dense oracle at N = 50
    const BCRepresentation rep(50);
    DenseMatrix d = compose(liouville_sign(rep), hamiltonian(rep)).to_dense();
    DenseMatrix mu = represent(BCMonomial::mu(2), rep).to_dense();
    const DenseMatrix tw = d * mu + mu * d;
    EXPECT_NEAR(detail::largest_singular_value(tw), std::log(2.0), 1e-12);
}

TEST(CommutatorCertificate, LiouvilleEvenGeneratorIsBounded)
{
    const auto cert = twisted_commutator_certificate(4, {100, 1000, 10'000});
    EXPECT_EQ(cert.liouville_n, 1);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(cert.untwisted[i], std::log(4.0), 1e-12);
        EXPECT_NEAR(cert.twisted[i], std::log(4.0), 1e-12);
    }
    EXPECT_THROW(twisted_commutator_certificate(1, {10}), domain_error);
}

TEST(BcEta, ClosedForms)
{
    const auto& rep = rep_1e6();
    EXPECT_TRUE(bc_eta(2.0, rep).contains(pi * pi / 15.0));
    const auto e3 = bc_eta(3.0, rep);
    const auto oracle = series_ratio(dirichlet_series(rep.table(), ArithCoeff::one, 6.0, rep.size()),
                                     dirichlet_series(rep.table(), ArithCoeff::one, 3.0, rep.size()));
    EXPECT_LE(std::abs(e3.value - oracle.value), e3.tail_bound + oracle.tail_bound);
    EXPECT_TRUE(bc_partition(2.0, rep).contains(pi * pi / 6.0));
    EXPECT_THROW(bc_eta(0.9, rep), domain_error);
}
