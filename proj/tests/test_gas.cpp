#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "ncqsm/gas.hpp"

using namespace ncqsm;

namespace {

constexpr double pi = std::numbers::pi;

const FermionicBasis& basis_1e6()
{
    static const FermionicBasis b(1'000'000);
    return b;
}

} // namespace

TEST(FermionicBasis, ListsExactlyTheSquarefreeIntegers)
{
    const FermionicBasis b(30);
    const std::vector<std::uint64_t> expected = {1, 2, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 19, 21, 22, 23, 26, 29, 30};
    EXPECT_EQ(b.indices(), expected);
    EXPECT_EQ(b.position(4), no_target);
    EXPECT_EQ(b.position(30), expected.size() - 1);
    EXPECT_EQ(b.position(31), no_target);
    for (std::uint64_t n = 1; n <= 1000; ++n)
        EXPECT_EQ(trial_squarefree(n), sieve(1000).squarefree(n)) << n;
}

TEST(Compress, IdentityAndGenerators)
{
    const BCRepresentation rep(30);
    const FermionicBasis b(rep);
    const auto id = compress(represent(BCMonomial::e(QZ(0, 1)), rep), b);
    EXPECT_EQ(max_entry_difference(id, TruncatedOperator::identity(b.dim(), b.tag())), 0.0);

    const auto m2 = compress(represent(BCMonomial::mu(2), rep), b);
    EXPECT_EQ(m2.entry(b.position(6), b.position(3)), cplx(1.0));
    EXPECT_TRUE(m2.column(b.position(2)).empty());

    // mu_4 lands only on multiples of 4: everything is killed.
    const auto m4 = compress(represent(BCMonomial::mu(4), rep), b);
    EXPECT_EQ(op_norm(m4).value, 0.0);
    // dense oracle
    const DenseMatrix full = represent(BCMonomial::mu(2), rep).to_dense();
    for (std::size_t i = 0; i < b.dim(); ++i)
        for (std::size_t j = 0; j < b.dim(); ++j)
            EXPECT_EQ(m2.entry(i, j), full(static_cast<Eigen::Index>(b.indices()[i] - 1),
                                           static_cast<Eigen::Index>(b.indices()[j] - 1)));
    EXPECT_THROW(compress(TruncatedOperator::identity(30, "other"), b), structural_error);
}

TEST(Compress, IsStarMap)
{
    const BCRepresentation rep(400);
    const FermionicBasis b(rep);
    for (std::uint64_t n : {1u, 2u, 3u, 4u, 6u})
        for (std::uint64_t m : {1u, 5u, 9u}) {
            const BCMonomial a{GroupRingElement::e(QZ(1, 3), cplx(0.5, 2.0)), n, m};
            const auto op = represent(a, rep);
            EXPECT_LT(max_entry_difference(compress(adjoint(op), b), adjoint(compress(op, b))), 1e-15);
        }
}

TEST(MuTilde, NonSquarefreeIsFlaggedZero)
{
    const FermionicBasis b(100);
    const auto m4 = mu_tilde(4, b);
    EXPECT_FALSE(m4.squarefree);
    EXPECT_FALSE(m4.note.empty());
    EXPECT_EQ(op_norm(m4.op).value, 0.0);
    EXPECT_TRUE(mu_tilde(6, b).squarefree);
    EXPECT_TRUE(mu_tilde(101 * 103, b).squarefree);
}

TEST(MuTilde, RelationsByHand)
{
    const FermionicBasis b(100);
    const auto m2 = mu_tilde(2, b).op;
    const auto m3 = mu_tilde(3, b).op;
    EXPECT_EQ(op_norm(compose(m2, m2)).value, 0.0);
    const auto m6 = mu_tilde(6, b).op;
    EXPECT_EQ(max_entry_difference(compose(m2, m3), m6), 0.0);
    const auto p = compose(adjoint(m2), m2);
    const auto q = compose(m2, adjoint(m2));
    // P_2 + Q_2 = 1 on columns l <= N/2
    const auto s = add(p, q);
    for (std::size_t k = 0; k < b.dim(); ++k) {
        if (b.indices()[k] > 50)
            break;
        EXPECT_EQ(s.diagonal_entry(k), cplx(1.0)) << b.indices()[k];
    }
}

TEST(RelationSuite, SmallRunPasses)
{
    const auto report = relation_suite(2000, 12, {QZ(0, 1), QZ(1, 2), QZ(1, 3)});
    EXPECT_EQ(report.failures(), 0u);
    EXPECT_GT(report.results.size(), 300u);
}

TEST(RelationSuite, FullRunPasses)
{
    const auto report = relation_suite(10'000, 30, {QZ(0, 1), QZ(1, 2), QZ(1, 3)});
    std::size_t failures = 0;
    for (const auto& r : report.results)
        if (!r.pass) {
            ++failures;
            ADD_FAILURE() << r.relation_id << " column " << r.witness.column << " row " << r.witness.row << " "
                          << r.witness.lhs << " vs " << r.witness.rhs;
        }
    EXPECT_EQ(failures, 0u);
}

TEST(RelationSuite, ReportsWitnessOnFailure)
{
    const FermionicBasis b(50);
    const auto m2 = mu_tilde(2, b).op;
    const auto m3 = mu_tilde(3, b).op;
    const auto r = detail::compare_columns("deliberately false", m2, m3, b, 0, 0.0);
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.witness.column, 1u);
    EXPECT_EQ(r.witness.row, 2u);
    EXPECT_EQ(r.witness.lhs, cplx(1.0));
    EXPECT_EQ(r.witness.rhs, cplx(0.0));
}

TEST(WittenIndex, ReciprocalZeta)
{
    const auto& b = basis_1e6();
    const auto w2 = witten_index(2.0, b);
    EXPECT_TRUE(w2.contains(6.0 / (pi * pi)));
    EXPECT_NEAR(w2.value.real(), 6.0 / (pi * pi), 1e-5);
    const auto z3 = dirichlet_series(b.table(), ArithCoeff::one, 3.0, b.limit());
    const auto inv = series_reciprocal(z3);
    const auto w3 = witten_index(3.0, b);
    EXPECT_LE(std::abs(w3.value - inv.value), w3.tail_bound + inv.tail_bound);
    EXPECT_TRUE(gas_zeta(2.0, b).contains(15.0 / (pi * pi)));
    EXPECT_THROW(witten_index(1.0, b), domain_error);
}

TEST(WittenIndex, TimesZetaIsOne)
{
    const auto& b = basis_1e6();
    for (double beta : {1.5, 2.0, 3.0, 5.0}) {
        const auto w = witten_index(beta, b);
        const auto z = dirichlet_series(b.table(), ArithCoeff::one, beta, b.limit());
        const double bound = w.tail_bound * (std::abs(z.value) + z.tail_bound) + std::abs(w.value) * z.tail_bound;
        EXPECT_LE(std::abs(w.value * z.value - 1.0), bound + 1e-15) << beta;
    }
}

TEST(GasCertificate, MobiusOddGenerator)
{
    const auto cert = gas_twisted_certificate(2, {100, 1000, 10'000});
    EXPECT_EQ(cert.mobius_n, -1);
    for (double t : cert.twisted)
        EXPECT_NEAR(t, std::log(2.0), 1e-12);
    EXPECT_TRUE(strictly_increasing(cert.lipschitz));
    // largest squarefree odd l with 2 l <= 10^4
    std::uint64_t best = 0;
    for (std::uint64_t l = 1; 2 * l <= 10'000; ++l)
        if (l % 2 == 1 && trial_squarefree(l))
            best = l;
    EXPECT_NEAR(cert.lipschitz[2], std::log(2.0) + 2.0 * std::log(static_cast<double>(best)), 1e-10);

    // dense oracle at N = 50
    const FermionicBasis b(50);
    const DenseMatrix d = compose(mobius_sign(b), gas_abs_dirac(b)).to_dense();
    const DenseMatrix m = mu_tilde(2, b).op.to_dense();
    EXPECT_NEAR(detail::largest_singular_value(d * m + m * d), std::log(2.0), 1e-12);
}

TEST(GasCertificate, MobiusEvenGeneratorIsBounded)
{
    const auto cert = gas_twisted_certificate(6, {100, 1000, 10'000});
    EXPECT_EQ(cert.mobius_n, 1);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(cert.lipschitz[i], std::log(6.0), 1e-12);
        EXPECT_NEAR(cert.twisted[i], std::log(6.0), 1e-12);
    }
    EXPECT_THROW(gas_twisted_certificate(4, {100}), domain_error);
}

TEST(GasSign, CommutesWithAbsDirac)
{
    const FermionicBasis b(1000);
    EXPECT_EQ(op_norm(commutator(mobius_sign(b), gas_abs_dirac(b))).value, 0.0);
}

TEST(EtaFunctional, Values)
{
    const auto& b = basis_1e6();
    const auto w = witten_index(2.0, b);
    EXPECT_EQ(eta_functional(QZ(0, 1), 2.0, b).value, w.value);

    // sieve-weighted oracle at two truncations
    const FermionicBasis small(200'000);
    const auto e_big = eta_functional(QZ(1, 2), 2.0, b);
    const auto e_small = eta_functional(QZ(1, 2), 2.0, small);
    EXPECT_LT(std::abs(e_big.value - e_small.value), 1e-5);
    EXPECT_LE(std::abs(e_big.value - e_small.value), e_small.tail_bound);
    const auto t = sieve(1'000'000);
    const auto direct = dirichlet_series(
        [&](std::size_t n) { return cplx(t.mobius(n) * (n % 2 ? -1.0 : 1.0)); }, 2.0, 1'000'000, 1.0);
    EXPECT_LT(std::abs(direct.value - e_big.value), 1e-12);

    const BCMonomial off{GroupRingElement::e(QZ(1, 3)), 2, 3};
    EXPECT_EQ(eta_functional(off, 2.0, FermionicBasis(10'000)).value, cplx(0.0));
    // operator path on e(r) agrees with the BCMonomial path
    const FermionicBasis mid(10'000);
    EXPECT_LT(std::abs(eta_functional(BCMonomial::e(QZ(1, 3)), 3.0, mid).value -
                       eta_functional(QZ(1, 3), 3.0, mid).value),
              1e-15);
}
