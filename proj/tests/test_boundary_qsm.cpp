#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ncqsm/boundary_qsm.hpp"

using namespace ncqsm;

namespace {

// Tree distance between vertices x and z: |x^{-1} z|.
long tree_distance(const Word& x, const Word& z) { return static_cast<long>(word_product(word_inverse(x), z).size()); }

// B(x, y, xi) from the defining limit, walking far enough along xi.
long busemann_by_distance(const Word& x, const Word& y, const Word& xi)
{
    return tree_distance(x, xi) - tree_distance(y, xi);
}

Word ray(const std::string& prefix, char tail, std::size_t length, unsigned g)
{
    std::string s = prefix;
    while (s.size() < length)
        s += tail;
    return parse_word(s, g);
}

BoundaryFunction random_function(unsigned g, unsigned depth, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    BoundaryFunction f{g, depth, std::vector<cplx>(word_count(g, depth))};
    for (auto& v : f.values)
        v = cplx(u(rng), u(rng));
    return f;
}

// pi(m) built column by column from its definition on functions at depth M + |gamma|.
DenseMatrix literal_representation(const CrossedMonomial& m, const CrossedSpace& space)
{
    const unsigned g = space.g();
    const unsigned depth = space.depth();
    const double q = 2.0 * g - 1.0;
    const auto n = static_cast<Eigen::Index>(space.dim());
    const double scale = std::sqrt(static_cast<double>(space.cylinders()));
    const auto rho_half =
        function_map(busemann_function(m.gamma, g), [q](cplx b) { return cplx(std::pow(q, 0.5 * b.real())); });
    DenseMatrix out = DenseMatrix::Zero(n, n);
    for (std::size_t k = 0; k < space.group_size(); ++k) {
        const std::size_t target = space.group_index(word_product(m.gamma, space.element(k)));
        if (target == no_target)
            continue;
        for (std::size_t v = 0; v < space.cylinders(); ++v) {
            auto h = BoundaryFunction::indicator(word_at(g, depth, v), g);
            for (auto& x : h.values)
                x *= scale;
            const auto image = expectation(pointwise_product(m.f, pointwise_product(rho_half, translate(h, m.gamma))), depth);
            for (std::size_t w = 0; w < space.cylinders(); ++w)
                out(static_cast<Eigen::Index>(space.position(w, target)), static_cast<Eigen::Index>(space.position(v, k))) =
                    image.values[w] / scale;
        }
    }
    return out;
}

} // namespace

TEST(Busemann, SpecExamplesAndLimitOracle)
{
    const unsigned g = 2;
    EXPECT_EQ(busemann(parse_word("a", g), ray("", 'a', 5, g)), 1);
    EXPECT_EQ(busemann(parse_word("a", g), ray("", 'b', 5, g)), -1);
    EXPECT_EQ(busemann(parse_word("ab", g), parse_word("abab", g)), 2);
    EXPECT_EQ(busemann(parse_word("ab", g), parse_word("baba", g)), -2);
    EXPECT_THROW(busemann(parse_word("ab", g), parse_word("a", g)), resolution_error);

    const auto words3 = enumerate_words(g, 3);
    for (unsigned n = 0; n <= 2; ++n)
        for (const auto& gamma : enumerate_words(g, n))
            for (const auto& xi : enumerate_words(g, 5))
                EXPECT_EQ(busemann(gamma, xi), busemann_by_distance({}, gamma, xi));
}

TEST(Busemann, CocycleIdentities)
{
    const unsigned g = 2;
    std::mt19937_64 rng(3);
    const auto verts = enumerate_words(g, 2);
    const auto rays = enumerate_words(g, 8);
    std::uniform_int_distribution<std::size_t> pv(0, verts.size() - 1), pr(0, rays.size() - 1);
    for (int trial = 0; trial < 500; ++trial) {
        const auto& x = verts[pv(rng)];
        const auto& y = verts[pv(rng)];
        const auto& z = verts[pv(rng)];
        const auto& xi = rays[pr(rng)];
        EXPECT_EQ(busemann(x, y, xi), -busemann(y, x, xi));
        EXPECT_EQ(busemann(x, y, xi) + busemann(y, z, xi), busemann(x, z, xi));
        EXPECT_EQ(busemann(x, y, xi), busemann_by_distance(x, y, xi));
        const auto& gamma = verts[pv(rng)];
        // gamma xi keeps at least 6 resolved letters
        EXPECT_EQ(busemann(word_product(gamma, x), word_product(gamma, y), word_product(gamma, xi)),
                  busemann(x, y, xi));
    }
}

TEST(RadonNikodym, EqualsBusemannExactly)
{
    for (unsigned g : {2u, 3u})
        for (const char* gamma : {"a", "ab", "Ab", "abA"}) {
            const Word w = parse_word(gamma, g);
            const auto r = rn_equals_busemann(w, 5, g);
            EXPECT_EQ(r.max_deviation, 0);
            EXPECT_EQ(r.max_chain_deviation, 0);
        }
    const auto rho = radon_nikodym(parse_word("a", 2), 2, 2);
    EXPECT_EQ(rho[word_index(parse_word("ab", 2), 2)], 3);
    EXPECT_EQ(rho[word_index(parse_word("ba", 2), 2)], BigRational(1, 3));
    EXPECT_THROW(radon_nikodym(parse_word("ab", 2), 2, 2), resolution_error);
}

TEST(CrossedRepresentation, MatchesLiteralOracle)
{
    const CrossedSpace space(2, 3, 2);
    std::mt19937_64 rng(5);
    for (const char* gamma : {"1", "a", "B", "ab"}) {
        const CrossedMonomial m{random_function(2, 2, rng), parse_word(gamma, 2)};
        const auto op = represent_crossed(m, space);
        EXPECT_EQ(op.structure(), Structure::block_monomial);
        EXPECT_LT((op.to_dense() - literal_representation(m, space)).norm(), 1e-12) << gamma;
    }
    EXPECT_EQ(max_entry_difference(represent_crossed(CrossedMonomial::unit(2), space),
                                   TruncatedOperator::identity(space.dim(), space.tag())),
              0.0);
    EXPECT_THROW(represent_crossed(CrossedMonomial::group(parse_word("aba", 2), 2), space), resolution_error);
}

TEST(CrossedRepresentation, IsStarPreservingAndUnitaryOnUnclipped)
{
    const CrossedSpace space(2, 3, 2);
    std::mt19937_64 rng(9);
    const CrossedMonomial m{random_function(2, 1, rng), parse_word("ab", 2)};
    EXPECT_LT(max_entry_difference(represent_crossed(adjoint(m), space), adjoint(represent_crossed(m, space))), 1e-14);

    const auto ua = CrossedMonomial::group(parse_word("a", 2), 2);
    const DenseMatrix u = represent_crossed(ua, space).to_dense();
    const DenseMatrix prod = u.adjoint() * u;
    const auto mask = unclipped_columns(ua, space);
    std::size_t checked = 0;
    for (Eigen::Index j = 0; j < prod.cols(); ++j)
        if (mask[static_cast<std::size_t>(j)]) {
            ++checked;
            for (Eigen::Index i = 0; i < prod.rows(); ++i)
                EXPECT_NEAR(std::abs(prod(i, j) - cplx(i == j ? 1.0 : 0.0)), 0.0, 1e-12);
        }
    EXPECT_GT(checked, 0u);
    EXPECT_LE(op_norm(represent_crossed(ua, space)).value, 1.0 + 1e-12);
    EXPECT_GT(clipped_fraction(ua, space), 0.0);
}

TEST(CrossedRepresentation, ProductRuleOnUnclippedVectors)
{
    // A vector x is unclipped for m when the compression loses nothing:
    // ||pi(U_gamma) x|| = ||x|| and gamma gamma' stays inside the cutoff.
    const CrossedSpace space(2, 4, 2);
    std::mt19937_64 rng(13);
    for (auto [g1, g2] : {std::pair{"a", "b"}, std::pair{"A", "a"}, std::pair{"ab", "A"}, std::pair{"b", "1"}}) {
        const CrossedMonomial m1{random_function(2, 1, rng), parse_word(g1, 2)};
        const CrossedMonomial m2{random_function(2, 1, rng), parse_word(g2, 2)};
        const auto p2 = represent_crossed(m2, space);
        const auto lhs = compose(represent_crossed(m1, space), p2);
        const auto rhs = represent_crossed(m1 * m2, space);
        const auto moved = compose(represent_crossed(CrossedMonomial::group(m1.gamma, 2), space), p2);
        const auto mask2 = unclipped_columns(m2, space);
        const DenseMatrix diff = subtract(lhs, rhs).to_dense();
        auto column_norm = [](const SparseColumn& c) {
            double s = 0.0;
            for (const auto& [i, v] : c)
                s += std::norm(v);
            return std::sqrt(s);
        };
        std::size_t checked = 0;
        for (std::size_t j = 0; j < space.dim(); ++j) {
            if (!mask2[j])
                continue;
            const double nx = column_norm(p2.column(j));
            if (nx == 0.0 || std::abs(column_norm(moved.column(j)) - nx) > 1e-13)
                continue;
            ++checked;
            EXPECT_LT(diff.col(static_cast<Eigen::Index>(j)).norm(), 1e-12) << g1 << " " << g2 << " col " << j;
        }
        EXPECT_GT(checked, 0u) << g1 << " " << g2;
    }
}

TEST(Hamiltonian, SpectrumAndTimeEvolution)
{
    const CrossedSpace small(2, 3, 2);
    const auto h = hamiltonian(small);
    for (const cplx& v : h.diagonal_values()) {
        EXPECT_EQ(v.imag(), 0.0);
        EXPECT_LE(std::abs(v.real()), 2.0);
        EXPECT_EQ(v.real(), std::round(v.real()));
    }

    const CrossedSpace space(2, 4, 3);
    std::mt19937_64 rng(17);
    EXPECT_LT(time_evolution_residual({random_function(2, 2, rng), {}}, 0.7, space), 1e-15);
    for (unsigned n = 0; n <= 2; ++n)
        for (const auto& gamma : enumerate_words(2, n))
            for (double t : {1.0, -0.3}) {
                const CrossedMonomial m{random_function(2, 1, rng), gamma};
                EXPECT_LT(time_evolution_residual(m, t, space), 1e-10) << word_string(gamma) << " " << t;
            }
}

TEST(PattersonSullivan, KmsAtCriticalExponentOnly)
{
    const unsigned g = 2;
    const auto a = CrossedMonomial::group(parse_word("a", g), g);
    const auto b = CrossedMonomial::group(parse_word("A", g), g);
    const double delta = std::log(3.0);
    EXPECT_LT(ps_kms_residual(a, b, g), 1e-10);
    EXPECT_GT(ps_kms_residual(a, b, delta + 0.2), 1e-3);
    EXPECT_GT(ps_kms_residual(a, b, delta - 0.2), 1e-3);
    // cylinder-sum oracle: integral of e^{beta B(x0, A x0, .)} is e^beta/4 + 3 e^{-beta}/4
    const double beta = delta + 0.2;
    EXPECT_NEAR(ps_kms_residual(a, b, beta), std::abs(1.0 - (std::exp(beta) / 4 + 3 * std::exp(-beta) / 4)), 1e-14);

    const auto scan = ps_kms_scan(a, b);
    EXPECT_EQ(scan.betas.size(), 21u);
    EXPECT_EQ(scan.zeros, 1u);

    std::mt19937_64 rng(19);
    const CrossedMonomial f{random_function(g, 2, rng), {}};
    const CrossedMonomial h{random_function(g, 3, rng), {}};
    EXPECT_LT(ps_kms_residual(f, h, g), 1e-15);

    for (unsigned gg : {3u, 4u}) {
        const auto x = CrossedMonomial::group(parse_word("ab", gg), gg);
        EXPECT_LT(ps_kms_residual(x, adjoint(x), gg), 1e-10);
        EXPECT_LT(ps_kms_residual(adjoint(x), x, gg), 1e-10);
    }
}

TEST(Type3Triple, TwistedBoundedUntwistedGrows)
{
    const auto ell = Homomorphism::exponent_sum(2);
    const auto cert = type3_triple_certificate(ell, parse_word("a", 2), 2, 4, {2, 3, 4});
    EXPECT_EQ(cert.ell_gamma, 1);
    EXPECT_EQ(cert.busemann_sup, 1.0);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_LE(cert.twisted[i], 1.0 + 1e-12);
        EXPECT_NEAR(cert.twisted[i], cert.twisted[0], 1e-12);
        EXPECT_EQ(cert.sign_commutator[i], 0.0);
        EXPECT_EQ(cert.sign_conjugation[i], 0.0);
        EXPECT_EQ(cert.sigma_squared[i], 0.0);
        EXPECT_NEAR(cert.untwisted[i], 2.0 * cert.cutoffs[i] - 1.0, 1e-12);
    }

    const auto absolute = type3_triple_certificate(ell, parse_word("a", 2), 2, 4, {2, 3, 4}, AbsConvention::absolute);
    for (double t : absolute.twisted)
        EXPECT_LE(t, 1.0 + 1e-12);

    // l(ab) = 2: the sign is trivial and both commutators agree
    const auto even = type3_triple_certificate(ell, parse_word("ab", 2), 2, 4, {2, 3});
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_LE(even.twisted[i], 2.0 + 1e-12);
        EXPECT_NEAR(even.twisted[i], even.untwisted[i], 1e-12);
    }
}

TEST(Type3Triple, DenseOracleAtSmallSize)
{
    const CrossedSpace space(2, 3, 2);
    const auto ell = Homomorphism::exponent_sum(2);
    const auto m = CrossedMonomial::group(parse_word("a", 2), 2);
    const DenseMatrix d = crossed_dirac(space, ell).to_dense();
    const DenseMatrix p = literal_representation(m, space);
    const DenseMatrix ps = literal_representation(sign_twist(m, ell), space);
    const auto cert = type3_triple_certificate(ell, m, 3, {2});
    EXPECT_NEAR(detail::largest_singular_value(d * p - ps * d), cert.twisted[0], 1e-12);
    EXPECT_NEAR(detail::largest_singular_value(d * p - p * d), cert.untwisted[0], 1e-12);
}
