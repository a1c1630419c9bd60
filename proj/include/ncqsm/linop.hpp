#pragma once

// Finite-rank truncated operators with structure-aware algebra, traces,
// operator norms and summability functionals.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include "errors.hpp"
#include "series.hpp"
#include "summation.hpp"

namespace ncqsm {

using DenseMatrix = Eigen::MatrixXcd;
using SparseBlock = Eigen::SparseMatrix<cplx>;

inline constexpr std::size_t dense_cap = 4096;
inline constexpr std::size_t no_target = static_cast<std::size_t>(-1);

enum class Structure { diagonal, monomial, block_monomial, dense };

inline const char* to_string(Structure s)
{
    switch (s) {
    case Structure::diagonal: return "diagonal";
    case Structure::monomial: return "monomial";
    case Structure::block_monomial: return "block_monomial";
    case Structure::dense: return "dense";
    }
    return "?";
}

// A column j is sent to scalars[j] * e_{targets[j]}, or to zero when
// targets[j] == no_target. Targets form a partial injection.
struct MonomialData {
    std::vector<std::size_t> targets;
    std::vector<cplx> scalars;
};

// The space is C^block_size (x) C^n_blocks with index = block * block_size + inner.
// Block j is sent by blocks[j] to block targets[j].
struct BlockMonomialData {
    std::size_t block_size = 0;
    std::vector<std::size_t> targets;
    std::vector<SparseBlock> blocks;
};

using SparseColumn = std::vector<std::pair<std::size_t, cplx>>;

class TruncatedOperator {
public:
    using Data = std::variant<std::vector<cplx>, MonomialData, BlockMonomialData, DenseMatrix>;

    static TruncatedOperator diagonal(std::vector<cplx> values, std::string tag)
    {
        const std::size_t n = values.size();
        return TruncatedOperator(n, std::move(tag), Data(std::move(values)));
    }

    static TruncatedOperator identity(std::size_t dim, std::string tag)
    {
        return diagonal(std::vector<cplx>(dim, 1.0), std::move(tag));
    }

    static TruncatedOperator zero(std::size_t dim, std::string tag)
    {
        return monomial(std::vector<std::size_t>(dim, no_target), std::vector<cplx>(dim, 0.0), std::move(tag));
    }

    static TruncatedOperator monomial(std::vector<std::size_t> targets, std::vector<cplx> scalars, std::string tag)
    {
        const std::size_t n = targets.size();
        if (scalars.size() != n)
            throw structural_error("monomial: targets and scalars differ in length");
        std::vector<char> hit(n, 0);
        for (std::size_t j = 0; j < n; ++j) {
            if (targets[j] == no_target) {
                scalars[j] = 0.0;
                continue;
            }
            if (targets[j] >= n)
                throw structural_error("monomial: target out of range");
            if (hit[targets[j]])
                throw structural_error("monomial: index map is not injective");
            hit[targets[j]] = 1;
        }
        return TruncatedOperator(n, std::move(tag), Data(MonomialData{std::move(targets), std::move(scalars)}));
    }

    static TruncatedOperator block_monomial(std::size_t block_size, std::vector<std::size_t> targets,
                                            std::vector<SparseBlock> blocks, std::string tag)
    {
        const std::size_t nb = targets.size();
        if (blocks.size() != nb)
            throw structural_error("block_monomial: targets and blocks differ in length");
        std::vector<char> hit(nb, 0);
        for (std::size_t j = 0; j < nb; ++j) {
            if (targets[j] == no_target) {
                blocks[j] = SparseBlock(static_cast<Eigen::Index>(block_size), static_cast<Eigen::Index>(block_size));
                continue;
            }
            if (targets[j] >= nb || hit[targets[j]])
                throw structural_error("block_monomial: block map is not a partial injection");
            hit[targets[j]] = 1;
            if (blocks[j].rows() != static_cast<Eigen::Index>(block_size) ||
                blocks[j].cols() != static_cast<Eigen::Index>(block_size))
                throw structural_error("block_monomial: block has wrong shape");
        }
        return TruncatedOperator(nb * block_size, std::move(tag),
                                 Data(BlockMonomialData{block_size, std::move(targets), std::move(blocks)}));
    }

    static TruncatedOperator dense(DenseMatrix m, std::string tag)
    {
        if (m.rows() != m.cols())
            throw structural_error("dense: matrix is not square");
        const auto n = static_cast<std::size_t>(m.rows());
        if (n > dense_cap)
            throw capacity_error("dense: dimension " + std::to_string(n) + " exceeds cap " + std::to_string(dense_cap));
        return TruncatedOperator(n, std::move(tag), Data(std::move(m)));
    }

    std::size_t dim() const noexcept { return dim_; }
    const std::string& tag() const noexcept { return tag_; }
    Structure structure() const noexcept { return static_cast<Structure>(data_.index()); }
    const Data& data() const noexcept { return data_; }

    const std::vector<cplx>& diagonal_values() const { return std::get<std::vector<cplx>>(data_); }
    const MonomialData& monomial_data() const { return std::get<MonomialData>(data_); }
    const BlockMonomialData& block_data() const { return std::get<BlockMonomialData>(data_); }
    const DenseMatrix& dense_matrix() const { return std::get<DenseMatrix>(data_); }

    // Nonzero entries of A e_j.
    SparseColumn column(std::size_t j) const
    {
        SparseColumn out;
        std::visit(
            [&](const auto& d) {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, std::vector<cplx>>) {
                    if (d[j] != cplx{})
                        out.emplace_back(j, d[j]);
                } else if constexpr (std::is_same_v<D, MonomialData>) {
                    if (d.targets[j] != no_target && d.scalars[j] != cplx{})
                        out.emplace_back(d.targets[j], d.scalars[j]);
                } else if constexpr (std::is_same_v<D, BlockMonomialData>) {
                    const std::size_t b = j / d.block_size;
                    const auto inner = static_cast<Eigen::Index>(j % d.block_size);
                    if (d.targets[b] == no_target)
                        return;
                    const std::size_t base = d.targets[b] * d.block_size;
                    for (SparseBlock::InnerIterator it(d.blocks[b], inner); it; ++it)
                        if (it.value() != cplx{})
                            out.emplace_back(base + static_cast<std::size_t>(it.row()), it.value());
                    std::sort(out.begin(), out.end(), [](auto& a, auto& b2) { return a.first < b2.first; });
                } else {
                    for (Eigen::Index i = 0; i < d.rows(); ++i) {
                        const cplx v = d(i, static_cast<Eigen::Index>(j));
                        if (v != cplx{})
                            out.emplace_back(static_cast<std::size_t>(i), v);
                    }
                }
            },
            data_);
        return out;
    }

    cplx diagonal_entry(std::size_t k) const
    {
        return std::visit(
            [&](const auto& d) -> cplx {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, std::vector<cplx>>) {
                    return d[k];
                } else if constexpr (std::is_same_v<D, MonomialData>) {
                    return d.targets[k] == k ? d.scalars[k] : cplx{};
                } else if constexpr (std::is_same_v<D, BlockMonomialData>) {
                    const std::size_t b = k / d.block_size;
                    if (d.targets[b] != b)
                        return {};
                    const auto inner = static_cast<Eigen::Index>(k % d.block_size);
                    return d.blocks[b].coeff(inner, inner);
                } else {
                    return d(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
                }
            },
            data_);
    }

    cplx entry(std::size_t i, std::size_t j) const
    {
        for (const auto& [row, v] : column(j))
            if (row == i)
                return v;
        return {};
    }

    DenseMatrix to_dense() const
    {
        if (dim_ > dense_cap)
            throw capacity_error("to_dense: dimension " + std::to_string(dim_) + " exceeds cap " +
                                 std::to_string(dense_cap));
        if (structure() == Structure::dense)
            return dense_matrix();
        const auto n = static_cast<Eigen::Index>(dim_);
        DenseMatrix m = DenseMatrix::Zero(n, n);
        for (std::size_t j = 0; j < dim_; ++j)
            for (const auto& [i, v] : column(j))
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        return m;
    }

    std::vector<cplx> apply(std::span<const cplx> x) const
    {
        if (x.size() != dim_)
            throw structural_error("apply: vector length does not match operator dimension");
        std::vector<cplx> y(dim_, 0.0);
        for (std::size_t j = 0; j < dim_; ++j) {
            if (x[j] == cplx{})
                continue;
            for (const auto& [i, v] : column(j))
                y[i] += v * x[j];
        }
        return y;
    }

private:
    TruncatedOperator(std::size_t dim, std::string tag, Data data)
        : dim_(dim), tag_(std::move(tag)), data_(std::move(data))
    {
    }

    std::size_t dim_;
    std::string tag_;
    Data data_;
};

namespace detail {

inline void require_same_basis(const TruncatedOperator& a, const TruncatedOperator& b, const char* op)
{
    if (a.dim() != b.dim() || a.tag() != b.tag())
        throw structural_error(std::string(op) + ": basis mismatch ('" + a.tag() + "' dim " +
                               std::to_string(a.dim()) + " vs '" + b.tag() + "' dim " +
                               std::to_string(b.dim()) + ")");
}

inline SparseBlock diagonal_block(const std::vector<cplx>& d, std::size_t block, std::size_t bs)
{
    SparseBlock m(static_cast<Eigen::Index>(bs), static_cast<Eigen::Index>(bs));
    std::vector<Eigen::Triplet<cplx>> trips;
    for (std::size_t i = 0; i < bs; ++i) {
        const cplx v = d[block * bs + i];
        if (v != cplx{})
            trips.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), v);
    }
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

inline BlockMonomialData diagonal_as_blocks(const std::vector<cplx>& d, std::size_t bs)
{
    BlockMonomialData out;
    out.block_size = bs;
    const std::size_t nb = d.size() / bs;
    for (std::size_t b = 0; b < nb; ++b) {
        out.targets.push_back(b);
        out.blocks.push_back(diagonal_block(d, b, bs));
    }
    return out;
}

inline double largest_singular_value(const DenseMatrix& m)
{
    if (m.size() == 0)
        return 0.0;
    if (m.rows() <= 64 && m.cols() <= 64)
        return Eigen::JacobiSVD<DenseMatrix>(m).singularValues()(0);
    // BDCSVD can misreport the top singular value when many coincide.
    const DenseMatrix gram = m.rows() < m.cols() ? DenseMatrix(m * m.adjoint()) : DenseMatrix(m.adjoint() * m);
    const Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

} // namespace detail

inline TruncatedOperator adjoint(const TruncatedOperator& a)
{
    const std::string& tag = a.tag();
    switch (a.structure()) {
    case Structure::diagonal: {
        std::vector<cplx> v = a.diagonal_values();
        for (auto& x : v)
            x = std::conj(x);
        return TruncatedOperator::diagonal(std::move(v), tag);
    }
    case Structure::monomial: {
        const auto& m = a.monomial_data();
        std::vector<std::size_t> t(a.dim(), no_target);
        std::vector<cplx> s(a.dim(), 0.0);
        for (std::size_t j = 0; j < a.dim(); ++j)
            if (m.targets[j] != no_target) {
                t[m.targets[j]] = j;
                s[m.targets[j]] = std::conj(m.scalars[j]);
            }
        return TruncatedOperator::monomial(std::move(t), std::move(s), tag);
    }
    case Structure::block_monomial: {
        const auto& bm = a.block_data();
        const std::size_t nb = bm.targets.size();
        std::vector<std::size_t> t(nb, no_target);
        std::vector<SparseBlock> blocks(nb, SparseBlock(static_cast<Eigen::Index>(bm.block_size),
                                                        static_cast<Eigen::Index>(bm.block_size)));
        for (std::size_t j = 0; j < nb; ++j)
            if (bm.targets[j] != no_target) {
                t[bm.targets[j]] = j;
                blocks[bm.targets[j]] = bm.blocks[j].adjoint();
            }
        return TruncatedOperator::block_monomial(bm.block_size, std::move(t), std::move(blocks), tag);
    }
    case Structure::dense:
        return TruncatedOperator::dense(a.dense_matrix().adjoint(), tag);
    }
    throw structural_error("adjoint: unknown structure");
}

// a * b, i.e. apply b first.
inline TruncatedOperator compose(const TruncatedOperator& a, const TruncatedOperator& b)
{
    detail::require_same_basis(a, b, "compose");
    const std::size_t n = a.dim();
    const std::string& tag = a.tag();
    const Structure sa = a.structure();
    const Structure sb = b.structure();

    if (sa == Structure::diagonal && sb == Structure::diagonal) {
        std::vector<cplx> v(n);
        for (std::size_t k = 0; k < n; ++k)
            v[k] = a.diagonal_values()[k] * b.diagonal_values()[k];
        return TruncatedOperator::diagonal(std::move(v), tag);
    }
    if ((sa == Structure::diagonal || sa == Structure::monomial) &&
        (sb == Structure::diagonal || sb == Structure::monomial)) {
        auto targets_of = [n](const TruncatedOperator& op, std::size_t j) -> std::pair<std::size_t, cplx> {
            if (op.structure() == Structure::diagonal)
                return {j, op.diagonal_values()[j]};
            const auto& m = op.monomial_data();
            return {m.targets[j], m.scalars[j]};
        };
        std::vector<std::size_t> t(n, no_target);
        std::vector<cplx> s(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const auto [tb, cb] = targets_of(b, j);
            if (tb == no_target)
                continue;
            const auto [ta, ca] = targets_of(a, tb);
            if (ta == no_target)
                continue;
            t[j] = ta;
            s[j] = ca * cb;
        }
        return TruncatedOperator::monomial(std::move(t), std::move(s), tag);
    }
    if ((sa == Structure::block_monomial || sa == Structure::diagonal) &&
        (sb == Structure::block_monomial || sb == Structure::diagonal) &&
        (sa == Structure::block_monomial || sb == Structure::block_monomial)) {
        const std::size_t bs = sa == Structure::block_monomial ? a.block_data().block_size : b.block_data().block_size;
        const BlockMonomialData da = sa == Structure::block_monomial ? a.block_data()
                                                                     : detail::diagonal_as_blocks(a.diagonal_values(), bs);
        const BlockMonomialData db = sb == Structure::block_monomial ? b.block_data()
                                                                     : detail::diagonal_as_blocks(b.diagonal_values(), bs);
        if (da.block_size != db.block_size)
            throw structural_error("compose: block sizes differ");
        const std::size_t nb = da.targets.size();
        std::vector<std::size_t> t(nb, no_target);
        std::vector<SparseBlock> blocks(nb, SparseBlock(static_cast<Eigen::Index>(bs), static_cast<Eigen::Index>(bs)));
        for (std::size_t j = 0; j < nb; ++j) {
            const std::size_t mid = db.targets[j];
            if (mid == no_target || da.targets[mid] == no_target)
                continue;
            t[j] = da.targets[mid];
            blocks[j] = (da.blocks[mid] * db.blocks[j]).pruned();
        }
        return TruncatedOperator::block_monomial(bs, std::move(t), std::move(blocks), tag);
    }
    return TruncatedOperator::dense(a.to_dense() * b.to_dense(), tag);
}

inline TruncatedOperator scale(const TruncatedOperator& a, cplx c)
{
    switch (a.structure()) {
    case Structure::diagonal: {
        std::vector<cplx> v = a.diagonal_values();
        for (auto& x : v)
            x *= c;
        return TruncatedOperator::diagonal(std::move(v), a.tag());
    }
    case Structure::monomial: {
        MonomialData m = a.monomial_data();
        for (auto& x : m.scalars)
            x *= c;
        return TruncatedOperator::monomial(std::move(m.targets), std::move(m.scalars), a.tag());
    }
    case Structure::block_monomial: {
        BlockMonomialData m = a.block_data();
        for (auto& b : m.blocks)
            b *= c;
        return TruncatedOperator::block_monomial(m.block_size, std::move(m.targets), std::move(m.blocks), a.tag());
    }
    case Structure::dense:
        return TruncatedOperator::dense(a.dense_matrix() * c, a.tag());
    }
    throw structural_error("scale: unknown structure");
}

// a + c*b
inline TruncatedOperator add(const TruncatedOperator& a, const TruncatedOperator& b, cplx c = 1.0)
{
    detail::require_same_basis(a, b, "add");
    const std::size_t n = a.dim();
    const std::string& tag = a.tag();
    const Structure sa = a.structure();
    const Structure sb = b.structure();

    if (sa == Structure::diagonal && sb == Structure::diagonal) {
        std::vector<cplx> v(n);
        for (std::size_t k = 0; k < n; ++k)
            v[k] = a.diagonal_values()[k] + c * b.diagonal_values()[k];
        return TruncatedOperator::diagonal(std::move(v), tag);
    }
    if (sa == Structure::monomial && sb == Structure::monomial) {
        const auto& ma = a.monomial_data();
        const auto& mb = b.monomial_data();
        bool same_map = true;
        for (std::size_t j = 0; j < n && same_map; ++j) {
            const bool za = ma.targets[j] == no_target;
            const bool zb = mb.targets[j] == no_target;
            same_map = za || zb || ma.targets[j] == mb.targets[j];
        }
        // Columns killed on one side are fine as long as the union stays injective.
        if (same_map) {
            std::vector<std::size_t> t(n, no_target);
            std::vector<cplx> s(n, 0.0);
            std::vector<char> hit(n, 0);
            bool injective = true;
            for (std::size_t j = 0; j < n && injective; ++j) {
                const std::size_t tj = ma.targets[j] != no_target ? ma.targets[j] : mb.targets[j];
                if (tj == no_target)
                    continue;
                if (hit[tj])
                    injective = false;
                hit[tj] = 1;
                t[j] = tj;
                s[j] = ma.scalars[j] + c * mb.scalars[j];
            }
            if (injective)
                return TruncatedOperator::monomial(std::move(t), std::move(s), tag);
        }
    }
    const bool blocky_a = sa == Structure::block_monomial || sa == Structure::diagonal;
    const bool blocky_b = sb == Structure::block_monomial || sb == Structure::diagonal;
    if (blocky_a && blocky_b && (sa == Structure::block_monomial || sb == Structure::block_monomial)) {
        const std::size_t bs = sa == Structure::block_monomial ? a.block_data().block_size : b.block_data().block_size;
        const BlockMonomialData da = sa == Structure::block_monomial ? a.block_data()
                                                                     : detail::diagonal_as_blocks(a.diagonal_values(), bs);
        const BlockMonomialData db = sb == Structure::block_monomial ? b.block_data()
                                                                     : detail::diagonal_as_blocks(b.diagonal_values(), bs);
        bool same_map = da.block_size == db.block_size;
        for (std::size_t j = 0; j < da.targets.size() && same_map; ++j) {
            const bool za = da.targets[j] == no_target;
            const bool zb = db.targets[j] == no_target;
            same_map = za || zb || da.targets[j] == db.targets[j];
        }
        if (same_map) {
            const std::size_t nb = da.targets.size();
            std::vector<std::size_t> t(nb, no_target);
            std::vector<SparseBlock> blocks(nb, SparseBlock(static_cast<Eigen::Index>(bs), static_cast<Eigen::Index>(bs)));
            std::vector<char> hit(nb, 0);
            bool injective = true;
            for (std::size_t j = 0; j < nb && injective; ++j) {
                const bool za = da.targets[j] == no_target;
                const bool zb = db.targets[j] == no_target;
                if (za && zb)
                    continue;
                t[j] = za ? db.targets[j] : da.targets[j];
                if (hit[t[j]])
                    injective = false;
                hit[t[j]] = 1;
                if (za)
                    blocks[j] = c * db.blocks[j];
                else if (zb)
                    blocks[j] = da.blocks[j];
                else
                    blocks[j] = (da.blocks[j] + c * db.blocks[j]).pruned();
            }
            if (injective)
                return TruncatedOperator::block_monomial(bs, std::move(t), std::move(blocks), tag);
        }
    }
    return TruncatedOperator::dense(a.to_dense() + c * b.to_dense(), tag);
}

inline TruncatedOperator subtract(const TruncatedOperator& a, const TruncatedOperator& b)
{
    return add(a, b, -1.0);
}

// [a, b] = ab - ba
inline TruncatedOperator commutator(const TruncatedOperator& a, const TruncatedOperator& b)
{
    return subtract(compose(a, b), compose(b, a));
}

// D a - sigma(a) D
inline TruncatedOperator twisted_commutator(const TruncatedOperator& d, const TruncatedOperator& a,
                                            const TruncatedOperator& sigma_a)
{
    return subtract(compose(d, a), compose(sigma_a, d));
}

enum class NormMethod { exact, svd };

inline const char* to_string(NormMethod m) { return m == NormMethod::exact ? "exact" : "svd"; }

struct NormResult {
    double value = 0.0;
    NormMethod method = NormMethod::exact;
};

inline NormResult op_norm(const TruncatedOperator& a)
{
    switch (a.structure()) {
    case Structure::diagonal: {
        double m = 0.0;
        for (const cplx& v : a.diagonal_values())
            m = std::max(m, std::abs(v));
        return {m, NormMethod::exact};
    }
    case Structure::monomial: {
        // A partial isometry times a diagonal: the norm is the largest scalar.
        double m = 0.0;
        const auto& d = a.monomial_data();
        for (std::size_t j = 0; j < a.dim(); ++j)
            if (d.targets[j] != no_target)
                m = std::max(m, std::abs(d.scalars[j]));
        return {m, NormMethod::exact};
    }
    case Structure::block_monomial: {
        // Distinct targets make A*A block diagonal.
        double m = 0.0;
        const auto& d = a.block_data();
        for (std::size_t j = 0; j < d.targets.size(); ++j)
            if (d.targets[j] != no_target && d.blocks[j].nonZeros() > 0)
                m = std::max(m, detail::largest_singular_value(DenseMatrix(d.blocks[j])));
        return {m, NormMethod::svd};
    }
    case Structure::dense:
        return {detail::largest_singular_value(a.dense_matrix()), NormMethod::svd};
    }
    throw structural_error("op_norm: unknown structure");
}

// max_ij |a_ij - b_ij|
inline double max_entry_difference(const TruncatedOperator& a, const TruncatedOperator& b)
{
    detail::require_same_basis(a, b, "max_entry_difference");
    double m = 0.0;
    for (std::size_t j = 0; j < a.dim(); ++j) {
        auto ca = a.column(j);
        auto cb = b.column(j);
        std::size_t ia = 0, ib = 0;
        while (ia < ca.size() || ib < cb.size()) {
            if (ib == cb.size() || (ia < ca.size() && ca[ia].first < cb[ib].first)) {
                m = std::max(m, std::abs(ca[ia++].second));
            } else if (ia == ca.size() || cb[ib].first < ca[ia].first) {
                m = std::max(m, std::abs(cb[ib++].second));
            } else {
                m = std::max(m, std::abs(ca[ia++].second - cb[ib++].second));
            }
        }
    }
    return m;
}

// Sum_k weight[k] <e_k, A e_k>, ascending k.
inline SeriesValue weighted_trace(const TruncatedOperator& a, std::span<const cplx> weight)
{
    if (weight.size() != a.dim())
        throw structural_error("weighted_trace: weight length does not match dimension");
    compensated_complex_sum acc;
    for (std::size_t k = 0; k < a.dim(); ++k) {
        const cplx d = a.diagonal_entry(k);
        if (d != cplx{} && weight[k] != cplx{})
            acc.add(weight[k] * d);
    }
    SeriesValue out;
    out.value = acc.value();
    out.terms_used = a.dim();
    out.tail_bound = 4.0 * std::numeric_limits<double>::epsilon() * acc.abs_sum();
    return out;
}

enum class SummabilityKind { finite, theta };

inline const char* to_string(SummabilityKind k) { return k == SummabilityKind::finite ? "finite" : "theta"; }

struct SummabilityReport {
    SummabilityKind kind = SummabilityKind::finite;
    std::vector<double> beta_grid;
    std::vector<SeriesValue> traces;
    std::vector<std::optional<double>> bounds;
};

using AnalyticBound = std::function<std::optional<double>(double beta)>;

// Bound on Tr e^{-beta (log n)^2} by integral comparison, in the form
// 1 + sqrt(pi) e^{1/(4 beta)}.
inline double bc_theta_bound(double beta) { return 1.0 + std::sqrt(std::numbers::pi) * std::exp(0.25 / beta); }

// The same comparison carried out exactly: 1 + sqrt(pi / beta) e^{1/(4 beta)}.
inline double bc_theta_bound_exact_integral(double beta)
{
    return 1.0 + std::sqrt(std::numbers::pi / beta) * std::exp(0.25 / beta);
}

// finite: Tr |D|^{-beta}; theta: Tr e^{-beta D^2}.
inline SummabilityReport summability_scan(std::span<const double> eigenvalues, SummabilityKind kind,
                                          std::span<const double> beta_grid, const AnalyticBound& bound = {})
{
    if (kind == SummabilityKind::finite)
        for (double e : eigenvalues)
            if (e == 0.0)
                throw domain_error("summability_scan: zero eigenvalue in a finite-kind scan; exclude the kernel first");
    SummabilityReport report;
    report.kind = kind;
    report.beta_grid.assign(beta_grid.begin(), beta_grid.end());
    for (double beta : beta_grid) {
        compensated_sum acc;
        for (double e : eigenvalues)
            acc.add(kind == SummabilityKind::finite ? std::pow(std::abs(e), -beta) : std::exp(-beta * e * e));
        SeriesValue v;
        v.value = acc.value();
        v.terms_used = eigenvalues.size();
        v.tail_bound = 4.0 * std::numeric_limits<double>::epsilon() * acc.abs_sum();
        report.traces.push_back(v);
        report.bounds.push_back(bound ? bound(beta) : std::nullopt);
    }
    return report;
}

} // namespace ncqsm
