#include "stratperm/matrix.hpp"

#include <cmath>
#include <string>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"

namespace stratperm {

StratifiedMatrix::StratifiedMatrix(StratumLayout layout, std::vector<std::vector<double>> blocks)
    : layout_(std::move(layout)), blocks_(std::move(blocks)) {
    if (static_cast<int>(blocks_.size()) != layout_.num_strata())
        throw LayoutMismatch("expected " + std::to_string(layout_.num_strata()) +
                             " blocks, got " + std::to_string(blocks_.size()));
    for (int k = 0; k < layout_.num_strata(); ++k) {
        const auto want = static_cast<std::size_t>(layout_.size(k)) * layout_.size(k);
        if (blocks_[k].size() != want)
            throw LayoutMismatch("block " + std::to_string(k) + " has " +
                                 std::to_string(blocks_[k].size()) + " entries, expected " +
                                 std::to_string(want));
        for (double v : blocks_[k])
            if (!std::isfinite(v))
                throw InvariantViolation("matrix entries must be finite (block " +
                                         std::to_string(k) + ")");
    }
}

StratifiedMatrix StratifiedMatrix::zeros(const StratumLayout& layout) {
    std::vector<std::vector<double>> blocks;
    blocks.reserve(layout.num_strata());
    for (int k = 0; k < layout.num_strata(); ++k)
        blocks.emplace_back(static_cast<std::size_t>(layout.size(k)) * layout.size(k), 0.0);
    return StratifiedMatrix(layout, std::move(blocks));
}

namespace {

// Row means, column means and the grand mean of one block.
struct BlockMeans {
    std::vector<double> row;
    std::vector<double> col;
    double grand = 0.0;
};

BlockMeans block_means(const StratifiedMatrix& a, int k) {
    const int n = a.layout().size(k);
    BlockMeans m;
    m.row.assign(n, 0.0);
    m.col.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        NeumaierSum rs;
        for (int j = 0; j < n; ++j) rs.add(a.at(k, i, j));
        m.row[i] = rs.value() / n;
    }
    NeumaierSum gs;
    for (int j = 0; j < n; ++j) {
        NeumaierSum cs;
        for (int i = 0; i < n; ++i) cs.add(a.at(k, i, j));
        m.col[j] = cs.value() / n;
        gs.add(m.col[j]);
    }
    m.grand = gs.value() / n;
    return m;
}

StratifiedMatrix centered(const StratifiedMatrix& a) {
    StratifiedMatrix out = a;
    for (int k = 0; k < a.num_strata(); ++k) {
        const BlockMeans m = block_means(a, k);
        const int n = a.layout().size(k);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out.at(k, i, j) = a.at(k, i, j) - m.row[i] - m.col[j] + m.grand;
    }
    return out;
}

} // namespace

StratifiedMatrix transform(const StratifiedMatrix& a, Transform which) {
    switch (which) {
    case Transform::center:
        return centered(a);
    case Transform::column_center: {
        StratifiedMatrix out = a;
        for (int k = 0; k < a.num_strata(); ++k) {
            const BlockMeans m = block_means(a, k);
            const int n = a.layout().size(k);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    out.at(k, i, j) = a.at(k, i, j) - m.col[j];
        }
        return out;
    }
    case Transform::standardize:
    case Transform::truncate: {
        StratifiedMatrix out = centered(a);
        NeumaierSum var;
        for (int k = 0; k < a.num_strata(); ++k) {
            const int n = a.layout().size(k);
            if (n < 2) continue; // centered singleton block is identically zero
            NeumaierSum ss;
            for (double v : out.block(k)) ss.add(v * v);
            var.add(ss.value() / (n - 1));
        }
        const double sigma = std::sqrt(var.value());
        if (!(sigma > 0.0))
            throw DegenerateVariance("statistic has zero variance; cannot standardize");
        for (int k = 0; k < a.num_strata(); ++k)
            for (double& v : out.block(k)) v /= sigma;
        if (which == Transform::truncate) {
            // Boundary entries |a| = 1/2 are kept: the indicator is <=.
            for (int k = 0; k < a.num_strata(); ++k)
                for (double& v : out.block(k))
                    if (std::abs(v) > 0.5) v = 0.0;
        }
        return out;
    }
    }
    throw DomainError("unknown transform");
}

} // namespace stratperm
