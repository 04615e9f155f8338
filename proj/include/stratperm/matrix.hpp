// StratifiedMatrix: per-stratum square blocks a_[k] of scores a_ij. Only
// within-stratum entries exist; the statistic sum_i a_{i pi(i)} never touches
// cross-stratum pairs, so nothing else is stored.
#pragma once

#include <vector>

#include "stratperm/layout.hpp"

namespace stratperm {

class StratifiedMatrix {
public:
    StratifiedMatrix() = default;
    // blocks[k] is row-major n_k x n_k.
    StratifiedMatrix(StratumLayout layout, std::vector<std::vector<double>> blocks);
    static StratifiedMatrix zeros(const StratumLayout& layout);

    const StratumLayout& layout() const { return layout_; }
    int num_strata() const { return layout_.num_strata(); }

    // Local indices within stratum k.
    double at(int k, int i, int j) const { return blocks_[k][static_cast<std::size_t>(i) * layout_.size(k) + j]; }
    double& at(int k, int i, int j) { return blocks_[k][static_cast<std::size_t>(i) * layout_.size(k) + j]; }
    const std::vector<double>& block(int k) const { return blocks_[k]; }
    std::vector<double>& block(int k) { return blocks_[k]; }

private:
    StratumLayout layout_;
    std::vector<std::vector<double>> blocks_;
};

enum class Transform {
    center,         // a - row mean - column mean + grand mean, per stratum
    column_center,  // a - column mean, per stratum
    standardize,    // centered and divided by sigma_A
    truncate,       // standardized, entries with |a| > 1/2 zeroed
};

StratifiedMatrix transform(const StratifiedMatrix& a, Transform which);

} // namespace stratperm
