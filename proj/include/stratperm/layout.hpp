// StratumLayout: the partition of units 0..n-1 into K contiguous strata.
#pragma once

#include <cstdint>
#include <vector>

namespace stratperm {

class StratumLayout {
public:
    StratumLayout() = default;
    // sizes[k] = number of units in stratum k; every stratum must be non-empty.
    explicit StratumLayout(std::vector<int> sizes);

    int num_strata() const { return static_cast<int>(sizes_.size()); }
    int total() const { return total_; }
    int size(int k) const { return sizes_[k]; }
    int offset(int k) const { return offsets_[k]; }
    int stratum_of(int unit) const { return unit_stratum_[unit]; }
    const std::vector<int>& sizes() const { return sizes_; }
    int min_size() const;

    bool operator==(const StratumLayout& other) const { return sizes_ == other.sizes_; }
    bool operator!=(const StratumLayout& other) const { return !(*this == other); }

private:
    std::vector<int> sizes_;
    std::vector<int> offsets_;
    std::vector<int> unit_stratum_;
    int total_ = 0;
};

} // namespace stratperm
