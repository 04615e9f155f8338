#include "stratperm/layout.hpp"

#include <algorithm>

#include "stratperm/errors.hpp"

namespace stratperm {

StratumLayout::StratumLayout(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty())
        throw DegenerateLayout("layout needs at least one stratum");
    offsets_.reserve(sizes_.size());
    for (std::size_t k = 0; k < sizes_.size(); ++k) {
        if (sizes_[k] < 1)
            throw DegenerateLayout("stratum " + std::to_string(k) + " is empty");
        offsets_.push_back(total_);
        total_ += sizes_[k];
    }
    unit_stratum_.resize(total_);
    for (std::size_t k = 0; k < sizes_.size(); ++k)
        std::fill_n(unit_stratum_.begin() + offsets_[k], sizes_[k], static_cast<int>(k));
}

int StratumLayout::min_size() const {
    return *std::min_element(sizes_.begin(), sizes_.end());
}

} // namespace stratperm
