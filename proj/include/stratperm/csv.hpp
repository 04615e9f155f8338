// CSV ingestion for test data and designs. Headers are required; stratum
// labels may be arbitrary integers and are re-indexed densely (ascending
// label order, stable within a label) with a warning on stderr. Rows come
// back grouped by stratum to match the layout.
#pragma once

#include <string>
#include <vector>

#include "stratperm/layout.hpp"

namespace stratperm {

// Columns: stratum, z, y, and optionally d (received dose for IV tests).
struct TestDataCsv {
    StratumLayout layout;
    std::vector<int> z;
    std::vector<double> y;
    std::vector<double> d; // empty when the file has no dose column
    bool relabeled = false;
};

TestDataCsv load_test_csv(const std::string& path);

// Columns: stratum plus either y (sampling outcome) or y1,y0 (potential
// outcomes). An id column, if present, is ignored.
struct DesignCsv {
    StratumLayout layout;
    std::vector<double> y;      // sampling files
    std::vector<double> y1, y0; // experiment files
    std::vector<std::size_t> source_row; // grouped position -> file data row
    bool experiment = false;
    bool relabeled = false;
};

DesignCsv load_design_csv(const std::string& path);

} // namespace stratperm
