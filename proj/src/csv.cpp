#include "stratperm/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "stratperm/errors.hpp"

namespace stratperm {

namespace {

struct RawCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows; // same width as header
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

RawCsv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path);
    RawCsv csv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (csv.header.empty()) {
            for (std::string& h : cells) {
                std::transform(h.begin(), h.end(), h.begin(),
                               [](unsigned char c) { return std::tolower(c); });
            }
            csv.header = std::move(cells);
            continue;
        }
        if (cells.size() != csv.header.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(csv.header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        csv.rows.push_back(std::move(cells));
    }
    if (csv.header.empty())
        throw ParseError(path + ": no header row");
    if (csv.rows.empty())
        throw ParseError(path + ": no data rows");
    return csv;
}

int find_column(const RawCsv& csv, const std::string& name) {
    for (std::size_t i = 0; i < csv.header.size(); ++i)
        if (csv.header[i] == name) return static_cast<int>(i);
    return -1;
}

int require_column(const RawCsv& csv, const std::string& path, const std::string& name) {
    const int i = find_column(csv, name);
    if (i < 0)
        throw ParseError(path + ": missing column \"" + name + "\"");
    return i;
}

double parse_double(const std::string& cell, const std::string& path, std::size_t row,
                    const std::string& col) {
    double v = 0.0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw ParseError(path + ": row " + std::to_string(row + 2) + ", column " + col +
                         ": \"" + cell + "\" is not a number");
    return v;
}

long parse_int(const std::string& cell, const std::string& path, std::size_t row,
               const std::string& col) {
    long v = 0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw ParseError(path + ": row " + std::to_string(row + 2) + ", column " + col +
                         ": \"" + cell + "\" is not an integer");
    return v;
}

// Dense re-index of arbitrary integer labels, ascending label order;
// `grouped[p]` is the row index occupying grouped position p.
struct Grouping {
    StratumLayout layout;
    std::vector<std::size_t> grouped;
    bool relabeled = false;
};

Grouping group_rows(const std::vector<long>& labels, const std::string& path) {
    std::map<long, int> dense;
    for (long l : labels) dense.emplace(l, 0);
    int next = 0;
    bool already_dense = true;
    for (auto& [label, id] : dense) {
        if (label != next) already_dense = false;
        id = next++;
    }
    if (!already_dense)
        std::cerr << "note: " << path << ": stratum labels re-indexed densely to 0.."
                  << next - 1 << "\n";

    std::vector<int> sizes(next, 0);
    for (long l : labels) ++sizes[dense[l]];
    Grouping g;
    g.layout = StratumLayout(sizes);
    g.relabeled = !already_dense;
    std::vector<int> cursor(next);
    for (int k = 0; k < next; ++k) cursor[k] = g.layout.offset(k);
    g.grouped.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        g.grouped[cursor[dense[labels[i]]]++] = i;
    return g;
}

} // namespace

TestDataCsv load_test_csv(const std::string& path) {
    const RawCsv csv = read_csv(path);
    const int cs = require_column(csv, path, "stratum");
    const int cz = require_column(csv, path, "z");
    const int cy = require_column(csv, path, "y");
    const int cd = find_column(csv, "d");

    std::vector<long> labels(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        labels[i] = parse_int(csv.rows[i][cs], path, i, "stratum");
    const Grouping g = group_rows(labels, path);

    TestDataCsv out;
    out.layout = g.layout;
    out.relabeled = g.relabeled;
    out.z.resize(csv.rows.size());
    out.y.resize(csv.rows.size());
    if (cd >= 0) out.d.resize(csv.rows.size());
    for (std::size_t p = 0; p < g.grouped.size(); ++p) {
        const std::size_t i = g.grouped[p];
        const long zv = parse_int(csv.rows[i][cz], path, i, "z");
        if (zv != 0 && zv != 1)
            throw InvariantViolation(path + ": row " + std::to_string(i + 2) +
                                     ": z must be 0 or 1");
        out.z[p] = static_cast<int>(zv);
        out.y[p] = parse_double(csv.rows[i][cy], path, i, "y");
        if (cd >= 0) out.d[p] = parse_double(csv.rows[i][cd], path, i, "d");
    }
    return out;
}

DesignCsv load_design_csv(const std::string& path) {
    const RawCsv csv = read_csv(path);
    const int cs = require_column(csv, path, "stratum");
    const int cy = find_column(csv, "y");
    const int cy1 = find_column(csv, "y1");
    const int cy0 = find_column(csv, "y0");
    if (cy < 0 && (cy1 < 0 || cy0 < 0))
        throw ParseError(path + ": need column \"y\" or columns \"y1\" and \"y0\"");
    if (cy >= 0 && (cy1 >= 0 || cy0 >= 0))
        throw ParseError(path + ": give either \"y\" or the pair \"y1\",\"y0\", not both");

    std::vector<long> labels(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        labels[i] = parse_int(csv.rows[i][cs], path, i, "stratum");
    const Grouping g = group_rows(labels, path);

    DesignCsv out;
    out.layout = g.layout;
    out.relabeled = g.relabeled;
    out.source_row = g.grouped;
    out.experiment = cy < 0;
    if (out.experiment) {
        out.y1.resize(csv.rows.size());
        out.y0.resize(csv.rows.size());
    } else {
        out.y.resize(csv.rows.size());
    }
    for (std::size_t p = 0; p < g.grouped.size(); ++p) {
        const std::size_t i = g.grouped[p];
        if (out.experiment) {
            out.y1[p] = parse_double(csv.rows[i][cy1], path, i, "y1");
            out.y0[p] = parse_double(csv.rows[i][cy0], path, i, "y0");
        } else {
            out.y[p] = parse_double(csv.rows[i][cy], path, i, "y");
        }
    }
    return out;
}

} // namespace stratperm
