#include "stratperm/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "stratperm/errors.hpp"

namespace stratperm {

namespace {

// NaN/inf have no JSON representation; emit null instead of the bare token
// nlohmann would produce.
Json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

Json optional_to_json(const std::optional<double>& v) {
    if (v) return finite_or_null(*v);
    return nullptr;
}

std::vector<int> sizes_from_json(const Json& j) {
    if (!j.contains("sizes") || !j["sizes"].is_array())
        throw ParseError("matrix JSON needs an integer array field \"sizes\"");
    std::vector<int> sizes;
    for (const Json& s : j["sizes"]) {
        if (!s.is_number_integer())
            throw ParseError("stratum sizes must be integers");
        sizes.push_back(s.get<int>());
    }
    return sizes;
}

std::vector<std::vector<double>> blocks_from_json(const Json& arr,
                                                  const std::vector<int>& sizes) {
    if (!arr.is_array() || arr.size() != sizes.size())
        throw ParseError("expected one row-major block per stratum");
    std::vector<std::vector<double>> blocks(sizes.size());
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (!arr[k].is_array())
            throw ParseError("blocks must be arrays of numbers");
        blocks[k].reserve(arr[k].size());
        for (const Json& v : arr[k]) {
            if (!v.is_number())
                throw ParseError("block entries must be numbers");
            blocks[k].push_back(v.get<double>());
        }
    }
    return blocks;
}

} // namespace

Json to_json(const StratifiedMatrix& a) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    Json sizes = Json::array();
    for (int k = 0; k < a.layout().num_strata(); ++k) sizes.push_back(a.layout().size(k));
    j["sizes"] = std::move(sizes);
    Json blocks = Json::array();
    for (int k = 0; k < a.layout().num_strata(); ++k) {
        const auto b = a.block(k);
        blocks.push_back(Json(std::vector<double>(b.begin(), b.end())));
    }
    j["blocks"] = std::move(blocks);
    return j;
}

StratifiedMatrix matrix_from_json(const Json& j) {
    const std::vector<int> sizes = sizes_from_json(j);
    if (!j.contains("blocks"))
        throw ParseError("matrix JSON needs a field \"blocks\"");
    return StratifiedMatrix(StratumLayout(sizes), blocks_from_json(j["blocks"], sizes));
}

Json to_json(const MultiStatistic& m) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    Json sizes = Json::array();
    for (int k = 0; k < m.layout.num_strata(); ++k) sizes.push_back(m.layout.size(k));
    j["sizes"] = std::move(sizes);
    Json comps = Json::array();
    for (const StratifiedMatrix& g : m.components) {
        Json blocks = Json::array();
        for (int k = 0; k < m.layout.num_strata(); ++k) {
            const auto b = g.block(k);
            blocks.push_back(Json(std::vector<double>(b.begin(), b.end())));
        }
        comps.push_back(std::move(blocks));
    }
    j["components"] = std::move(comps);
    return j;
}

MultiStatistic multi_from_json(const Json& j) {
    const std::vector<int> sizes = sizes_from_json(j);
    if (!j.contains("components") || !j["components"].is_array() ||
        j["components"].empty())
        throw ParseError("multi JSON needs a non-empty array field \"components\"");
    const StratumLayout layout(sizes);
    std::vector<StratifiedMatrix> comps;
    comps.reserve(j["components"].size());
    for (const Json& c : j["components"])
        comps.emplace_back(layout, blocks_from_json(c, sizes));
    return make_multi_statistic(std::move(comps));
}

Json to_json(const MomentReport& m) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["mean"] = finite_or_null(m.mean);
    j["variance"] = finite_or_null(m.variance);
    j["stratum_variance"] = m.stratum_variance;
    j["variance_share"] = m.variance_share;
    j["beta"] = m.beta;
    j["third_moment_rate"] = optional_to_json(m.third_moment_rate);
    return j;
}

Json to_json(const BoundReport& b) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["method"] = b.method;
    j["rate_quantity"] = finite_or_null(b.rate_quantity);
    j["exponent_delta"] = b.exponent_delta;
    j["theta"] = optional_to_json(b.theta);
    j["regime"] = b.regime;
    j["constant_mode"] = b.constant_mode;
    j["certified_bound"] = optional_to_json(b.certified_bound);
    j["constant_override"] = b.constant_override;
    j["branch_classic"] = optional_to_json(b.branch_classic);
    j["branch_general"] = optional_to_json(b.branch_general);
    j["convenience_bound"] = finite_or_null(b.convenience_bound);
    return j;
}

Json to_json(const SampleSummary& s) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["count"] = s.count;
    j["mean"] = finite_or_null(s.mean);
    j["variance"] = finite_or_null(s.variance);
    return j;
}

Json to_json(const ExactDistribution& d) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["denominator"] = d.denominator;
    j["values"] = d.values;
    j["counts"] = d.counts;
    j["mean"] = finite_or_null(d.mean());
    j["variance"] = finite_or_null(d.variance());
    return j;
}

Json to_json(const CheckResult& c) {
    Json j;
    j["identity"] = c.identity;
    j["max_violation"] = finite_or_null(c.max_violation);
    j["pass"] = c.pass;
    return j;
}

Json to_json(const VerifyReport& v) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    Json checks = Json::array();
    for (const CheckResult& c : v.checks) checks.push_back(to_json(c));
    j["checks"] = std::move(checks);
    j["budget_used"] = v.budget_used;
    j["pass"] = v.pass();
    return j;
}

Json to_json(const TestResult& t) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["observed"] = finite_or_null(t.observed);
    j["p_value"] = finite_or_null(t.p_value);
    j["alternative"] = to_string(t.alternative);
    j["method"] = to_string(t.method);
    j["reps"] = t.reps;
    j["degenerate"] = t.degenerate;
    j["count_greater_eq"] = t.count_greater_eq;
    j["count_less_eq"] = t.count_less_eq;
    j["denominator"] = t.denominator;
    j["rate_report"] = t.rate_report ? to_json(*t.rate_report) : Json(nullptr);
    return j;
}

Json to_json(const IvInterval& iv) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["alpha"] = iv.alpha;
    j["empty"] = iv.empty;
    j["nonconvex"] = iv.nonconvex;
    j["lo"] = iv.empty ? Json(nullptr) : finite_or_null(iv.lo);
    j["hi"] = iv.empty ? Json(nullptr) : finite_or_null(iv.hi);
    j["grid"] = iv.grid;
    j["p_values"] = iv.p_values;
    return j;
}

Json to_json(const PostStratReport& p) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = to_string(p.kind);
    j["requested"] = p.requested;
    j["accepted"] = p.accepted;
    j["attempted"] = p.attempted;
    j["acceptance_rate"] = finite_or_null(p.acceptance_rate);
    j["sigma2"] = finite_or_null(p.sigma2);
    j["estimate_mean"] = finite_or_null(p.estimate_mean);
    j["estimate_variance"] = finite_or_null(p.estimate_variance);
    Json plug = Json::array(), plug_t = Json::array(), plug_c = Json::array();
    for (double v : p.plug_in) plug.push_back(finite_or_null(v));
    for (double v : p.plug_in_treated) plug_t.push_back(finite_or_null(v));
    for (double v : p.plug_in_control) plug_c.push_back(finite_or_null(v));
    j["plug_in"] = std::move(plug);
    j["plug_in_treated"] = std::move(plug_t);
    j["plug_in_control"] = std::move(plug_c);
    j["rate_first_term"] = finite_or_null(p.rate_first_term);
    j["mixture_discrepancy"] = finite_or_null(p.mixture_discrepancy);
    j["p_condition_ok"] = p.p_condition_ok;
    return j;
}

const char* to_string(Alternative a) {
    switch (a) {
    case Alternative::greater: return "greater";
    case Alternative::less: return "less";
    case Alternative::two_sided: return "two_sided";
    }
    return "?";
}

const char* to_string(TestMethod m) {
    switch (m) {
    case TestMethod::exact: return "exact";
    case TestMethod::monte_carlo: return "monte_carlo";
    case TestMethod::normal_approx: return "normal_approx";
    }
    return "?";
}

const char* to_string(DesignKind k) {
    return k == DesignKind::sampling ? "sampling" : "experiment";
}

Alternative alternative_from_string(const std::string& s) {
    if (s == "greater") return Alternative::greater;
    if (s == "less") return Alternative::less;
    if (s == "two_sided" || s == "two-sided") return Alternative::two_sided;
    throw ParseError("unknown alternative \"" + s + "\"");
}

TestMethod test_method_from_string(const std::string& s) {
    if (s == "exact") return TestMethod::exact;
    if (s == "monte_carlo" || s == "mc") return TestMethod::monte_carlo;
    if (s == "normal_approx" || s == "normal") return TestMethod::normal_approx;
    throw ParseError("unknown test method \"" + s + "\"");
}

DesignKind design_kind_from_string(const std::string& s) {
    if (s == "sampling") return DesignKind::sampling;
    if (s == "experiment") return DesignKind::experiment;
    throw ParseError("unknown design kind \"" + s + "\"");
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out)
        throw ParseError("cannot open " + path + " for writing");
    out << dump_json(j);
    if (!out)
        throw ParseError("failed writing " + path);
}

} // namespace stratperm
