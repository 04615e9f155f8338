// JSON (de)serialization for matrices and reports. All emitters use ordered
// JSON and a fixed field order so identical inputs produce byte-identical
// files; every top-level document carries schema_version.
#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "stratperm/bounds.hpp"
#include "stratperm/inference.hpp"
#include "stratperm/matrix.hpp"
#include "stratperm/moments.hpp"
#include "stratperm/montecarlo.hpp"
#include "stratperm/multivariate.hpp"
#include "stratperm/oracle.hpp"
#include "stratperm/post_stratified.hpp"

namespace stratperm {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Matrix file: {"schema_version":1,"sizes":[...],"blocks":[[row-major],...]}.
Json to_json(const StratifiedMatrix& a);
StratifiedMatrix matrix_from_json(const Json& j);

// Multi file shares the sizes: {"schema_version":1,"sizes":[...],
// "components":[[row-major blocks per stratum],...]}.
Json to_json(const MultiStatistic& m);
MultiStatistic multi_from_json(const Json& j);

Json to_json(const MomentReport& m);
Json to_json(const BoundReport& b);
Json to_json(const SampleSummary& s);
Json to_json(const ExactDistribution& d);
Json to_json(const CheckResult& c);
Json to_json(const VerifyReport& v);
Json to_json(const TestResult& t);
Json to_json(const IvInterval& iv);
Json to_json(const PostStratReport& p);

const char* to_string(Alternative a);
const char* to_string(TestMethod m);
const char* to_string(DesignKind k);
Alternative alternative_from_string(const std::string& s);
TestMethod test_method_from_string(const std::string& s);
DesignKind design_kind_from_string(const std::string& s);

// Reads and parses, mapping parse failures to ParseError with the path.
Json load_json_file(const std::string& path);
// 2-space indent plus trailing newline; the canonical on-disk form.
std::string dump_json(const Json& j);
void write_json_file(const std::string& path, const Json& j);

} // namespace stratperm
