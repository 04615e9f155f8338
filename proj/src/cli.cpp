#include "stratperm/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <iostream>
#include <memory>
#include <thread>

#include "stratperm/csv.hpp"
#include "stratperm/designs.hpp"
#include "stratperm/errors.hpp"
#include "stratperm/json_io.hpp"
#include "stratperm/normal.hpp"

namespace stratperm {

namespace {

// Flat JSON object (one nesting level per subcommand) as a CLI11 config
// source; command-line flags win over file values.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(input);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("config file: ") + e.what());
        }
        if (!j.is_object())
            throw ParseError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> out;
        flatten({}, j, out);
        return out;
    }

  private:
    static void flatten(std::vector<std::string> parents, const nlohmann::json& j,
                        std::vector<CLI::ConfigItem>& out) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const nlohmann::json& v = it.value();
            if (v.is_object()) {
                std::vector<std::string> deeper = parents;
                deeper.push_back(it.key());
                flatten(std::move(deeper), v, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = it.key();
            if (v.is_array()) {
                for (const nlohmann::json& e : v)
                    item.inputs.push_back(e.is_string() ? e.get<std::string>() : e.dump());
            } else if (v.is_string()) {
                item.inputs.push_back(v.get<std::string>());
            } else {
                item.inputs.push_back(v.dump());
            }
            out.push_back(std::move(item));
        }
    }
};

std::vector<int> parse_int_list(const std::string& s, const char* what) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = std::min(s.find(',', pos), s.size());
        try {
            std::size_t used = 0;
            const std::string cell = s.substr(pos, comma - pos);
            out.push_back(std::stoi(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw ParseError(std::string(what) + ": \"" + s + "\" is not a comma list of integers");
        }
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = std::min(s.find(',', pos), s.size());
        try {
            std::size_t used = 0;
            const std::string cell = s.substr(pos, comma - pos);
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw ParseError(std::string(what) + ": \"" + s + "\" is not a comma list of numbers");
        }
        pos = comma + 1;
    }
    return out;
}

// Either "lo:hi:count" (inclusive linspace) or an explicit comma list.
std::vector<double> parse_grid(const std::string& s) {
    if (s.find(':') == std::string::npos) return parse_double_list(s, "--grid");
    double lo = 0, hi = 0;
    long count = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%ld", &lo, &hi, &count) != 3 || count < 1 || hi < lo)
        throw ParseError("--grid: expected lo:hi:count with hi >= lo, count >= 1");
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (long i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
    return out;
}

struct CliState {
    std::uint64_t seed = kDefaultSeed;
    int workers = std::max(1u, std::thread::hardware_concurrency());
    std::string out_path;
    int exit_code = 0;
};

void emit(const CliState& st, const Json& j) {
    if (st.out_path.empty())
        std::cout << dump_json(j);
    else
        write_json_file(st.out_path, j);
}

Json check_to_json(const std::string& identity, double violation, double tol) {
    Json j;
    j["identity"] = identity;
    j["max_violation"] = violation;
    j["pass"] = violation <= tol;
    return j;
}

void run_bound(const CliState& st, const std::string& matrix_path, double constant) {
    const StratifiedMatrix a = matrix_from_json(load_json_file(matrix_path));
    Json out;
    out["schema_version"] = kSchemaVersion;
    out["moments"] = to_json(moments(a));
    Json reports;
    reports["theorem1"] = to_json(rate(a, RateMethod::theorem1, constant));
    reports["independent"] = to_json(rate(a, RateMethod::independent, constant));
    try {
        reports["wasserstein_combine"] =
            to_json(rate(a, RateMethod::wasserstein_combine, constant));
    } catch (const ZeroStratumRatio& e) {
        reports["wasserstein_combine"] = Json{{"skipped", e.what()}};
    }
    reports["columnwise"] = to_json(rate(a, RateMethod::columnwise, constant));
    const BoundReport wb = wasserstein_bound(a);
    reports["wasserstein"] = to_json(wb);
    out["reports"] = std::move(reports);
    out["kolmogorov_from_wasserstein"] = kolmogorov_from_wasserstein(*wb.certified_bound);
    emit(st, out);
}

void run_simulate(const CliState& st, const std::string& matrix_path, std::int64_t reps) {
    const StratifiedMatrix a = matrix_from_json(load_json_file(matrix_path));
    const StratifiedMatrix as = transform(a, Transform::standardize);
    const RandomSource rng(st.seed);
    const SampleSummary summary = simulate_statistic(as, reps, rng, st.workers);
    const double dk = ecdf_kolmogorov_vs_normal(summary);
    const double dw = empirical_wasserstein_vs_normal(summary);
    const double ak = kolmogorov_mc_allowance(reps);
    const double aw = wasserstein_mc_allowance(reps);
    const BoundReport wb = wasserstein_bound(a);

    Json out;
    out["schema_version"] = kSchemaVersion;
    out["seed"] = st.seed;
    out["reps"] = reps;
    out["summary"] = to_json(summary);
    out["kolmogorov"] = dk;
    out["wasserstein"] = dw;
    out["kolmogorov_allowance"] = ak;
    out["wasserstein_allowance"] = aw;
    out["wasserstein_bound"] = to_json(wb);
    out["kolmogorov_from_wasserstein"] = kolmogorov_from_wasserstein(*wb.certified_bound);
    out["wasserstein_within_bound"] = dw <= *wb.certified_bound + aw;
    out["kolmogorov_within_bound"] =
        dk <= kolmogorov_from_wasserstein(*wb.certified_bound) + ak;
    emit(st, out);
}

void run_oracle(CliState& st, const std::string& matrix_path, std::uint64_t budget) {
    const StratifiedMatrix a = matrix_from_json(load_json_file(matrix_path));
    Json out;
    out["schema_version"] = kSchemaVersion;

    const MomentReport m = moments(a);
    const ExactDistribution dist = enumerate_distribution(a, budget);
    const double dmean = std::abs(m.mean - dist.mean());
    const double dvar = std::abs(m.variance - dist.variance());
    out["moments_check"] = check_to_json("enumerated_moments", std::max(dmean, dvar), 1e-10);
    bool pass = out["moments_check"]["pass"].get<bool>();

    const VerifyReport stein = verify_stein_pair(a, 1e-12, 1e-10, budget);
    out["stein"] = to_json(stein);
    pass = pass && stein.pass();

    Json zb = Json::array();
    for (int degree = 1; degree <= 3; ++degree) {
        const VerifyReport r = verify_zero_bias(a, degree, 1e-8, budget);
        zb.push_back(to_json(r));
        pass = pass && r.pass();
    }
    out["zero_bias"] = std::move(zb);

    const VerifyReport dagger = verify_pi_dagger(a, budget);
    out["pi_dagger"] = to_json(dagger);
    pass = pass && dagger.pass();

    out["pass"] = pass;
    if (!pass) st.exit_code = 2;
    emit(st, out);
}

void run_design(const CliState& st, const std::string& data_path, const std::string& kind_s,
                const std::string& n1_s, const std::string& weights_s,
                const std::string& z_s) {
    const DesignKind kind = design_kind_from_string(kind_s);
    const DesignCsv data = load_design_csv(data_path);
    if ((kind == DesignKind::experiment) != data.experiment)
        throw ParseError(data_path + ": file columns do not match --kind " + kind_s);
    const std::vector<int> n1 = parse_int_list(n1_s, "--n1");
    std::vector<double> weights;
    if (!weights_s.empty()) weights = parse_double_list(weights_s, "--weights");

    std::vector<int> z;
    if (!z_s.empty()) {
        const std::vector<int> file_order = parse_int_list(z_s, "--z");
        if (file_order.size() != data.source_row.size())
            throw ParseError("--z needs one entry per data row");
        z.resize(file_order.size());
        for (std::size_t p = 0; p < z.size(); ++p) z[p] = file_order[data.source_row[p]];
    }

    Json out;
    out["schema_version"] = kSchemaVersion;
    out["kind"] = kind_s;
    Json sizes = Json::array();
    for (int k = 0; k < data.layout.num_strata(); ++k) sizes.push_back(data.layout.size(k));
    out["sizes"] = std::move(sizes);

    if (kind == DesignKind::sampling) {
        const SamplingDesign d{data.layout, data.y, n1, weights};
        out["weights"] = design_weights(d);
        out["variance"] = design_variance(d);
        out["rate"] = to_json(rate_design(d));
        out["matrix"] = to_json(build_design_matrix(d));
        out["estimate"] = z.empty() ? Json(nullptr) : Json(estimate(d, z));
    } else {
        const ExperimentDesign d{data.layout, data.y1, data.y0, n1, weights};
        out["weights"] = design_weights(d);
        out["variance"] = design_variance(d);
        out["rate"] = to_json(rate_design(d));
        out["matrix"] = to_json(build_design_matrix(d));
        out["estimate"] = z.empty() ? Json(nullptr) : Json(estimate(d, z));
    }
    emit(st, out);
}

void run_poststrat(const CliState& st, const std::string& data_path,
                   const std::string& kind_s, int n1, std::int64_t reps,
                   std::int64_t retry_cap) {
    const DesignKind kind = design_kind_from_string(kind_s);
    const DesignCsv data = load_design_csv(data_path);
    if ((kind == DesignKind::experiment) != data.experiment)
        throw ParseError(data_path + ": file columns do not match --kind " + kind_s);

    PostStratSpec spec;
    spec.kind = kind;
    spec.draw_size = n1;
    spec.covariate.reserve(data.layout.total());
    for (int k = 0; k < data.layout.num_strata(); ++k)
        spec.covariate.insert(spec.covariate.end(), data.layout.size(k), k);
    PostStratPopulation pop;
    if (kind == DesignKind::experiment) {
        pop.y = data.y1;
        pop.y0 = data.y0;
    } else {
        pop.y = data.y;
    }

    const PostStratReport rep =
        simulate_post_stratified(spec, pop, reps, RandomSource(st.seed), retry_cap);
    Json out = to_json(rep);
    out["seed"] = st.seed;
    emit(st, out);
}

void run_test(const CliState& st, const std::string& data_path, const std::string& method_s,
              const std::string& alternative_s, std::int64_t reps, std::uint64_t budget,
              double beta0, bool have_beta0, bool invert, double alpha,
              const std::string& grid_s) {
    const TestDataCsv data = load_test_csv(data_path);
    const TestMethod method = test_method_from_string(method_s);
    const Alternative alt = alternative_from_string(alternative_s);
    const RandomSource rng(st.seed);

    if (invert) {
        if (data.d.empty())
            throw ParseError(data_path + ": interval inversion needs a dose column d");
        if (grid_s.empty())
            throw ParseError("--invert needs --grid");
        const std::vector<double> grid = parse_grid(grid_s);
        const IvInterval iv =
            iv_confidence_interval(data.y, data.d, data.z, data.layout, alpha, grid,
                                   method, reps, rng, st.workers, budget);
        Json out = to_json(iv);
        out["seed"] = st.seed;
        emit(st, out);
        return;
    }

    TestResult res;
    if (have_beta0) {
        if (data.d.empty())
            throw ParseError(data_path + ": --beta0 needs a dose column d");
        res = iv_test(data.y, data.d, data.z, data.layout, beta0, alt, method, reps, rng,
                      st.workers, budget);
    } else {
        res = permutation_test(data.z, data.y, data.layout, alt, method, reps, rng,
                               st.workers, budget);
    }
    Json out = to_json(res);
    out["seed"] = st.seed;
    emit(st, out);
}

void run_scaling(const CliState& st, int strata, const std::string& sizes_s,
                 std::int64_t reps) {
    const std::vector<int> totals = parse_int_list(sizes_s, "--sizes");
    const RandomSource root(st.seed);
    Json rows = Json::array();
    for (std::size_t t = 0; t < totals.size(); ++t) {
        const int n = totals[t];
        if (strata < 1 || n % strata != 0 || n / strata < 2)
            throw DomainError("each total size must be a multiple of --strata with "
                              "strata of at least 2");
        const int nk = n / strata;
        RandomSource gen = root.substream(2 * t);
        std::vector<std::vector<double>> blocks(strata);
        for (int k = 0; k < strata; ++k) {
            blocks[k].resize(static_cast<std::size_t>(nk) * nk);
            for (double& v : blocks[k]) v = gen.normal();
        }
        const StratifiedMatrix a(StratumLayout(std::vector<int>(strata, nk)),
                                 std::move(blocks));
        const StratifiedMatrix as = transform(a, Transform::standardize);
        const BoundReport rep = rate(a, RateMethod::theorem1);
        const SampleSummary summary =
            simulate_statistic(as, reps, root.substream(2 * t + 1), st.workers);
        const double dk = ecdf_kolmogorov_vs_normal(summary);

        Json row;
        row["n"] = n;
        row["strata"] = strata;
        row["rate_quantity"] = rep.rate_quantity;
        row["exponent_delta"] = rep.exponent_delta;
        row["regime"] = rep.regime;
        row["theta"] = rep.theta ? Json(*rep.theta) : Json(nullptr);
        row["kolmogorov"] = dk;
        row["dk_sqrt_n"] = dk * std::sqrt(static_cast<double>(n));
        row["general_decay"] = std::sqrt(rep.rate_quantity) *
                               std::pow(static_cast<double>(n), 0.25);
        rows.push_back(std::move(row));
    }
    Json out;
    out["schema_version"] = kSchemaVersion;
    out["seed"] = st.seed;
    out["reps"] = reps;
    out["rows"] = std::move(rows);
    emit(st, out);
}

int run_impl(const std::vector<std::string>& args) {
    CliState st;
    CLI::App app{"Stratified permutation statistics: moments, normal-approximation "
                 "rates, couplings, designs, and randomization tests"};
    app.require_subcommand(1);
    app.set_config("--config")->description("JSON config file; flags win");
    app.config_formatter(std::make_shared<JsonConfig>());
    app.add_option("--seed", st.seed, "RNG seed (default 0xDEC0DE)");
    app.add_option("--workers", st.workers, "worker threads for Monte Carlo");
    app.add_option("--out", st.out_path, "write the JSON report here instead of stdout");

    // bound
    std::string matrix_path;
    double constant = 1.0;
    CLI::App* bound = app.add_subcommand("bound", "rate quantities and the certified "
                                                  "Wasserstein bound for a matrix");
    bound->fallthrough();
    bound->add_option("--matrix", matrix_path, "matrix JSON")->required();
    bound->add_option("--constant", constant, "constant override for raw-rate reports");
    bound->callback([&] { run_bound(st, matrix_path, constant); });

    // simulate
    std::string sim_matrix;
    std::int64_t sim_reps = 100000;
    CLI::App* simulate = app.add_subcommand("simulate", "sample the standardized statistic "
                                                        "and compare with N(0,1)");
    simulate->fallthrough();
    simulate->add_option("--matrix", sim_matrix, "matrix JSON")->required();
    simulate->add_option("--reps", sim_reps, "Monte Carlo draws");
    simulate->callback([&] { run_simulate(st, sim_matrix, sim_reps); });

    // oracle
    std::string oracle_matrix;
    std::uint64_t oracle_budget = kDefaultEnumerationBudget;
    CLI::App* oracle = app.add_subcommand("oracle", "brute-force verification of the "
                                                    "coupling identities");
    oracle->fallthrough();
    oracle->add_option("--matrix", oracle_matrix, "matrix JSON")->required();
    oracle->add_option("--budget", oracle_budget, "enumeration budget");
    oracle->callback([&] { run_oracle(st, oracle_matrix, oracle_budget); });

    // design
    std::string design_data, design_kind, design_n1, design_weights, design_z;
    CLI::App* design = app.add_subcommand("design", "compile a stratified design and "
                                                    "report variance and rate");
    design->fallthrough();
    design->add_option("--data", design_data, "design CSV")->required();
    design->add_option("--kind", design_kind, "sampling | experiment")->required();
    design->add_option("--n1", design_n1, "per-stratum group sizes, comma list")->required();
    design->add_option("--weights", design_weights, "stratum weights, comma list");
    design->add_option("--z", design_z, "realized 0/1 assignment in file row order");
    design->callback(
        [&] { run_design(st, design_data, design_kind, design_n1, design_weights, design_z); });

    // poststrat
    std::string ps_data, ps_kind;
    int ps_n1 = 0;
    std::int64_t ps_reps = 10000, ps_retry = kDefaultRetryCap;
    CLI::App* poststrat = app.add_subcommand("poststrat", "simulate post-stratified "
                                                          "conditioning");
    poststrat->fallthrough();
    poststrat->add_option("--data", ps_data, "population CSV")->required();
    poststrat->add_option("--kind", ps_kind, "sampling | experiment")->required();
    poststrat->add_option("--n1", ps_n1, "global draw size")->required();
    poststrat->add_option("--reps", ps_reps, "accepted replications");
    poststrat->add_option("--retry-cap", ps_retry, "global draw cap");
    poststrat->callback([&] { run_poststrat(st, ps_data, ps_kind, ps_n1, ps_reps, ps_retry); });

    // test
    std::string test_data, test_method = "exact", test_alt = "two_sided", test_grid;
    std::int64_t test_reps = 10000;
    std::uint64_t test_budget = kDefaultEnumerationBudget;
    double beta0 = 0.0, alpha = 0.05;
    bool invert = false;
    CLI::App* test = app.add_subcommand("test", "stratified permutation test "
                                                "(optionally IV / interval inversion)");
    test->fallthrough();
    test->add_option("--data", test_data, "test CSV (stratum,z,y[,d])")->required();
    test->add_option("--method", test_method, "exact | monte_carlo | normal_approx");
    test->add_option("--alternative", test_alt, "greater | less | two_sided");
    test->add_option("--reps", test_reps, "Monte Carlo draws");
    test->add_option("--budget", test_budget, "exact enumeration budget");
    CLI::Option* beta_opt = test->add_option("--beta0", beta0, "effect under test (IV)");
    test->add_flag("--invert", invert, "invert two-sided tests over --grid");
    test->add_option("--alpha", alpha, "level for --invert");
    test->add_option("--grid", test_grid, "lo:hi:count or comma list of beta0 values");
    test->callback([&] {
        run_test(st, test_data, test_method, test_alt, test_reps, test_budget, beta0,
                 beta_opt->count() > 0, invert, alpha, test_grid);
    });

    // scaling
    std::string scaling_sizes = "64,256,1024";
    int scaling_strata = 1;
    std::int64_t scaling_reps = 200000;
    CLI::App* scaling = app.add_subcommand("scaling", "order study over growing "
                                                      "i.i.d.-normal matrices");
    scaling->fallthrough();
    scaling->add_option("--strata", scaling_strata, "number of equal strata");
    scaling->add_option("--sizes", scaling_sizes, "total sizes, comma list");
    scaling->add_option("--reps", scaling_reps, "Monte Carlo draws per size");
    scaling->callback([&] { run_scaling(st, scaling_strata, scaling_sizes, scaling_reps); });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        Json err;
        err["error"] = e.kind();
        err["message"] = e.what();
        std::cerr << dump_json(err);
        return 1;
    } catch (const std::exception& e) {
        Json err;
        err["error"] = "internal";
        err["message"] = e.what();
        std::cerr << dump_json(err);
        return 1;
    }
    return st.exit_code;
}

} // namespace

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

int run_cli(const std::vector<std::string>& args) { return run_impl(args); }

} // namespace stratperm
