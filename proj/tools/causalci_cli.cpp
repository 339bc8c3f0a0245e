// causalci: sampling, independence tests, structure learning and benchmarks.
//
//   causalci sample   <net.bif> -n <rows> --seed <s> [--out data.csv]
//   causalci citest   <data.csv> --x A --y B [--z C,D] [--method g]
//   causalci discover <data.csv> [--method g] [--out cpdag.txt] [--stats stats.json]
//   causalci bench    <experiment> --seed <s> [--sizes ..] [--runs ..] [--trials ..] [--out report.json]
//
// Exit codes: 0 ok, 1 usage/validation, 2 input format, 3 I/O.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "causalci/bayesnet.hpp"
#include "causalci/citest.hpp"
#include "causalci/dataset.hpp"
#include "causalci/discovery.hpp"
#include "causalci/evalbench.hpp"
#include "causalci/graph.hpp"

#ifndef CAUSALCI_DEFAULT_NETWORK_DIR
#define CAUSALCI_DEFAULT_NETWORK_DIR "data/networks"
#endif

namespace {

using namespace causalci;

enum ExitCode { kOk = 0, kUsage = 1, kFormat = 2, kIo = 3 };

struct CliError : std::runtime_error {
    CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
    int code;
};

struct Options {
    std::string input;
    std::string out;
    std::string stats_out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> methods;
    double significance = 0.05;
    double alpha0 = 0.5;
    double alpha1 = 0.5;
    double bf_threshold = 1.0;
    std::optional<double> mi_threshold;
    std::vector<std::int64_t> sizes;
    int runs = 10;
    std::optional<int> trials;
    int max_cond_set = 4;
    std::int64_t rows = 0;
    std::string x, y;
    std::vector<std::string> z;
    std::string net;
    int k = 3;
    std::vector<double> theta{0.1, 0.2, 0.3, 0.4};
    double alpha = 1.0;
    std::string alpha_policy = "jeffreys";
    bool fixed_priors = false;
    bool match_type1 = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError(kIo, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes to `path`, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        std::cout.flush();
        if (!std::cout) throw CliError(kIo, "cannot write to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw CliError(kIo, "cannot write " + path);
}

DiscreteBayesNet load_net(const std::string& path) {
    const std::string text = slurp(path);
    try {
        return parse_bif(text);
    } catch (const BifParseError& e) {
        throw CliError(kFormat, path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.what());
    } catch (const BifValidationError& e) {
        throw CliError(kFormat, path + ": " + e.what());
    }
}

Dataset load_data(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError(kIo, "cannot read " + path);
    try {
        return read_csv(in);
    } catch (const CsvError& e) {
        throw CliError(kFormat, path + ": " + e.what());
    }
}

TestConfig test_config(const Options& o) {
    TestConfig c;
    c.significance = o.significance;
    c.jeffreys_alpha0 = o.alpha0;
    c.jeffreys_alpha1 = o.alpha1;
    c.bf_threshold = o.bf_threshold;
    c.mi_threshold = o.mi_threshold;
    c.max_cond_set = o.max_cond_set;
    c.bf_chi2_fit_alpha = !o.fixed_priors;
    if (o.seed) c.mi_calibration_seed = *o.seed;
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw CliError(kUsage, e.what());
    }
    return c;
}

Method one_method(const Options& o, Method fallback) {
    if (o.methods.empty()) return fallback;
    if (o.methods.size() != 1) throw CliError(kUsage, "expected a single --method");
    auto m = parse_method(o.methods.front());
    if (!m) throw CliError(kUsage, "unknown method '" + o.methods.front() + "'");
    return *m;
}

std::vector<Method> method_list(const Options& o, std::vector<Method> fallback) {
    if (o.methods.empty()) return fallback;
    std::vector<Method> out;
    for (const auto& name : o.methods) {
        auto m = parse_method(name);
        if (!m) throw CliError(kUsage, "unknown method '" + name + "'");
        out.push_back(*m);
    }
    return out;
}

std::uint64_t require_seed(const Options& o) {
    if (!o.seed) throw CliError(kUsage, "--seed is required");
    return *o.seed;
}

std::size_t variable(const Dataset& d, const std::string& name) {
    auto v = d.find(name);
    if (!v) throw CliError(kFormat, "unknown variable '" + name + "'");
    return *v;
}

// --- subcommands ----------------------------------------------------------

int cmd_sample(const Options& o) {
    const std::uint64_t seed = require_seed(o);
    if (o.rows < 1) throw CliError(kUsage, "-n must be >= 1");
    const DiscreteBayesNet net = load_net(o.input);
    spdlog::info("sampling {} rows from {} ({} nodes)", o.rows, net.name(), net.size());
    const Dataset data = forward_sample(net, static_cast<std::size_t>(o.rows), seed);
    std::ostringstream csv;
    write_csv(data, csv);
    emit(o.out, csv.str());
    return kOk;
}

int cmd_citest(const Options& o) {
    const Dataset data = load_data(o.input);
    if (data.num_rows() == 0) throw CliError(kUsage, "dataset has no rows");
    const TestConfig config = test_config(o);
    const Method method = one_method(o, Method::G);
    if (method == Method::DsepOracle) throw CliError(kUsage, "dsep_oracle needs a known graph");

    const std::size_t x = variable(data, o.x);
    const std::size_t y = variable(data, o.y);
    std::vector<std::size_t> z;
    for (const auto& name : o.z) z.push_back(variable(data, name));
    if (x == y) throw CliError(kUsage, "x and y must differ");

    CiDecision d;
    try {
        d = conditional_test(data, x, y, z, method, config);
    } catch (const std::invalid_argument& e) {
        throw CliError(kUsage, e.what());
    }
    nlohmann::json j{{"method", to_string(d.method)}, {"statistic", d.statistic}};
    if (d.p_value) j["p_value"] = *d.p_value;
    if (d.df) j["df"] = *d.df;
    j["independent"] = d.independent;
    emit(o.out, j.dump(2) + "\n");
    return kOk;
}

int cmd_discover(const Options& o) {
    const Dataset data = load_data(o.input);
    if (data.num_rows() == 0) throw CliError(kUsage, "dataset has no rows");
    if (data.num_variables() < 2) throw CliError(kUsage, "need at least two variables");
    const TestConfig config = test_config(o);
    const Method method = one_method(o, Method::G);
    if (method == Method::DsepOracle) throw CliError(kUsage, "dsep_oracle needs a known graph");

    spdlog::info("learning a CPDAG over {} variables, {} rows, method {}", data.num_variables(), data.num_rows(),
                 to_string(method));
    const DiscoveryResult res = learn_cpdag(data, method, config);
    spdlog::info("{} CI tests", res.stats.ci_test_count);

    nlohmann::json by_order = nlohmann::json::object();
    for (const auto& [order, count] : res.stats.tests_by_order) by_order[std::to_string(order)] = count;
    const nlohmann::json stats{{"method", to_string(method)},
                               {"ci_test_count", res.stats.ci_test_count},
                               {"tests_by_order", by_order},
                               {"orientation_conflicts", res.stats.orientation_conflicts},
                               {"edges", res.cpdag.num_edges()}};

    emit(o.out, to_edge_list(res.cpdag, data.names()));
    if (!o.stats_out.empty()) {
        emit(o.stats_out, stats.dump(2) + "\n");
    } else if (!o.out.empty()) {
        emit("", stats.dump(2) + "\n");
    }
    return kOk;
}

AlphaPolicy parse_policy(const std::string& s) {
    if (s == "map") return AlphaPolicy::Map;
    if (s == "jeffreys") return AlphaPolicy::Jeffreys;
    if (s == "uniform") return AlphaPolicy::Uniform;
    throw CliError(kUsage, "unknown alpha policy '" + s + "'");
}

BenchmarkReport run_bench(const std::string& experiment, const Options& o) {
    const std::uint64_t seed = require_seed(o);
    const TestConfig config = test_config(o);

    if (experiment == "mi_error") {
        MiErrorOptions b;
        b.seed = seed;
        if (!o.sizes.empty()) b.sizes = o.sizes;
        if (o.trials) b.trials = *o.trials;
        b.kx = b.ky = o.k;
        if (!o.methods.empty()) {
            b.methods.clear();
            for (const auto& name : o.methods) {
                auto m = parse_mi_method(name);
                if (!m) throw CliError(kUsage, "unknown MI estimator '" + name + "'");
                b.methods.push_back(*m);
            }
        }
        return run_mi_error_bench(b);
    }
    if (experiment == "type1_power") {
        Type1PowerOptions b;
        b.seed = seed;
        if (!o.sizes.empty()) b.sizes = o.sizes;
        if (o.trials) b.trials = *o.trials;
        b.kx = b.ky = o.k;
        b.methods = method_list(o, b.methods);
        b.config = config;
        b.match_type1 = o.match_type1;
        return run_type1_power_bench(b);
    }
    if (experiment == "variance") {
        VarianceOptions b;
        b.seed = seed;
        b.theta = o.theta;
        if (!o.sizes.empty()) {
            if (o.sizes.size() != 1) throw CliError(kUsage, "variance takes a single size");
            b.n = o.sizes.front();
        }
        if (o.trials) b.trials = *o.trials;
        b.alpha = o.alpha;
        return run_variance_bench(b);
    }
    if (experiment == "polya_approx") {
        PolyaApproxOptions b;
        b.seed = seed;
        if (!o.sizes.empty()) {
            b.count_specs.clear();
            for (auto n : o.sizes) b.count_specs.emplace_back(o.k, n);
        }
        if (o.trials) b.trials = *o.trials;
        return run_polya_approx_bench(b);
    }
    if (experiment == "stat_dist") {
        StatDistOptions b;
        b.seed = seed;
        b.k = o.k;
        if (!o.sizes.empty()) b.sizes = o.sizes;
        if (o.trials) b.trials = *o.trials;
        b.alpha_policy = parse_policy(o.alpha_policy);
        return run_statistic_distribution_bench(b);
    }
    if (experiment == "discovery") {
        DiscoveryBenchOptions b;
        b.seed = seed;
        if (!o.sizes.empty()) b.sizes = o.sizes;
        b.runs = o.runs;
        b.methods = method_list(o, b.methods);
        b.config = config;
        const std::string net_path = o.net.empty() ? std::string(CAUSALCI_DEFAULT_NETWORK_DIR) + "/child.bif" : o.net;
        const DiscreteBayesNet net = load_net(net_path);
        return run_discovery_bench(net, b);
    }
    throw CliError(kUsage, "unknown experiment '" + experiment + "'");
}

int cmd_bench(const Options& o) {
    BenchmarkReport report;
    try {
        report = run_bench(o.input, o);
    } catch (const std::invalid_argument& e) {
        throw CliError(kUsage, e.what());
    }
    emit(o.out, to_json(report).dump(2) + "\n");
    return kOk;
}

void configure_logging() {
    auto logger = spdlog::stderr_logger_st("causalci");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("CAUSALCI_LOG");
    spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

void add_test_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--method", o.methods, "Test method(s)")->delimiter(',');
    cmd->add_option("--significance", o.significance, "Significance level");
    cmd->add_option("--alpha0", o.alpha0, "Prior for the marginals");
    cmd->add_option("--alpha1", o.alpha1, "Prior for the joint");
    cmd->add_option("--bf-threshold", o.bf_threshold, "Bayes factor threshold");
    cmd->add_option("--mi-threshold", o.mi_threshold, "Fixed MI threshold (default: calibrated)");
    cmd->add_option("--max-cond-set", o.max_cond_set, "Largest conditioning set");
    cmd->add_flag("--fixed-priors", o.fixed_priors, "BF_chi2 uses --alpha0/--alpha1 instead of fitted priors");
    cmd->add_option("--seed", o.seed, "Random seed");
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();
    Options o;
    CLI::App app{"Bayesian conditional independence tests and constraint-based structure learning"};
    app.require_subcommand(1);

    auto* sample = app.add_subcommand("sample", "Forward-sample a BIF network to CSV");
    sample->add_option("network", o.input, "BIF file")->required();
    sample->add_option("-n,--rows", o.rows, "Number of rows")->required();
    sample->add_option("--seed", o.seed, "Random seed")->required();
    sample->add_option("--out", o.out, "Output CSV (default stdout)");

    auto* citest = app.add_subcommand("citest", "Test X _||_ Y | Z on a CSV dataset");
    citest->add_option("data", o.input, "CSV file")->required();
    citest->add_option("--x", o.x, "First variable")->required();
    citest->add_option("--y", o.y, "Second variable")->required();
    citest->add_option("--z", o.z, "Conditioning variables")->delimiter(',');
    citest->add_option("--out", o.out, "Output JSON (default stdout)");
    add_test_flags(citest, o);

    auto* discover = app.add_subcommand("discover", "Learn a CPDAG with PC-stable");
    discover->add_option("data", o.input, "CSV file")->required();
    discover->add_option("--out", o.out, "Edge list output (default stdout)");
    discover->add_option("--stats", o.stats_out, "Statistics JSON output");
    add_test_flags(discover, o);

    auto* bench = app.add_subcommand("bench", "Run an evaluation experiment");
    bench->add_option("experiment", o.input,
                      "mi_error | type1_power | variance | polya_approx | stat_dist | discovery")
        ->required();
    bench->add_option("--sizes", o.sizes, "Sample sizes")->delimiter(',');
    bench->add_option("--runs", o.runs, "Runs per size (discovery)");
    bench->add_option("--trials", o.trials, "Trials per size");
    bench->add_option("--net", o.net, "BIF network for discovery (default CHILD)");
    bench->add_option("--k", o.k, "Cardinality of synthetic variables");
    bench->add_option("--theta", o.theta, "State probabilities (variance)")->delimiter(',');
    bench->add_option("--alpha", o.alpha, "Pseudo-count of the Bayesian estimator (variance)");
    bench->add_option("--alpha-policy", o.alpha_policy, "map | jeffreys | uniform (stat_dist)");
    bench->add_flag("--match-type1", o.match_type1, "Size-matched rejection cutoffs (type1_power)");
    bench->add_option("--out", o.out, "Report JSON (default stdout)");
    add_test_flags(bench, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*sample) return cmd_sample(o);
        if (*citest) return cmd_citest(o);
        if (*discover) return cmd_discover(o);
        return cmd_bench(o);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}
