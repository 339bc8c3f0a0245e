#pragma once

// Scoring, synthetic generators and seeded evaluation experiments.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "causalci/bayesnet.hpp"
#include "causalci/citest.hpp"
#include "causalci/contingency.hpp"
#include "causalci/graph.hpp"

namespace causalci {

/// Structural Hamming distance between CPDAGs: each node pair whose
/// adjacency or mark differs costs 1. Throws std::invalid_argument when the
/// graphs have different node counts.
int shd(const Cpdag& learned, const Cpdag& truth);

struct ReportRecord {
    std::int64_t size = 0;
    std::string method;
    std::string metric;  ///< what metric_mean measures, e.g. "shd", "type1"
    double metric_mean = 0.0;
    double metric_std = 0.0;
    int runs = 0;
    double ci_tests_mean = 0.0;
    std::optional<double> reference;  ///< analytic/expected value when one exists
};

struct BenchmarkReport {
    std::string experiment;
    std::uint64_t seed = 0;
    std::vector<ReportRecord> configs;

    /// First record with the given keys; throws std::out_of_range if absent.
    const ReportRecord& find(std::int64_t size, std::string_view method, std::string_view metric) const;
};

/// {experiment, seed, configs:[{size, method, metric, metric_mean,
/// metric_std, runs, ci_tests_mean[, reference]}]}
nlohmann::json to_json(const BenchmarkReport& report);
BenchmarkReport report_from_json(const nlohmann::json& j);

/// Mean and sample standard deviation (0 for fewer than two values).
std::pair<double, double> mean_std(const std::vector<double>& values);

// --- synthetic pairs ------------------------------------------------------

struct SyntheticPairSpec {
    int kx = 3;
    int ky = 3;
    bool dependent = false;
    double gen_alpha = 1.0;
    std::int64_t n = 100;
    std::uint64_t seed = 0;
};

struct SyntheticPair {
    Dataset data;  ///< columns "X" and "Y"
    bool independent = true;
    double true_mi = 0.0;
    std::vector<double> joint;  ///< row-major Kx*Ky probabilities
};

SyntheticPair gen_synthetic_pair(const SyntheticPairSpec& spec);

/// Exact MI (nats) of a row-major joint distribution.
double mi_of_joint(const std::vector<double>& joint, int kx, int ky);

ContingencyTable pair_table(const SyntheticPair& pair);

// --- experiments ----------------------------------------------------------

struct MiMethod {
    enum Kind { Mle, EbMap, EbFixed } kind = Mle;
    double alpha = 1.0;  ///< for EbFixed
    std::string name() const;
};
std::optional<MiMethod> parse_mi_method(std::string_view name);

struct MiErrorOptions {
    std::vector<std::int64_t> sizes{20, 50, 100, 200, 500};
    int trials = 1000;
    std::vector<MiMethod> methods{{MiMethod::Mle}, {MiMethod::EbMap}, {MiMethod::EbFixed, 1.0}};
    int kx = 3;
    int ky = 3;
    double gen_alpha = 1.0;
    std::uint64_t seed = 0;
};

/// Mean |MI_hat - MI_true| per size and method. Trial t uses a dependent
/// pair when t is odd and an independent pair otherwise.
BenchmarkReport run_mi_error_bench(const MiErrorOptions& opts);

struct Type1PowerOptions {
    std::vector<std::int64_t> sizes{50, 100, 200, 500, 1000};
    int trials = 2000;
    std::vector<Method> methods{Method::G, Method::BfThreshold, Method::BfChi2};
    int kx = 3;
    int ky = 3;
    double gen_alpha = 1.0;
    TestConfig config;
    /// Size-matched mode: each test rejects when its score (p-value, or BF for
    /// bf_threshold) falls below the config.significance quantile of its scores
    /// on `calibration_trials` separate null pairs.
    bool match_type1 = false;
    int calibration_trials = 2000;
    std::uint64_t seed = 0;
};

/// Rejection rates on independent ("type1") and dependent ("power") pairs.
BenchmarkReport run_type1_power_bench(const Type1PowerOptions& opts);

struct NamedTableTest {
    std::string name;
    std::function<CiDecision(const ContingencyTable&)> test;
};

/// Same experiment over arbitrary marginal tests; opts.methods is ignored.
BenchmarkReport run_type1_power_bench(const Type1PowerOptions& opts, const std::vector<NamedTableTest>& tests);

struct VarianceOptions {
    std::vector<double> theta;
    std::int64_t n = 20;
    int trials = 10000;
    double alpha = 1.0;
    std::uint64_t seed = 0;
};

/// Per state i: records "mle" and "bayes" with metric "var[i]", empirical
/// variance as metric_mean and the analytic variance as reference.
BenchmarkReport run_variance_bench(const VarianceOptions& opts);

struct PolyaApproxOptions {
    std::vector<std::pair<int, std::int64_t>> count_specs{{3, 10}, {3, 20}, {3, 50}, {3, 100}, {3, 200}};  ///< (K, N)
    std::vector<double> alphas{0.5, 1.0};
    int trials = 1000;
    double gen_alpha = 1.0;
    std::uint64_t seed = 0;
};

/// Relative error |p - p~|/p of the theta-tilde multinomial approximation of
/// the Polya pmf, where p~ uses solve_theta_tilde.
double polya_relative_error(std::span<const Count> counts, double alpha);
BenchmarkReport run_polya_approx_bench(const PolyaApproxOptions& opts);

enum class AlphaPolicy { Map, Jeffreys, Uniform };

struct StatDistOptions {
    int k = 3;
    std::vector<std::int64_t> sizes{30, 1000};
    int trials = 5000;
    AlphaPolicy alpha_policy = AlphaPolicy::Jeffreys;
    double gen_alpha = 1.0;
    std::uint64_t seed = 0;
};

/// Sup-distance between the empirical null CDF of G / BF_chi2 and the
/// chi-squared((k-1)^2) CDF (metric "ks"), plus mean statistic (metric "mean").
BenchmarkReport run_statistic_distribution_bench(const StatDistOptions& opts);

/// Kolmogorov distance of a sample from the chi-squared(df) CDF.
double ks_distance_chi2(std::vector<double> sample, int df);

struct DiscoveryBenchOptions {
    std::vector<std::int64_t> sizes{100, 300, 500};
    int runs = 10;
    std::vector<Method> methods{Method::G, Method::BfChi2, Method::MiEb};
    TestConfig config;
    std::uint64_t seed = 0;
};

/// SHD against dag_to_cpdag(truth) and CI-test counts. Run r at size s
/// samples one dataset shared by every method.
BenchmarkReport run_discovery_bench(const DiscreteBayesNet& net, const DiscoveryBenchOptions& opts);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Posterior-expected plug-in MI by Monte Carlo: theta ~ Dirichlet(n_ij + alpha).
McEstimate mc_mi_posterior_oracle(const ContingencyTable& table, double alpha, int draws, std::uint64_t seed);

}  // namespace causalci
