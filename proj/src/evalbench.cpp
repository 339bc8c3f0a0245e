#include "causalci/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "causalci/discovery.hpp"
#include "causalci/numstat.hpp"
#include "causalci/rng.hpp"

namespace causalci {

namespace {

enum class Mark { None, Line, Forward, Backward };

Mark pair_mark(const Cpdag& g, std::size_t a, std::size_t b) {
    if (!g.adjacent(a, b)) return Mark::None;
    if (g.has_directed(a, b)) return Mark::Forward;
    if (g.has_directed(b, a)) return Mark::Backward;
    return Mark::Line;
}

std::uint64_t u64(std::int64_t v) { return static_cast<std::uint64_t>(v); }

double plugin_mi(std::span<const double> joint, std::size_t kx, std::size_t ky) {
    std::vector<double> px(kx, 0.0), py(ky, 0.0);
    for (std::size_t i = 0; i < kx; ++i) {
        for (std::size_t j = 0; j < ky; ++j) {
            px[i] += joint[i * ky + j];
            py[j] += joint[i * ky + j];
        }
    }
    double mi = 0.0;
    for (std::size_t i = 0; i < kx; ++i) {
        for (std::size_t j = 0; j < ky; ++j) {
            const double p = joint[i * ky + j];
            if (p > 0.0) mi += p * std::log(p / (px[i] * py[j]));
        }
    }
    return std::max(mi, 0.0);
}

}  // namespace

int shd(const Cpdag& learned, const Cpdag& truth) {
    if (learned.size() != truth.size()) throw std::invalid_argument("shd: graphs differ in node count");
    int d = 0;
    for (std::size_t a = 0; a < truth.size(); ++a) {
        for (std::size_t b = a + 1; b < truth.size(); ++b) {
            if (pair_mark(learned, a, b) != pair_mark(truth, a, b)) ++d;
        }
    }
    return d;
}

const ReportRecord& BenchmarkReport::find(std::int64_t size, std::string_view method, std::string_view metric) const {
    for (const auto& r : configs) {
        if (r.size == size && r.method == method && r.metric == metric) return r;
    }
    throw std::out_of_range("no record for " + std::string(method) + "/" + std::string(metric) + " at size " +
                            std::to_string(size));
}

nlohmann::json to_json(const BenchmarkReport& report) {
    nlohmann::json configs = nlohmann::json::array();
    for (const auto& r : report.configs) {
        nlohmann::json c{{"size", r.size},
                         {"method", r.method},
                         {"metric", r.metric},
                         {"metric_mean", r.metric_mean},
                         {"metric_std", r.metric_std},
                         {"runs", r.runs},
                         {"ci_tests_mean", r.ci_tests_mean}};
        if (r.reference) c["reference"] = *r.reference;
        configs.push_back(std::move(c));
    }
    return {{"experiment", report.experiment}, {"seed", report.seed}, {"configs", std::move(configs)}};
}

BenchmarkReport report_from_json(const nlohmann::json& j) {
    BenchmarkReport out;
    out.experiment = j.at("experiment").get<std::string>();
    out.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& c : j.at("configs")) {
        ReportRecord r;
        r.size = c.at("size").get<std::int64_t>();
        r.method = c.at("method").get<std::string>();
        r.metric = c.value("metric", std::string{});
        r.metric_mean = c.at("metric_mean").get<double>();
        r.metric_std = c.at("metric_std").get<double>();
        r.runs = c.at("runs").get<int>();
        r.ci_tests_mean = c.at("ci_tests_mean").get<double>();
        if (c.contains("reference")) r.reference = c["reference"].get<double>();
        out.configs.push_back(std::move(r));
    }
    return out;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    // Shift by the first value so a constant sample has exactly zero spread.
    const double shift = values.front();
    double sum = 0.0;
    for (double v : values) sum += v - shift;
    const double n = static_cast<double>(values.size());
    const double centered = sum / n;
    if (values.size() < 2) return {shift + centered, 0.0};
    double ss = 0.0;
    for (double v : values) {
        const double d = (v - shift) - centered;
        ss += d * d;
    }
    return {shift + centered, std::sqrt(ss / (n - 1.0))};
}

// --- synthetic pairs ------------------------------------------------------

double mi_of_joint(const std::vector<double>& joint, int kx, int ky) {
    if (kx < 1 || ky < 1 || joint.size() != static_cast<std::size_t>(kx) * static_cast<std::size_t>(ky)) {
        throw std::invalid_argument("mi_of_joint: joint size does not match Kx*Ky");
    }
    return plugin_mi(joint, static_cast<std::size_t>(kx), static_cast<std::size_t>(ky));
}

SyntheticPair gen_synthetic_pair(const SyntheticPairSpec& spec) {
    if (spec.kx < 1 || spec.ky < 1) throw std::invalid_argument("gen_synthetic_pair: cardinalities must be >= 1");
    if (spec.n < 0) throw std::invalid_argument("gen_synthetic_pair: n must be >= 0");
    if (!(spec.gen_alpha > 0.0)) throw std::invalid_argument("gen_synthetic_pair: gen_alpha must be positive");

    const auto kx = static_cast<std::size_t>(spec.kx);
    const auto ky = static_cast<std::size_t>(spec.ky);
    SplitMix64 rng = make_stream(spec.seed, {0});

    SyntheticPair out{Dataset({"X", "Y"}, {spec.kx, spec.ky}), !spec.dependent, 0.0, {}};
    if (spec.dependent) {
        out.joint = numstat::dirichlet_sample_symmetric(kx * ky, spec.gen_alpha, rng);
        out.true_mi = mi_of_joint(out.joint, spec.kx, spec.ky);
    } else {
        const auto px = numstat::dirichlet_sample_symmetric(kx, spec.gen_alpha, rng);
        const auto py = numstat::dirichlet_sample_symmetric(ky, spec.gen_alpha, rng);
        out.joint.resize(kx * ky);
        for (std::size_t i = 0; i < kx; ++i) {
            for (std::size_t j = 0; j < ky; ++j) out.joint[i * ky + j] = px[i] * py[j];
        }
    }

    SplitMix64 rows = make_stream(spec.seed, {1});
    out.data.reserve(static_cast<std::size_t>(spec.n));
    int cell[2];
    for (std::int64_t r = 0; r < spec.n; ++r) {
        const std::size_t c = numstat::categorical_sample(out.joint, rows);
        cell[0] = static_cast<int>(c / ky);
        cell[1] = static_cast<int>(c % ky);
        out.data.add_row(cell);
    }
    out.data.seed = spec.seed;
    return out;
}

ContingencyTable pair_table(const SyntheticPair& pair) {
    const Dataset& d = pair.data;
    ContingencyTable t(static_cast<std::size_t>(d.cardinality(0)), static_cast<std::size_t>(d.cardinality(1)));
    const auto xs = d.column(0);
    const auto ys = d.column(1);
    for (std::size_t r = 0; r < d.num_rows(); ++r) t.add(static_cast<std::size_t>(xs[r]), static_cast<std::size_t>(ys[r]));
    return t;
}

// --- MI error -------------------------------------------------------------

std::string MiMethod::name() const {
    switch (kind) {
        case Mle: return "mi_mle";
        case EbMap: return "mi_eb";
        case EbFixed: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "mi_eb(alpha=%g)", alpha);
            return buf;
        }
    }
    return "unknown";
}

std::optional<MiMethod> parse_mi_method(std::string_view name) {
    if (name == "mi_mle") return MiMethod{MiMethod::Mle};
    if (name == "mi_eb") return MiMethod{MiMethod::EbMap};
    constexpr std::string_view prefix = "mi_eb(alpha=";
    if (name.starts_with(prefix) && name.ends_with(")")) {
        const std::string num(name.substr(prefix.size(), name.size() - prefix.size() - 1));
        char* end = nullptr;
        const double a = std::strtod(num.c_str(), &end);
        if (end != num.c_str() && *end == '\0' && a > 0.0) return MiMethod{MiMethod::EbFixed, a};
    }
    return std::nullopt;
}

namespace {

double estimate(const MiMethod& m, const ContingencyTable& t) {
    switch (m.kind) {
        case MiMethod::Mle: return t.total() == 0 ? 0.0 : mi_mle(t);
        case MiMethod::EbMap: return mi_eb(t);
        case MiMethod::EbFixed: return mi_eb(t, m.alpha);
    }
    return 0.0;
}

void check_sizes(const std::vector<std::int64_t>& sizes, std::int64_t min_size) {
    if (sizes.empty()) throw std::invalid_argument("at least one size is required");
    for (auto s : sizes) {
        if (s < min_size) throw std::invalid_argument("size " + std::to_string(s) + " is too small");
    }
}

}  // namespace

BenchmarkReport run_mi_error_bench(const MiErrorOptions& opts) {
    check_sizes(opts.sizes, 0);
    if (opts.trials < 1) throw std::invalid_argument("mi_error: trials must be >= 1");
    if (opts.methods.empty()) throw std::invalid_argument("mi_error: no methods");

    BenchmarkReport report{"mi_error", opts.seed, {}};
    for (std::int64_t n : opts.sizes) {
        std::vector<std::vector<double>> errors(opts.methods.size());
        for (int t = 0; t < opts.trials; ++t) {
            const SyntheticPairSpec spec{opts.kx, opts.ky, t % 2 == 1, opts.gen_alpha, n,
                                         derive_seed(opts.seed, {u64(n), static_cast<std::uint64_t>(t)})};
            const SyntheticPair pair = gen_synthetic_pair(spec);
            const ContingencyTable table = pair_table(pair);
            for (std::size_t m = 0; m < opts.methods.size(); ++m) {
                errors[m].push_back(std::abs(estimate(opts.methods[m], table) - pair.true_mi));
            }
        }
        for (std::size_t m = 0; m < opts.methods.size(); ++m) {
            const auto [mean, sd] = mean_std(errors[m]);
            report.configs.push_back({n, opts.methods[m].name(), "abs_error", mean, sd, opts.trials, 0.0, std::nullopt});
        }
    }
    return report;
}

// --- Type-1 error and power -----------------------------------------------

namespace {

double rejection_score(const CiDecision& d) { return d.p_value.value_or(d.statistic); }

// Largest cutoff c such that the fraction of null scores strictly below c
// does not exceed `level`.
double matched_cutoff(std::vector<double> scores, double level) {
    std::sort(scores.begin(), scores.end());
    const auto allowed = static_cast<std::size_t>(std::floor(level * static_cast<double>(scores.size())));
    return allowed < scores.size() ? scores[allowed] : std::numeric_limits<double>::infinity();
}

}  // namespace

BenchmarkReport run_type1_power_bench(const Type1PowerOptions& opts, const std::vector<NamedTableTest>& tests) {
    check_sizes(opts.sizes, 1);
    if (opts.trials < 1) throw std::invalid_argument("type1_power: trials must be >= 1");
    if (tests.empty()) throw std::invalid_argument("type1_power: no tests");
    if (opts.match_type1 && opts.calibration_trials < 100) {
        throw std::invalid_argument("type1_power: calibration_trials must be >= 100");
    }

    auto table_for = [&](std::int64_t n, std::uint64_t stream, int t, bool dependent) {
        const SyntheticPairSpec spec{
            opts.kx, opts.ky, dependent, opts.gen_alpha, n,
            derive_seed(opts.seed, {stream, u64(n), static_cast<std::uint64_t>(t), dependent ? 1ULL : 0ULL})};
        return pair_table(gen_synthetic_pair(spec));
    };

    BenchmarkReport report{"type1_power", opts.seed, {}};
    for (std::int64_t n : opts.sizes) {
        std::vector<double> cutoff(tests.size(), 0.0);
        if (opts.match_type1) {
            std::vector<std::vector<double>> scores(tests.size());
            for (int t = 0; t < opts.calibration_trials; ++t) {
                const ContingencyTable table = table_for(n, 1, t, false);
                for (std::size_t m = 0; m < tests.size(); ++m) scores[m].push_back(rejection_score(tests[m].test(table)));
            }
            for (std::size_t m = 0; m < tests.size(); ++m) cutoff[m] = matched_cutoff(scores[m], opts.config.significance);
        }
        auto rejects = [&](std::size_t m, const ContingencyTable& table) {
            const CiDecision d = tests[m].test(table);
            return opts.match_type1 ? rejection_score(d) < cutoff[m] : !d.independent;
        };

        std::vector<std::vector<double>> null_rej(tests.size()), alt_rej(tests.size());
        for (int t = 0; t < opts.trials; ++t) {
            for (int dependent = 0; dependent < 2; ++dependent) {
                const ContingencyTable table = table_for(n, 0, t, dependent == 1);
                for (std::size_t m = 0; m < tests.size(); ++m) {
                    (dependent ? alt_rej : null_rej)[m].push_back(rejects(m, table) ? 1.0 : 0.0);
                }
            }
        }
        for (std::size_t m = 0; m < tests.size(); ++m) {
            const auto [t1, t1sd] = mean_std(null_rej[m]);
            const auto [pw, pwsd] = mean_std(alt_rej[m]);
            report.configs.push_back({n, tests[m].name, "type1", t1, t1sd, opts.trials, 0.0, std::nullopt});
            report.configs.push_back({n, tests[m].name, "power", pw, pwsd, opts.trials, 0.0, std::nullopt});
        }
    }
    return report;
}

BenchmarkReport run_type1_power_bench(const Type1PowerOptions& opts) {
    opts.config.validate();
    std::vector<NamedTableTest> tests;
    for (Method m : opts.methods) {
        if (m == Method::DsepOracle) throw std::invalid_argument("type1_power: dsep_oracle needs a graph");
        tests.push_back({std::string(to_string(m)), [m, &opts](const ContingencyTable& t) {
                             return marginal_test(m, t, opts.config, &shared_mi_threshold_cache());
                         }});
    }
    return run_type1_power_bench(opts, tests);
}

// --- estimator variance ---------------------------------------------------

BenchmarkReport run_variance_bench(const VarianceOptions& opts) {
    const std::size_t k = opts.theta.size();
    if (k < 2) throw std::invalid_argument("variance: theta needs at least two states");
    double total = 0.0;
    for (double p : opts.theta) {
        if (!(p >= 0.0)) throw std::invalid_argument("variance: theta must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("variance: theta must sum to 1");
    if (opts.n < 1) throw std::invalid_argument("variance: n must be >= 1");
    if (opts.trials < 2) throw std::invalid_argument("variance: trials must be >= 2");
    if (!(opts.alpha > 0.0)) throw std::invalid_argument("variance: alpha must be positive");

    const double n = static_cast<double>(opts.n);
    const double kd = static_cast<double>(k);
    std::vector<std::vector<double>> mle(k), bayes(k);
    SplitMix64 rng = make_stream(opts.seed, {0});
    for (int t = 0; t < opts.trials; ++t) {
        const auto counts = numstat::multinomial_sample(opts.theta, opts.n, rng);
        for (std::size_t i = 0; i < k; ++i) {
            const double c = static_cast<double>(counts[i]);
            mle[i].push_back(c / n);
            bayes[i].push_back((c + opts.alpha) / (n + kd * opts.alpha));
        }
    }

    BenchmarkReport report{"variance", opts.seed, {}};
    for (std::size_t i = 0; i < k; ++i) {
        const std::string metric = "var[" + std::to_string(i) + "]";
        const double binom = n * opts.theta[i] * (1.0 - opts.theta[i]);
        const double sd_m = mean_std(mle[i]).second;
        const double sd_b = mean_std(bayes[i]).second;
        const double denom_b = n + kd * opts.alpha;
        report.configs.push_back({opts.n, "mle", metric, sd_m * sd_m, 0.0, opts.trials, 0.0, binom / (n * n)});
        report.configs.push_back(
            {opts.n, "bayes", metric, sd_b * sd_b, 0.0, opts.trials, 0.0, binom / (denom_b * denom_b)});
    }
    return report;
}

// --- theta-tilde approximation --------------------------------------------

double polya_relative_error(std::span<const Count> counts, double alpha) {
    const double lp = numstat::log_polya(counts, alpha);
    const ThetaTilde tt = solve_theta_tilde(counts, alpha);
    const double lq = log_multinomial(counts, tt.values);
    return std::abs(std::expm1(lq - lp));
}

BenchmarkReport run_polya_approx_bench(const PolyaApproxOptions& opts) {
    if (opts.count_specs.empty() || opts.alphas.empty()) throw std::invalid_argument("polya_approx: nothing to run");
    if (opts.trials < 1) throw std::invalid_argument("polya_approx: trials must be >= 1");
    for (const auto& [k, n] : opts.count_specs) {
        if (k < 2 || n < 1) throw std::invalid_argument("polya_approx: need K >= 2 and N >= 1");
    }

    BenchmarkReport report{"polya_approx", opts.seed, {}};
    for (std::size_t a = 0; a < opts.alphas.size(); ++a) {
        const double alpha = opts.alphas[a];
        for (const auto& [k, n] : opts.count_specs) {
            std::vector<double> errors;
            errors.reserve(static_cast<std::size_t>(opts.trials));
            for (int t = 0; t < opts.trials; ++t) {
                SplitMix64 rng = make_stream(opts.seed, {static_cast<std::uint64_t>(k), u64(n), static_cast<std::uint64_t>(t)});
                const auto theta = numstat::dirichlet_sample_symmetric(static_cast<std::size_t>(k), opts.gen_alpha, rng);
                const auto counts = numstat::multinomial_sample(theta, n, rng);
                errors.push_back(polya_relative_error(counts, alpha));
            }
            const auto [mean, sd] = mean_std(errors);
            char method[64];
            std::snprintf(method, sizeof method, "theta_tilde(K=%d,alpha=%g)", k, alpha);
            report.configs.push_back({n, method, "rel_error", mean, sd, opts.trials, 0.0, std::nullopt});
        }
    }
    return report;
}

// --- null distribution of the statistics ----------------------------------

double ks_distance_chi2(std::vector<double> sample, int df) {
    if (sample.empty()) throw std::invalid_argument("ks_distance_chi2: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = numstat::chi2_cdf(sample[i], df);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

BenchmarkReport run_statistic_distribution_bench(const StatDistOptions& opts) {
    if (opts.k < 2) throw std::invalid_argument("stat_dist: k must be >= 2");
    if (opts.trials < 2000) throw std::invalid_argument("stat_dist: trials must be >= 2000");
    check_sizes(opts.sizes, 1);

    const int df = (opts.k - 1) * (opts.k - 1);
    TestConfig config;
    BenchmarkReport report{"stat_dist", opts.seed, {}};
    for (std::int64_t n : opts.sizes) {
        std::vector<double> g, bf;
        for (int t = 0; t < opts.trials; ++t) {
            const SyntheticPairSpec spec{opts.k, opts.k, false, opts.gen_alpha, n,
                                         derive_seed(opts.seed, {u64(n), static_cast<std::uint64_t>(t)})};
            const ContingencyTable table = pair_table(gen_synthetic_pair(spec));
            g.push_back(g_test(table, config).statistic);
            switch (opts.alpha_policy) {
                case AlphaPolicy::Map: bf.push_back(bf_chi2_test(table, config).statistic); break;
                case AlphaPolicy::Jeffreys: bf.push_back(bf_chi2_statistic(table, 0.5, 0.5, 0.5)); break;
                case AlphaPolicy::Uniform: bf.push_back(bf_chi2_statistic(table, 1.0, 1.0, 1.0)); break;
            }
        }
        for (auto* s : {&g, &bf}) {
            const std::string method = s == &g ? "g" : "bf_chi2";
            const auto [mean, sd] = mean_std(*s);
            report.configs.push_back({n, method, "ks", ks_distance_chi2(*s, df), 0.0, opts.trials, 0.0, std::nullopt});
            report.configs.push_back({n, method, "mean", mean, sd, opts.trials, 0.0, static_cast<double>(df)});
        }
    }
    return report;
}

// --- structure learning ---------------------------------------------------

BenchmarkReport run_discovery_bench(const DiscreteBayesNet& net, const DiscoveryBenchOptions& opts) {
    check_sizes(opts.sizes, 1);
    if (opts.runs < 1) throw std::invalid_argument("discovery: runs must be >= 1");
    if (opts.methods.empty()) throw std::invalid_argument("discovery: no methods");
    opts.config.validate();

    const Dag truth_dag = net.dag();
    const Cpdag truth = dag_to_cpdag(truth_dag);
    BenchmarkReport report{"discovery", opts.seed, {}};
    for (std::int64_t n : opts.sizes) {
        std::vector<std::vector<double>> shds(opts.methods.size()), counts(opts.methods.size());
        for (int r = 0; r < opts.runs; ++r) {
            const Dataset data =
                forward_sample(net, static_cast<std::size_t>(n), derive_seed(opts.seed, {u64(n), static_cast<std::uint64_t>(r)}));
            for (std::size_t m = 0; m < opts.methods.size(); ++m) {
                const DiscoveryResult res =
                    learn_cpdag(data, opts.methods[m], opts.config, &truth_dag, &shared_mi_threshold_cache());
                shds[m].push_back(shd(res.cpdag, truth));
                counts[m].push_back(static_cast<double>(res.stats.ci_test_count));
            }
        }
        for (std::size_t m = 0; m < opts.methods.size(); ++m) {
            const auto [mean, sd] = mean_std(shds[m]);
            report.configs.push_back({n, std::string(to_string(opts.methods[m])), "shd", mean, sd, opts.runs,
                                      mean_std(counts[m]).first, std::nullopt});
        }
    }
    return report;
}

McEstimate mc_mi_posterior_oracle(const ContingencyTable& table, double alpha, int draws, std::uint64_t seed) {
    if (!(alpha > 0.0)) throw std::invalid_argument("mc_mi_posterior_oracle: alpha must be positive");
    if (draws < 2) throw std::invalid_argument("mc_mi_posterior_oracle: draws must be >= 2");
    std::vector<double> conc;
    for (Count c : table.cells()) conc.push_back(static_cast<double>(c) + alpha);

    SplitMix64 rng(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (int d = 0; d < draws; ++d) {
        const auto theta = numstat::dirichlet_sample(conc, rng);
        const double mi = plugin_mi(theta, table.rows(), table.cols());
        sum += mi;
        sum_sq += mi * mi;
    }
    const double n = static_cast<double>(draws);
    const double mean = sum / n;
    const double var = std::max((sum_sq - n * mean * mean) / (n - 1.0), 0.0);
    return {mean, std::sqrt(var / n)};
}

}  // namespace causalci
