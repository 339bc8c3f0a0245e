#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "causalci/bayesnet.hpp"
#include "causalci/evalbench.hpp"

using namespace causalci;

namespace {

std::string read_file(const std::string& name) {
    std::ifstream in(std::string(CAUSALCI_NETWORK_DIR) + "/" + name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Pdag path3(bool second_edge) {
    Pdag g(3);
    g.add_undirected(0, 1);
    if (second_edge) g.add_undirected(1, 2);
    return g;
}

}  // namespace

TEST(Shd, Examples) {
    EXPECT_EQ(shd(path3(true), path3(true)), 0);
    EXPECT_EQ(shd(path3(false), path3(true)), 1);

    Pdag truth(3);
    truth.orient(0, 2);
    truth.orient(1, 2);
    Pdag learned(3);
    learned.orient(0, 2);
    learned.add_undirected(1, 2);
    EXPECT_EQ(shd(learned, truth), 1);

    Pdag reversed(3);
    reversed.orient(2, 0);
    reversed.orient(1, 2);
    EXPECT_EQ(shd(reversed, truth), 1);
    EXPECT_THROW(shd(Pdag(2), Pdag(3)), std::invalid_argument);
}

TEST(Shd, SymmetricAndZeroOnlyWhenEqual) {
    SplitMix64 rng(12);
    for (int t = 0; t < 200; ++t) {
        Pdag a(5), b(5);
        for (Pdag* g : {&a, &b}) {
            for (std::size_t i = 0; i < 5; ++i) {
                for (std::size_t j = i + 1; j < 5; ++j) {
                    switch (rng() % 4) {
                        case 1: g->add_undirected(i, j); break;
                        case 2: g->orient(i, j); break;
                        case 3: g->orient(j, i); break;
                        default: break;
                    }
                }
            }
        }
        EXPECT_EQ(shd(a, b), shd(b, a));
        EXPECT_EQ(shd(a, b) == 0, a == b);
        EXPECT_EQ(shd(a, a), 0);
    }
}

TEST(MeanStd, Conventions) {
    EXPECT_EQ(mean_std({3.5}).second, 0.0);
    EXPECT_EQ(mean_std({0.1, 0.1, 0.1}).second, 0.0);
    const auto [m, s] = mean_std({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(m, 2.5);
    EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-12);
}

TEST(Report, JsonRoundTrip) {
    BenchmarkReport r{"demo", 7, {}};
    r.configs.push_back({100, "g", "shd", 12.25, 1.5, 10, 345.5, std::nullopt});
    r.configs.push_back({20, "mle", "var[0]", 0.0123456789012345, 0.0, 10000, 0.0, 0.0125});
    const nlohmann::json j = to_json(r);
    EXPECT_EQ(j.at("experiment"), "demo");
    EXPECT_EQ(j.at("configs").size(), 2u);
    const BenchmarkReport back = report_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(to_json(back).dump(), j.dump());
    EXPECT_EQ(back.find(20, "mle", "var[0]").reference, 0.0125);
    EXPECT_EQ(back.find(20, "mle", "var[0]").metric_mean, 0.0123456789012345);
    EXPECT_THROW(back.find(1, "g", "shd"), std::out_of_range);
}

TEST(Synthetic, IndependentPairsHaveZeroMi) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const SyntheticPair p = gen_synthetic_pair({3, 4, false, 1.0, 30, s});
        EXPECT_EQ(p.true_mi, 0.0);
        EXPECT_TRUE(p.independent);
        EXPECT_EQ(p.data.num_rows(), 30u);
        EXPECT_EQ(p.data.cardinality(1), 4);
    }
}

TEST(Synthetic, SeedReproducesPair) {
    const SyntheticPair a = gen_synthetic_pair({3, 3, true, 1.0, 100, 5});
    const SyntheticPair b = gen_synthetic_pair({3, 3, true, 1.0, 100, 5});
    EXPECT_EQ(a.joint, b.joint);
    EXPECT_EQ(a.true_mi, b.true_mi);
    for (std::size_t v = 0; v < 2; ++v)
        EXPECT_TRUE(std::equal(a.data.column(v).begin(), a.data.column(v).end(), b.data.column(v).begin()));
}

TEST(Synthetic, DependentPairsCarryInformation) {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 10000; ++s) total += gen_synthetic_pair({3, 3, true, 1.0, 1, s}).true_mi;
    EXPECT_GT(total / 10000, 0.0);
}

TEST(Synthetic, MiOfJointMatchesPlugIn) {
    const std::vector<double> joint{0.4, 0.1, 0.1, 0.4};
    EXPECT_NEAR(mi_of_joint(joint, 2, 2), mi_mle({{4, 1}, {1, 4}}), 1e-12);
}

TEST(Synthetic, GTestHoldsLevelOnIndependentPairs) {
    const TestConfig c;
    int rejected = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const SyntheticPair p = gen_synthetic_pair({3, 3, false, 1.0, 10000, static_cast<std::uint64_t>(t) + 1000});
        if (!g_test(pair_table(p), c).independent) ++rejected;
    }
    const double rate = static_cast<double>(rejected) / trials;
    EXPECT_GE(rate, 0.03);
    EXPECT_LE(rate, 0.07);
}

TEST(MiError, ConsistentAtLargeN) {
    MiErrorOptions o;
    o.sizes = {100000};
    o.trials = 20;
    const BenchmarkReport r = run_mi_error_bench(o);
    ASSERT_EQ(r.configs.size(), 3u);
    for (const auto& rec : r.configs) EXPECT_LT(rec.metric_mean, 0.01) << rec.method;
}

TEST(MiError, SingleTrialHasZeroStd) {
    MiErrorOptions o;
    o.sizes = {20, 40};
    o.trials = 1;
    for (const auto& rec : run_mi_error_bench(o).configs) EXPECT_EQ(rec.metric_std, 0.0);
}

TEST(MiError, MethodNames) {
    for (const char* name : {"mi_mle", "mi_eb", "mi_eb(alpha=1)", "mi_eb(alpha=0.5)"}) {
        const auto m = parse_mi_method(name);
        ASSERT_TRUE(m.has_value()) << name;
        EXPECT_EQ(m->name(), name);
    }
    EXPECT_FALSE(parse_mi_method("mi_eb(alpha=-1)").has_value());
}

TEST(Type1Power, AlwaysIndependentNeverRejects) {
    Type1PowerOptions o;
    o.sizes = {30};
    o.trials = 200;
    const std::vector<NamedTableTest> tests{{"never", [](const ContingencyTable&) { return CiDecision{}; }}};
    const BenchmarkReport r = run_type1_power_bench(o, tests);
    EXPECT_EQ(r.find(30, "never", "type1").metric_mean, 0.0);
    EXPECT_EQ(r.find(30, "never", "power").metric_mean, 0.0);
}

TEST(Type1Power, BfChi2LevelAtLargeN) {
    Type1PowerOptions o;
    o.sizes = {1000};
    o.trials = 2000;
    o.methods = {Method::BfChi2};
    const BenchmarkReport r = run_type1_power_bench(o);
    const double type1 = r.find(1000, "bf_chi2", "type1").metric_mean;
    EXPECT_GE(type1, 0.03);
    EXPECT_LE(type1, 0.08);
}

TEST(Type1Power, MatchedModeCalibratesSize) {
    Type1PowerOptions o;
    o.sizes = {50};
    o.trials = 1000;
    o.methods = {Method::G, Method::BfThreshold};
    o.match_type1 = true;
    o.calibration_trials = 1000;
    const BenchmarkReport r = run_type1_power_bench(o);
    for (const char* m : {"g", "bf_threshold"}) EXPECT_NEAR(r.find(50, m, "type1").metric_mean, 0.05, 0.025) << m;
}

TEST(Variance, BayesBelowMle) {
    VarianceOptions o;
    o.theta = {0.1, 0.2, 0.3, 0.4};
    const BenchmarkReport r = run_variance_bench(o);
    for (int i = 0; i < 4; ++i) {
        const std::string metric = "var[" + std::to_string(i) + "]";
        const auto& mle = r.find(20, "mle", metric);
        const auto& bayes = r.find(20, "bayes", metric);
        EXPECT_LT(bayes.metric_mean, mle.metric_mean);
        EXPECT_NEAR(mle.metric_mean, *mle.reference, 0.1 * *mle.reference);
        EXPECT_NEAR(bayes.metric_mean, *bayes.reference, 0.1 * *bayes.reference);
    }
}

TEST(Variance, DegenerateThetaHasNoSpread) {
    VarianceOptions o;
    o.theta = {0.0, 1.0, 0.0};
    o.trials = 100;
    for (const auto& rec : run_variance_bench(o).configs) EXPECT_EQ(rec.metric_mean, 0.0);
    o.theta = {0.5, 0.6};
    EXPECT_THROW(run_variance_bench(o), std::invalid_argument);
}

TEST(PolyaApprox, Examples) {
    const std::vector<Count> uniform{5, 5, 5};
    const double u = polya_relative_error(uniform, 1.0);
    EXPECT_TRUE(std::isfinite(u));
    EXPECT_GE(u, 0.0);

    const std::vector<Count> c31{3, 1};
    const ThetaTilde th = solve_theta_tilde(c31, 0.5);
    const double approx = std::exp(log_multinomial(c31, th.values));
    EXPECT_NEAR(polya_relative_error(c31, 0.5), std::abs(approx - 0.15625) / 0.15625, 1e-9);

    PolyaApproxOptions o;
    o.trials = 50;
    const BenchmarkReport r = run_polya_approx_bench(o);
    EXPECT_EQ(r.configs.size(), o.count_specs.size() * o.alphas.size());
    for (const auto& rec : r.configs) EXPECT_TRUE(std::isfinite(rec.metric_mean));
}

TEST(StatDist, RequiresEnoughTrials) {
    StatDistOptions o;
    o.trials = 100;
    EXPECT_THROW(run_statistic_distribution_bench(o), std::invalid_argument);
}

TEST(StatDist, KsDistanceMatchesBruteForce) {
    SplitMix64 rng(3);
    std::vector<double> sample;
    for (int i = 0; i < 50; ++i) sample.push_back(10.0 * rng.uniform());
    double brute = 0.0;
    for (double x : sample) {
        const double f = numstat::chi2_cdf(x, 4);
        int le = 0, lt = 0;
        for (double y : sample) {
            le += y <= x;
            lt += y < x;
        }
        brute = std::max({brute, std::abs(le / 50.0 - f), std::abs(lt / 50.0 - f)});
    }
    EXPECT_NEAR(ks_distance_chi2(sample, 4), brute, 1e-15);
}

TEST(StatDist, GFollowsChiSquared) {
    StatDistOptions o;
    o.sizes = {1000};
    o.trials = 2000;
    const BenchmarkReport r = run_statistic_distribution_bench(o);
    EXPECT_LT(r.find(1000, "g", "ks").metric_mean, 0.05);
    EXPECT_EQ(*r.find(1000, "g", "mean").reference, 4.0);
}

TEST(Discovery, OracleScoresZero) {
    const DiscreteBayesNet net = parse_bif(read_file("asia.bif"));
    DiscoveryBenchOptions o;
    o.sizes = {50, 100};
    o.runs = 3;
    o.methods = {Method::DsepOracle, Method::G};
    const BenchmarkReport r = run_discovery_bench(net, o);
    ASSERT_EQ(r.configs.size(), 4u);
    for (std::int64_t n : {50, 100}) {
        const auto& rec = r.find(n, "dsep_oracle", "shd");
        EXPECT_EQ(rec.metric_mean, 0.0);
        EXPECT_EQ(rec.metric_std, 0.0);
        EXPECT_GT(rec.ci_tests_mean, 0.0);
    }
}

TEST(Reports, IdenticalAcrossInvocations) {
    MiErrorOptions o;
    o.sizes = {20};
    o.trials = 50;
    o.seed = 99;
    EXPECT_EQ(to_json(run_mi_error_bench(o)).dump(), to_json(run_mi_error_bench(o)).dump());

    const DiscreteBayesNet net = parse_bif(read_file("asia.bif"));
    DiscoveryBenchOptions d;
    d.sizes = {200};
    d.runs = 1;
    d.seed = 4;
    const auto a = run_discovery_bench(net, d);
    EXPECT_EQ(to_json(a).dump(), to_json(run_discovery_bench(net, d)).dump());
    for (const auto& rec : a.configs) EXPECT_EQ(rec.metric_std, 0.0);
}

TEST(McOracle, Examples) {
    const ContingencyTable big{{40000, 10000}, {20000, 30000}};
    const McEstimate m = mc_mi_posterior_oracle(big, 1.0, 20000, 3);
    EXPECT_NEAR(m.mean, mi_mle(big), 3.0 * m.std_error);

    const McEstimate prior = mc_mi_posterior_oracle(ContingencyTable(2, 2), 1.0, 100000, 4);
    EXPECT_GT(prior.mean, 0.0);
}
