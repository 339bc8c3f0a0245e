#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "causalci/bayesnet.hpp"
#include "causalci/citest.hpp"
#include "causalci/evalbench.hpp"

using namespace causalci;

namespace {

// MI by summing the definition over cells, theta = counts / N.
double direct_mi(const ContingencyTable& t) {
    const double n = static_cast<double>(t.total());
    double mi = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) {
            const double p = static_cast<double>(t(i, j)) / n;
            if (p == 0.0) continue;
            const double pi = static_cast<double>(t.row_margin(i)) / n;
            const double pj = static_cast<double>(t.col_margin(j)) / n;
            mi += p * std::log(p / (pi * pj));
        }
    }
    return mi;
}

ContingencyTable random_table(SplitMix64& rng, std::size_t kx, std::size_t ky, Count max_cell) {
    ContingencyTable t(kx, ky);
    for (std::size_t i = 0; i < kx; ++i)
        for (std::size_t j = 0; j < ky; ++j) t.add(i, j, static_cast<Count>(rng() % static_cast<std::uint64_t>(max_cell + 1)));
    return t;
}

ContingencyTable permuted(const ContingencyTable& t, const std::vector<std::size_t>& rp, const std::vector<std::size_t>& cp) {
    ContingencyTable out(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) out.add(rp[i], cp[j], t(i, j));
    return out;
}

const Method kDataMethods[] = {Method::G, Method::BfThreshold, Method::BfChi2, Method::MiMle, Method::MiEb};

TestConfig fast_config() {
    TestConfig c;
    c.mi_threshold = 0.02;
    return c;
}

DiscreteBayesNet deterministic_chain() {
    // X -> Z -> Y with Z = X and Y = Z.
    std::vector<BnNode> nodes(3);
    nodes[0] = {"X", {"a", "b"}, {}, {0.5, 0.5}};
    nodes[1] = {"Y", {"a", "b"}, {2}, {1.0, 0.0, 0.0, 1.0}};
    nodes[2] = {"Z", {"a", "b"}, {0}, {1.0, 0.0, 0.0, 1.0}};
    return DiscreteBayesNet("chain", nodes);
}

}  // namespace

TEST(Methods, NamesRoundTrip) {
    for (Method m : {Method::MiMle, Method::MiEb, Method::G, Method::BfThreshold, Method::BfChi2, Method::DsepOracle}) {
        EXPECT_EQ(parse_method(to_string(m)), m);
    }
    EXPECT_FALSE(parse_method("nope").has_value());
}

TEST(TestConfig, Validation) {
    TestConfig c;
    EXPECT_NO_THROW(c.validate());
    c.significance = 1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.bf_threshold = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(MiMle, Examples) {
    EXPECT_NEAR(mi_mle({{5, 5}, {5, 5}}), 0.0, 1e-15);
    EXPECT_NEAR(mi_mle({{10, 0}, {0, 10}}), std::log(2.0), 1e-12);
    const ContingencyTable t{{4, 1}, {1, 4}};
    EXPECT_NEAR(mi_mle(t), direct_mi(t), 1e-12);
    // 0.8 ln 1.6 + 0.2 ln 0.4 by hand.
    EXPECT_NEAR(mi_mle(t), 0.8 * std::log(1.6) + 0.2 * std::log(0.4), 1e-12);
}

TEST(MiEb, MatchesMonteCarloPosterior) {
    const ContingencyTable t{{2, 1}, {1, 2}};
    const McEstimate mc = mc_mi_posterior_oracle(t, 1.0, 1000000, 17);
    EXPECT_NEAR(mi_eb(t, 1.0), mc.mean, 3.0 * mc.std_error);

    const ContingencyTable empty(2, 2);
    const McEstimate prior = mc_mi_posterior_oracle(empty, 1.0, 1000000, 18);
    EXPECT_GT(prior.mean, 0.0);
    EXPECT_NEAR(mi_eb(empty, 1.0), prior.mean, 3.0 * prior.std_error);

    EXPECT_LT(mi_eb({{250, 250}, {250, 250}}, 1.0), 0.01);
}

TEST(MiEb, MonteCarloOnRandomTables) {
    SplitMix64 rng(5);
    for (int t = 0; t < 5; ++t) {
        const ContingencyTable table = random_table(rng, 2 + t % 2, 3, 6);
        const double alpha = t % 2 ? 0.5 : 2.0;
        const McEstimate mc = mc_mi_posterior_oracle(table, alpha, 200000, 100 + t);
        EXPECT_NEAR(mi_eb(table, alpha), mc.mean, 3.0 * mc.std_error) << t;
    }
}

TEST(MiEb, ApproachesPlugInWithData) {
    const ContingencyTable t{{4000, 1000}, {1000, 4000}};
    EXPECT_NEAR(mi_eb(t), mi_mle(t), 1e-3);
    EXPECT_GE(mi_eb({{3, 3}, {3, 3}}), 0.0);
}

TEST(Calibration, NullRejectionRateMatchesTarget) {
    const int kx = 3, ky = 3;
    const Count n = 40;
    const double threshold = calibrate_mi_threshold(kx, ky, n, 0.05, 4000, 123);
    SplitMix64 rng(987654321);
    int rejected = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        const auto px = numstat::dirichlet_sample_symmetric(kx, 1.0, rng);
        const auto py = numstat::dirichlet_sample_symmetric(ky, 1.0, rng);
        ContingencyTable table(kx, ky);
        for (Count r = 0; r < n; ++r) table.add(numstat::categorical_sample(px, rng), numstat::categorical_sample(py, rng));
        if (mi_eb(table) > threshold) ++rejected;
    }
    EXPECT_NEAR(static_cast<double>(rejected) / trials, 0.05, 0.02);
}

TEST(Calibration, ThresholdFallsWithTarget) {
    const double t05 = calibrate_mi_threshold(2, 2, 20, 0.05, 500, 9);
    const double t50 = calibrate_mi_threshold(2, 2, 20, 0.5, 500, 9);
    const double t100 = calibrate_mi_threshold(2, 2, 20, 1.0, 500, 9);
    EXPECT_GE(t05, t50);
    EXPECT_GE(t50, t100);
    EXPECT_GE(t100, 0.0);
    EXPECT_EQ(calibrate_mi_threshold(2, 2, 20, 0.05, 500, 9), t05);
    EXPECT_THROW(calibrate_mi_threshold(2, 2, 20, 0.0, 500, 9), std::invalid_argument);
}

TEST(Calibration, CacheInterpolatesBetweenGridPoints) {
    MiThresholdCache cache;
    TestConfig c;
    // 40 and 50 are consecutive grid points; 45 is interpolated in 1/N.
    const double a = cache.get(MiEstimator::EmpiricalBayes, 2, 2, 45, c);
    const double lo = cache.get(MiEstimator::EmpiricalBayes, 2, 2, 40, c);
    const double hi = cache.get(MiEstimator::EmpiricalBayes, 2, 2, 50, c);
    const double w = (1.0 / 45 - 1.0 / 40) / (1.0 / 50 - 1.0 / 40);
    EXPECT_NEAR(a, lo + w * (hi - lo), 1e-15);
    EXPECT_GE(a, std::min(lo, hi));
    EXPECT_LE(a, std::max(lo, hi));
    EXPECT_EQ(cache.get(MiEstimator::EmpiricalBayes, 2, 2, 45, c), a);
}

TEST(GTest, Examples) {
    const TestConfig c;
    const CiDecision flat = g_test({{5, 5}, {5, 5}}, c);
    EXPECT_NEAR(flat.statistic, 0.0, 1e-12);
    EXPECT_NEAR(*flat.p_value, 1.0, 1e-12);
    EXPECT_TRUE(flat.independent);

    const CiDecision diag = g_test({{10, 0}, {0, 10}}, c);
    EXPECT_NEAR(diag.statistic, 40.0 * std::log(2.0), 1e-9);
    EXPECT_EQ(diag.df, 1);
    EXPECT_FALSE(diag.independent);

    const ContingencyTable t{{4, 1}, {1, 4}};
    EXPECT_NEAR(g_test(t, c).statistic, 2.0 * 10.0 * direct_mi(t), 1e-9);
}

TEST(GTest, EqualsTwiceNTimesMi) {
    SplitMix64 rng(77);
    const TestConfig c;
    for (int t = 0; t < 200; ++t) {
        const ContingencyTable table = random_table(rng, 2 + t % 3, 2 + (t / 3) % 3, 20);
        if (table.total() == 0) continue;
        EXPECT_NEAR(g_test(table, c).statistic, 2.0 * static_cast<double>(table.total()) * mi_mle(table), 1e-9);
    }
}

TEST(GTest, TieCountsAsIndependent) {
    const ContingencyTable t{{4, 1}, {1, 4}};
    TestConfig c;
    const CiDecision d = g_test(t, c);
    c.significance = *d.p_value;
    EXPECT_TRUE(g_test(t, c).independent);
}

TEST(BayesFactor, Examples) {
    const TestConfig c;
    EXPECT_NEAR(bayes_factor(ContingencyTable(2, 2), c), 1.0, 1e-12);
    EXPECT_LT(log_bayes_factor({{10, 0}, {0, 10}}, c), 0.0);
    EXPECT_GT(log_bayes_factor({{5, 5}, {5, 5}}, c), 0.0);
}

TEST(BayesFactor, MatchesRatioOfPolyaLikelihoods) {
    // Multinomial coefficients cancel between hypotheses once the joint
    // coefficient is split into the two margins' coefficients.
    SplitMix64 rng(8);
    const TestConfig c;
    for (int t = 0; t < 20; ++t) {
        const ContingencyTable table = random_table(rng, 2, 3, 5);
        const Count n = table.total();
        double log_coef_joint = numstat::ln_gamma(n + 1.0);
        for (Count v : table.cells()) log_coef_joint -= numstat::ln_gamma(v + 1.0);
        double log_coef_x = numstat::ln_gamma(n + 1.0), log_coef_y = numstat::ln_gamma(n + 1.0);
        for (Count v : table.row_margins()) log_coef_x -= numstat::ln_gamma(v + 1.0);
        for (Count v : table.col_margins()) log_coef_y -= numstat::ln_gamma(v + 1.0);
        const double h0 = numstat::log_polya(table.row_margins(), 0.5) - log_coef_x +
                          numstat::log_polya(table.col_margins(), 0.5) - log_coef_y;
        const double h1 = numstat::log_polya(table.cells(), 0.5) - log_coef_joint;
        EXPECT_NEAR(log_bayes_factor(table, c), h0 - h1, 1e-9);
    }
}

TEST(BfThreshold, TieBreakAndEmptyTable) {
    TestConfig c;
    const ContingencyTable t{{3, 2}, {2, 3}};
    const double bf = bayes_factor(t, c);
    c.bf_threshold = bf / 1.5;
    EXPECT_TRUE(bf_threshold_test(t, c).independent);
    c.bf_threshold = bf;
    EXPECT_FALSE(bf_threshold_test(t, c).independent);

    c.bf_threshold = 1.0;
    const CiDecision empty = bf_threshold_test(ContingencyTable(2, 2), c);
    EXPECT_FALSE(empty.independent);
    EXPECT_TRUE(empty.degenerate);
    EXPECT_FALSE(empty.p_value.has_value());
}

TEST(ThetaTilde, Examples) {
    const std::vector<Count> flat{6, 6, 6, 6};
    for (double a : {0.1, 0.5, 3.0}) {
        const ThetaTilde th = solve_theta_tilde(flat, a);
        for (double v : th.values) EXPECT_NEAR(v, 0.25, 1e-12);
    }
    const std::vector<Count> c31{3, 1};
    const ThetaTilde th = solve_theta_tilde(c31, 0.5);
    const double approx = std::exp(log_multinomial(c31, th.values));
    const double rel = polya_relative_error(c31, 0.5);
    EXPECT_NEAR(std::abs(approx - 0.15625) / 0.15625, rel, 1e-9);
}

TEST(ThetaTilde, OnSimplexAndPositive) {
    SplitMix64 rng(31);
    for (int t = 0; t < 300; ++t) {
        std::vector<Count> counts(2 + t % 5);
        for (auto& c : counts) c = static_cast<Count>(rng() % 30);
        if (std::accumulate(counts.begin(), counts.end(), Count{0}) == 0) counts[0] = 1;
        const double alpha = std::exp(-3.0 + 6.0 * rng.uniform());
        const ThetaTilde th = solve_theta_tilde(counts, alpha);
        EXPECT_NEAR(std::accumulate(th.values.begin(), th.values.end(), 0.0), 1.0, 1e-10);
        for (double v : th.values) EXPECT_GT(v, 0.0);
    }
}

TEST(ThetaTilde, WithinFactorTwoOfPolyaOnSmallTables) {
    int tables = 0, outside = 0;
    double worst = 0.0;
    for (Count n = 1; n <= 12; ++n) {
        for (Count a = 0; a <= n; ++a) {
            for (Count b = 0; a + b <= n; ++b) {
                for (Count c = 0; a + b + c <= n; ++c) {
                    const std::vector<Count> cells{a, b, c, n - a - b - c};
                    for (double alpha : {0.5, 1.0}) {
                        const double approx = log_multinomial(cells, solve_theta_tilde(cells, alpha).values);
                        const double gap = std::abs(approx - numstat::log_polya(cells, alpha));
                        worst = std::max(worst, gap);
                        outside += gap > std::log(2.0);
                        ++tables;
                    }
                }
            }
        }
    }
    EXPECT_EQ(outside, 0) << outside << " of " << tables << " (table, alpha) cases outside a factor of 2; worst factor "
                          << std::exp(worst);
}

TEST(BfChi2, Examples) {
    const TestConfig c;
    const CiDecision flat = bf_chi2_test({{5, 5}, {5, 5}}, c);
    EXPECT_NEAR(flat.statistic, 0.0, 1e-9);
    EXPECT_NEAR(*flat.p_value, 1.0, 1e-9);
    EXPECT_TRUE(flat.independent);

    TestConfig jeffreys;
    jeffreys.bf_chi2_fit_alpha = false;
    const CiDecision diag = bf_chi2_test({{10, 0}, {0, 10}}, jeffreys);
    EXPECT_GT(diag.statistic, 3.841);
    EXPECT_FALSE(diag.independent);
    EXPECT_FALSE(bf_chi2_test({{10, 0}, {0, 10}}, c).independent);
}

TEST(BfChi2, NonNegativeAndZeroOnProductTables) {
    SplitMix64 rng(4);
    const TestConfig c;
    for (int t = 0; t < 100; ++t) {
        const ContingencyTable table = random_table(rng, 3, 3, 8);
        if (table.total() == 0) continue;
        EXPECT_GE(bf_chi2_test(table, c).statistic, 0.0);
    }
    // Outer product of uniform margins: theta-tilde factorizes exactly.
    EXPECT_NEAR(bf_chi2_test({{4, 4, 4}, {4, 4, 4}, {4, 4, 4}}, c).statistic, 0.0, 1e-9);
    EXPECT_NEAR(bf_chi2_statistic({{7, 7}, {7, 7}}, 0.5, 0.5, 0.5), 0.0, 1e-9);
}

TEST(AllTests, InvariantUnderLabelPermutation) {
    SplitMix64 rng(2024);
    const TestConfig c = fast_config();
    for (int t = 0; t < 40; ++t) {
        const ContingencyTable table = random_table(rng, 3, 3, 9);
        if (table.total() == 0) continue;
        std::vector<std::size_t> rp{0, 1, 2}, cp{0, 1, 2};
        std::shuffle(rp.begin(), rp.end(), rng);
        std::shuffle(cp.begin(), cp.end(), rng);
        const ContingencyTable other = permuted(table, rp, cp);
        for (Method m : kDataMethods) {
            const CiDecision a = marginal_test(m, table, c);
            const CiDecision b = marginal_test(m, other, c);
            EXPECT_NEAR(a.statistic, b.statistic, 1e-9 * std::max(1.0, std::abs(a.statistic))) << to_string(m);
            EXPECT_EQ(a.independent, b.independent) << to_string(m);
        }
    }
}

TEST(AllTests, SymmetricUnderTranspose) {
    SplitMix64 rng(99);
    const TestConfig c = fast_config();
    for (int t = 0; t < 40; ++t) {
        const ContingencyTable table = random_table(rng, 2, 4, 7);
        if (table.total() == 0) continue;
        for (Method m : kDataMethods) {
            const CiDecision a = marginal_test(m, table, c);
            const CiDecision b = marginal_test(m, table.transposed(), c);
            EXPECT_NEAR(a.statistic, b.statistic, 1e-9 * std::max(1.0, std::abs(a.statistic))) << to_string(m);
            EXPECT_EQ(a.independent, b.independent) << to_string(m);
        }
    }
}

TEST(AllTests, PValuePresentOnlyForStatisticalTests) {
    const TestConfig c = fast_config();
    const ContingencyTable t{{4, 1}, {2, 6}};
    for (Method m : kDataMethods) {
        const CiDecision d = marginal_test(m, t, c);
        const bool statistical = m == Method::G || m == Method::BfChi2;
        EXPECT_EQ(d.p_value.has_value(), statistical) << to_string(m);
        EXPECT_EQ(d.method, m);
    }
}

TEST(Conditional, EmptyZMatchesMarginal) {
    const DiscreteBayesNet net = deterministic_chain();
    Dataset data({"X", "Y"}, {2, 2});
    SplitMix64 rng(3);
    for (int r = 0; r < 60; ++r) {
        const int row[2] = {static_cast<int>(rng() % 2), static_cast<int>(rng() % 2)};
        data.add_row(std::span<const int>(row, 2));
    }
    const TestConfig c = fast_config();
    const auto table = stratified_tables(data, 0, 1, {}).front();
    for (Method m : kDataMethods) {
        const CiDecision a = conditional_test(data, 0, 1, {}, m, c);
        const CiDecision b = marginal_test(m, table, c);
        EXPECT_EQ(a.statistic, b.statistic);
        EXPECT_EQ(a.independent, b.independent);
        EXPECT_EQ(a.p_value, b.p_value);
    }
}

TEST(Conditional, DeterministicChainScreensOff) {
    const DiscreteBayesNet net = deterministic_chain();
    const Dataset data = forward_sample(net, 2000, 11);
    const std::vector<std::size_t> z{2};
    const TestConfig c;
    for (Method m : kDataMethods) {
        EXPECT_TRUE(conditional_test(data, 0, 1, z, m, c).independent) << to_string(m);
        EXPECT_FALSE(conditional_test(data, 0, 1, {}, m, c).independent) << to_string(m);
    }
}

TEST(Conditional, DfSumsOverPopulatedStrata) {
    Dataset data({"X", "Y", "Z"}, {2, 2, 3});
    SplitMix64 rng(6);
    for (int r = 0; r < 200; ++r) {
        const int row[3] = {static_cast<int>(rng() % 2), static_cast<int>(rng() % 2), static_cast<int>(rng() % 2)};
        data.add_row(std::span<const int>(row, 3));
    }
    const std::vector<std::size_t> z{2};
    const TestConfig c;
    const CiDecision g = conditional_test(data, 0, 1, z, Method::G, c);
    EXPECT_EQ(g.df, 2);
    EXPECT_EQ(g.strata_used, 2);
    double pooled = 0.0;
    for (const auto& t : stratified_tables(data, 0, 1, z)) pooled += g_test(t, c).statistic;
    EXPECT_NEAR(g.statistic, pooled, 1e-12);
    EXPECT_EQ(conditional_test(data, 0, 1, z, Method::BfChi2, c).df, 2);
}

TEST(Conditional, InputValidation) {
    Dataset data({"X", "Y", "Z"}, {2, 2, 2});
    const TestConfig c;
    EXPECT_THROW(conditional_test(data, 0, 0, {}, Method::G, c), std::invalid_argument);
    const std::vector<std::size_t> bad{1};
    EXPECT_THROW(conditional_test(data, 0, 1, bad, Method::G, c), std::invalid_argument);
    EXPECT_THROW(conditional_test(data, 0, 7, {}, Method::G, c), std::out_of_range);
    EXPECT_TRUE(conditional_test(data, 0, 1, {}, Method::G, c).degenerate);
}

TEST(Conditional, SingleStateVariableIsDegenerate) {
    Dataset data({"X", "Y"}, {1, 2});
    for (int r = 0; r < 10; ++r) {
        const int row[2] = {0, r % 2};
        data.add_row(std::span<const int>(row, 2));
    }
    const TestConfig c = fast_config();
    for (Method m : kDataMethods) {
        const CiDecision d = conditional_test(data, 0, 1, {}, m, c);
        EXPECT_TRUE(d.independent);
        EXPECT_TRUE(d.degenerate);
    }
}
