#pragma once

// Marginal and conditional independence tests over discrete data.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "causalci/contingency.hpp"
#include "causalci/dataset.hpp"
#include "causalci/numstat.hpp"

namespace causalci {

enum class Method { MiMle, MiEb, G, BfThreshold, BfChi2, DsepOracle };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

struct TestConfig {
    double significance = 0.05;
    double jeffreys_alpha0 = 0.5;  ///< prior for each margin under independence
    double jeffreys_alpha1 = 0.5;  ///< prior for the joint under dependence
    double bf_threshold = 1.0;     ///< eta
    /// BF_chi2 concentrations: fitted by MAP per margin and joint (default), or
    /// fixed at jeffreys_alpha0 (margins) and jeffreys_alpha1 (joint).
    bool bf_chi2_fit_alpha = true;
    /// Fixed MI threshold; std::nullopt selects the null quantile of mi_eb,
    /// calibrated by simulation at level `significance` for each (Kx, Ky, N).
    /// mi_mle and mi_eb use the same threshold.
    std::optional<double> mi_threshold;
    int mi_calibration_trials = 200;
    std::uint64_t mi_calibration_seed = 20240601;
    numstat::AlphaBounds alpha_bounds;
    int max_cond_set = 4;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct CiDecision {
    double statistic = 0.0;  ///< MI, G, BF or BF_chi2 depending on `method`
    std::optional<double> p_value;
    std::optional<int> df;
    bool independent = true;
    Method method = Method::G;
    int strata_used = 1;
    /// Verdict forced by a degenerate input: a single-state variable or no data.
    bool degenerate = false;
};

// --- mutual information ---------------------------------------------------

/// Plug-in MI (nats) with MLE probabilities n_ij/N.
double mi_mle(const ContingencyTable& table);

/// Posterior-expected MI under a symmetric Dirichlet(alpha) prior over the
/// joint cells, in closed form via digamma. Without `alpha`, alpha is the
/// MAP estimate on the flattened joint counts (default 1 when degenerate).
/// Clamped below at 0.
double mi_eb(const ContingencyTable& table, std::optional<double> alpha = std::nullopt,
             numstat::AlphaBounds bounds = {});

enum class MiEstimator { Mle, EmpiricalBayes };

/// (1 - target) empirical quantile of the estimator over `trials` simulated
/// tables with independent X and Y whose marginals are drawn from a uniform
/// Dirichlet. Deterministic given `seed`.
double calibrate_mi_threshold(int kx, int ky, Count n, double target, int trials, std::uint64_t seed,
                              MiEstimator estimator = MiEstimator::EmpiricalBayes, numstat::AlphaBounds bounds = {});

/// Memoizes calibrated thresholds per (estimator, Kx, Ky, N); safe to share
/// between threads. Sizes up to kExactSizes are calibrated directly; larger
/// sizes interpolate linearly in 1/N between the neighbouring points of a
/// geometric grid (ratio 1.25) that starts at kExactSizes.
class MiThresholdCache {
public:
    static constexpr Count kExactSizes = 32;

    double get(MiEstimator estimator, int kx, int ky, Count n, const TestConfig& config);
    std::size_t size() const;

private:
    double calibrated(MiEstimator estimator, int kx, int ky, Count n, const TestConfig& config);

    using Key = std::tuple<int, int, int, Count, int, std::uint64_t, double>;
    mutable std::mutex mutex_;
    std::map<Key, double> values_;
};

MiThresholdCache& shared_mi_threshold_cache();

// --- likelihood-ratio and Bayes-factor tests ------------------------------

CiDecision g_test(const ContingencyTable& table, const TestConfig& config);

double log_bayes_factor(const ContingencyTable& table, const TestConfig& config);
double bayes_factor(const ContingencyTable& table, const TestConfig& config);
CiDecision bf_threshold_test(const ContingencyTable& table, const TestConfig& config);

struct ThetaTilde {
    std::vector<double> values;
    double a = 0.0;
    double b = 0.0;
    bool fallback = false;  ///< least-squares system was singular; (n+a)/(N+Ka) used
};

/// Modified multinomial parameters theta_k = (a n_k + b alpha)/(a N + b K alpha),
/// with (a, b) the least-squares solution of n_k ln(a n_k + b alpha) ~
/// lnG(n_k + alpha) - lnG(alpha) over states with n_k > 0.
ThetaTilde solve_theta_tilde(std::span<const Count> counts, double alpha);

/// ln of the multinomial likelihood of `counts` under `theta`, including N!/prod n_k!.
double log_multinomial(std::span<const Count> counts, std::span<const double> theta);

/// Statistic 2 sum n_ij ln(theta_ij/(theta_i theta_j)) with theta from
/// solve_theta_tilde on each margin and the joint; referred to chi-squared.
CiDecision bf_chi2_test(const ContingencyTable& table, const TestConfig& config);

/// The BF_chi2 statistic with given concentrations for the X margin, the Y
/// margin and the joint (no alpha fitting).
double bf_chi2_statistic(const ContingencyTable& table, double alpha_x, double alpha_y, double alpha_xy);

/// Dispatches the marginal test for any data-driven method.
CiDecision marginal_test(Method method, const ContingencyTable& table, const TestConfig& config,
                         MiThresholdCache* cache = nullptr);

// --- conditional tests ----------------------------------------------------

/// Contingency tables of (x, y) for every populated configuration of z, in
/// increasing order of the configuration index (first z variable slowest).
std::vector<ContingencyTable> stratified_tables(const Dataset& data, std::size_t x, std::size_t y,
                                                std::span<const std::size_t> z);

/// X _||_ Y | Z from data. Statistical tests pool statistics and df over the
/// populated strata; MI methods compare the count-weighted average MI with
/// the (weighted) threshold; BF multiplies the per-stratum factors.
CiDecision conditional_test(const Dataset& data, std::size_t x, std::size_t y, std::span<const std::size_t> z,
                            Method method, const TestConfig& config, MiThresholdCache* cache = nullptr);

/// Pluggable independence test used by structure learning.
class CiTest {
public:
    virtual ~CiTest() = default;
    virtual std::size_t num_variables() const = 0;
    virtual CiDecision test(std::size_t x, std::size_t y, std::span<const std::size_t> z) = 0;
};

class DataCiTest final : public CiTest {
public:
    DataCiTest(const Dataset& data, Method method, TestConfig config, MiThresholdCache* cache = nullptr);

    std::size_t num_variables() const override { return data_->num_variables(); }
    CiDecision test(std::size_t x, std::size_t y, std::span<const std::size_t> z) override;

private:
    const Dataset* data_;
    Method method_;
    TestConfig config_;
    MiThresholdCache* cache_;
};

}  // namespace causalci
