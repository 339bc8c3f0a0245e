#include "causalci/citest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "causalci/rng.hpp"

namespace causalci {

using numstat::digamma;
using numstat::ln_gamma;

namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::MiMle, "mi_mle"},           {Method::MiEb, "mi_eb"},     {Method::G, "g"},
    {Method::BfThreshold, "bf_threshold"}, {Method::BfChi2, "bf_chi2"}, {Method::DsepOracle, "dsep_oracle"},
};

}  // namespace

std::string_view to_string(Method m) {
    for (const auto& [method, name] : kMethodNames) {
        if (method == m) return name;
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
    for (const auto& [method, n] : kMethodNames) {
        if (n == name) return method;
    }
    return std::nullopt;
}

void TestConfig::validate() const {
    if (!(significance > 0.0 && significance < 1.0)) throw std::invalid_argument("significance must lie in (0, 1)");
    if (!(jeffreys_alpha0 > 0.0) || !(jeffreys_alpha1 > 0.0)) throw std::invalid_argument("priors must be positive");
    if (!(bf_threshold > 0.0)) throw std::invalid_argument("bf_threshold must be positive");
    if (mi_threshold && !(*mi_threshold >= 0.0)) throw std::invalid_argument("mi_threshold must be non-negative");
    if (mi_calibration_trials < 100) throw std::invalid_argument("mi_calibration_trials must be >= 100");
    if (!(alpha_bounds.min > 0.0) || !(alpha_bounds.max >= alpha_bounds.min)) {
        throw std::invalid_argument("invalid alpha bounds");
    }
    if (max_cond_set < 0) throw std::invalid_argument("max_cond_set must be >= 0");
}

// --- mutual information ---------------------------------------------------

double mi_mle(const ContingencyTable& table) {
    const Count n = table.total();
    if (n < 1) throw std::invalid_argument("mi_mle: table is empty");
    if (table.rows() == 1 || table.cols() == 1) return 0.0;
    const double dn = static_cast<double>(n);
    double mi = 0.0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.cols(); ++j) {
            const Count c = table(i, j);
            if (c == 0) continue;
            const double dc = static_cast<double>(c);
            mi += dc / dn *
                  std::log(dc * dn / (static_cast<double>(table.row_margin(i)) * static_cast<double>(table.col_margin(j))));
        }
    }
    return std::max(mi, 0.0);
}

double mi_eb(const ContingencyTable& table, std::optional<double> alpha, numstat::AlphaBounds bounds) {
    double a = 1.0;
    if (alpha) {
        if (!(*alpha > 0.0)) throw std::domain_error("mi_eb: alpha must be positive");
        a = *alpha;
    } else if (auto est = numstat::try_estimate_alpha_map(table.cells(), bounds)) {
        a = est->alpha;
    }
    const double kx = static_cast<double>(table.rows());
    const double ky = static_cast<double>(table.cols());
    const double n = static_cast<double>(table.total());
    const double denom = n + a * kx * ky;

    std::vector<double> psi_row(table.rows());
    std::vector<double> psi_col(table.cols());
    for (std::size_t i = 0; i < table.rows(); ++i) psi_row[i] = digamma(static_cast<double>(table.row_margin(i)) + a * ky + 1.0);
    for (std::size_t j = 0; j < table.cols(); ++j) psi_col[j] = digamma(static_cast<double>(table.col_margin(j)) + a * kx + 1.0);

    double sum = 0.0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.cols(); ++j) {
            const double cell = static_cast<double>(table(i, j)) + a;
            sum += cell / denom * (psi_row[i] + psi_col[j] - digamma(cell + 1.0));
        }
    }
    return std::max(digamma(denom + 1.0) - sum, 0.0);
}

namespace {

double estimate_mi(MiEstimator estimator, const ContingencyTable& table, numstat::AlphaBounds bounds) {
    if (estimator == MiEstimator::Mle) return table.total() == 0 ? 0.0 : mi_mle(table);
    return mi_eb(table, std::nullopt, bounds);
}

}  // namespace

double calibrate_mi_threshold(int kx, int ky, Count n, double target, int trials, std::uint64_t seed,
                              MiEstimator estimator, numstat::AlphaBounds bounds) {
    if (kx < 1 || ky < 1) throw std::invalid_argument("calibrate_mi_threshold: cardinalities must be >= 1");
    if (n < 0) throw std::invalid_argument("calibrate_mi_threshold: N must be >= 0");
    if (!(target > 0.0 && target <= 1.0)) throw std::invalid_argument("calibrate_mi_threshold: target must lie in (0, 1]");
    if (trials < 100) throw std::invalid_argument("calibrate_mi_threshold: trials must be >= 100");

    std::vector<double> values(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        SplitMix64 rng = make_stream(seed, {static_cast<std::uint64_t>(t)});
        const auto px = numstat::dirichlet_sample_symmetric(static_cast<std::size_t>(kx), 1.0, rng);
        const auto py = numstat::dirichlet_sample_symmetric(static_cast<std::size_t>(ky), 1.0, rng);
        ContingencyTable table(static_cast<std::size_t>(kx), static_cast<std::size_t>(ky));
        for (Count r = 0; r < n; ++r) {
            const std::size_t i = numstat::categorical_sample(px, rng);
            const std::size_t j = numstat::categorical_sample(py, rng);
            table.add(i, j);
        }
        values[static_cast<std::size_t>(t)] = estimate_mi(estimator, table, bounds);
    }
    std::sort(values.begin(), values.end());
    const auto idx = std::min(static_cast<std::size_t>(std::floor((1.0 - target) * trials)), values.size() - 1);
    return values[idx];
}

double MiThresholdCache::get(MiEstimator estimator, int kx, int ky, Count n, const TestConfig& config) {
    if (n <= kExactSizes) return calibrated(estimator, kx, ky, n, config);
    Count lo = kExactSizes;
    Count hi = kExactSizes;
    while (hi < n) {
        lo = hi;
        hi = std::max(hi + 1, static_cast<Count>(std::llround(static_cast<double>(hi) * 1.25)));
    }
    if (hi == n) return calibrated(estimator, kx, ky, n, config);
    const double t_lo = calibrated(estimator, kx, ky, lo, config);
    const double t_hi = calibrated(estimator, kx, ky, hi, config);
    const double w = (1.0 / static_cast<double>(n) - 1.0 / static_cast<double>(lo)) /
                     (1.0 / static_cast<double>(hi) - 1.0 / static_cast<double>(lo));
    return t_lo + w * (t_hi - t_lo);
}

double MiThresholdCache::calibrated(MiEstimator estimator, int kx, int ky, Count n, const TestConfig& config) {
    const Key key{static_cast<int>(estimator), kx, ky, n, config.mi_calibration_trials, config.mi_calibration_seed,
                  config.significance};
    {
        std::lock_guard lock(mutex_);
        if (auto it = values_.find(key); it != values_.end()) return it->second;
    }
    const std::uint64_t seed =
        derive_seed(config.mi_calibration_seed, {static_cast<std::uint64_t>(estimator), static_cast<std::uint64_t>(kx),
                                                 static_cast<std::uint64_t>(ky), static_cast<std::uint64_t>(n)});
    const double value =
        calibrate_mi_threshold(kx, ky, n, config.significance, config.mi_calibration_trials, seed, estimator,
                               config.alpha_bounds);
    std::lock_guard lock(mutex_);
    values_.emplace(key, value);
    return value;
}

std::size_t MiThresholdCache::size() const {
    std::lock_guard lock(mutex_);
    return values_.size();
}

MiThresholdCache& shared_mi_threshold_cache() {
    static MiThresholdCache cache;
    return cache;
}

// --- G test ---------------------------------------------------------------

namespace {

int table_df(const ContingencyTable& table) {
    return static_cast<int>((table.rows() - 1) * (table.cols() - 1));
}

CiDecision degenerate_independent(Method method) {
    CiDecision d;
    d.method = method;
    d.independent = true;
    d.degenerate = true;
    d.strata_used = 0;
    if (method == Method::G || method == Method::BfChi2) d.p_value = 1.0;
    if (method == Method::BfThreshold) d.statistic = 1.0;
    return d;
}

double g_statistic(const ContingencyTable& table) {
    const double n = static_cast<double>(table.total());
    double g = 0.0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.cols(); ++j) {
            const Count c = table(i, j);
            if (c == 0) continue;
            const double dc = static_cast<double>(c);
            g += dc * std::log(dc * n / (static_cast<double>(table.row_margin(i)) * static_cast<double>(table.col_margin(j))));
        }
    }
    return std::max(2.0 * g, 0.0);
}

}  // namespace

CiDecision g_test(const ContingencyTable& table, const TestConfig& config) {
    const int df = table_df(table);
    if (df < 1 || table.total() < 1) return degenerate_independent(Method::G);
    CiDecision d;
    d.method = Method::G;
    d.statistic = g_statistic(table);
    d.df = df;
    d.p_value = numstat::chi2_sf(d.statistic, df);
    d.independent = *d.p_value >= config.significance;
    return d;
}

// --- Bayes factor ---------------------------------------------------------

double log_bayes_factor(const ContingencyTable& table, const TestConfig& config) {
    const double ax = config.jeffreys_alpha0;
    const double ay = config.jeffreys_alpha0;
    const double axy = config.jeffreys_alpha1;
    if (!(ax > 0.0) || !(axy > 0.0)) throw std::domain_error("bayes_factor: priors must be positive");
    // Every gamma ratio cancels at N = 0; return the exact value so the tie
    // rule applies instead of rounding noise.
    if (table.total() == 0) return 0.0;

    const double kx = static_cast<double>(table.rows());
    const double ky = static_cast<double>(table.cols());
    const double k = kx * ky;
    const double n = static_cast<double>(table.total());

    double v = ln_gamma(ax * kx) + ln_gamma(ay * ky) + ln_gamma(axy * k + n) - ln_gamma(axy * k) -
               ln_gamma(ax * kx + n) - ln_gamma(ay * ky + n);
    v += k * ln_gamma(axy) - kx * ln_gamma(ax) - ky * ln_gamma(ay);
    for (Count c : table.row_margins()) v += ln_gamma(ax + static_cast<double>(c));
    for (Count c : table.col_margins()) v += ln_gamma(ay + static_cast<double>(c));
    for (Count c : table.cells()) v -= ln_gamma(axy + static_cast<double>(c));
    return v;
}

double bayes_factor(const ContingencyTable& table, const TestConfig& config) {
    return std::exp(log_bayes_factor(table, config));
}

CiDecision bf_threshold_test(const ContingencyTable& table, const TestConfig& config) {
    if (!(config.bf_threshold > 0.0)) throw std::invalid_argument("bf_threshold must be positive");
    const double log_bf = log_bayes_factor(table, config);
    CiDecision d;
    d.method = Method::BfThreshold;
    d.statistic = std::exp(log_bf);
    d.independent = log_bf > std::log(config.bf_threshold);
    d.degenerate = table.total() == 0;
    return d;
}

// --- BF-chi2 --------------------------------------------------------------

ThetaTilde solve_theta_tilde(std::span<const Count> counts, double alpha) {
    if (counts.empty()) throw std::invalid_argument("solve_theta_tilde: empty count sequence");
    if (!(alpha > 0.0)) throw std::domain_error("solve_theta_tilde: alpha must be positive");
    Count n_total = 0;
    for (Count c : counts) {
        if (c < 0) throw std::invalid_argument("solve_theta_tilde: negative count");
        n_total += c;
    }
    if (n_total == 0) throw std::invalid_argument("solve_theta_tilde: need at least one positive count");

    const double k = static_cast<double>(counts.size());
    const double n = static_cast<double>(n_total);
    const double lg_alpha = ln_gamma(alpha);

    // Normal equations of min ||M L - T||^2 with rows (n_k, alpha) for n_k > 0.
    double s_nn = 0.0, s_n = 0.0, s_nt = 0.0, s_t = 0.0, m = 0.0;
    for (Count c : counts) {
        if (c == 0) continue;
        const double dc = static_cast<double>(c);
        const double t = std::exp((ln_gamma(dc + alpha) - lg_alpha) / dc);
        s_nn += dc * dc;
        s_n += dc;
        s_nt += dc * t;
        s_t += t;
        m += 1.0;
    }
    const double det = alpha * alpha * (m * s_nn - s_n * s_n);
    const double scale = alpha * alpha * m * s_nn;

    ThetaTilde out;
    out.values.resize(counts.size());
    auto fallback = [&] {
        out.fallback = true;
        out.a = 1.0;
        out.b = 1.0;
        for (std::size_t i = 0; i < counts.size(); ++i) out.values[i] = (static_cast<double>(counts[i]) + alpha) / (n + k * alpha);
        return out;
    };
    if (!(std::abs(det) > 1e-12 * scale)) return fallback();

    // [s_nn, a s_n; a s_n, a^2 m] [a; b] = [s_nt; a s_t]
    const double a = (alpha * alpha * m * s_nt - alpha * s_n * alpha * s_t) / det;
    const double b = (s_nn * alpha * s_t - alpha * s_n * s_nt) / det;
    const double norm = a * n + b * k * alpha;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double v = (a * static_cast<double>(counts[i]) + b * alpha) / norm;
        if (!(v > 0.0) || !std::isfinite(v)) return fallback();
        out.values[i] = v;
    }
    out.a = a;
    out.b = b;
    return out;
}

double log_multinomial(std::span<const Count> counts, std::span<const double> theta) {
    if (counts.size() != theta.size()) throw std::invalid_argument("log_multinomial: size mismatch");
    Count n = 0;
    double v = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const Count c = counts[i];
        if (c < 0) throw std::invalid_argument("log_multinomial: negative count");
        n += c;
        if (c == 0) continue;
        const double dc = static_cast<double>(c);
        v += dc * std::log(theta[i]) - ln_gamma(dc + 1.0);
    }
    return v + ln_gamma(static_cast<double>(n) + 1.0);
}

namespace {

double fitted_alpha(std::span<const Count> counts, double fallback, numstat::AlphaBounds bounds, bool fit) {
    if (!fit) return fallback;
    auto est = numstat::try_estimate_alpha_map(counts, bounds);
    return est ? est->alpha : fallback;
}

}  // namespace

double bf_chi2_statistic(const ContingencyTable& table, double alpha_x, double alpha_y, double alpha_xy) {
    if (table.total() < 1) return 0.0;
    const ThetaTilde tx = solve_theta_tilde(table.row_margins(), alpha_x);
    const ThetaTilde ty = solve_theta_tilde(table.col_margins(), alpha_y);
    const ThetaTilde txy = solve_theta_tilde(table.cells(), alpha_xy);

    double stat = 0.0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        for (std::size_t j = 0; j < table.cols(); ++j) {
            const Count c = table(i, j);
            if (c == 0) continue;
            stat += static_cast<double>(c) *
                    (std::log(txy.values[i * table.cols() + j]) - std::log(tx.values[i]) - std::log(ty.values[j]));
        }
    }
    return std::max(2.0 * stat, 0.0);
}

CiDecision bf_chi2_test(const ContingencyTable& table, const TestConfig& config) {
    const int df = table_df(table);
    if (df < 1 || table.total() < 1) return degenerate_independent(Method::BfChi2);

    const double ax = fitted_alpha(table.row_margins(), config.jeffreys_alpha0, config.alpha_bounds, config.bf_chi2_fit_alpha);
    const double ay = fitted_alpha(table.col_margins(), config.jeffreys_alpha0, config.alpha_bounds, config.bf_chi2_fit_alpha);
    const double axy = fitted_alpha(table.cells(), config.jeffreys_alpha1, config.alpha_bounds, config.bf_chi2_fit_alpha);

    CiDecision d;
    d.method = Method::BfChi2;
    d.statistic = bf_chi2_statistic(table, ax, ay, axy);
    d.df = df;
    d.p_value = numstat::chi2_sf(d.statistic, df);
    d.independent = *d.p_value >= config.significance;
    return d;
}

// --- pooling --------------------------------------------------------------

namespace {

// Both MI methods share the empirical-Bayes null quantile, so the plug-in
// estimator's upward bias shows up as extra dependence verdicts.
double mi_threshold_for(const ContingencyTable& table, const TestConfig& config, MiThresholdCache* cache) {
    if (config.mi_threshold) return *config.mi_threshold;
    MiThresholdCache& c = cache ? *cache : shared_mi_threshold_cache();
    return c.get(MiEstimator::EmpiricalBayes, static_cast<int>(table.rows()), static_cast<int>(table.cols()), table.total(), config);
}

CiDecision pooled_test(std::span<const ContingencyTable> strata, Method method, const TestConfig& config,
                       MiThresholdCache* cache) {
    if (method == Method::DsepOracle) throw std::invalid_argument("dsep_oracle is not a data-driven test");
    if (strata.empty()) return degenerate_independent(method);
    const auto& first = strata.front();
    if (first.rows() < 2 || first.cols() < 2) return degenerate_independent(method);

    Count n_total = 0;
    int used = 0;
    for (const auto& t : strata) {
        if (t.total() >= 1) {
            n_total += t.total();
            ++used;
        }
    }
    if (used == 0) return degenerate_independent(method);

    CiDecision d;
    d.method = method;
    d.strata_used = used;

    switch (method) {
        case Method::G:
        case Method::BfChi2: {
            double stat = 0.0;
            int df = 0;
            for (const auto& t : strata) {
                if (t.total() < 1) continue;
                const CiDecision s = method == Method::G ? g_test(t, config) : bf_chi2_test(t, config);
                stat += s.statistic;
                df += s.df.value_or(0);
            }
            d.statistic = stat;
            d.df = df;
            d.p_value = numstat::chi2_sf(stat, df);
            d.independent = *d.p_value >= config.significance;
            break;
        }
        case Method::MiMle:
        case Method::MiEb: {
            double mi = 0.0;
            double threshold = 0.0;
            for (const auto& t : strata) {
                if (t.total() < 1) continue;
                const double w = static_cast<double>(t.total()) / static_cast<double>(n_total);
                mi += w * (method == Method::MiMle ? mi_mle(t) : mi_eb(t, std::nullopt, config.alpha_bounds));
                threshold += w * mi_threshold_for(t, config, cache);
            }
            d.statistic = mi;
            d.independent = mi < threshold;
            break;
        }
        case Method::BfThreshold: {
            double log_bf = 0.0;
            for (const auto& t : strata) {
                if (t.total() < 1) continue;
                log_bf += log_bayes_factor(t, config);
            }
            d.statistic = std::exp(log_bf);
            d.independent = log_bf > std::log(config.bf_threshold);
            break;
        }
        case Method::DsepOracle:
            break;
    }
    return d;
}

}  // namespace

CiDecision marginal_test(Method method, const ContingencyTable& table, const TestConfig& config, MiThresholdCache* cache) {
    return pooled_test(std::span<const ContingencyTable>(&table, 1), method, config, cache);
}

std::vector<ContingencyTable> stratified_tables(const Dataset& data, std::size_t x, std::size_t y,
                                                std::span<const std::size_t> z) {
    const auto kx = static_cast<std::size_t>(data.cardinality(x));
    const auto ky = static_cast<std::size_t>(data.cardinality(y));
    const auto cx = data.column(x);
    const auto cy = data.column(y);
    const std::size_t rows = data.num_rows();

    if (z.empty()) {
        ContingencyTable t(kx, ky);
        for (std::size_t r = 0; r < rows; ++r) t.add(static_cast<std::size_t>(cx[r]), static_cast<std::size_t>(cy[r]));
        return {std::move(t)};
    }

    std::vector<std::uint64_t> code(rows, 0);
    for (std::size_t v : z) {
        const auto card = static_cast<std::uint64_t>(data.cardinality(v));
        const auto col = data.column(v);
        for (std::size_t r = 0; r < rows; ++r) code[r] = code[r] * card + static_cast<std::uint64_t>(col[r]);
    }
    std::unordered_map<std::uint64_t, std::size_t> index;
    std::vector<std::pair<std::uint64_t, ContingencyTable>> tables;
    for (std::size_t r = 0; r < rows; ++r) {
        auto [it, inserted] = index.try_emplace(code[r], tables.size());
        if (inserted) tables.emplace_back(code[r], ContingencyTable(kx, ky));
        tables[it->second].second.add(static_cast<std::size_t>(cx[r]), static_cast<std::size_t>(cy[r]));
    }
    std::sort(tables.begin(), tables.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<ContingencyTable> out;
    out.reserve(tables.size());
    for (auto& [c, t] : tables) out.push_back(std::move(t));
    return out;
}

CiDecision conditional_test(const Dataset& data, std::size_t x, std::size_t y, std::span<const std::size_t> z,
                            Method method, const TestConfig& config, MiThresholdCache* cache) {
    const std::size_t nv = data.num_variables();
    if (x >= nv || y >= nv) throw std::out_of_range("conditional_test: unknown variable");
    if (x == y) throw std::invalid_argument("conditional_test: x and y must differ");
    for (std::size_t v : z) {
        if (v >= nv) throw std::out_of_range("conditional_test: unknown conditioning variable");
        if (v == x || v == y) throw std::invalid_argument("conditional_test: x and y must not be in the conditioning set");
    }
    if (static_cast<int>(z.size()) > config.max_cond_set) {
        throw std::invalid_argument("conditional_test: conditioning set exceeds max_cond_set");
    }
    if (data.num_rows() == 0) return degenerate_independent(method);
    const auto strata = stratified_tables(data, x, y, z);
    return pooled_test(strata, method, config, cache);
}

DataCiTest::DataCiTest(const Dataset& data, Method method, TestConfig config, MiThresholdCache* cache)
    : data_(&data), method_(method), config_(std::move(config)), cache_(cache) {
    config_.validate();
    if (method == Method::DsepOracle) throw std::invalid_argument("DataCiTest: dsep_oracle needs a DAG");
}

CiDecision DataCiTest::test(std::size_t x, std::size_t y, std::span<const std::size_t> z) {
    return conditional_test(*data_, x, y, z, method_, config_, cache_);
}

}  // namespace causalci
