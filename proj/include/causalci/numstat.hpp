#pragma once

// Special functions, chi-squared tails, Dirichlet sampling and the
// symmetric Dirichlet-multinomial (Polya) likelihood.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "causalci/rng.hpp"

namespace causalci {

using Count = std::int64_t;

/// Thrown when an input is valid but carries no information for the
/// requested estimate (e.g. fewer than two states, or no observations).
class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace numstat {

double ln_gamma(double x);
double digamma(double x);

/// Upper tail P(X >= x) of a chi-squared variable with `df` degrees of freedom.
double chi2_sf(double x, int df);
double chi2_cdf(double x, int df);

/// ln of the symmetric Dirichlet-multinomial pmf
///   N!/prod(n_k!) * G(Ka)/G(Ka+N) * prod G(a+n_k)/G(a),
/// including the multinomial coefficient.
double log_polya(std::span<const Count> counts, double alpha);

struct AlphaBounds {
    double min = 1e-4;
    double max = 1e4;
};

struct AlphaEstimate {
    double alpha = 1.0;
    bool converged = false;  ///< fixed-point iteration met its tolerance
    int iterations = 0;      ///< fixed-point iterations performed
    bool clamped = false;    ///< result sits on a bound of AlphaBounds
};

inline constexpr int kAlphaMaxIterations = 1000;
inline constexpr double kAlphaTolerance = 1e-8;

/// The update rule used by the fixed-point path:
///   a' = a * (sum_k psi(a + n_k) - K psi(a)) / (K psi(aK + N) - psi(Ka)).
double alpha_fixed_point_step(std::span<const Count> counts, double alpha);

/// Maximizer of log_polya(counts, alpha) over [bounds.min, bounds.max].
/// Runs the fixed-point iteration from alpha = 1, then verifies it with a
/// golden-section search over ln(alpha); the search wins when the two
/// disagree by more than 1e-4 (relative).
/// Returns std::nullopt when K < 2 or N = 0.
std::optional<AlphaEstimate> try_estimate_alpha_map(std::span<const Count> counts,
                                                    AlphaBounds bounds = {});

/// As try_estimate_alpha_map, but throws DegenerateInput instead.
AlphaEstimate estimate_alpha_map(std::span<const Count> counts, AlphaBounds bounds = {});

/// One draw from Dirichlet(alphas).
std::vector<double> dirichlet_sample(std::span<const double> alphas, std::uint64_t seed);
std::vector<double> dirichlet_sample(std::span<const double> alphas, SplitMix64& rng);
/// Symmetric Dirichlet(alpha, ..., alpha) of dimension k.
std::vector<double> dirichlet_sample_symmetric(std::size_t k, double alpha, SplitMix64& rng);

/// Draws `n` categorical samples from `probs` and returns the per-state counts.
std::vector<Count> multinomial_sample(std::span<const double> probs, Count n, SplitMix64& rng);

/// Index drawn from a discrete distribution given by `probs` (need not be normalized exactly).
std::size_t categorical_sample(std::span<const double> probs, SplitMix64& rng);

}  // namespace numstat
}  // namespace causalci
