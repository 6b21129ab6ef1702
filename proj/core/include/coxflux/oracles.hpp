#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "coxflux/intensity.hpp"
#include "coxflux/service.hpp"

namespace coxflux {

enum class Tail {
    Upper,  // P(N >= k)
    Lower,  // P(N <= k)
};

// Exact Poisson tails by log-space summation of the pmf from the tail end.
double log_poisson_tail(double mean, std::int64_t k, Tail tail);
double exact_poisson_tail(double mean, std::int64_t k, Tail tail);

// Tail of Σ p_i Poisson(mean_i).
double log_mixed_poisson_tail(std::span<const double> probs, std::span<const double> means, std::int64_t k, Tail tail);

// Stationary M/G/∞ queue length: Poisson(n λ E[S]) pmf, truncated once the
// remaining mass is below 1e-16. Deterministic intensities only.
std::vector<double> exact_mg_infty_marginal(const IntensityModel& model, const ServiceDistribution& F, int n);

// Event {N_bin / n >= fraction} (or > when strict) for multinomial counts.
struct BinThreshold {
    std::size_t bin = 0;
    double fraction = 0.0;
    bool strict = false;
};

// Exact multinomial probability of the event by enumerating compositions.
// Throws std::invalid_argument for more than 5 bins and NumericalError when
// the enumeration would exceed 1e7 terms.
double log_exact_sanov_bins(std::span<const double> alpha, BinThreshold event, int n);
double exact_sanov_bins(std::span<const double> alpha, BinThreshold event, int n);

// min { H(β|α) : β_bin >= fraction }, attained at β_bin = fraction with the
// remaining mass spread proportionally to α.
double sanov_threshold_rate(std::span<const double> alpha, BinThreshold event);

}  // namespace coxflux
