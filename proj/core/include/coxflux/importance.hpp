#pragma once

#include <cstdint>
#include <functional>

namespace coxflux {

struct TiltedEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    double relative_stderr = 0.0;    // std_error / estimate (inf when estimate is 0)
    double per_sample_variance = 0.0;  // of w·1{event}
    double weight_mean = 0.0;        // E_tilted[w], should be 1
    double weight_std_error = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t samples = 0;
};

// log-likelihood ratio dP_α/dP_q of a Poisson count N at scale n:
// −θN + n(q − α) with θ = log(q/α). Zero when q == α.
double tilt_log_weight(std::int64_t count, double alpha, double q, int n);

// Estimates P(event(N)) for N ~ Poisson(n α) by drawing from Poisson(n q).
// Throws std::invalid_argument unless q > alpha > 0.
TiltedEstimate importance_sample_tilted(const std::function<bool(std::int64_t)>& event, double alpha, double q, int n,
                                        std::uint64_t samples, std::uint64_t seed, unsigned workers = 1);

}  // namespace coxflux
