#include "coxflux/importance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "coxflux/parallel.hpp"
#include "coxflux/point_process.hpp"
#include "coxflux/rng.hpp"

namespace coxflux {

double tilt_log_weight(std::int64_t count, double alpha, double q, int n) {
    if (!(alpha > 0.0) || !(q > 0.0)) throw std::invalid_argument("tilt_log_weight: rates must be positive");
    if (q == alpha) return 0.0;
    const double theta = std::log(q / alpha);
    return -theta * static_cast<double>(count) + static_cast<double>(n) * (q - alpha);
}

TiltedEstimate importance_sample_tilted(const std::function<bool(std::int64_t)>& event, double alpha, double q, int n,
                                        std::uint64_t samples, std::uint64_t seed, unsigned workers) {
    if (!(alpha > 0.0)) throw std::invalid_argument("importance_sample_tilted: alpha must be positive");
    if (!(q > alpha))
        throw std::invalid_argument("importance_sample_tilted: q must exceed alpha (the tilt targets the upper tail)");
    if (n < 1 || samples < 2) throw std::invalid_argument("importance_sample_tilted: need n >= 1 and samples >= 2");

    struct Sums {
        std::uint64_t hits = 0;
        double hw = 0, hw2 = 0, w = 0, w2 = 0;
    };
    const double mean = static_cast<double>(n) * q;
    const Sums s = blocked_reduce<Sums>(
        samples, workers, Sums{},
        [&](std::size_t lo, std::size_t hi) {
            Sums t;
            for (std::size_t i = lo; i < hi; ++i) {
                Rng rng(seed, i);
                const std::int64_t N = sample_poisson(mean, rng);
                const double w = std::exp(tilt_log_weight(N, alpha, q, n));
                t.w += w;
                t.w2 += w * w;
                if (event(N)) {
                    ++t.hits;
                    t.hw += w;
                    t.hw2 += w * w;
                }
            }
            return t;
        },
        [](Sums a, Sums b) {
            a.hits += b.hits;
            a.hw += b.hw;
            a.hw2 += b.hw2;
            a.w += b.w;
            a.w2 += b.w2;
            return a;
        });

    const double N = static_cast<double>(samples);
    TiltedEstimate r;
    r.samples = samples;
    r.hits = s.hits;
    r.estimate = s.hw / N;
    r.per_sample_variance = std::max(0.0, (s.hw2 - N * r.estimate * r.estimate) / (N - 1.0));
    r.std_error = std::sqrt(r.per_sample_variance / N);
    r.relative_stderr = r.estimate > 0.0 ? r.std_error / r.estimate : std::numeric_limits<double>::infinity();
    r.weight_mean = s.w / N;
    r.weight_std_error = std::sqrt(std::max(0.0, (s.w2 - N * r.weight_mean * r.weight_mean) / (N - 1.0)) / N);
    return r;
}

}  // namespace coxflux
