#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coxflux/intensity.hpp"
#include "coxflux/oracles.hpp"
#include "coxflux/point_process.hpp"
#include "coxflux/rng.hpp"
#include "coxflux/service.hpp"

namespace coxflux {

// One replication: did the event occur, and with what likelihood ratio
// (1 for plain Monte Carlo).
struct Outcome {
    bool hit = false;
    double weight = 1.0;
};

// A rare-event family indexed by the scaling parameter n.
class DecayExperiment {
public:
    virtual ~DecayExperiment() = default;

    virtual std::string name() const = 0;
    virtual bool importance_sampled() const { return false; }
    // Called once with the whole grid before any replication.
    virtual void prepare(std::span<const int> /*n_grid*/) {}
    // Must be thread-safe; all randomness comes from rng.
    virtual Outcome replicate(int n, Rng& rng) const = 0;
    // Limit of −(1/n) log P; NaN when unknown.
    virtual double analytic_rate() const = 0;
    // Exact log-probability, when an oracle exists.
    virtual std::optional<double> exact_log_probability(int /*n*/) const { return std::nullopt; }
};

struct DecayPoint {
    int n = 0;
    std::uint64_t samples = 0;
    std::uint64_t hits = 0;
    double p_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double std_error = 0.0;  // of p_hat
    bool used_in_fit = false;
};

struct DecayEstimate {
    std::vector<DecayPoint> points;
    double fitted_rate = 0.0;  // slope of −log p̂ against n
    double fit_stderr = 0.0;
    double intercept = 0.0;
    bool importance_sampled = false;
    std::uint64_t seed = 0;
    std::uint64_t total_replications = 0;
};

struct DecayOptions {
    std::uint64_t samples = 10000;          // per n, before pilot adjustment
    std::uint64_t seed = 0;
    unsigned workers = 1;
    bool pilot = true;
    std::uint64_t max_total = 10'000'000;   // replication cap per experiment
    std::uint64_t min_expected_hits = 50;   // pilot target at the smallest n
    std::uint64_t min_fit_hits = 10;        // plain MC points below this are dropped
};

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};
WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t samples, double z = 1.959963984540054);

// Monte Carlo decay estimate over n_grid (increasing, at least 4 values).
// Throws std::runtime_error advising importance sampling when no n has hits.
DecayEstimate estimate_decay(DecayExperiment& experiment, std::span<const int> n_grid, const DecayOptions& options);

// Weighted least squares of −log p̂ on n over points with used_in_fit set.
// Weights are 1/var(−log p̂) from the interval widths; the stderr is inflated
// by the reduced chi-square when it exceeds 1.
void fit_decay(DecayEstimate& estimate);

// Unweighted regression of exact −log P over n_grid.
DecayEstimate exact_decay(std::span<const int> n_grid, const std::function<double(int)>& log_probability);

// Parses "lo:hi:step" or a comma list into an increasing grid.
std::vector<int> parse_n_grid(const std::string& text);

// ---------------------------------------------------------------------------
// Concrete experiments

// {N ≥ q n} for N ~ Poisson(n α). With importance sampling, N is drawn from
// Poisson(n q) and reweighted.
class PoissonTailExperiment final : public DecayExperiment {
public:
    PoissonTailExperiment(double alpha, double q, bool importance);
    std::string name() const override { return "poisson-tail"; }
    bool importance_sampled() const override { return importance_; }
    Outcome replicate(int n, Rng& rng) const override;
    double analytic_rate() const override;
    std::optional<double> exact_log_probability(int n) const override;

private:
    double alpha_, q_;
    bool importance_;
};

// {Λ_n-driven count on [0,1] ≥ level·n} under a finite mixture. Importance
// sampling keeps the mixing draw and tilts the conditional Poisson count to
// mean n·max(level, Θ).
class MixtureTailExperiment final : public DecayExperiment {
public:
    MixtureTailExperiment(IntensityModel model, double level, bool importance);
    std::string name() const override { return "mixture-tail"; }
    bool importance_sampled() const override { return importance_; }
    Outcome replicate(int n, Rng& rng) const override;
    double analytic_rate() const override;
    std::optional<double> exact_log_probability(int n) const override;

private:
    IntensityModel model_;
    double level_;
    bool importance_;
};

// {Q_n(0) ≥ level·n} for the stationary infinite-server queue. Importance
// sampling (deterministic intensity only) superposes extra arrivals in the
// snapshot region so Q_n(0) is Poisson with mean ≈ level·n.
class QueueTailExperiment final : public DecayExperiment {
public:
    QueueTailExperiment(IntensityModel model, ServiceDistribution service, double level, double tol, bool importance);
    std::string name() const override { return "queue-tail"; }
    bool importance_sampled() const override { return importance_; }
    void prepare(std::span<const int> n_grid) override;
    Outcome replicate(int n, Rng& rng) const override;
    double analytic_rate() const override;
    std::optional<double> exact_log_probability(int n) const override;

private:
    const Truncation& truncation(int n) const;
    IntensityModel model_;
    ServiceDistribution service_;
    double level_, tol_;
    bool importance_;
    std::map<int, Truncation> truncations_;
};

// {N_bin ≥ fraction·n} for multinomial counts of n draws from α.
class SanovExperiment final : public DecayExperiment {
public:
    SanovExperiment(std::vector<double> alpha, BinThreshold event);
    std::string name() const override { return "sanov"; }
    Outcome replicate(int n, Rng& rng) const override;
    double analytic_rate() const override;
    std::optional<double> exact_log_probability(int n) const override;

private:
    std::vector<double> alpha_;
    BinThreshold event_;
};

}  // namespace coxflux
