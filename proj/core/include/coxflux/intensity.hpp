#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coxflux/measure.hpp"
#include "coxflux/occupancy_path.hpp"
#include "coxflux/rng.hpp"

namespace coxflux {

// Law of the directing measure Λ_n. Deterministic and FiniteMixture have
// densities constant over a realization; OccupancyDriven follows the
// piecewise-constant occupancy of an upstream queue.
class IntensityModel {
public:
    enum class Kind { Deterministic, FiniteMixture, OccupancyDriven };

    static IntensityModel deterministic(double rate);
    static IntensityModel finite_mixture(std::vector<double> rates, std::vector<double> probs);
    // Density n * gain * source(t); source is an occupancy path already divided by n.
    static IntensityModel occupancy_driven(double gain, OccupancyPath source);

    Kind kind() const noexcept { return kind_; }
    std::string name() const;

    // λ with E Λ_n([a,b]) = n λ (b - a). Throws for OccupancyDriven.
    double mean_rate() const;
    // Largest density per unit n a realization can have.
    double max_rate() const;
    std::span<const double> rates() const noexcept { return rates_; }
    std::span<const double> probs() const noexcept { return probs_; }
    double gain() const noexcept { return gain_; }
    const std::optional<OccupancyPath>& source() const noexcept { return source_; }

    // One realization of Λ_n restricted to window.
    IntervalMeasure sample_intensity(int n, Interval window, Rng& rng) const;

    // ψ_n(θ) = log E exp(θ Λ_n([0,1]) / n).
    double log_mgf_unit(int n, double theta) const;

    nlohmann::json to_json() const;
    static IntensityModel from_json(const nlohmann::json& j);

private:
    IntensityModel(Kind k) : kind_(k) {}
    Kind kind_;
    std::vector<double> rates_;
    std::vector<double> probs_;
    double gain_ = 0.0;
    std::optional<OccupancyPath> source_;
};

// Rate function of Λ_n/n on [a,b] for the analytic families: 0 when lam is
// uniform with a density in the model's support (per-bin tolerance 1e-9), +inf
// otherwise. OccupancyDriven throws std::invalid_argument.
double intensity_rate_function(const IntensityModel& model, const IntervalMeasure& lam);

}  // namespace coxflux
