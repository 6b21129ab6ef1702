#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "coxflux/measure.hpp"
#include "coxflux/wedge.hpp"

namespace coxflux {

struct CompactnessReport {
    std::size_t samples = 0;
    // Fraction of samples with μ(K_i^c) <= ε_i, per level i.
    std::vector<double> level_fraction;
    // Fraction inside every level at once.
    double joint_fraction = 0.0;
    std::string message;
};

// Tightness smoke test: how many sampled measures satisfy μ(K_i^c) <= ε_i.
// Mass outside K_i is the total minus the cells whose midpoint lies in K_i.
// Requires K_i ⊆ K_{i+1} and nonincreasing ε; throws std::invalid_argument
// otherwise. An empty sample list yields message "no data".
CompactnessReport compactness_diagnostic(std::span<const GridMeasure2D> samples, std::span<const WedgeRegion> K,
                                         std::span<const double> eps);

}  // namespace coxflux
