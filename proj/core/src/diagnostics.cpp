#include "coxflux/diagnostics.hpp"

#include <stdexcept>

namespace coxflux {

namespace {

double mass_outside(const GridMeasure2D& mu, const WedgeRegion& K) {
    double inside = 0.0;
    const auto& g = mu.grid();
    for (std::size_t is = 0; is < g.ns; ++is)
        for (std::size_t ix = 0; ix < g.nx; ++ix)
            if (contains(K, g.midpoint(is, ix))) inside += mu.mass(is, ix);
    return total_mass(mu) - inside;
}

}  // namespace

CompactnessReport compactness_diagnostic(std::span<const GridMeasure2D> samples, std::span<const WedgeRegion> K,
                                         std::span<const double> eps) {
    if (K.size() != eps.size() || K.empty())
        throw std::invalid_argument("compactness_diagnostic: need one epsilon per compact set");
    for (std::size_t i = 0; i + 1 < K.size(); ++i) {
        if (!is_subset(K[i], K[i + 1]))
            throw std::invalid_argument("compactness_diagnostic: sets are not nested (" + K[i].describe() +
                                        " is not inside " + K[i + 1].describe() + ")");
        if (eps[i + 1] > eps[i]) throw std::invalid_argument("compactness_diagnostic: epsilons must be nonincreasing");
    }

    CompactnessReport r;
    r.samples = samples.size();
    r.level_fraction.assign(K.size(), 0.0);
    if (samples.empty()) {
        r.message = "no data";
        return r;
    }
    std::size_t joint = 0;
    for (const auto& mu : samples) {
        bool all = true;
        for (std::size_t i = 0; i < K.size(); ++i) {
            const bool ok = mass_outside(mu, K[i]) <= eps[i] + 1e-12;
            if (ok) r.level_fraction[i] += 1.0;
            all = all && ok;
        }
        if (all) ++joint;
    }
    const double N = static_cast<double>(samples.size());
    for (double& f : r.level_fraction) f /= N;
    r.joint_fraction = static_cast<double>(joint) / N;
    r.message = "ok";
    return r;
}

}  // namespace coxflux
