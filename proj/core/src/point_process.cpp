#include "coxflux/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "coxflux/errors.hpp"

namespace coxflux {

CountingMeasure MarkedPointSet::arrival_measure() const {
    std::vector<Atom> atoms;
    atoms.reserve(points.size());
    for (const auto& p : points) atoms.push_back({p.s, 0.0, 1});
    return CountingMeasure(std::move(atoms));
}

CountingMeasure MarkedPointSet::marked_measure() const {
    std::vector<Atom> atoms;
    atoms.reserve(points.size());
    for (const auto& p : points) atoms.push_back({p.s, p.x, 1});
    return CountingMeasure(std::move(atoms));
}

std::int64_t sample_poisson(double mean, Rng& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::invalid_argument("poisson mean must be finite and >= 0");
    if (mean == 0.0) return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(rng);
}

MarkedPointSet sample_poisson_marked(const IntervalMeasure& lam, const ServiceDistribution& F, Rng& rng) {
    MarkedPointSet out;
    out.arrivals = lam.domain();
    out.certified = lam.domain();
    for (std::size_t i = 0; i < lam.bins(); ++i) {
        const double m = lam.masses()[i];
        if (m == 0.0) continue;
        const std::int64_t k = sample_poisson(m, rng);
        const double lo = lam.edges()[i];
        const double w = lam.bin_width(i);
        for (std::int64_t j = 0; j < k; ++j) {
            const double s = lo + w * rng.uniform();
            out.points.push_back({s, F.sample(rng)});
        }
    }
    std::sort(out.points.begin(), out.points.end(),
              [](const SpaceTimePoint& p, const SpaceTimePoint& q) { return p.s < q.s || (p.s == q.s && p.x < q.x); });
    return out;
}

MarkedPointSet sample_cox_marked(const IntensityModel& model, int n, Interval window, const ServiceDistribution& F,
                                 Rng& rng) {
    if (!(window.lo < window.hi)) throw std::invalid_argument("sample_cox_marked requires u < b");
    const auto lam = model.sample_intensity(n, window, rng);
    return sample_poisson_marked(lam, F, rng);
}

Truncation choose_truncation(const ServiceDistribution& F, int n, double lambda_bar, double a, double tol,
                             double ell_cap) {
    if (!(tol > 0.0)) throw std::invalid_argument("truncation tolerance must be positive");
    if (!(lambda_bar >= 0.0)) throw std::invalid_argument("lambda_bar must be nonnegative");
    if (std::isinf(tol)) return {a, 0.0, 0.0};
    const double scale = static_cast<double>(n) * lambda_bar;
    auto bound = [&](double ell) { return scale * tail_mass_constant(F, ell); };
    constexpr double kStep = 1e-3;
    if (bound(1.0) < tol) return {a - 1.0, 1.0, bound(1.0)};
    // Bracket by doubling, then bisect over grid indices; the bound is nonincreasing in ell.
    double hi_ell = 2.0;
    while (bound(hi_ell) >= tol) {
        if (hi_ell >= ell_cap) {
            std::ostringstream os;
            os << "choose_truncation: tolerance " << tol << " unreachable; bound at ell cap " << ell_cap << " is "
               << bound(ell_cap);
            throw NumericalError(os.str());
        }
        hi_ell = std::min(ell_cap, hi_ell * 2.0);
    }
    auto lo_k = static_cast<long long>(0);
    auto hi_k = static_cast<long long>(std::ceil((hi_ell - 1.0) / kStep));
    while (hi_k - lo_k > 1) {
        const long long mid = (lo_k + hi_k) / 2;
        if (bound(1.0 + kStep * static_cast<double>(mid)) < tol)
            hi_k = mid;
        else
            lo_k = mid;
    }
    const double ell = 1.0 + kStep * static_cast<double>(hi_k);
    return {a - ell, ell, bound(ell)};
}

MarkedPointSet sample_stationary(const IntensityModel& model, int n, Interval certified, const ServiceDistribution& F,
                                 double tol, Rng& rng) {
    if (!(certified.lo < certified.hi)) throw std::invalid_argument("certified window requires a < b");
    return sample_stationary(model, n, certified, F, choose_truncation(F, n, model.max_rate(), certified.lo, tol), rng);
}

MarkedPointSet sample_stationary(const IntensityModel& model, int n, Interval certified, const ServiceDistribution& F,
                                 const Truncation& tr, Rng& rng) {
    if (!(certified.lo < certified.hi)) throw std::invalid_argument("certified window requires a < b");
    const double u = std::min(tr.u, certified.lo);
    auto pts = u < certified.lo ? sample_cox_marked(model, n, {u, certified.hi}, F, rng)
                                : sample_cox_marked(model, n, certified, F, rng);
    pts.certified = certified;
    pts.leak_bound = tr.leak_bound;
    return pts;
}

GridMeasure2D empirical_measure_2d(const MarkedPointSet& pts, const WedgeRegion& region, const Grid2D& grid) {
    std::vector<double> masses(grid.cells(), 0.0);
    for (const auto& p : pts.points) {
        if (!contains(region, p)) continue;
        std::size_t is = 0, ix = 0;
        if (!grid.locate(p, is, ix)) {
            std::ostringstream os;
            os << "empirical_measure_2d: point (" << p.s << "," << p.x << ") lies outside the grid";
            throw std::out_of_range(os.str());
        }
        masses[grid.index(is, ix)] += 1.0;
    }
    return GridMeasure2D(region, grid, std::move(masses));
}

}  // namespace coxflux
