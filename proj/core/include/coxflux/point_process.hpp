#pragma once

#include <cstddef>
#include <vector>

#include "coxflux/intensity.hpp"
#include "coxflux/measure.hpp"
#include "coxflux/rng.hpp"
#include "coxflux/service.hpp"
#include "coxflux/wedge.hpp"

namespace coxflux {

// Customers (arrival time, service requirement) sampled on an arrival window
// [u, b]. Queue functionals are trusted on the certified window [a, b]; the
// leak bound is the expected number of ignored pre-u arrivals still present
// in [a, b].
struct MarkedPointSet {
    std::vector<SpaceTimePoint> points;  // sorted by (s, x)
    Interval arrivals;
    Interval certified;
    double leak_bound = 0.0;

    std::size_t size() const noexcept { return points.size(); }
    // Unmarked arrival times as a counting measure.
    CountingMeasure arrival_measure() const;
    // Atoms at (s, x).
    CountingMeasure marked_measure() const;
};

// Poisson process on R x R+ with intensity lam ⊗ F. Per-bin Poisson counts,
// uniform placement inside each bin, iid marks.
MarkedPointSet sample_poisson_marked(const IntervalMeasure& lam, const ServiceDistribution& F, Rng& rng);

// Two-stage Cox draw: Λ_n|[u,b] from the model, then a conditionally Poisson
// marked process. Certified window is the whole arrival window (system empty
// before u), leak bound 0.
MarkedPointSet sample_cox_marked(const IntensityModel& model, int n, Interval window, const ServiceDistribution& F,
                                 Rng& rng);

struct Truncation {
    double u = 0.0;
    double ell = 0.0;
    double leak_bound = 0.0;  // n * lambda_bar * c_ell
};

// Smallest ell on a 1e-3 grid (ell >= 1) such that n * lambda_bar * c_ell < tol;
// u = a - ell. tol = +inf returns u = a. Throws NumericalError when ell_cap is
// reached first.
Truncation choose_truncation(const ServiceDistribution& F, int n, double lambda_bar, double a, double tol,
                             double ell_cap = 1e4);

// Stationary-window sample certified on [a, b]: truncation from
// choose_truncation with lambda_bar = model.max_rate(), then sample_cox_marked.
MarkedPointSet sample_stationary(const IntensityModel& model, int n, Interval certified, const ServiceDistribution& F,
                                 double tol, Rng& rng);
// Same with a precomputed truncation (replication loops compute it once).
MarkedPointSet sample_stationary(const IntensityModel& model, int n, Interval certified, const ServiceDistribution& F,
                                 const Truncation& truncation, Rng& rng);

// Unit mass per point of pts inside region, binned on grid. Throws
// std::out_of_range if a point in the region falls outside the grid.
GridMeasure2D empirical_measure_2d(const MarkedPointSet& pts, const WedgeRegion& region, const Grid2D& grid);

// Poisson(mean) draw, mean >= 0.
std::int64_t sample_poisson(double mean, Rng& rng);

}  // namespace coxflux
