#pragma once

#include <cstdint>
#include <vector>

#include "coxflux/intensity.hpp"
#include "coxflux/measure.hpp"
#include "coxflux/occupancy_path.hpp"
#include "coxflux/point_process.hpp"
#include "coxflux/rng.hpp"
#include "coxflux/service.hpp"
#include "coxflux/test_functions.hpp"

namespace coxflux {

// Number of customers present at t: s <= t < s + x. Throws std::out_of_range
// when t is outside the certified window.
std::int64_t queue_length(const MarkedPointSet& pts, double t);

// Exact event-driven occupancy on [a, b] (must be inside the certified window).
OccupancyPath occupancy_path(const MarkedPointSet& pts, Interval window);

// ∫ h dν with h(s,x) = ∫_{max(a,s)}^{min(s+x,b)} g(t) dt (zero on an empty range).
double occupancy_pairing(const MarkedPointSet& pts, Interval window, const TestFunction& g);
// Grid version: kernel evaluated at cell midpoints.
double occupancy_pairing(const GridMeasure2D& nu, Interval window, const TestFunction& g);
// ∫ g(t) Q(t) dt along a path; the time-domain side of the pairing identity.
double path_pairing(const OccupancyPath& path, const TestFunction& g);

// Occupancy kernel h(s, x) for the window.
double occupancy_kernel(double s, double x, Interval window, const TestFunction& g);
// Departure kernel: g(s + x) when a <= s + x <= b and s <= b, else 0.
double departure_kernel(double s, double x, Interval window, const TestFunction& g);

// Departure instants s + x in [a, b] (closed) as atoms on [a, b].
CountingMeasure departures(const MarkedPointSet& pts, Interval window);

// One queue of a non-standard tandem. For stage k >= 1 the arrival density is
// gain * Q_{k-1}(t); the gain of stage 0 is ignored.
struct TandemStage {
    ServiceDistribution service;
    double gain = 0.0;
};

struct TandemSpec {
    IntensityModel source;
    int n = 1;
    Interval window;
    std::vector<TandemStage> stages;
    double tol = 1e-6;  // per-stage truncation tolerance
};

struct StageRun {
    MarkedPointSet points;
    OccupancyPath path;
    Truncation truncation;
    double planned_rate_bound = 0.0;   // arrival-rate bound used to choose the truncation
    double realized_rate_bound = 0.0;  // largest arrival density actually seen
    double realized_leak_bound = 0.0;
};

// Windows are widened back to front so every stage is certified on the
// interval its successor needs; stages are then simulated front to back.
// Stage k+1 arrivals are sampled exactly on each constant segment of Q_k.
std::vector<StageRun> tandem_simulate(const TandemSpec& spec, Rng& rng);

}  // namespace coxflux
