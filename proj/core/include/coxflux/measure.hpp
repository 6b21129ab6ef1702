#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "coxflux/wedge.hpp"

namespace coxflux {

inline constexpr std::size_t kDefaultBins = 256;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const noexcept { return hi - lo; }
    bool contains(double t) const noexcept { return t >= lo && t <= hi; }
};

// Finite nonnegative measure on [lo, hi], piecewise constant on a grid of bins.
// Immutable after construction.
class IntervalMeasure {
public:
    IntervalMeasure(std::vector<double> edges, std::vector<double> masses);

    static IntervalMeasure zero(double lo, double hi, std::size_t bins = kDefaultBins);
    static IntervalMeasure uniform(double lo, double hi, double density, std::size_t bins = kDefaultBins);
    static IntervalMeasure zero_on(std::vector<double> edges);
    // Bin masses from a density evaluated at bin midpoints.
    static IntervalMeasure from_density(double lo, double hi, const std::function<double(double)>& density,
                                        std::size_t bins = kDefaultBins);

    double lo() const noexcept { return edges_.front(); }
    double hi() const noexcept { return edges_.back(); }
    Interval domain() const noexcept { return {lo(), hi()}; }
    std::size_t bins() const noexcept { return masses_.size(); }
    std::span<const double> edges() const noexcept { return edges_; }
    std::span<const double> masses() const noexcept { return masses_; }
    double bin_width(std::size_t i) const { return edges_[i + 1] - edges_[i]; }
    double bin_mid(std::size_t i) const { return 0.5 * (edges_[i] + edges_[i + 1]); }
    double density(std::size_t i) const { return masses_[i] / bin_width(i); }

    bool same_grid(const IntervalMeasure& other, double tol = 1e-12) const;

private:
    std::vector<double> edges_;
    std::vector<double> masses_;
};

struct Atom {
    double t = 0.0;
    double x = 0.0;  // second coordinate for marked atoms; 0 for atoms on the line
    std::int64_t weight = 1;
};

// Finite sum of weighted Dirac masses.
class CountingMeasure {
public:
    CountingMeasure() = default;
    explicit CountingMeasure(std::vector<Atom> atoms);

    std::span<const Atom> atoms() const noexcept { return atoms_; }
    bool empty() const noexcept { return atoms_.empty(); }

private:
    std::vector<Atom> atoms_;
};

// Uniform rectangular grid over [s_lo, s_hi] x [x_lo, x_hi].
struct Grid2D {
    double s_lo = 0.0, s_hi = 1.0;
    std::size_t ns = 1;
    double x_lo = 0.0, x_hi = 1.0;
    std::size_t nx = 1;

    static Grid2D over(const Rect& box, std::size_t ns, std::size_t nx);

    std::size_t cells() const noexcept { return ns * nx; }
    std::size_t index(std::size_t is, std::size_t ix) const noexcept { return is * nx + ix; }
    double ds() const noexcept { return (s_hi - s_lo) / static_cast<double>(ns); }
    double dx() const noexcept { return (x_hi - x_lo) / static_cast<double>(nx); }
    Rect cell(std::size_t is, std::size_t ix) const;
    SpaceTimePoint midpoint(std::size_t is, std::size_t ix) const;
    // Cell containing p (upper boundary folded into the last cell); false if outside.
    bool locate(SpaceTimePoint p, std::size_t& is, std::size_t& ix) const;
};

// Finite nonnegative measure on a 2-D grid, tagged with the region it
// describes (restrict() drops cells whose midpoint is outside a region).
class GridMeasure2D {
public:
    GridMeasure2D(WedgeRegion region, Grid2D grid, std::vector<double> masses);
    static GridMeasure2D zero(WedgeRegion region, Grid2D grid);

    const WedgeRegion& region() const noexcept { return region_; }
    const Grid2D& grid() const noexcept { return grid_; }
    std::span<const double> masses() const noexcept { return masses_; }
    double mass(std::size_t is, std::size_t ix) const { return masses_[grid_.index(is, ix)]; }

private:
    WedgeRegion region_;
    Grid2D grid_;
    std::vector<double> masses_;
};

double total_mass(const IntervalMeasure& m);
double total_mass(const CountingMeasure& m);
double total_mass(const GridMeasure2D& m);

// Midpoint rule on grid measures; exact for counting measures.
template <class F>
    requires std::invocable<F, double>
double integrate(const IntervalMeasure& m, F&& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.bins(); ++i) acc += m.masses()[i] * f(m.bin_mid(i));
    return acc;
}

template <class F>
    requires std::invocable<F, double>
double integrate(const CountingMeasure& m, F&& f) {
    double acc = 0.0;
    for (const auto& a : m.atoms()) acc += static_cast<double>(a.weight) * f(a.t);
    return acc;
}

template <class F>
    requires std::invocable<F, double, double>
double integrate(const CountingMeasure& m, F&& f) {
    double acc = 0.0;
    for (const auto& a : m.atoms()) acc += static_cast<double>(a.weight) * f(a.t, a.x);
    return acc;
}

template <class F>
    requires std::invocable<F, double, double>
double integrate(const GridMeasure2D& m, F&& f) {
    double acc = 0.0;
    const auto& g = m.grid();
    for (std::size_t is = 0; is < g.ns; ++is)
        for (std::size_t ix = 0; ix < g.nx; ++ix) {
            const double w = m.mass(is, ix);
            if (w == 0.0) continue;
            const auto p = g.midpoint(is, ix);
            acc += w * f(p.s, p.x);
        }
    return acc;
}

// Restriction. Partially covered bins keep the covered fraction of their mass;
// counting measures keep atoms on the boundary (closed sets).
IntervalMeasure restrict(const IntervalMeasure& m, Interval region);
CountingMeasure restrict(const CountingMeasure& m, Interval region);
CountingMeasure restrict(const CountingMeasure& m, const WedgeRegion& region);
GridMeasure2D restrict(const GridMeasure2D& m, const WedgeRegion& region);

// Scale to unit mass. Throws std::domain_error("cannot normalize zero measure").
IntervalMeasure normalize(const IntervalMeasure& m);
GridMeasure2D normalize(const GridMeasure2D& m);

IntervalMeasure scale(const IntervalMeasure& m, double factor);
IntervalMeasure operator+(const IntervalMeasure& a, const IntervalMeasure& b);

// Bin the atoms' first coordinate onto the grid given by edges (closed at the
// top edge). Atoms outside [edges.front(), edges.back()] are dropped.
IntervalMeasure project(const CountingMeasure& m, std::span<const double> edges, double weight_scale = 1.0);

// Bounded-Lipschitz (Kantorovich–Rubinstein) distance
//   sup { ∫f dm1 − ∫f dm2 : |f| <= 1, Lip(f) <= 1 }
// with f restricted to the bin midpoints. Solved exactly by dynamic programming
// over concave piecewise-linear value functions. Throws std::invalid_argument
// for measures on different grids.
double kr_distance(const IntervalMeasure& m1, const IntervalMeasure& m2);
double kr_distance(const CountingMeasure& m1, const CountingMeasure& m2, std::span<const double> edges,
                   double weight_scale = 1.0);

// Uniform edges on [lo, hi].
std::vector<double> uniform_edges(double lo, double hi, std::size_t bins);

}  // namespace coxflux
