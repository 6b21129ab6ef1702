#include "coxflux/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace coxflux {

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("grid needs at least one bin");
    if (!(lo < hi)) throw std::invalid_argument("grid requires lo < hi");
    std::vector<double> e(bins + 1);
    const double w = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + w * static_cast<double>(i);
    e.back() = hi;
    return e;
}

// ---------------------------------------------------------------------------
// IntervalMeasure

IntervalMeasure::IntervalMeasure(std::vector<double> edges, std::vector<double> masses)
    : edges_(std::move(edges)), masses_(std::move(masses)) {
    if (edges_.size() < 2) throw std::invalid_argument("interval measure needs at least two edges");
    if (masses_.size() + 1 != edges_.size())
        throw std::invalid_argument("interval measure needs one mass per bin");
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i) {
        if (!std::isfinite(edges_[i]) || !std::isfinite(edges_[i + 1]) || !(edges_[i] < edges_[i + 1]))
            throw std::invalid_argument("interval measure edges must be finite and strictly increasing");
    }
    for (double m : masses_) {
        if (!(m >= 0.0) || !std::isfinite(m))
            throw std::invalid_argument("interval measure masses must be finite and nonnegative");
    }
}

IntervalMeasure IntervalMeasure::zero(double lo, double hi, std::size_t bins) {
    return IntervalMeasure(uniform_edges(lo, hi, bins), std::vector<double>(bins, 0.0));
}

IntervalMeasure IntervalMeasure::zero_on(std::vector<double> edges) {
    std::vector<double> masses(edges.empty() ? 0 : edges.size() - 1, 0.0);
    return IntervalMeasure(std::move(edges), std::move(masses));
}

IntervalMeasure IntervalMeasure::uniform(double lo, double hi, double density, std::size_t bins) {
    auto e = uniform_edges(lo, hi, bins);
    std::vector<double> m(bins);
    for (std::size_t i = 0; i < bins; ++i) m[i] = density * (e[i + 1] - e[i]);
    return IntervalMeasure(std::move(e), std::move(m));
}

IntervalMeasure IntervalMeasure::from_density(double lo, double hi, const std::function<double(double)>& density,
                                              std::size_t bins) {
    auto e = uniform_edges(lo, hi, bins);
    std::vector<double> m(bins);
    for (std::size_t i = 0; i < bins; ++i) m[i] = density(0.5 * (e[i] + e[i + 1])) * (e[i + 1] - e[i]);
    return IntervalMeasure(std::move(e), std::move(m));
}

bool IntervalMeasure::same_grid(const IntervalMeasure& other, double tol) const {
    if (edges_.size() != other.edges_.size()) return false;
    for (std::size_t i = 0; i < edges_.size(); ++i)
        if (std::abs(edges_[i] - other.edges_[i]) > tol * std::max(1.0, std::abs(edges_[i]))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// CountingMeasure

CountingMeasure::CountingMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const auto& a : atoms_) {
        if (a.weight <= 0) throw std::invalid_argument("counting measure weights must be positive integers");
        if (!std::isfinite(a.t) || !std::isfinite(a.x))
            throw std::invalid_argument("counting measure atoms must be finite");
    }
}

// ---------------------------------------------------------------------------
// Grid2D / GridMeasure2D

Grid2D Grid2D::over(const Rect& box, std::size_t ns, std::size_t nx) {
    if (ns == 0 || nx == 0) throw std::invalid_argument("grid needs at least one cell per axis");
    if (!(box.s_lo < box.s_hi) || !(box.x_lo < box.x_hi)) throw std::invalid_argument("grid box is degenerate");
    return Grid2D{box.s_lo, box.s_hi, ns, box.x_lo, box.x_hi, nx};
}

Rect Grid2D::cell(std::size_t is, std::size_t ix) const {
    const double s0 = s_lo + ds() * static_cast<double>(is);
    const double x0 = x_lo + dx() * static_cast<double>(ix);
    return Rect{s0, is + 1 == ns ? s_hi : s0 + ds(), x0, ix + 1 == nx ? x_hi : x0 + dx()};
}

SpaceTimePoint Grid2D::midpoint(std::size_t is, std::size_t ix) const {
    const Rect c = cell(is, ix);
    return {0.5 * (c.s_lo + c.s_hi), 0.5 * (c.x_lo + c.x_hi)};
}

bool Grid2D::locate(SpaceTimePoint p, std::size_t& is, std::size_t& ix) const {
    if (p.s < s_lo || p.s > s_hi || p.x < x_lo || p.x > x_hi) return false;
    is = std::min(ns - 1, static_cast<std::size_t>((p.s - s_lo) / ds()));
    ix = std::min(nx - 1, static_cast<std::size_t>((p.x - x_lo) / dx()));
    return true;
}

GridMeasure2D::GridMeasure2D(WedgeRegion region, Grid2D grid, std::vector<double> masses)
    : region_(region), grid_(grid), masses_(std::move(masses)) {
    if (masses_.size() != grid_.cells()) throw std::invalid_argument("grid measure needs one mass per cell");
    for (double m : masses_)
        if (!(m >= 0.0) || !std::isfinite(m))
            throw std::invalid_argument("grid measure masses must be finite and nonnegative");
}

GridMeasure2D GridMeasure2D::zero(WedgeRegion region, Grid2D grid) {
    return GridMeasure2D(region, grid, std::vector<double>(grid.cells(), 0.0));
}

// ---------------------------------------------------------------------------
// Basic functionals

double total_mass(const IntervalMeasure& m) {
    return std::accumulate(m.masses().begin(), m.masses().end(), 0.0);
}

double total_mass(const CountingMeasure& m) {
    double acc = 0.0;
    for (const auto& a : m.atoms()) acc += static_cast<double>(a.weight);
    return acc;
}

double total_mass(const GridMeasure2D& m) {
    return std::accumulate(m.masses().begin(), m.masses().end(), 0.0);
}

IntervalMeasure restrict(const IntervalMeasure& m, Interval r) {
    const double lo = std::max(r.lo, m.lo());
    const double hi = std::min(r.hi, m.hi());
    if (!(lo < hi)) {
        const double zlo = r.lo;
        const double zhi = r.hi > r.lo ? r.hi : r.lo + 1.0;
        return IntervalMeasure::zero(zlo, zhi, 1);
    }
    std::vector<double> edges{lo};
    std::vector<double> masses;
    for (std::size_t i = 0; i < m.bins(); ++i) {
        const double b0 = m.edges()[i];
        const double b1 = m.edges()[i + 1];
        const double c0 = std::max(b0, lo);
        const double c1 = std::min(b1, hi);
        if (!(c0 < c1)) continue;
        masses.push_back(m.masses()[i] * (c1 - c0) / (b1 - b0));
        edges.push_back(c1);
    }
    return IntervalMeasure(std::move(edges), std::move(masses));
}

CountingMeasure restrict(const CountingMeasure& m, Interval r) {
    std::vector<Atom> kept;
    for (const auto& a : m.atoms())
        if (r.contains(a.t)) kept.push_back(a);
    return CountingMeasure(std::move(kept));
}

CountingMeasure restrict(const CountingMeasure& m, const WedgeRegion& region) {
    std::vector<Atom> kept;
    for (const auto& a : m.atoms())
        if (closure_contains(region, {a.t, a.x})) kept.push_back(a);
    return CountingMeasure(std::move(kept));
}

GridMeasure2D restrict(const GridMeasure2D& m, const WedgeRegion& region) {
    const auto& g = m.grid();
    std::vector<double> masses(g.cells(), 0.0);
    for (std::size_t is = 0; is < g.ns; ++is)
        for (std::size_t ix = 0; ix < g.nx; ++ix)
            if (contains(region, g.midpoint(is, ix))) masses[g.index(is, ix)] = m.mass(is, ix);
    return GridMeasure2D(region, g, std::move(masses));
}

IntervalMeasure normalize(const IntervalMeasure& m) {
    const double total = total_mass(m);
    if (!(total > 0.0)) throw std::domain_error("cannot normalize zero measure");
    return scale(m, 1.0 / total);
}

GridMeasure2D normalize(const GridMeasure2D& m) {
    const double total = total_mass(m);
    if (!(total > 0.0)) throw std::domain_error("cannot normalize zero measure");
    std::vector<double> masses(m.masses().begin(), m.masses().end());
    for (auto& v : masses) v /= total;
    return GridMeasure2D(m.region(), m.grid(), std::move(masses));
}

IntervalMeasure scale(const IntervalMeasure& m, double factor) {
    if (!(factor >= 0.0)) throw std::invalid_argument("scale factor must be nonnegative");
    std::vector<double> masses(m.masses().begin(), m.masses().end());
    for (auto& v : masses) v *= factor;
    return IntervalMeasure(std::vector<double>(m.edges().begin(), m.edges().end()), std::move(masses));
}

IntervalMeasure operator+(const IntervalMeasure& a, const IntervalMeasure& b) {
    if (!a.same_grid(b)) throw std::invalid_argument("cannot add measures on different grids");
    std::vector<double> masses(a.masses().begin(), a.masses().end());
    for (std::size_t i = 0; i < masses.size(); ++i) masses[i] += b.masses()[i];
    return IntervalMeasure(std::vector<double>(a.edges().begin(), a.edges().end()), std::move(masses));
}

IntervalMeasure project(const CountingMeasure& m, std::span<const double> edges, double weight_scale) {
    std::vector<double> e(edges.begin(), edges.end());
    auto out = IntervalMeasure::zero_on(e);
    std::vector<double> masses(out.bins(), 0.0);
    for (const auto& a : m.atoms()) {
        if (a.t < e.front() || a.t > e.back()) continue;
        auto it = std::upper_bound(e.begin(), e.end(), a.t);
        std::size_t bin = static_cast<std::size_t>(std::distance(e.begin(), it));
        bin = bin == 0 ? 0 : std::min(bin - 1, masses.size() - 1);
        masses[bin] += static_cast<double>(a.weight) * weight_scale;
    }
    return IntervalMeasure(std::move(e), std::move(masses));
}

// ---------------------------------------------------------------------------
// Kantorovich–Rubinstein distance

namespace {

// Concave piecewise-linear function on [-1, 1]: value at -1 plus a run of
// (length, slope) segments with nonincreasing slopes.
struct ConcavePL {
    struct Seg {
        double len;
        double slope;
    };
    double v0 = 0.0;
    std::vector<Seg> segs;

    void add_linear(double d) {
        v0 -= d;
        for (auto& s : segs) s.slope += d;
    }

    double peak(double& argmax) const {
        double v = v0;
        argmax = -1.0;
        for (const auto& s : segs) {
            if (s.slope <= 0.0) break;
            v += s.len * s.slope;
            argmax += s.len;
        }
        return v;
    }

    // W(f) = max { V(g) : |g - f| <= delta, g in [-1, 1] }.
    void window_max(double delta) {
        double gstar = 0.0;
        const double vmax = peak(gstar);
        if (delta >= 2.0) {
            v0 = vmax;
            segs = {{2.0, 0.0}};
            return;
        }
        std::vector<Seg> inc, dec;
        for (const auto& s : segs) (s.slope > 0.0 ? inc : dec).push_back(s);

        std::vector<Seg> out;
        // Drop the first delta of the increasing run.
        double skip = delta;
        double new_v0 = v0;
        for (const auto& s : inc) {
            if (skip >= s.len) {
                skip -= s.len;
                new_v0 += s.len * s.slope;
                continue;
            }
            new_v0 += skip * s.slope;
            out.push_back({s.len - skip, s.slope});
            skip = 0.0;
        }
        if (skip > 0.0) new_v0 = vmax;

        const double flat = std::min(gstar + delta, 1.0) - std::max(gstar - delta, -1.0);
        if (flat > 0.0) out.push_back({flat, 0.0});

        // Drop the last delta of the decreasing run.
        double keep = 0.0;
        for (const auto& s : dec) keep += s.len;
        keep = std::max(0.0, keep - delta);
        for (const auto& s : dec) {
            if (keep <= 0.0) break;
            const double take = std::min(keep, s.len);
            out.push_back({take, s.slope});
            keep -= take;
        }

        v0 = new_v0;
        segs.clear();
        for (const auto& s : out) {
            if (s.len <= 0.0) continue;
            if (!segs.empty() && segs.back().slope == s.slope)
                segs.back().len += s.len;
            else
                segs.push_back(s);
        }
    }
};

}  // namespace

double kr_distance(const IntervalMeasure& m1, const IntervalMeasure& m2) {
    if (!m1.same_grid(m2)) throw std::invalid_argument("kr_distance: measures live on different grids");
    const std::size_t n = m1.bins();
    ConcavePL v;
    v.segs = {{2.0, 0.0}};
    v.v0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) v.window_max(m1.bin_mid(i) - m1.bin_mid(i - 1));
        v.add_linear(m1.masses()[i] - m2.masses()[i]);
    }
    double argmax = 0.0;
    return std::max(0.0, v.peak(argmax));
}

double kr_distance(const CountingMeasure& m1, const CountingMeasure& m2, std::span<const double> edges,
                   double weight_scale) {
    return kr_distance(project(m1, edges, weight_scale), project(m2, edges, weight_scale));
}

}  // namespace coxflux
