#include "coxflux/queue_maps.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "coxflux/errors.hpp"
#include "coxflux/wedge.hpp"

namespace coxflux {

namespace {

void require_certified(const MarkedPointSet& pts, Interval w, const char* who) {
    if (w.lo < pts.certified.lo || w.hi > pts.certified.hi) {
        std::ostringstream os;
        os << who << ": window [" << w.lo << "," << w.hi << "] outside certified window [" << pts.certified.lo << ","
           << pts.certified.hi << "]";
        throw std::out_of_range(os.str());
    }
}

}  // namespace

std::int64_t queue_length(const MarkedPointSet& pts, double t) {
    require_certified(pts, {t, t}, "queue_length");
    std::int64_t q = 0;
    for (const auto& p : pts.points) {
        if (p.s > t) break;
        if (departs_after(p.s, p.x, t)) ++q;
    }
    return q;
}

OccupancyPath occupancy_path(const MarkedPointSet& pts, Interval w) {
    if (!(w.lo < w.hi)) throw std::invalid_argument("occupancy_path requires a < b");
    require_certified(pts, w, "occupancy_path");
    double initial = 0.0;
    std::map<double, long long> delta;
    for (const auto& p : pts.points) {
        if (p.s > w.hi) break;
        const double end = p.s + p.x;
        const bool ends_inside = !departs_at_or_after(p.s, p.x, w.hi);
        if (p.s <= w.lo) {
            if (departs_after(p.s, p.x, w.lo)) {
                initial += 1.0;
                if (ends_inside) delta[end] -= 1;
            }
            continue;
        }
        if (p.s < w.hi) delta[p.s] += 1;
        if (ends_inside) delta[end] -= 1;
    }
    std::vector<double> breaks{w.lo};
    std::vector<double> levels{initial};
    double level = initial;
    for (const auto& [t, d] : delta) {
        if (d == 0) continue;
        level += static_cast<double>(d);
        breaks.push_back(t);
        levels.push_back(level);
    }
    return OccupancyPath(w.lo, w.hi, std::move(breaks), std::move(levels));
}

double occupancy_kernel(double s, double x, Interval w, const TestFunction& g) {
    const double lo = std::max(w.lo, s);
    const double hi = std::min(s + x, w.hi);
    return hi > lo ? g.integral(lo, hi) : 0.0;
}

double departure_kernel(double s, double x, Interval w, const TestFunction& g) {
    return (s <= w.hi && departs_at_or_after(s, x, w.lo) && departs_by(s, x, w.hi)) ? g(s + x) : 0.0;
}

double occupancy_pairing(const MarkedPointSet& pts, Interval w, const TestFunction& g) {
    require_certified(pts, w, "occupancy_pairing");
    double acc = 0.0;
    for (const auto& p : pts.points) acc += occupancy_kernel(p.s, p.x, w, g);
    return acc;
}

double occupancy_pairing(const GridMeasure2D& nu, Interval w, const TestFunction& g) {
    return integrate(nu, [&](double s, double x) { return occupancy_kernel(s, x, w, g); });
}

double path_pairing(const OccupancyPath& path, const TestFunction& g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < path.segments(); ++i) {
        const double l = path.levels()[i];
        if (l != 0.0) acc += l * g.integral(path.breakpoints()[i], path.segment_end(i));
    }
    return acc;
}

CountingMeasure departures(const MarkedPointSet& pts, Interval w) {
    require_certified(pts, w, "departures");
    std::vector<Atom> atoms;
    for (const auto& p : pts.points) {
        if (p.s <= w.hi && departs_at_or_after(p.s, p.x, w.lo) && departs_by(p.s, p.x, w.hi))
            atoms.push_back({p.s + p.x, 0.0, 1});
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.t < r.t; });
    return CountingMeasure(std::move(atoms));
}

std::vector<StageRun> tandem_simulate(const TandemSpec& spec, Rng& rng) {
    if (spec.stages.empty()) throw std::invalid_argument("tandem needs at least one stage");
    if (spec.n < 1) throw std::invalid_argument("tandem scaling index n must be positive");
    if (!(spec.window.lo < spec.window.hi)) throw std::invalid_argument("tandem window requires a < b");
    const std::size_t K = spec.stages.size();
    for (std::size_t k = 1; k < K; ++k)
        if (!(spec.stages[k].gain >= 0.0)) throw std::invalid_argument("tandem gains must be nonnegative");

    // Planned arrival-rate bounds, front to back, with a 10x safety factor per hop.
    constexpr double kSafety = 10.0;
    std::vector<double> rate(K);
    rate[0] = static_cast<double>(spec.n) * spec.source.max_rate();
    for (std::size_t k = 1; k < K; ++k)
        rate[k] = kSafety * spec.stages[k].gain * rate[k - 1] * spec.stages[k - 1].service.mean();

    // Certified windows, back to front: stage k must cover the arrival window of stage k+1.
    std::vector<Interval> certified(K);
    std::vector<Truncation> trunc(K);
    double a = spec.window.lo;
    for (std::size_t k = K; k-- > 0;) {
        try {
            trunc[k] = choose_truncation(spec.stages[k].service, 1, rate[k], a, spec.tol);
        } catch (const NumericalError& e) {
            throw NumericalError("tandem stage " + std::to_string(k) + ": " + e.what());
        }
        certified[k] = {a, spec.window.hi};
        a = std::min(trunc[k].u, a);
    }

    std::vector<StageRun> runs;
    runs.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        const Interval arrivals{std::min(trunc[k].u, certified[k].lo), spec.window.hi};
        const auto& F = spec.stages[k].service;
        MarkedPointSet pts;
        double realized_rate = 0.0;
        if (k == 0) {
            pts = sample_cox_marked(spec.source, spec.n, arrivals, F, rng);
            realized_rate = rate[0];
        } else {
            const auto& up = runs[k - 1].path;
            const auto model =
                IntensityModel::occupancy_driven(spec.stages[k].gain, up.scaled(1.0 / static_cast<double>(spec.n)));
            pts = sample_cox_marked(model, spec.n, arrivals, F, rng);
            realized_rate = spec.stages[k].gain * up.max_level();
        }
        pts.certified = certified[k];
        pts.leak_bound = trunc[k].leak_bound;
        auto path = occupancy_path(pts, certified[k]);
        StageRun run{std::move(pts), std::move(path), trunc[k], rate[k], realized_rate,
                     realized_rate * tail_mass_constant(F, trunc[k].ell)};
        runs.push_back(std::move(run));
    }
    return runs;
}

}  // namespace coxflux
