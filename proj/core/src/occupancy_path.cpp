#include "coxflux/occupancy_path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coxflux {

OccupancyPath::OccupancyPath(double a, double b, std::vector<double> breakpoints, std::vector<double> levels)
    : a_(a), b_(b), breaks_(std::move(breakpoints)), levels_(std::move(levels)) {
    if (!(a_ < b_)) throw std::invalid_argument("occupancy path requires a < b");
    if (breaks_.empty() || breaks_.size() != levels_.size())
        throw std::invalid_argument("occupancy path needs one level per breakpoint");
    if (breaks_.front() != a_) throw std::invalid_argument("occupancy path must start at a");
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
        if (!(breaks_[i] < breaks_[i + 1])) throw std::invalid_argument("breakpoints must be strictly increasing");
    if (!(breaks_.back() < b_)) throw std::invalid_argument("breakpoints must lie in [a, b)");
    for (double l : levels_)
        if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("occupancy levels must be nonnegative");
}

OccupancyPath OccupancyPath::constant(double a, double b, double level) { return OccupancyPath(a, b, {a}, {level}); }

double OccupancyPath::level_at(double t) const {
    if (t < a_ || t > b_) throw std::out_of_range("level_at: t outside path window");
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
    return levels_[static_cast<std::size_t>(std::distance(breaks_.begin(), it)) - 1];
}

double OccupancyPath::max_level() const { return *std::max_element(levels_.begin(), levels_.end()); }

double OccupancyPath::integral() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < levels_.size(); ++i) acc += levels_[i] * (segment_end(i) - breaks_[i]);
    return acc;
}

OccupancyPath OccupancyPath::scaled(double factor) const {
    if (!(factor >= 0.0)) throw std::invalid_argument("scale factor must be nonnegative");
    std::vector<double> lv(levels_);
    for (auto& l : lv) l *= factor;
    return OccupancyPath(a_, b_, breaks_, std::move(lv));
}

IntervalMeasure OccupancyPath::to_measure() const {
    std::vector<double> edges(breaks_);
    edges.push_back(b_);
    std::vector<double> masses(levels_.size());
    for (std::size_t i = 0; i < levels_.size(); ++i) masses[i] = levels_[i] * (segment_end(i) - breaks_[i]);
    return IntervalMeasure(std::move(edges), std::move(masses));
}

}  // namespace coxflux
