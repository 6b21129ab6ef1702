#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coxflux/measure.hpp"

namespace coxflux {

// Right-continuous piecewise-constant path on [a, b]: level[i] holds on
// [breakpoint[i], breakpoint[i+1]), the last one up to b. breakpoint[0] == a.
class OccupancyPath {
public:
    OccupancyPath(double a, double b, std::vector<double> breakpoints, std::vector<double> levels);
    static OccupancyPath constant(double a, double b, double level);

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    Interval window() const noexcept { return {a_, b_}; }
    std::span<const double> breakpoints() const noexcept { return breaks_; }
    std::span<const double> levels() const noexcept { return levels_; }
    std::size_t segments() const noexcept { return levels_.size(); }
    double segment_end(std::size_t i) const { return i + 1 < breaks_.size() ? breaks_[i + 1] : b_; }

    double level_at(double t) const;
    double max_level() const;
    double integral() const;
    OccupancyPath scaled(double factor) const;

    // Density = level; bin edges are the breakpoints.
    IntervalMeasure to_measure() const;

private:
    double a_, b_;
    std::vector<double> breaks_;
    std::vector<double> levels_;
};

}  // namespace coxflux
