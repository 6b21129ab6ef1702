#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

namespace coxflux {

// A customer: arrival time s and service requirement x.
struct SpaceTimePoint {
    double s = 0.0;
    double x = 0.0;
};

struct Rect {
    double s_lo = 0.0;
    double s_hi = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;

    bool contains(SpaceTimePoint p) const noexcept {
        return p.s >= s_lo && p.s <= s_hi && p.x >= x_lo && p.x <= x_hi;
    }
    bool operator==(const Rect&) const = default;
};

namespace region {
// Customers present at time t: s <= t < s + x.
struct Snapshot {
    double t;
};
// Customers present at some time in [a, b].
struct Wedge {
    double a, b;
};
// Wedge restricted to arrivals after the cutoff u.
struct TruncatedWedge {
    double u, a, b;
};
// Arrivals before 0 still present at ell: s <= 0, s + x >= ell.
struct TailTriangle {
    double ell;
};
// Arrivals in [0, z] with service at least h.
struct TailRectangle {
    double h, z;
};
// Customers departing during [a, b] (closed).
struct DepartureSet {
    double a, b;
};
}  // namespace region

// Parametric subsets of R x R+ used to express queue functionals as point
// counts. Occupancy regions use the strict inequality s + x > t so a customer
// is not counted at its departure instant; departure sets are closed.
class WedgeRegion {
public:
    using Variant = std::variant<region::Snapshot, region::Wedge, region::TruncatedWedge,
                                 region::TailTriangle, region::TailRectangle, region::DepartureSet>;

    static WedgeRegion snapshot(double t);
    static WedgeRegion wedge(double a, double b);
    static WedgeRegion truncated_wedge(double u, double a, double b);
    static WedgeRegion tail_triangle(double ell);
    static WedgeRegion tail_rectangle(double h, double z);
    static WedgeRegion departure_set(double a, double b);

    const Variant& variant() const noexcept { return v_; }
    std::string describe() const;

private:
    explicit WedgeRegion(Variant v) : v_(v) {}
    Variant v_;
};

// Departure-time comparisons absorb rounding in s + x, so a point whose
// decimal inputs sum exactly to t is treated as departing at t.
inline double departure_tolerance(double s, double x, double t) noexcept {
    return 1e-12 * std::max({1.0, std::abs(s), std::abs(x), std::abs(t)});
}
inline bool departs_after(double s, double x, double t) noexcept {
    return s + x > t + departure_tolerance(s, x, t);
}
inline bool departs_at_or_after(double s, double x, double t) noexcept {
    return s + x >= t - departure_tolerance(s, x, t);
}
inline bool departs_by(double s, double x, double t) noexcept {
    return s + x <= t + departure_tolerance(s, x, t);
}

bool contains(const WedgeRegion& region, SpaceTimePoint p);

// Membership in the topological closure (all inequalities non-strict).
bool closure_contains(const WedgeRegion& region, SpaceTimePoint p);

// Finite rectangle containing region ∩ {x <= service_tail_cut} ∩ {s >= anchor - cut},
// where the anchor is the earliest time the region looks at.
Rect bounding_box(const WedgeRegion& region, double service_tail_cut);

// True when inner ⊆ outer can be decided from parameters (same variant only).
// Throws std::invalid_argument for variant pairs it cannot compare.
bool is_subset(const WedgeRegion& inner, const WedgeRegion& outer);

}  // namespace coxflux
