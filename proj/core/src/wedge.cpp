#include "coxflux/wedge.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace coxflux {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

WedgeRegion WedgeRegion::snapshot(double t) {
    require_finite(t, "snapshot time");
    return WedgeRegion(region::Snapshot{t});
}

WedgeRegion WedgeRegion::wedge(double a, double b) {
    require_finite(a, "a");
    require_finite(b, "b");
    if (!(a < b)) throw std::invalid_argument("wedge requires a < b");
    return WedgeRegion(region::Wedge{a, b});
}

WedgeRegion WedgeRegion::truncated_wedge(double u, double a, double b) {
    require_finite(u, "u");
    require_finite(a, "a");
    require_finite(b, "b");
    if (!(u <= a && a < b)) throw std::invalid_argument("truncated wedge requires u <= a < b");
    return WedgeRegion(region::TruncatedWedge{u, a, b});
}

WedgeRegion WedgeRegion::tail_triangle(double ell) {
    require_finite(ell, "ell");
    if (!(ell > 0)) throw std::invalid_argument("tail triangle requires ell > 0");
    return WedgeRegion(region::TailTriangle{ell});
}

WedgeRegion WedgeRegion::tail_rectangle(double h, double z) {
    require_finite(h, "h");
    require_finite(z, "z");
    if (!(h > 0 && z > 0)) throw std::invalid_argument("tail rectangle requires h > 0 and z > 0");
    return WedgeRegion(region::TailRectangle{h, z});
}

WedgeRegion WedgeRegion::departure_set(double a, double b) {
    require_finite(a, "a");
    require_finite(b, "b");
    if (!(a < b)) throw std::invalid_argument("departure set requires a < b");
    return WedgeRegion(region::DepartureSet{a, b});
}

std::string WedgeRegion::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](region::Snapshot r) { os << "snapshot(" << r.t << ")"; },
                   [&](region::Wedge r) { os << "wedge(" << r.a << "," << r.b << ")"; },
                   [&](region::TruncatedWedge r) {
                       os << "truncated_wedge(" << r.u << "," << r.a << "," << r.b << ")";
                   },
                   [&](region::TailTriangle r) { os << "tail_triangle(" << r.ell << ")"; },
                   [&](region::TailRectangle r) { os << "tail_rectangle(" << r.h << "," << r.z << ")"; },
                   [&](region::DepartureSet r) { os << "departure_set(" << r.a << "," << r.b << ")"; },
               },
               v_);
    return os.str();
}

bool contains(const WedgeRegion& region, SpaceTimePoint p) {
    const auto after = [&](double t) { return departs_after(p.s, p.x, t); };
    const auto from = [&](double t) { return departs_at_or_after(p.s, p.x, t); };
    return std::visit(overloaded{
                          [&](region::Snapshot r) { return p.s <= r.t && after(r.t); },
                          [&](region::Wedge r) { return p.s <= r.b && after(r.a); },
                          [&](region::TruncatedWedge r) { return p.s >= r.u && p.s <= r.b && after(r.a); },
                          [&](region::TailTriangle r) { return p.s <= 0.0 && from(r.ell); },
                          [&](region::TailRectangle r) { return p.s >= 0.0 && p.s <= r.z && p.x >= r.h; },
                          [&](region::DepartureSet r) {
                              return p.s <= r.b && from(r.a) && departs_by(p.s, p.x, r.b);
                          },
                      },
                      region.variant());
}

bool closure_contains(const WedgeRegion& region, SpaceTimePoint p) {
    const auto from = [&](double t) { return departs_at_or_after(p.s, p.x, t); };
    return std::visit(overloaded{
                          [&](region::Snapshot r) { return p.s <= r.t && from(r.t); },
                          [&](region::Wedge r) { return p.s <= r.b && from(r.a); },
                          [&](region::TruncatedWedge r) { return p.s >= r.u && p.s <= r.b && from(r.a); },
                          [&](auto) { return contains(region, p); },  // already closed
                      },
                      region.variant());
}

Rect bounding_box(const WedgeRegion& region, double cut) {
    if (!(cut > 0)) throw std::invalid_argument("service_tail_cut must be positive");
    return std::visit(overloaded{
                          [&](region::Snapshot r) { return Rect{r.t - cut, r.t, 0.0, cut}; },
                          [&](region::Wedge r) { return Rect{r.a - cut, r.b, 0.0, cut}; },
                          [&](region::TruncatedWedge r) { return Rect{r.u, r.b, 0.0, cut}; },
                          [&](region::TailTriangle r) {
                              return Rect{std::min(0.0, r.ell - cut), 0.0, r.ell, std::max(r.ell, cut)};
                          },
                          [&](region::TailRectangle r) { return Rect{0.0, r.z, r.h, std::max(r.h, cut)}; },
                          [&](region::DepartureSet r) { return Rect{r.a - cut, r.b, 0.0, cut}; },
                      },
                      region.variant());
}

bool is_subset(const WedgeRegion& inner, const WedgeRegion& outer) {
    const auto& i = inner.variant();
    const auto& o = outer.variant();
    if (i.index() != o.index())
        throw std::invalid_argument("cannot compare " + inner.describe() + " with " + outer.describe());
    return std::visit(overloaded{
                          [&](region::Snapshot r) { return r.t == std::get<region::Snapshot>(o).t; },
                          [&](region::Wedge r) {
                              const auto& w = std::get<region::Wedge>(o);
                              return w.a <= r.a && r.b <= w.b;
                          },
                          [&](region::TruncatedWedge r) {
                              const auto& w = std::get<region::TruncatedWedge>(o);
                              return w.u <= r.u && w.a <= r.a && r.b <= w.b;
                          },
                          [&](region::TailTriangle r) { return r.ell >= std::get<region::TailTriangle>(o).ell; },
                          [&](region::TailRectangle r) {
                              const auto& w = std::get<region::TailRectangle>(o);
                              return r.h >= w.h && r.z <= w.z;
                          },
                          [&](region::DepartureSet r) {
                              const auto& w = std::get<region::DepartureSet>(o);
                              return w.a <= r.a && r.b <= w.b;
                          },
                      },
                      i);
}

}  // namespace coxflux
