#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "coxflux/measure.hpp"
#include "coxflux/rng.hpp"
#include "kr_oracle.hpp"
#include "suites.hpp"

using namespace coxflux;

namespace {

IntervalMeasure random_measure(std::mt19937_64& gen, std::size_t bins, double scale = 1.0) {
    std::uniform_real_distribution<double> u(0.0, scale);
    std::vector<double> m(bins);
    for (auto& v : m) v = u(gen);
    return IntervalMeasure(uniform_edges(0.0, 1.0, bins), m);
}

std::vector<double> difference(const IntervalMeasure& a, const IntervalMeasure& b) {
    std::vector<double> d(a.bins());
    for (std::size_t i = 0; i < a.bins(); ++i) d[i] = a.masses()[i] - b.masses()[i];
    return d;
}

}  // namespace

TEST_CASE("total mass") {
    CHECK(total_mass(IntervalMeasure::zero(0, 1)) == 0.0);
    CHECK(total_mass(IntervalMeasure::uniform(0, 1, 2.0)) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(total_mass(CountingMeasure({{0.3, 0, 2}, {0.7, 0, 1}})) == 3.0);
    CHECK(total_mass(CountingMeasure{}) == 0.0);
}

TEST_CASE("integration") {
    CountingMeasure atom({{0.5, 0, 1}});
    CHECK(integrate(atom, [](double x) { return x * x; }) == 0.25);

    const auto leb = IntervalMeasure::uniform(0, 1, 1.0, 1000);
    CHECK(std::abs(integrate(leb, [](double x) { return x; }) - 0.5) < 1e-6);

    std::mt19937_64 gen(3);
    const auto m = random_measure(gen, 17, 3.0);
    CHECK(integrate(m, [](double) { return 1.0; }) == doctest::Approx(total_mass(m)).epsilon(1e-14));

    SUBCASE("linear in f and in m") {
        const auto m2 = random_measure(gen, 17, 2.0);
        auto f = [](double x) { return std::sin(3 * x); };
        auto g = [](double x) { return x * x - 0.2; };
        const double lhs = integrate(m, [&](double x) { return 2.0 * f(x) - 3.0 * g(x); });
        CHECK(lhs == doctest::Approx(2.0 * integrate(m, f) - 3.0 * integrate(m, g)).epsilon(1e-12));
        CHECK(integrate(m + scale(m2, 4.0), f) ==
              doctest::Approx(integrate(m, f) + 4.0 * integrate(m2, f)).epsilon(1e-12));
    }
}

TEST_CASE("restriction") {
    const auto m = IntervalMeasure::uniform(0, 2, 1.0, 64);
    CHECK(total_mass(restrict(m, Interval{0, 1})) == doctest::Approx(1.0).epsilon(1e-12));
    // partially covered bins keep the covered fraction
    CHECK(total_mass(restrict(m, Interval{0.01, 0.99})) == doctest::Approx(0.98).epsilon(1e-12));

    CountingMeasure c({{1.0, 0, 1}, {1.5, 0, 2}});
    const auto rc = restrict(c, Interval{0, 1});
    REQUIRE(rc.atoms().size() == 1);
    CHECK(rc.atoms()[0].t == 1.0);

    CHECK(total_mass(restrict(m, Interval{3, 4})) == 0.0);
    CHECK(restrict(c, Interval{3, 4}).empty());
}

TEST_CASE("normalization") {
    IntervalMeasure m({0, 1, 2}, {2, 6});
    const auto p = normalize(m);
    CHECK(p.masses()[0] == doctest::Approx(0.25));
    CHECK(p.masses()[1] == doctest::Approx(0.75));
    CHECK(std::abs(total_mass(p) - 1.0) < 1e-12);

    const auto q = normalize(p);
    CHECK(q.masses()[0] == doctest::Approx(0.25).epsilon(1e-15));

    try {
        (void)normalize(IntervalMeasure::zero(0, 1, 4));
        FAIL("expected an exception");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()) == "cannot normalize zero measure");
    }
}

TEST_CASE("invalid measures are rejected") {
    CHECK_THROWS_AS(IntervalMeasure({0, 1}, {-1.0}), std::invalid_argument);
    CHECK_THROWS_AS(IntervalMeasure({0, 0, 1}, {1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(IntervalMeasure({0, 1, 2}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(CountingMeasure({{0.0, 0, 0}}), std::invalid_argument);
}

TEST_CASE("kr distance: closed-form cases") {
    const auto edges = uniform_edges(0, 1, 1000);
    CountingMeasure d0({{0.0, 0, 1}}), d3({{0.3, 0, 1}});
    CHECK(kr_distance(d0, d0, edges) == 0.0);
    CHECK(std::abs(kr_distance(d0, d3, edges) - 0.3) <= 1e-3);  // one bin of projection error
    CHECK(kr_distance(d0, CountingMeasure{}, edges) == doctest::Approx(1.0).epsilon(1e-12));

    // far apart atoms: capped by the sup-norm constraint at 2
    const auto wide = uniform_edges(0, 10, 1000);
    CHECK(kr_distance(CountingMeasure({{0.0, 0, 1}}), CountingMeasure({{9.0, 0, 1}}), wide) ==
          doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS(kr_distance(IntervalMeasure::zero(0, 1, 4), IntervalMeasure::zero(0, 1, 5)), std::invalid_argument);
}

TEST_CASE("kr distance matches the lattice LP oracle") {
    std::mt19937_64 gen(11);
    for (std::size_t bins : {2u, 4u, 8u, 16u}) {
        for (int rep = 0; rep < 40; ++rep) {
            const double scale_a = rep % 3 == 0 ? 5.0 : 0.5;
            const auto a = random_measure(gen, bins, scale_a);
            const auto b = random_measure(gen, bins, 0.5);
            const double spacing = 1.0 / static_cast<double>(bins);
            CHECK(kr_distance(a, b) == doctest::Approx(lattice_kr(difference(a, b), spacing)).epsilon(1e-10));
        }
    }
}

TEST_CASE("kr distance metric properties") {
    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 200; ++rep) {
        const auto a = random_measure(gen, 32), b = random_measure(gen, 32), c = random_measure(gen, 32);
        const double ab = kr_distance(a, b), ba = kr_distance(b, a);
        CHECK(ab >= 0.0);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(kr_distance(a, a) == 0.0);
        CHECK(ab <= kr_distance(a, c) + kr_distance(c, b) + 1e-12);
        CHECK(ab <= total_mass(a) + total_mass(b) + 1e-12);
    }
}

TEST_CASE("kr distance bounded by the cumulative difference for equal masses") {
    std::mt19937_64 gen(9);
    for (int rep = 0; rep < 100; ++rep) {
        auto a = random_measure(gen, 24), b = random_measure(gen, 24);
        b = scale(b, total_mass(a) / total_mass(b));
        const double dx = a.bin_mid(1) - a.bin_mid(0);
        double G = 0.0, bound = 0.0;
        for (std::size_t i = 0; i + 1 < a.bins(); ++i) {
            G += a.masses()[i] - b.masses()[i];
            bound += std::abs(G) * dx;
        }
        CHECK(kr_distance(a, b) <= bound + 1e-12);
    }
}

TEST_CASE("exponential equivalence: deleting k atoms moves the scaled measure by at most k/n") {
    Rng rng(21);
    const auto edges = uniform_edges(0, 1, 128);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 20 + rep;
        std::vector<Atom> atoms;
        for (int i = 0; i < n; ++i) atoms.push_back({rng.uniform(), 0, 1});
        const int k = 1 + static_cast<int>(rng() % 5);
        std::vector<Atom> kept(atoms.begin() + k, atoms.end());
        const double d =
            kr_distance(CountingMeasure(atoms), CountingMeasure(kept), edges, 1.0 / static_cast<double>(n));
        CHECK(d <= static_cast<double>(k) / n + 1e-12);
    }
}

TEST_CASE("grid measures") {
    const auto region = WedgeRegion::wedge(0, 1);
    const Grid2D grid = Grid2D::over(bounding_box(region, 2.0), 6, 4);
    std::vector<double> masses(grid.cells(), 1.0);
    GridMeasure2D m(region, grid, masses);
    CHECK(total_mass(m) == 24.0);
    CHECK(total_mass(normalize(m)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(integrate(m, [](double, double) { return 2.0; }) == 48.0);

    // restriction keeps the cells whose midpoint lies in the region
    const auto snap = WedgeRegion::snapshot(0.5);
    std::size_t inside = 0;
    for (std::size_t is = 0; is < grid.ns; ++is)
        for (std::size_t ix = 0; ix < grid.nx; ++ix)
            if (contains(snap, grid.midpoint(is, ix))) ++inside;
    CHECK(total_mass(restrict(m, snap)) == static_cast<double>(inside));
    CHECK_THROWS_AS(normalize(GridMeasure2D::zero(region, grid)), std::domain_error);
}

TEST_CASE("KR metric axioms on random instances") {
    const auto r = suites::kr_metric(17, 300);
    INFO(r.detail);
    CHECK(r.pass);
}
