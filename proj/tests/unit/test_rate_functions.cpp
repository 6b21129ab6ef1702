#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "coxflux/rate_functions.hpp"
#include "coxflux/rng.hpp"

using namespace coxflux;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> random_probability(Rng& rng, std::size_t k, bool allow_zero = false) {
    std::vector<double> p(k);
    double s = 0;
    for (auto& v : p) {
        v = (allow_zero && rng() % 4 == 0) ? 0.0 : rng.uniform_pos();
        s += v;
    }
    if (s == 0) {
        p[0] = 1.0;
        s = 1.0;
    }
    for (auto& v : p) v /= s;
    return p;
}

// Σ μ_i log(μ_i / λ_i) − μ(E) + λ(E), the Poisson-process rate of a binned μ
// against a binned intensity λ.
double poisson_process_rate(const IntervalMeasure& mu, double density) {
    double v = 0;
    for (std::size_t i = 0; i < mu.bins(); ++i) {
        const double m = mu.masses()[i], l = density * mu.bin_width(i);
        if (m > 0) v += m * std::log(m / l);
        v += l - m;
    }
    return v;
}

}  // namespace

TEST_CASE("i_poi") {
    CHECK(i_poi(1, 1).value == 0.0);
    CHECK(i_poi(2, 1).value == doctest::Approx(2 * std::log(2.0) - 1).epsilon(1e-14));
    CHECK(i_poi(0.5, 0).value == kInf);
    CHECK(i_poi(0, 0).value == 0.0);
    CHECK(i_poi(0, 3).value == doctest::Approx(3.0));
    CHECK_THROWS_AS(i_poi(-1, 1), std::domain_error);
    CHECK_THROWS_AS(i_poi(1, -1), std::domain_error);

    // Convex in x and zero only at α.
    for (double alpha : {0.3, 1.0, 4.0}) {
        for (double x = 0.05; x < 10; x += 0.05) {
            const double mid = i_poi(x, alpha).value;
            CHECK(mid >= 0.0);
            CHECK(2 * mid <= i_poi(x - 0.05, alpha).value + i_poi(x + 0.05, alpha).value + 1e-12);
            if (std::abs(x - alpha) > 1e-9) CHECK(mid > 0.0);
        }
    }
}

TEST_CASE("relative entropy") {
    const std::vector<double> b{0.5, 0.5}, a{0.25, 0.75};
    CHECK(relative_entropy(b, b).value == 0.0);
    CHECK(relative_entropy(b, a).value == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3)));
    CHECK(relative_entropy(b, a).value == doctest::Approx(0.143841).epsilon(1e-5));
    CHECK(relative_entropy(std::vector<double>{1, 0}, std::vector<double>{0, 1}).value == kInf);
    CHECK_THROWS_AS(relative_entropy(std::vector<double>{0.5, 0.6}, a), std::invalid_argument);

    Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        const std::size_t k = 2 + rng() % 8;
        const auto p = random_probability(rng, k, true), q = random_probability(rng, k);
        CHECK(relative_entropy(p, q).value >= 0.0);
        CHECK(relative_entropy(q, q).value <= 1e-12);
    }
}

TEST_CASE("donsker-varadhan lower bound") {
    const std::vector<double> b{0.5, 0.5}, a{0.25, 0.75};
    CHECK(dv_lower_bound(b, a, std::vector<double>{3.0, 3.0}) == doctest::Approx(0.0).epsilon(1e-15));
    const std::vector<double> ratio{std::log(2.0), std::log(2.0 / 3)};
    CHECK(dv_lower_bound(b, a, ratio) == doctest::Approx(relative_entropy(b, a).value).epsilon(1e-12));

    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t k = 2 + rng() % 6;
        const auto p = random_probability(rng, k), q = random_probability(rng, k);
        std::vector<double> g(k);
        for (auto& v : g) v = 6 * rng.uniform() - 3;
        CHECK(dv_lower_bound(p, q, g) <= relative_entropy(p, q).value + 1e-12);
    }
}

TEST_CASE("conditional rate H_x") {
    const auto lam = IntervalMeasure(uniform_edges(0, 1, 2), {0.5, 1.5});  // λ/λ(E) = (0.25, 0.75)
    CHECK(conditional_rate_hx(IntervalMeasure(uniform_edges(0, 1, 2), {0.5, 0.5}), 1.0, lam).value ==
          doctest::Approx(0.143841).epsilon(1e-5));
    CHECK(conditional_rate_hx(IntervalMeasure(uniform_edges(0, 1, 2), {0.5, 1.5}), 2.0, lam).value ==
          doctest::Approx(0.0).epsilon(1e-14));
    CHECK(conditional_rate_hx(IntervalMeasure(uniform_edges(0, 1, 2), {0.5, 0.6}), 1.0, lam).value == kInf);
    CHECK_THROWS_AS(conditional_rate_hx(lam, 1.0, IntervalMeasure::zero_on(uniform_edges(0, 1, 2))),
                    std::invalid_argument);
}

TEST_CASE("cox empirical rate") {
    const auto det = IntensityModel::deterministic(1.0);
    CHECK(cox_empirical_rate(IntervalMeasure::uniform(0, 1, 1.0), det).value == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(cox_empirical_rate(IntervalMeasure::zero(0, 1), det).value == doctest::Approx(1.0));

    const auto mix = IntensityModel::finite_mixture({1.0, 3.0}, {0.5, 0.5});
    const auto r = cox_empirical_rate(IntervalMeasure::uniform(0, 1, 5.0), mix);
    CHECK(r.value == doctest::Approx(5 * std::log(5.0 / 3) - 2).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(0.554).epsilon(1e-3));
    REQUIRE(r.witness_theta);
    CHECK(*r.witness_theta == 3.0);
    CHECK(cox_empirical_rate(IntervalMeasure::uniform(0, 1, 1.0), mix).value == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(cox_empirical_rate(IntervalMeasure::uniform(0, 1, 3.0), mix).value == doctest::Approx(0.0).epsilon(1e-14));

    // Deterministic model against the direct Poisson-process rate on random μ.
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const double density = 0.2 + 4 * rng.uniform();
        std::vector<double> m(16);
        for (auto& v : m) v = 3 * rng.uniform();
        const IntervalMeasure mu(uniform_edges(-1, 2, 16), m);
        const double direct = poisson_process_rate(mu, density);
        CHECK(cox_empirical_rate(mu, IntensityModel::deterministic(density)).value ==
              doctest::Approx(direct).epsilon(1e-12));
    }

    std::vector<IntensityCandidate> costly{{1.0, 0.5}, {2.0, 0.0}};
    const auto c = cox_empirical_rate(IntervalMeasure::uniform(0, 1, 1.0), costly);
    CHECK(c.value == doctest::Approx(std::min(0.5, i_poi(1, 2).value)));
    CHECK_THROWS_AS(zero_cost_candidates(IntensityModel::occupancy_driven(1.0, OccupancyPath::constant(0, 1, 1))),
                    std::invalid_argument);
}

TEST_CASE("contraction rates vanish at the law-of-large-numbers inputs") {
    const ContractionGrid grid;
    const auto tests = hat_family(0, 1, 8);
    for (const auto& F : {ServiceDistribution::exponential(1.0), ServiceDistribution::deterministic(0.5),
                          ServiceDistribution::hyperexponential({0.5, 0.5}, {2.0 / 3.0, 2.0})}) {
        for (const double lambda : {1.0, 2.5}) {
            const auto model = IntensityModel::deterministic(lambda);
            const auto occ = queue_occupancy_rate(IntervalMeasure::uniform(0, 1, lambda * F.mean(), 64), model, F,
                                                  grid, tests);
            CHECK(occ.feasible);
            CHECK(occ.rate.value <= grid.tolerance);
            CHECK(occ.residual <= grid.tolerance * lambda);
            REQUIRE(occ.witness);
            CHECK(total_mass(*occ.witness) > 0.0);

            const auto dep = departure_rate(IntervalMeasure::uniform(0, 1, lambda, 64), model, F, grid, tests);
            CHECK(dep.feasible);
            CHECK(dep.rate.value <= grid.tolerance);
            CHECK(dep.residual <= grid.tolerance * lambda);
        }
    }
    // Either mixture component is a zero.
    const auto mix = IntensityModel::finite_mixture({1.0, 3.0}, {0.5, 0.5});
    const auto F = ServiceDistribution::exponential(1.0);
    const auto r = queue_occupancy_rate(IntervalMeasure::uniform(0, 1, 3.0, 64), mix, F, grid, tests);
    CHECK(r.rate.value <= grid.tolerance);
    CHECK(*r.rate.witness_theta == 3.0);
}

TEST_CASE("contraction rates: empty occupancy and departures") {
    const ContractionGrid grid;
    const auto tests = hat_family(0, 1, 8);
    const double lambda = 1.0, d = 1.0;
    const auto F = ServiceDistribution::deterministic(d);
    const auto model = IntensityModel::deterministic(lambda);
    const auto occ = queue_occupancy_rate(IntervalMeasure::zero(0, 1, 64), model, F, grid, tests);
    REQUIRE(occ.feasible);
    // Emptying the wedge costs λ(b − a + d); the grid optimum matches within 5%.
    const double bound = i_poi(0, lambda * (1.0 + d)).value;
    CHECK(occ.rate.value <= 1.05 * bound);
    CHECK(occ.rate.value >= 0.95 * bound);

    const auto dep = departure_rate(IntervalMeasure::zero(0, 1, 64), model, F, grid, tests);
    REQUIRE(dep.feasible);
    CHECK(dep.rate.value <= occ.rate.value);
    CHECK(dep.rate.value == doctest::Approx(lambda * 1.0).epsilon(0.05));
}

TEST_CASE("contraction rates: infeasible and unconstrained calls") {
    const ContractionGrid grid;
    const auto F = ServiceDistribution::exponential(1.0);
    // A zero intensity cannot produce any occupancy.
    const auto none = queue_occupancy_rate(IntervalMeasure::uniform(0, 1, 1.0, 64), IntensityModel::deterministic(0.0),
                                           F, grid, hat_family(0, 1, 4));
    CHECK_FALSE(none.feasible);
    CHECK(none.rate.value == kInf);
    CHECK_FALSE(none.diagnostic.empty());

    const auto model = IntensityModel::deterministic(1.0);
    CHECK(queue_occupancy_rate(IntervalMeasure::uniform(0, 1, 5.0, 64), model, F, grid, {}).rate.value == 0.0);
    CHECK(departure_rate(IntervalMeasure::uniform(0, 1, 5.0, 64), model, F, grid, {}).rate.value == 0.0);
}

TEST_CASE("contraction rates grow with the constraint family") {
    const ContractionGrid grid;
    const auto F = ServiceDistribution::exponential(1.0);
    const auto model = IntensityModel::deterministic(1.0);
    const auto nu = IntervalMeasure::from_density(0, 1, [](double t) { return 1.5 + std::sin(6 * t); }, 64);
    const auto all = hat_family(0, 1, 8);
    double prev = -1;
    for (std::size_t k = 0; k <= all.size(); ++k) {
        const std::vector<TestFunction> sub(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
        const auto r = queue_occupancy_rate(nu, model, F, grid, sub);
        REQUIRE(r.feasible);
        CHECK(r.rate.value >= prev - 1e-9);
        prev = r.rate.value;
    }
    CHECK(prev > 0.0);
}
