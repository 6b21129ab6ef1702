#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "coxflux/errors.hpp"
#include "coxflux/rng.hpp"
#include "coxflux/service.hpp"
#include "suites.hpp"

using namespace coxflux;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::vector<ServiceDistribution> families() {
    return {ServiceDistribution::exponential(1.0), ServiceDistribution::exponential(2.5),
            ServiceDistribution::deterministic(1.0), ServiceDistribution::deterministic(0.3),
            ServiceDistribution::hyperexponential({0.5, 0.5}, {0.5, 2.0}),
            ServiceDistribution::hyperexponential({0.2, 0.3, 0.5}, {0.1, 1.0, 5.0}),
            ServiceDistribution::erlang(3, 2.0), ServiceDistribution::empirical({0.2, 0.5, 0.5, 1.7, 3.1})};
}

// Independent quadrature of ∫_lo^∞ ccdf, split at the atoms.
double oracle_tail_integral(const ServiceDistribution& F, double lo) {
    auto f = [&](double x) { return F.ccdf(x); };
    std::vector<double> cuts{lo};
    for (double a : F.atoms())
        if (a > lo) cuts.push_back(a);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        acc += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-13);
    if (F.family() == ServiceDistribution::Family::Deterministic ||
        F.family() == ServiceDistribution::Family::Empirical)
        return acc;
    boost::math::quadrature::exp_sinh<double> tail;
    return acc + tail.integrate([&](double t) { return f(cuts.back() + t); }, 1e-13);
}

}  // namespace

TEST_CASE("ccdf values") {
    CHECK(ServiceDistribution::exponential(1).ccdf(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    const auto d = ServiceDistribution::deterministic(1);
    CHECK(d.ccdf(0.5) == 1.0);
    CHECK(d.ccdf(1.0) == 0.0);
    for (const auto& F : families()) CHECK(F.ccdf(0.0) == 1.0);
    CHECK_THROWS_AS(d.ccdf(-0.1), std::domain_error);

    const auto er = ServiceDistribution::erlang(3, 2.0);
    for (double x : {0.1, 0.7, 1.5, 4.0}) CHECK(er.ccdf(x) == doctest::Approx(boost::math::gamma_q(3.0, 2.0 * x)));
    const auto h = ServiceDistribution::hyperexponential({0.2, 0.8}, {1.0, 3.0});
    CHECK(h.ccdf(0.4) == doctest::Approx(0.2 * std::exp(-0.4) + 0.8 * std::exp(-1.2)));
}

TEST_CASE("ccdf is nonincreasing") {
    Rng rng(1);
    for (const auto& F : families())
        for (int i = 0; i < 500; ++i) {
            double x = 5 * rng.uniform(), y = 5 * rng.uniform();
            if (x > y) std::swap(x, y);
            CHECK(F.ccdf(x) >= F.ccdf(y));
        }
}

TEST_CASE("means") {
    CHECK(ServiceDistribution::exponential(2).mean() == 0.5);
    CHECK(ServiceDistribution::hyperexponential({0.5, 0.5}, {0.5, 2.0}).mean() == doctest::Approx(1.25));
    CHECK(ServiceDistribution::deterministic(3).mean() == 3.0);
    CHECK(ServiceDistribution::erlang(3, 2.0).mean() == doctest::Approx(1.5));
    CHECK(ServiceDistribution::empirical({1.0, 2.0, 6.0}).mean() == doctest::Approx(3.0));
    for (const auto& F : families()) {
        CHECK(std::abs(oracle_tail_integral(F, 0.0) - F.mean()) < 1e-8);
        CHECK(std::abs(tail_mass_constant(F, 1.0) - F.mean()) < 1e-8);
    }
}

TEST_CASE("invalid parameters") {
    CHECK_THROWS_AS(ServiceDistribution::exponential(0), std::invalid_argument);
    CHECK_THROWS_AS(ServiceDistribution::deterministic(-1), std::invalid_argument);
    CHECK_THROWS_AS(ServiceDistribution::hyperexponential({0.5, 0.6}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(ServiceDistribution::erlang(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(ServiceDistribution::empirical({}), std::invalid_argument);
}

TEST_CASE("sampling") {
    SUBCASE("deterministic draws are constant") {
        Rng rng(2);
        const auto d = ServiceDistribution::deterministic(1.0);
        for (int i = 0; i < 100; ++i) CHECK(d.sample(rng) == 1.0);
    }
    SUBCASE("same seed, same sequence") {
        const auto e = ServiceDistribution::exponential(1.0);
        Rng a(42, 7), b(42, 7);
        for (int i = 0; i < 1000; ++i) CHECK(e.sample(a) == e.sample(b));
    }
    SUBCASE("sample means within 3 SE over 1e6 draws") {
        for (const auto& F : families()) {
            Rng rng(99);
            const int N = 1'000'000;
            double s = 0, s2 = 0;
            for (int i = 0; i < N; ++i) {
                const double x = F.sample(rng);
                s += x;
                s2 += x * x;
            }
            const double m = s / N;
            const double se = std::sqrt(std::max(0.0, s2 / N - m * m) / N);
            CHECK(std::abs(m - F.mean()) <= 3 * se + 1e-12);
        }
    }
    SUBCASE("Kolmogorov-Smirnov for continuous families") {
        const double crit = 1.628 / std::sqrt(1e5);  // 1% critical value
        for (const auto& F : families()) {
            if (!F.atoms().empty()) continue;
            Rng rng(17);
            std::vector<double> xs(100000);
            for (auto& x : xs) x = F.sample(rng);
            std::sort(xs.begin(), xs.end());
            double D = 0.0;
            const double N = static_cast<double>(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double c = F.cdf(xs[i]);
                D = std::max({D, std::abs(c - i / N), std::abs((i + 1) / N - c)});
            }
            CHECK(D < crit);
        }
    }
}

TEST_CASE("tail mass constant") {
    const auto e = ServiceDistribution::exponential(1.0);
    CHECK(tail_mass_constant(e, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
    CHECK(tail_mass_constant(ServiceDistribution::deterministic(1), 2.5) == 0.0);
    // lower limit clamped at 0
    CHECK(tail_mass_constant(e, 0.3) == doctest::Approx(1.0).epsilon(1e-10));
    for (const auto& F : families()) {
        double prev = kInf;
        for (double ell = 1.0; ell <= 12.0; ell += 0.5) {
            const double c = tail_mass_constant(F, ell);
            CHECK(std::abs(c - oracle_tail_integral(F, ell - 1.0)) < 1e-9);
            CHECK(c <= prev + 1e-15);
            prev = c;
        }
    }
    CHECK(tail_mass_constant(e, 60.0) < 1e-20);
}

TEST_CASE("strip tail sum") {
    const auto e = ServiceDistribution::exponential(1.0);
    const double expected = std::exp(-2.0) / (1.0 - std::exp(-1.0));
    CHECK(strip_tail_sum(e, 2.0) == doctest::Approx(expected).epsilon(1e-11));
    CHECK(strip_tail_sum(ServiceDistribution::deterministic(1), 2.0) == 0.0);
    CHECK(strip_tail_sum(e, 80.0) < 1e-30);
    CHECK_THROWS_AS(strip_tail_sum(e, 2.0, std::size_t{3}), NumericalError);

    for (const auto& F : families())
        for (double ell = 1.0; ell <= 10.0; ell += 0.25) CHECK(strip_tail_sum(F, ell) <= tail_mass_constant(F, ell) + 1e-12);
}

TEST_CASE("json round trip") {
    for (const auto& F : families()) {
        const auto G = ServiceDistribution::from_json(F.to_json());
        CHECK(G.name() == F.name());
        CHECK(G.mean() == F.mean());
    }
    CHECK_THROWS_AS(ServiceDistribution::from_json({{"family", "pareto"}}), std::invalid_argument);
    const auto h = ServiceDistribution::from_json(
        nlohmann::json::parse(R"({"family":"hyperexponential","weights":[0.5,0.5],"rates":[0.5,2]})"));
    CHECK(h.mean() == doctest::Approx(1.25));
}

TEST_CASE("strip sums stay below the tail-mass constant") {
    const auto r = suites::strip_sum_bound();
    INFO(r.detail);
    CHECK(r.pass);
}
