#include <doctest.h>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "coxflux/decay.hpp"
#include "coxflux/errors.hpp"
#include "coxflux/oracles.hpp"

using namespace coxflux;
using boost::math::gamma_p;
using boost::math::gamma_q;

TEST_CASE("poisson tails: closed forms") {
    CHECK(exact_poisson_tail(1.0, 0, Tail::Upper) == 1.0);
    CHECK(exact_poisson_tail(1.0, 2, Tail::Upper) == doctest::Approx(1 - 2 / std::exp(1.0)).epsilon(1e-14));
    CHECK(exact_poisson_tail(1.0, 0, Tail::Lower) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(exact_poisson_tail(0.0, 1, Tail::Upper), std::invalid_argument);
}

TEST_CASE("poisson tails against the regularized incomplete gamma") {
    // P(N >= k) = P(k, m), P(N <= k) = Q(k + 1, m).
    for (double mean : {0.5, 3.0, 20.0, 150.0, 900.0})
        for (double ratio : {0.1, 0.5, 0.9, 1.1, 1.5, 2.0, 3.0}) {
            const auto k = static_cast<std::int64_t>(std::ceil(mean * ratio));
            if (k >= 1) {
                const double ref = gamma_p(static_cast<double>(k), mean);
                if (ref > 1e-300) {
                    CHECK(exact_poisson_tail(mean, k, Tail::Upper) == doctest::Approx(ref).epsilon(1e-11));
                    CHECK(log_poisson_tail(mean, k, Tail::Upper) == doctest::Approx(std::log(ref)).epsilon(1e-11));
                }
            }
            const double low = gamma_q(static_cast<double>(k + 1), mean);
            if (low > 1e-300) CHECK(exact_poisson_tail(mean, k, Tail::Lower) == doctest::Approx(low).epsilon(1e-11));
        }
    // Far tails stay finite in log space; the leading term log pmf(k) dominates.
    const double far = log_poisson_tail(100.0, 2000, Tail::Upper);
    const double lead = -100.0 + 2000 * std::log(100.0) - std::lgamma(2001.0);
    CHECK(std::isfinite(far));
    CHECK(far >= lead);
    CHECK(far <= lead + std::log(1.0 / (1.0 - 100.0 / 2001.0)) + 1e-9);
}

TEST_CASE("mixed poisson tails") {
    const std::vector<double> p{0.5, 0.5};
    for (int n : {1, 10, 50, 120}) {
        const std::vector<double> means{1.0 * n, 3.0 * n};
        const auto k = static_cast<std::int64_t>(5 * n);
        const double ref = 0.5 * gamma_p(static_cast<double>(k), 1.0 * n) + 0.5 * gamma_p(static_cast<double>(k), 3.0 * n);
        CHECK(std::exp(log_mixed_poisson_tail(p, means, k, Tail::Upper)) == doctest::Approx(ref).epsilon(1e-11));
    }
    const std::vector<double> bad{1.0};
    CHECK_THROWS_AS(log_mixed_poisson_tail(p, bad, 3, Tail::Upper), std::invalid_argument);
}

TEST_CASE("stationary M/G/inf marginal") {
    const auto pmf = exact_mg_infty_marginal(IntensityModel::deterministic(1.0), ServiceDistribution::exponential(1.0), 5);
    const boost::math::poisson_distribution<> poi(5.0);
    double mass = 0, mean = 0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        CHECK(pmf[k] == doctest::Approx(boost::math::pdf(poi, static_cast<double>(k))).epsilon(1e-12));
        mass += pmf[k];
        mean += static_cast<double>(k) * pmf[k];
    }
    CHECK(std::abs(mass - 1.0) < 1e-12);
    CHECK(std::abs(mean - 5.0) < 1e-12);
    // Insensitivity: only the mean service time enters.
    const auto det = exact_mg_infty_marginal(IntensityModel::deterministic(2.0), ServiceDistribution::deterministic(0.5), 5);
    REQUIRE(det.size() == pmf.size());
    for (std::size_t k = 0; k < pmf.size(); ++k) CHECK(det[k] == doctest::Approx(pmf[k]).epsilon(1e-13));
    CHECK_THROWS_AS(exact_mg_infty_marginal(IntensityModel::finite_mixture({1, 3}, {0.5, 0.5}),
                                            ServiceDistribution::exponential(1.0), 5),
                    std::invalid_argument);
}

TEST_CASE("sanov bins: single-bin events are binomial tails") {
    const std::vector<double> alpha{1.0 / 3, 1.0 / 3, 1.0 / 3};
    for (int n : {3, 30, 90, 300}) {
        for (double frac : {0.2, 0.5, 2.0 / 3, 0.9}) {
            const auto k = static_cast<int>(std::ceil(frac * n - 1e-9));
            const double ref = boost::math::ibeta(k, n - k + 1, 1.0 / 3);
            CHECK(exact_sanov_bins(alpha, {0, frac, false}, n) == doctest::Approx(ref).epsilon(1e-10));
        }
    }
    // Strict threshold at an attainable count excludes it.
    const double strict = exact_sanov_bins(alpha, {0, 0.5, true}, 30);
    CHECK(strict == doctest::Approx(boost::math::ibeta(16, 15, 1.0 / 3)).epsilon(1e-10));

    CHECK(exact_sanov_bins(alpha, {0, 0.0, false}, 100) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(exact_sanov_bins(alpha, {0, 1.0, true}, 100) == 0.0);
    CHECK(log_exact_sanov_bins(alpha, {0, 1.0, true}, 100) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("sanov bins: guards") {
    const std::vector<double> five(5, 0.2);
    CHECK_THROWS_AS(exact_sanov_bins(five, {0, 0.5, false}, 500), NumericalError);
    CHECK_NOTHROW(exact_sanov_bins(five, {0, 0.5, false}, 40));
    CHECK_THROWS_AS(exact_sanov_bins(std::vector<double>(6, 1.0 / 6), {0, 0.5, false}, 10), std::invalid_argument);
    CHECK_THROWS_AS(exact_sanov_bins(std::vector<double>{0.5, 0.6}, {0, 0.5, false}, 10), std::invalid_argument);
}

TEST_CASE("sanov bins: two-bin constraint on a non-uniform law") {
    // Event {N_1 >= n/2} under α = (0.2, 0.5, 0.3): N_1 ~ Binomial(n, 0.5).
    const std::vector<double> alpha{0.2, 0.5, 0.3};
    CHECK(exact_sanov_bins(alpha, {1, 0.5, false}, 41) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sanov_threshold_rate(alpha, {1, 0.5, false}) == 0.0);
    const double rate = sanov_threshold_rate(alpha, {0, 0.6, false});
    CHECK(rate == doctest::Approx(0.6 * std::log(0.6 / 0.2) + 0.4 * std::log(0.4 / 0.8)).epsilon(1e-14));
}

TEST_CASE("exact decay fits") {
    const auto poisson = exact_decay(parse_n_grid("20:200:20"), [](int n) {
        return log_poisson_tail(static_cast<double>(n), 2 * n, Tail::Upper);
    });
    CHECK(std::abs(poisson.fitted_rate - (2 * std::log(2.0) - 1)) < 0.01);

    const std::vector<double> alpha{1.0 / 3, 1.0 / 3, 1.0 / 3};
    const auto sanov = exact_decay(parse_n_grid("60:300:30"), [&](int n) {
        return log_exact_sanov_bins(alpha, {0, 2.0 / 3, false}, n);
    });
    const double target = std::log(2.0) / 3;
    CHECK(sanov_threshold_rate(alpha, {0, 2.0 / 3, false}) == doctest::Approx(target).epsilon(1e-14));
    CHECK(std::abs(sanov.fitted_rate / target - 1) < 0.05);
}
