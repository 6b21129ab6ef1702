#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coxflux/rng.hpp"

namespace coxflux {

// Service-time law F with finite mean. Immutable; sampling takes the caller's rng.
class ServiceDistribution {
public:
    enum class Family { Exponential, Deterministic, Hyperexponential, Erlang, Empirical };

    static ServiceDistribution exponential(double rate);
    static ServiceDistribution deterministic(double d);
    static ServiceDistribution hyperexponential(std::vector<double> weights, std::vector<double> rates);
    static ServiceDistribution erlang(int k, double rate);
    static ServiceDistribution empirical(std::vector<double> samples);

    Family family() const noexcept { return family_; }
    std::string name() const;

    // P(S > x). Throws std::domain_error for x < 0.
    double ccdf(double x) const;
    double cdf(double x) const { return 1.0 - ccdf(x); }
    double mean() const noexcept { return mean_; }
    double sample(Rng& rng) const;

    // ∫_lo^hi P(S > x) dx in closed form; hi may be +inf. Requires 0 <= lo <= hi.
    double ccdf_integral(double lo, double hi) const;

    // Points where the ccdf jumps (atoms of F).
    std::vector<double> atoms() const;

    // A point X with ∫_X^∞ P(S > x) dx <= eps.
    double tail_point(double eps) const;

    nlohmann::json to_json() const;
    // Throws std::invalid_argument with a message naming the offending field.
    static ServiceDistribution from_json(const nlohmann::json& j);

private:
    ServiceDistribution(Family f, std::vector<double> p, std::vector<double> q);
    // ccdf extended by 1 on the negative half-line.
    double survival(double x) const;

    Family family_;
    std::vector<double> p_;  // rates / d / weights / sorted samples depending on family
    std::vector<double> q_;  // hyperexponential rates
    int k_ = 1;
    double mean_ = 0.0;
};

// c_ell = ∫_{ell-1}^∞ P(S > x) dx (lower limit clamped at 0), by adaptive
// quadrature on the ccdf plus a closed-form far tail. Tolerance 1e-10.
double tail_mass_constant(const ServiceDistribution& F, double ell);

// Σ_{k=0}^{kmax} P(S > ell + k). Without kmax the truncation point is chosen so
// the remainder bound ∫_{ell+kmax}^∞ P(S > x) dx is below 1e-12. Throws
// NumericalError when an explicit kmax leaves a larger remainder.
double strip_tail_sum(const ServiceDistribution& F, double ell, std::optional<std::size_t> kmax = std::nullopt);

// Adaptive Simpson (trapezoid with Richardson correction) on [lo, hi].
template <class Fn>
double adaptive_trapezoid(Fn&& f, double lo, double hi, double tol, int max_depth = 48);

}  // namespace coxflux

#include "coxflux/detail/quadrature.hpp"
