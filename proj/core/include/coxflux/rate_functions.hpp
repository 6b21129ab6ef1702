#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coxflux/intensity.hpp"
#include "coxflux/measure.hpp"
#include "coxflux/service.hpp"
#include "coxflux/test_functions.hpp"

namespace coxflux {

// Nonnegative rate value, possibly +inf, with an optional witness density θ*.
struct RateValue {
    double value = 0.0;
    std::optional<double> witness_theta;

    bool finite() const noexcept;
};

// x log(x/α) − x + α with the α = 0 cases; 0·log 0 = 0.
// Throws std::domain_error for negative arguments.
RateValue i_poi(double x, double alpha);

// Σ β_i log(β_i/α_i); +inf when β is not absolutely continuous w.r.t. α.
// Throws std::invalid_argument unless both sum to 1 within 1e-9.
RateValue relative_entropy(std::span<const double> beta, std::span<const double> alpha);
RateValue relative_entropy(const IntervalMeasure& beta, const IntervalMeasure& alpha);

// ∫ g dβ − log ∫ e^g dα, a lower bound on relative_entropy(β, α).
double dv_lower_bound(std::span<const double> beta, std::span<const double> alpha, std::span<const double> g);

// x · H(μ/x | λ/λ(E)) when μ(E) = x (within 1e-9), +inf otherwise.
// Throws std::invalid_argument when λ is zero or the grids differ.
RateValue conditional_rate_hx(const IntervalMeasure& mu, double x, const IntervalMeasure& lambda);

// A candidate directing density (λ = density · Lebesgue) and its intensity
// rate-function cost. This is the plug-in point for general intensity rates;
// the analytic models contribute zero-cost candidates only.
struct IntensityCandidate {
    double density = 0.0;
    double cost = 0.0;
};

// Zero-cost support of an analytic model. Throws std::invalid_argument for
// occupancy-driven models.
std::vector<IntensityCandidate> zero_cost_candidates(const IntensityModel& model);

// inf_λ { I1(λ) + I_Poi(μ(E), λ(E)) + μ(E) H(μ/μ(E) | λ/λ(E)) }, or
// inf_λ { I1(λ) + λ(E) } when μ ≡ 0, over the given candidates on E = μ's domain.
RateValue cox_empirical_rate(const IntervalMeasure& mu, std::span<const IntensityCandidate> candidates);
RateValue cox_empirical_rate(const IntervalMeasure& mu, const IntensityModel& model);

// Discretisation for the contraction rates.
struct ContractionGrid {
    std::size_t ns = 256;          // arrival-time cells over [a - cut, b]
    std::size_t nx = 64;           // service cells over [0, cut]
    double service_cut = 0.0;      // 0: chosen from the tail of F at 1e-9
    std::size_t sub_s = 8;         // Gauss–Legendre panels per smooth piece of a cell along s
    std::size_t sub_x = 8;         // F-weighted sub-bins per cell along x
    double tolerance = 1e-6;       // relative constraint residual accepted as feasible
    std::size_t max_iterations = 400;
};

struct ContractionResult {
    RateValue rate;                     // upper bound on the contraction infimum
    std::optional<GridMeasure2D> witness;  // μ* = θ*·(Leb ⊗ F) tilted to satisfy the constraints
    double residual = 0.0;              // max_k |∫ h_k dμ* − ∫ g_k dν|
    std::vector<double> residuals;
    bool feasible = true;
    std::size_t iterations = 0;
    std::string diagnostic;
    // grid metadata
    ContractionGrid grid;
    double service_cut = 0.0;
    double reference_leak = 0.0;  // reference mass of the region outside the grid box
    std::size_t constraints = 0;
};

// Upper bound on the occupancy-measure rate J_{[a,b]}(ν): minimise the
// Poisson-process rate of a grid measure μ subject to
// ∫ h_g dμ = ∫ g dν for every g in tests, h_g the occupancy kernel.
ContractionResult queue_occupancy_rate(const IntervalMeasure& nu, const IntensityModel& model,
                                       const ServiceDistribution& F, const ContractionGrid& grid,
                                       const std::vector<TestFunction>& tests);

// Same machinery with the departure kernel h_g(s,x) = g(s+x) on the departure set.
ContractionResult departure_rate(const IntervalMeasure& nu, const IntensityModel& model, const ServiceDistribution& F,
                                 const ContractionGrid& grid, const std::vector<TestFunction>& tests);

}  // namespace coxflux
