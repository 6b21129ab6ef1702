#pragma once

#include <functional>
#include <string>
#include <vector>

namespace coxflux {

// Bounded continuous g on the line together with an exact ∫_lo^hi g(t) dt.
// Pairings against the occupancy map only ever need these two operations.
class TestFunction {
public:
    using Value = std::function<double(double)>;
    using Integral = std::function<double(double, double)>;

    TestFunction(Value value, Integral integral, std::string label = {});

    static TestFunction constant(double c);
    // Σ coeffs[k] t^k
    static TestFunction polynomial(std::vector<double> coeffs);
    // Linear interpolation through (knots, values), constant beyond the ends.
    static TestFunction piecewise_linear(std::vector<double> knots, std::vector<double> values);
    // Tent of height 1 centred at c with half-width w.
    static TestFunction hat(double c, double w);

    double operator()(double t) const { return value_(t); }
    double integral(double lo, double hi) const { return hi > lo ? integral_(lo, hi) : 0.0; }
    const std::string& label() const noexcept { return label_; }

private:
    Value value_;
    Integral integral_;
    std::string label_;
};

// m + 1 tents on a uniform partition of [a, b]; they sum to 1 on [a, b].
std::vector<TestFunction> hat_family(double a, double b, int m);

}  // namespace coxflux
