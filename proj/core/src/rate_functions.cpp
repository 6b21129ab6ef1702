#include "coxflux/rate_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "coxflux/queue_maps.hpp"

namespace coxflux {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassTol = 1e-9;

void require_probability(std::span<const double> p, const char* who) {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw std::invalid_argument(std::string(who) + ": negative probability");
        total += v;
    }
    if (std::abs(total - 1.0) > kMassTol) throw std::invalid_argument(std::string(who) + ": input is not normalized");
}

}  // namespace

bool RateValue::finite() const noexcept { return std::isfinite(value); }

RateValue i_poi(double x, double alpha) {
    if (!(x >= 0.0) || !(alpha >= 0.0)) throw std::domain_error("i_poi requires x >= 0 and alpha >= 0");
    if (alpha == 0.0) return {x == 0.0 ? 0.0 : kInf, std::nullopt};
    if (x == 0.0) return {alpha, std::nullopt};
    return {x * std::log(x / alpha) - x + alpha, std::nullopt};
}

RateValue relative_entropy(std::span<const double> beta, std::span<const double> alpha) {
    if (beta.size() != alpha.size()) throw std::invalid_argument("relative_entropy: support sizes differ");
    require_probability(beta, "relative_entropy(beta)");
    require_probability(alpha, "relative_entropy(alpha)");
    double acc = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) {
        if (beta[i] == 0.0) continue;
        if (alpha[i] == 0.0) return {kInf, std::nullopt};
        acc += beta[i] * (std::log(beta[i]) - std::log(alpha[i]));
    }
    return {std::max(0.0, acc), std::nullopt};
}

RateValue relative_entropy(const IntervalMeasure& beta, const IntervalMeasure& alpha) {
    if (!beta.same_grid(alpha)) throw std::invalid_argument("relative_entropy: measures live on different grids");
    return relative_entropy(beta.masses(), alpha.masses());
}

double dv_lower_bound(std::span<const double> beta, std::span<const double> alpha, std::span<const double> g) {
    if (beta.size() != alpha.size() || g.size() != beta.size())
        throw std::invalid_argument("dv_lower_bound: support sizes differ");
    require_probability(beta, "dv_lower_bound(beta)");
    require_probability(alpha, "dv_lower_bound(alpha)");
    double lin = 0.0;
    double gmax = -kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
        lin += beta[i] * g[i];
        if (alpha[i] > 0.0) gmax = std::max(gmax, g[i]);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (alpha[i] > 0.0) acc += alpha[i] * std::exp(g[i] - gmax);
    return lin - (gmax + std::log(acc));
}

RateValue conditional_rate_hx(const IntervalMeasure& mu, double x, const IntervalMeasure& lambda) {
    if (!(x > 0.0)) throw std::invalid_argument("conditional_rate_hx requires x > 0");
    const double lam_total = total_mass(lambda);
    if (!(lam_total > 0.0)) throw std::invalid_argument("conditional_rate_hx: lambda is the zero measure");
    if (!mu.same_grid(lambda)) throw std::invalid_argument("conditional_rate_hx: measures live on different grids");
    if (std::abs(total_mass(mu) - x) > kMassTol * std::max(1.0, x)) return {kInf, std::nullopt};
    const auto h = relative_entropy(normalize(mu), normalize(lambda));
    return {x * h.value, std::nullopt};
}

std::vector<IntensityCandidate> zero_cost_candidates(const IntensityModel& model) {
    if (model.kind() == IntensityModel::Kind::OccupancyDriven)
        throw std::invalid_argument("rate function available only via tandem composition");
    std::vector<IntensityCandidate> out;
    for (std::size_t i = 0; i < model.rates().size(); ++i)
        if (model.probs()[i] > 0.0) out.push_back({model.rates()[i], 0.0});
    return out;
}

RateValue cox_empirical_rate(const IntervalMeasure& mu, std::span<const IntensityCandidate> candidates) {
    if (candidates.empty()) throw std::invalid_argument("cox_empirical_rate: no intensity candidates");
    const double len = mu.hi() - mu.lo();
    const double mass = total_mass(mu);

    // Entropy of μ/μ(E) against normalized Lebesgue on the same bins; independent of the candidate.
    double entropy = 0.0;
    if (mass > 0.0) {
        std::vector<double> beta(mu.bins()), leb(mu.bins());
        for (std::size_t i = 0; i < mu.bins(); ++i) {
            beta[i] = mu.masses()[i] / mass;
            leb[i] = mu.bin_width(i) / len;
        }
        entropy = relative_entropy(beta, leb).value;
    }

    RateValue best{kInf, std::nullopt};
    for (const auto& c : candidates) {
        if (!(c.density >= 0.0) || !(c.cost >= 0.0)) throw std::invalid_argument("invalid intensity candidate");
        const double lam_total = c.density * len;
        double v = 0.0;
        if (mass == 0.0) {
            v = c.cost + lam_total;
        } else {
            const double poi = i_poi(mass, lam_total).value;
            v = c.cost + poi + mass * entropy;
        }
        if (!best.witness_theta || v < best.value) best = {v, c.density};
    }
    return best;
}

RateValue cox_empirical_rate(const IntervalMeasure& mu, const IntensityModel& model) {
    const auto cands = zero_cost_candidates(model);
    return cox_empirical_rate(mu, cands);
}

// ---------------------------------------------------------------------------
// Contraction rates

namespace {

enum class MapKind { Occupancy, Departure };

struct Discretisation {
    Grid2D grid;
    Eigen::VectorXd ref_unit;  // Leb ⊗ F mass per cell
    Eigen::MatrixXd kernel;    // constraints x cells, F-weighted cell averages
    double cut = 0.0;
};

// (1/Δs) ∫_{s0}^{s1} h(s, x) ds for the occupancy kernel. h is smooth between
// the kinks s = a − x, a, b − x, b; each piece gets composite 3-point
// Gauss–Legendre on `panels` subintervals.
double occupancy_s_average(double s0, double s1, double x, Interval w, const TestFunction& g, std::size_t panels) {
    static constexpr double kNode = 0.7745966692414834;  // sqrt(3/5)
    static constexpr double kW[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double cuts[6] = {s0, w.lo - x, w.lo, w.hi - x, w.hi, s1};
    std::sort(cuts + 1, cuts + 5);
    double acc = 0.0;
    double prev = s0;
    for (int i = 1; i < 6; ++i) {
        const double next = std::clamp(cuts[i], s0, s1);
        if (next <= prev) continue;
        // Skip pieces where the kernel vanishes identically.
        const double mid = 0.5 * (prev + next);
        if (mid + x > w.lo && mid < w.hi) {
            const double step = (next - prev) / static_cast<double>(panels);
            for (std::size_t p = 0; p < panels; ++p) {
                const double c = prev + step * (static_cast<double>(p) + 0.5);
                const double hw = 0.5 * step;
                for (int k = 0; k < 3; ++k) acc += hw * kW[k] * occupancy_kernel(c + (k - 1) * kNode * hw, x, w, g);
            }
        }
        prev = next;
    }
    return acc / (s1 - s0);
}

// Same average for the departure kernel, exact: the kernel depends on s + x only.
double departure_s_average(double s0, double s1, double x, Interval w, const TestFunction& g) {
    const double lo = std::max(w.lo, s0 + x);
    const double hi = std::min(w.hi, s1 + x);
    return hi > lo ? g.integral(lo, hi) / (s1 - s0) : 0.0;
}

Discretisation discretise(Interval w, const ServiceDistribution& F, const ContractionGrid& cfg,
                          const std::vector<TestFunction>& tests, MapKind kind) {
    if (cfg.ns == 0 || cfg.nx == 0 || cfg.sub_s == 0 || cfg.sub_x == 0)
        throw std::invalid_argument("contraction grid needs positive resolutions");
    double cut = cfg.service_cut;
    if (!(cut > 0.0)) cut = 1.25 * F.tail_point(1e-9);
    const Rect box{w.lo - cut, w.hi, 0.0, cut};
    Discretisation d{Grid2D::over(box, cfg.ns, cfg.nx), {}, {}, cut};
    const auto& g = d.grid;

    // F-weighted sub-bins along x: weight P(x0 < S <= x1) at the conditional mean.
    struct SubBin {
        double weight, x;
    };
    std::vector<std::vector<SubBin>> xbins(g.nx);
    std::vector<double> fmass(g.nx, 0.0);
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
        const Rect c = g.cell(0, ix);
        const double step = (c.x_hi - c.x_lo) / static_cast<double>(cfg.sub_x);
        for (std::size_t k = 0; k < cfg.sub_x; ++k) {
            const double x0 = c.x_lo + step * static_cast<double>(k);
            const double x1 = k + 1 == cfg.sub_x ? c.x_hi : x0 + step;
            const double s0 = F.ccdf(x0);
            const double s1 = F.ccdf(x1);
            const double wgt = s0 - s1;
            if (wgt <= 0.0) continue;
            const double first_moment = x0 * s0 - x1 * s1 + F.ccdf_integral(x0, x1);
            xbins[ix].push_back({wgt, std::clamp(first_moment / wgt, x0, x1)});
            fmass[ix] += wgt;
        }
    }

    const std::size_t J = g.cells();
    const std::size_t m = tests.size();
    d.ref_unit = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(J));
    d.kernel = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(J));
    for (std::size_t is = 0; is < g.ns; ++is) {
        const Rect row = g.cell(is, 0);
        for (std::size_t ix = 0; ix < g.nx; ++ix) {
            if (fmass[ix] <= 0.0) continue;
            const auto j = static_cast<Eigen::Index>(g.index(is, ix));
            d.ref_unit[j] = (row.s_hi - row.s_lo) * fmass[ix];
            for (std::size_t k = 0; k < m; ++k) {
                double acc = 0.0;
                for (const auto& sb : xbins[ix])
                    acc += sb.weight * (kind == MapKind::Occupancy
                                            ? occupancy_s_average(row.s_lo, row.s_hi, sb.x, w, tests[k], cfg.sub_s)
                                            : departure_s_average(row.s_lo, row.s_hi, sb.x, w, tests[k]));
                d.kernel(static_cast<Eigen::Index>(k), j) = acc / fmass[ix];
            }
        }
    }
    return d;
}

struct DualSolution {
    Eigen::VectorXd mu;
    double value = kInf;
    double residual = kInf;
    Eigen::VectorXd residuals;
    bool converged = false;
    std::size_t iterations = 0;
};

// Minimise Σ_j [μ_j log(μ_j/r_j) − μ_j + r_j] subject to K μ = t. The minimiser
// has the form μ_j = r_j exp((Kᵀη)_j); η maximises the concave dual
// η·t − Σ_j r_j (exp((Kᵀη)_j) − 1), solved by damped Newton.
DualSolution solve_dual(const Eigen::MatrixXd& K, const Eigen::VectorXd& r, const Eigen::VectorXd& t, double tol,
                        std::size_t max_iter) {
    const Eigen::Index m = K.rows();
    DualSolution out;
    if (m == 0) {
        // No constraints: the reference measure itself is optimal.
        out.mu = r;
        out.value = 0.0;
        out.residual = 0.0;
        out.residuals = Eigen::VectorXd::Zero(0);
        out.converged = true;
        return out;
    }
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(m);
    const double scale = std::max({t.cwiseAbs().maxCoeff(), (K * r).cwiseAbs().maxCoeff(), 1e-300});

    auto primal = [&](const Eigen::VectorXd& e, Eigen::VectorXd& mu) {
        const Eigen::VectorXd z = (K.transpose() * e).cwiseMin(700.0);
        mu = r.array() * z.array().exp();
        return z;
    };
    auto dual_value = [&](const Eigen::VectorXd& e) {
        Eigen::VectorXd mu;
        primal(e, mu);
        return e.dot(t) - (mu - r).sum();
    };

    Eigen::VectorXd mu;
    for (std::size_t it = 0; it <= max_iter; ++it) {
        primal(eta, mu);
        const Eigen::VectorXd grad = t - K * mu;
        out.iterations = it;
        if (grad.cwiseAbs().maxCoeff() <= tol * scale) {
            out.converged = true;
            break;
        }
        if (it == max_iter) break;
        Eigen::MatrixXd H = K * mu.asDiagonal() * K.transpose();
        const double ridge = 1e-12 * std::max(H.trace() / static_cast<double>(m), 1e-300);
        H.diagonal().array() += ridge;
        const Eigen::VectorXd dir = H.ldlt().solve(grad);
        const double slope = grad.dot(dir);
        const double d0 = dual_value(eta);
        double step = 1.0;
        bool moved = false;
        while (step > 1e-12) {
            const Eigen::VectorXd trial = eta + step * dir;
            if (dual_value(trial) >= d0 + 1e-4 * step * slope) {
                eta = trial;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }

    Eigen::VectorXd z = primal(eta, mu);
    out.mu = mu;
    out.residuals = K * mu - t;
    out.residual = m > 0 ? out.residuals.cwiseAbs().maxCoeff() : 0.0;
    double v = 0.0;
    for (Eigen::Index j = 0; j < r.size(); ++j) {
        if (r[j] <= 0.0) continue;
        const double e = std::exp(z[j]);
        v += r[j] * (z[j] * e - e + 1.0);
    }
    out.value = std::max(0.0, v);
    return out;
}

ContractionResult solve_contraction(const IntervalMeasure& nu, const IntensityModel& model,
                                    const ServiceDistribution& F, const ContractionGrid& cfg,
                                    const std::vector<TestFunction>& tests, MapKind kind) {
    const auto cands = zero_cost_candidates(model);
    const Interval w = nu.domain();
    const auto d = discretise(w, F, cfg, tests, kind);

    Eigen::VectorXd t(static_cast<Eigen::Index>(tests.size()));
    for (std::size_t k = 0; k < tests.size(); ++k)
        t[static_cast<Eigen::Index>(k)] = integrate(nu, [&](double s) { return tests[k](s); });

    ContractionResult best;
    best.rate = {kInf, std::nullopt};
    best.feasible = false;
    best.grid = cfg;
    best.service_cut = d.cut;
    best.constraints = tests.size();
    const auto region = kind == MapKind::Occupancy ? WedgeRegion::wedge(w.lo, w.hi)
                                                   : WedgeRegion::departure_set(w.lo, w.hi);
    std::ostringstream diag;

    for (const auto& c : cands) {
        const Eigen::VectorXd r = c.density * d.ref_unit;
        DualSolution sol;
        if (c.density == 0.0) {
            sol.mu = Eigen::VectorXd::Zero(r.size());
            sol.residuals = -t;
            sol.residual = tests.empty() ? 0.0 : t.cwiseAbs().maxCoeff();
            sol.converged = sol.residual == 0.0;
            sol.value = 0.0;
        } else {
            sol = solve_dual(d.kernel, r, t, cfg.tolerance, cfg.max_iterations);
        }
        if (!sol.converged) {
            diag << "density " << c.density << ": constraints not met (residual " << sol.residual << " after "
                 << sol.iterations << " Newton steps); ";
            if (!best.feasible && !best.witness) {
                best.residual = sol.residual;
                best.residuals.assign(sol.residuals.data(), sol.residuals.data() + sol.residuals.size());
                best.iterations = sol.iterations;
            }
            continue;
        }
        const double value = c.cost + sol.value;
        if (!best.feasible || value < best.rate.value) {
            best.rate = {value, c.density};
            best.feasible = true;
            best.residual = sol.residual;
            best.residuals.assign(sol.residuals.data(), sol.residuals.data() + sol.residuals.size());
            best.iterations = sol.iterations;
            best.witness = GridMeasure2D(region, d.grid, std::vector<double>(sol.mu.data(), sol.mu.data() + sol.mu.size()));
            best.reference_leak = c.density * ((w.hi - w.lo + d.cut) * F.ccdf(d.cut) +
                                               F.ccdf_integral(d.cut, std::numeric_limits<double>::infinity()));
        }
    }
    if (!best.feasible) best.diagnostic = "no feasible grid measure: " + diag.str();
    return best;
}

}  // namespace

ContractionResult queue_occupancy_rate(const IntervalMeasure& nu, const IntensityModel& model,
                                       const ServiceDistribution& F, const ContractionGrid& grid,
                                       const std::vector<TestFunction>& tests) {
    return solve_contraction(nu, model, F, grid, tests, MapKind::Occupancy);
}

ContractionResult departure_rate(const IntervalMeasure& nu, const IntensityModel& model, const ServiceDistribution& F,
                                 const ContractionGrid& grid, const std::vector<TestFunction>& tests) {
    return solve_contraction(nu, model, F, grid, tests, MapKind::Departure);
}

}  // namespace coxflux
