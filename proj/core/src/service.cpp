#include "coxflux/service.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "coxflux/errors.hpp"

namespace coxflux {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(what + " must be a positive finite number");
}

// e^{-y} Σ_{i<m} y^i / i!  (regularized upper incomplete gamma at integer m)
double poisson_upper(int m, double y) {
    double term = std::exp(-y);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        acc += term;
        term *= y / static_cast<double>(i + 1);
    }
    return acc;
}

double exp_or_zero(double rate, double x) { return std::isinf(x) ? 0.0 : std::exp(-rate * x); }

}  // namespace

ServiceDistribution::ServiceDistribution(Family f, std::vector<double> p, std::vector<double> q)
    : family_(f), p_(std::move(p)), q_(std::move(q)) {}

ServiceDistribution ServiceDistribution::exponential(double rate) {
    require_positive(rate, "exponential rate");
    ServiceDistribution d(Family::Exponential, {rate}, {});
    d.mean_ = 1.0 / rate;
    return d;
}

ServiceDistribution ServiceDistribution::deterministic(double value) {
    require_positive(value, "deterministic service time");
    ServiceDistribution d(Family::Deterministic, {value}, {});
    d.mean_ = value;
    return d;
}

ServiceDistribution ServiceDistribution::hyperexponential(std::vector<double> weights, std::vector<double> rates) {
    if (weights.empty() || weights.size() != rates.size())
        throw std::invalid_argument("hyperexponential needs matching, nonempty weights and rates");
    double wsum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        require_positive(weights[i], "hyperexponential weight");
        require_positive(rates[i], "hyperexponential rate");
        wsum += weights[i];
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw std::invalid_argument("hyperexponential weights must sum to 1");
    ServiceDistribution d(Family::Hyperexponential, std::move(weights), std::move(rates));
    d.mean_ = 0.0;
    for (std::size_t i = 0; i < d.p_.size(); ++i) d.mean_ += d.p_[i] / d.q_[i];
    return d;
}

ServiceDistribution ServiceDistribution::erlang(int k, double rate) {
    if (k < 1) throw std::invalid_argument("erlang shape must be a positive integer");
    require_positive(rate, "erlang rate");
    ServiceDistribution d(Family::Erlang, {rate}, {});
    d.k_ = k;
    d.mean_ = static_cast<double>(k) / rate;
    return d;
}

ServiceDistribution ServiceDistribution::empirical(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("empirical distribution needs at least one sample");
    for (double s : samples) require_positive(s, "empirical sample");
    std::sort(samples.begin(), samples.end());
    const double m = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    ServiceDistribution d(Family::Empirical, std::move(samples), {});
    d.mean_ = m;
    return d;
}

std::string ServiceDistribution::name() const {
    std::ostringstream os;
    switch (family_) {
        case Family::Exponential: os << "exponential(" << p_[0] << ")"; break;
        case Family::Deterministic: os << "deterministic(" << p_[0] << ")"; break;
        case Family::Hyperexponential: os << "hyperexponential(" << p_.size() << " phases)"; break;
        case Family::Erlang: os << "erlang(" << k_ << "," << p_[0] << ")"; break;
        case Family::Empirical: os << "empirical(" << p_.size() << " samples)"; break;
    }
    return os.str();
}

double ServiceDistribution::survival(double x) const {
    if (x < 0.0) return 1.0;
    switch (family_) {
        case Family::Exponential: return std::exp(-p_[0] * x);
        case Family::Deterministic: return x < p_[0] ? 1.0 : 0.0;
        case Family::Hyperexponential: {
            double acc = 0.0;
            for (std::size_t i = 0; i < p_.size(); ++i) acc += p_[i] * std::exp(-q_[i] * x);
            return acc;
        }
        case Family::Erlang: return poisson_upper(k_, p_[0] * x);
        case Family::Empirical: {
            const auto above = p_.end() - std::upper_bound(p_.begin(), p_.end(), x);
            return static_cast<double>(above) / static_cast<double>(p_.size());
        }
    }
    return 0.0;
}

double ServiceDistribution::ccdf(double x) const {
    if (!(x >= 0.0)) throw std::domain_error("ccdf requires x >= 0");
    return survival(x);
}

double ServiceDistribution::sample(Rng& rng) const {
    switch (family_) {
        case Family::Exponential: return -std::log(rng.uniform_pos()) / p_[0];
        case Family::Deterministic: return p_[0];
        case Family::Hyperexponential: {
            const double u = rng.uniform();
            double acc = 0.0;
            std::size_t i = 0;
            for (; i + 1 < p_.size(); ++i) {
                acc += p_[i];
                if (u < acc) break;
            }
            return -std::log(rng.uniform_pos()) / q_[i];
        }
        case Family::Erlang: {
            double acc = 0.0;
            for (int i = 0; i < k_; ++i) acc -= std::log(rng.uniform_pos());
            return acc / p_[0];
        }
        case Family::Empirical: {
            const auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(p_.size()));
            return p_[std::min(idx, p_.size() - 1)];
        }
    }
    return 0.0;
}

double ServiceDistribution::ccdf_integral(double lo, double hi) const {
    if (!(lo >= 0.0) || !(hi >= lo)) throw std::domain_error("ccdf_integral requires 0 <= lo <= hi");
    switch (family_) {
        case Family::Exponential: return (exp_or_zero(p_[0], lo) - exp_or_zero(p_[0], hi)) / p_[0];
        case Family::Deterministic: return std::max(0.0, std::min(hi, p_[0]) - lo);
        case Family::Hyperexponential: {
            double acc = 0.0;
            for (std::size_t i = 0; i < p_.size(); ++i)
                acc += p_[i] * (exp_or_zero(q_[i], lo) - exp_or_zero(q_[i], hi)) / q_[i];
            return acc;
        }
        case Family::Erlang: {
            auto tail = [&](double x) {
                if (std::isinf(x)) return 0.0;
                double acc = 0.0;
                for (int j = 0; j < k_; ++j) acc += poisson_upper(j + 1, p_[0] * x);
                return acc / p_[0];
            };
            return std::max(0.0, tail(lo) - tail(hi));
        }
        case Family::Empirical: {
            double acc = 0.0;
            for (double s : p_)
                if (s > lo) acc += std::min(s, hi) - lo;
            return acc / static_cast<double>(p_.size());
        }
    }
    return 0.0;
}

std::vector<double> ServiceDistribution::atoms() const {
    switch (family_) {
        case Family::Deterministic: return {p_[0]};
        case Family::Empirical: {
            std::vector<double> a(p_);
            a.erase(std::unique(a.begin(), a.end()), a.end());
            return a;
        }
        default: return {};
    }
}

double ServiceDistribution::tail_point(double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("tail_point requires eps > 0");
    switch (family_) {
        case Family::Deterministic: return p_[0];
        case Family::Empirical: return p_.back();
        case Family::Exponential: return std::max(0.0, std::log(1.0 / (p_[0] * eps)) / p_[0]);
        default: break;
    }
    double x = mean_;
    while (ccdf_integral(x, kInf) > eps) x *= 2.0;
    return x;
}

nlohmann::json ServiceDistribution::to_json() const {
    switch (family_) {
        case Family::Exponential: return {{"family", "exponential"}, {"rate", p_[0]}};
        case Family::Deterministic: return {{"family", "deterministic"}, {"value", p_[0]}};
        case Family::Hyperexponential: return {{"family", "hyperexponential"}, {"weights", p_}, {"rates", q_}};
        case Family::Erlang: return {{"family", "erlang"}, {"k", k_}, {"rate", p_[0]}};
        case Family::Empirical: return {{"family", "empirical"}, {"samples", p_}};
    }
    return {};
}

ServiceDistribution ServiceDistribution::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
        throw std::invalid_argument("family: missing or not a string");
    const std::string fam = j["family"];
    auto num = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number()) throw std::invalid_argument(std::string(key) + ": expected number");
        return j[key].get<double>();
    };
    auto vec = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_array()) throw std::invalid_argument(std::string(key) + ": expected array");
        std::vector<double> v;
        for (const auto& e : j[key]) {
            if (!e.is_number()) throw std::invalid_argument(std::string(key) + ": expected numbers");
            v.push_back(e.get<double>());
        }
        return v;
    };
    if (fam == "exponential") return exponential(num("rate"));
    if (fam == "deterministic") return deterministic(num("value"));
    if (fam == "hyperexponential") return hyperexponential(vec("weights"), vec("rates"));
    if (fam == "erlang") {
        if (!j.contains("k") || !j["k"].is_number_integer()) throw std::invalid_argument("k: expected integer");
        return erlang(j["k"].get<int>(), num("rate"));
    }
    if (fam == "empirical") return empirical(vec("samples"));
    throw std::invalid_argument("family: unknown service family '" + fam + "'");
}

// ---------------------------------------------------------------------------

double tail_mass_constant(const ServiceDistribution& F, double ell) {
    const double lower = std::max(0.0, ell - 1.0);
    constexpr double kTol = 1e-10;
    const double far = std::max(lower, F.tail_point(1e-13));
    // Break the quadrature at jumps of the ccdf.
    std::vector<double> cuts{lower};
    for (double a : F.atoms())
        if (a > lower && a < far) cuts.push_back(a);
    cuts.push_back(far);
    double acc = 0.0;
    const double piece_tol = kTol / static_cast<double>(cuts.size());
    auto f = [&](double x) { return F.ccdf(x); };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        // Nudge inside each piece so the endpoint samples see the piece's own value.
        const double w = cuts[i + 1] - cuts[i];
        if (w <= 0.0) continue;
        const double eps = w * 1e-12;
        acc += adaptive_trapezoid(f, cuts[i] + eps, cuts[i + 1] - eps, piece_tol);
    }
    return acc + F.ccdf_integral(far, kInf);
}

double strip_tail_sum(const ServiceDistribution& F, double ell, std::optional<std::size_t> kmax) {
    constexpr double kRemainder = 1e-12;
    std::size_t last = 0;
    if (kmax) {
        last = *kmax;
    } else {
        const double x = F.tail_point(kRemainder);
        last = x > ell ? static_cast<std::size_t>(std::ceil(x - ell)) + 1 : 0;
    }
    const double end = ell + static_cast<double>(last);
    const double remainder = end >= 0.0 ? F.ccdf_integral(end, kInf) : kInf;
    if (remainder > kRemainder) {
        std::ostringstream os;
        os << "strip_tail_sum: remainder bound " << remainder << " exceeds " << kRemainder << " at kmax=" << last;
        throw NumericalError(os.str());
    }
    double acc = 0.0;
    for (std::size_t k = 0; k <= last; ++k) {
        const double x = ell + static_cast<double>(k);
        acc += x < 0.0 ? 1.0 : F.ccdf(x);
    }
    return acc;
}

}  // namespace coxflux
