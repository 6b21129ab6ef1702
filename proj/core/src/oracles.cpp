#include "coxflux/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "coxflux/errors.hpp"

namespace coxflux {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_pmf(double mean, std::int64_t j) {
    const auto jd = static_cast<double>(j);
    return -mean + jd * std::log(mean) - std::lgamma(jd + 1.0);
}

// log Σ_{j >= k} pmf(j), for k > mean (terms decrease from j = k on).
double log_upper_sum(double mean, std::int64_t k) {
    const double lead = log_pmf(mean, k);
    double term = 1.0;
    double acc = 0.0;
    for (std::int64_t j = k; term > 1e-18 * acc || acc == 0.0; ++j) {
        acc += term;
        term *= mean / static_cast<double>(j + 1);
    }
    return lead + std::log(acc);
}

// log Σ_{j <= k} pmf(j), for k < mean (terms decrease from j = k down).
double log_lower_sum(double mean, std::int64_t k) {
    const double lead = log_pmf(mean, k);
    double term = 1.0;
    double acc = 0.0;
    for (std::int64_t j = k; j >= 0; --j) {
        acc += term;
        term *= static_cast<double>(j) / mean;
        if (term <= 1e-18 * acc) break;
    }
    return lead + std::log(acc);
}

double log1m_exp(double lx) { return lx > -0.693 ? std::log(-std::expm1(lx)) : std::log1p(-std::exp(lx)); }

}  // namespace

double log_poisson_tail(double mean, std::int64_t k, Tail tail) {
    if (!(mean > 0.0) || !std::isfinite(mean)) throw std::invalid_argument("poisson tail requires mean > 0");
    if (tail == Tail::Upper) {
        if (k <= 0) return 0.0;
        if (static_cast<double>(k) > mean) return log_upper_sum(mean, k);
        return log1m_exp(log_lower_sum(mean, k - 1));
    }
    if (k < 0) return kNegInf;
    if (static_cast<double>(k) < mean) return log_lower_sum(mean, k);
    return log1m_exp(log_upper_sum(mean, k + 1));
}

double exact_poisson_tail(double mean, std::int64_t k, Tail tail) { return std::exp(log_poisson_tail(mean, k, tail)); }

double log_mixed_poisson_tail(std::span<const double> probs, std::span<const double> means, std::int64_t k, Tail tail) {
    if (probs.size() != means.size() || probs.empty())
        throw std::invalid_argument("mixed poisson tail needs matching probs and means");
    std::vector<double> terms;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        double lt = 0.0;
        if (means[i] == 0.0)
            lt = (tail == Tail::Upper ? (k <= 0) : (k >= 0)) ? 0.0 : kNegInf;
        else
            lt = log_poisson_tail(means[i], k, tail);
        terms.push_back(std::log(probs[i]) + lt);
    }
    const double mx = *std::max_element(terms.begin(), terms.end());
    if (std::isinf(mx)) return mx;
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - mx);
    return mx + std::log(acc);
}

std::vector<double> exact_mg_infty_marginal(const IntensityModel& model, const ServiceDistribution& F, int n) {
    if (model.kind() != IntensityModel::Kind::Deterministic)
        throw std::invalid_argument("exact M/G/inf marginal requires a deterministic intensity");
    if (n < 1) throw std::invalid_argument("scaling index n must be positive");
    const double mean = static_cast<double>(n) * model.mean_rate() * F.mean();
    std::vector<double> pmf;
    if (mean == 0.0) return {1.0};
    double cum = 0.0;
    for (std::int64_t k = 0;; ++k) {
        const double p = std::exp(log_pmf(mean, k));
        pmf.push_back(p);
        cum += p;
        if (static_cast<double>(k) > mean && (1.0 - cum) < 1e-16) break;
        if (static_cast<double>(k) > mean && std::exp(log_poisson_tail(mean, k + 1, Tail::Upper)) < 1e-16) break;
    }
    return pmf;
}

namespace {

double binomial_count(int n, int k) {
    // C(n + k - 1, k - 1) in floating point
    double c = 1.0;
    for (int i = 1; i < k; ++i) c = c * static_cast<double>(n + i) / static_cast<double>(i);
    return c;
}

bool meets(const BinThreshold& ev, int count, int n) {
    const double target = ev.fraction * static_cast<double>(n);
    const double slack = 1e-9 * std::max(1.0, std::abs(target));
    return ev.strict ? static_cast<double>(count) > target + slack : static_cast<double>(count) >= target - slack;
}

}  // namespace

double log_exact_sanov_bins(std::span<const double> alpha, BinThreshold ev, int n) {
    const int k = static_cast<int>(alpha.size());
    if (k < 1 || k > 5) throw std::invalid_argument("exact_sanov_bins supports 1 to 5 bins");
    if (n < 0 || n > 500) throw std::invalid_argument("exact_sanov_bins supports 0 <= n <= 500");
    if (ev.bin >= alpha.size()) throw std::invalid_argument("exact_sanov_bins: bin index out of range");
    double total = 0.0;
    for (double a : alpha) {
        if (!(a >= 0.0)) throw std::invalid_argument("exact_sanov_bins: negative probability");
        total += a;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("exact_sanov_bins: alpha is not normalized");
    if (binomial_count(n, k) > 1e7) {
        std::ostringstream os;
        os << "exact_sanov_bins: " << binomial_count(n, k) << " compositions exceed the 1e7 enumeration guard";
        throw NumericalError(os.str());
    }

    std::vector<double> lfact(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) lfact[static_cast<std::size_t>(j)] = std::lgamma(static_cast<double>(j) + 1.0);
    std::vector<double> la(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) la[i] = alpha[i] > 0.0 ? std::log(alpha[i]) : kNegInf;

    // Streaming log-sum-exp over admissible compositions.
    double mx = kNegInf;
    double acc = 0.0;
    std::vector<int> counts(alpha.size(), 0);
    auto add = [&](double lt) {
        if (std::isinf(lt)) return;
        if (lt > mx) {
            acc = acc * std::exp(mx - lt) + 1.0;
            mx = lt;
        } else {
            acc += std::exp(lt - mx);
        }
    };
    auto recurse = [&](auto&& self, std::size_t i, int left, double lt) -> void {
        if (i + 1 == alpha.size()) {
            counts[i] = left;
            if (!meets(ev, counts[ev.bin], n)) return;
            double term = lt - lfact[static_cast<std::size_t>(left)];
            if (left > 0) term += static_cast<double>(left) * la[i];
            add(term);
            return;
        }
        for (int c = 0; c <= left; ++c) {
            counts[i] = c;
            double term = lt - lfact[static_cast<std::size_t>(c)];
            if (c > 0) term += static_cast<double>(c) * la[i];
            if (std::isinf(term)) continue;
            self(self, i + 1, left - c, term);
        }
    };
    recurse(recurse, 0, n, lfact[static_cast<std::size_t>(n)]);
    if (std::isinf(mx)) return kNegInf;
    return mx + std::log(acc);
}

double exact_sanov_bins(std::span<const double> alpha, BinThreshold ev, int n) {
    return std::exp(log_exact_sanov_bins(alpha, ev, n));
}

double sanov_threshold_rate(std::span<const double> alpha, BinThreshold ev) {
    if (ev.bin >= alpha.size()) throw std::invalid_argument("sanov_threshold_rate: bin index out of range");
    const double a = alpha[ev.bin];
    const double c = ev.fraction;
    if (c <= a) return 0.0;
    if (c > 1.0 || (ev.strict && c >= 1.0)) return std::numeric_limits<double>::infinity();
    if (a == 0.0) return std::numeric_limits<double>::infinity();
    double v = c * std::log(c / a);
    if (c < 1.0) v += (1.0 - c) * std::log((1.0 - c) / (1.0 - a));
    return v;
}

}  // namespace coxflux
