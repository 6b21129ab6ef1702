#include "coxflux/decay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "coxflux/errors.hpp"
#include "coxflux/parallel.hpp"
#include "coxflux/queue_maps.hpp"
#include "coxflux/rate_functions.hpp"

namespace coxflux {

namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr std::uint64_t kPilotTag = 1ULL << 63;

std::int64_t threshold_count(double level, int n) {
    return static_cast<std::int64_t>(std::ceil(level * static_cast<double>(n) - 1e-9));
}

std::uint64_t stream_id(int n, std::uint64_t rep) { return (static_cast<std::uint64_t>(n) << 40) ^ rep; }

struct Tally {
    std::uint64_t hits = 0;
    double sum_w = 0.0;   // Σ w·1{hit}
    double sum_w2 = 0.0;  // Σ w²·1{hit}
};

Tally run_replications(const DecayExperiment& exp, int n, std::uint64_t samples, std::uint64_t seed,
                       std::uint64_t tag, unsigned workers) {
    return blocked_reduce<Tally>(
        samples, workers, Tally{},
        [&](std::size_t lo, std::size_t hi) {
            Tally t;
            for (std::size_t i = lo; i < hi; ++i) {
                Rng rng(seed, stream_id(n, i) ^ tag);
                const Outcome o = exp.replicate(n, rng);
                if (!o.hit) continue;
                ++t.hits;
                t.sum_w += o.weight;
                t.sum_w2 += o.weight * o.weight;
            }
            return t;
        },
        [](Tally a, Tally b) {
            a.hits += b.hits;
            a.sum_w += b.sum_w;
            a.sum_w2 += b.sum_w2;
            return a;
        });
}

}  // namespace

WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t samples, double z) {
    if (samples == 0) return {0.0, 1.0};
    const double N = static_cast<double>(samples);
    const double p = static_cast<double>(hits) / N;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / N;
    const double centre = (p + z2 / (2.0 * N)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / N + z2 / (4.0 * N * N));
    // The bounds are exact at the extremes; rounding would otherwise leave ~1e-18.
    return {hits == 0 ? 0.0 : std::max(0.0, centre - half), hits == samples ? 1.0 : std::min(1.0, centre + half)};
}

DecayEstimate estimate_decay(DecayExperiment& exp, std::span<const int> n_grid, const DecayOptions& opt) {
    if (n_grid.size() < 4) throw std::invalid_argument("estimate_decay needs at least 4 grid values");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 1) throw std::invalid_argument("estimate_decay: n values must be positive");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("estimate_decay: n grid must increase");
    }
    if (opt.samples == 0) throw std::invalid_argument("estimate_decay: samples must be positive");
    exp.prepare(n_grid);

    const bool is = exp.importance_sampled();
    const std::uint64_t per_n_cap = std::max<std::uint64_t>(1, opt.max_total / n_grid.size());
    std::uint64_t samples = std::min(opt.samples, per_n_cap);
    std::uint64_t total = 0;

    // Pilot at the smallest n: grow the budget until the expected hit count
    // reaches the target (plain Monte Carlo only; IS hits are not rare).
    if (opt.pilot && !is) {
        const std::uint64_t pilot = std::min(samples, std::max<std::uint64_t>(1000, samples / 10));
        const Tally t = run_replications(exp, n_grid.front(), pilot, opt.seed, kPilotTag, opt.workers);
        total += pilot;
        const double p = static_cast<double>(t.hits) / static_cast<double>(pilot);
        if (p > 0.0 && p * static_cast<double>(samples) < static_cast<double>(opt.min_expected_hits)) {
            const double want = std::ceil(1.1 * static_cast<double>(opt.min_expected_hits) / p);
            samples = std::min<std::uint64_t>(per_n_cap, static_cast<std::uint64_t>(want));
        }
    }

    DecayEstimate est;
    est.importance_sampled = is;
    est.seed = opt.seed;
    bool any_hits = false;
    for (int n : n_grid) {
        const Tally t = run_replications(exp, n, samples, opt.seed, 0, opt.workers);
        total += samples;
        DecayPoint pt;
        pt.n = n;
        pt.samples = samples;
        pt.hits = t.hits;
        const double N = static_cast<double>(samples);
        if (is) {
            pt.p_hat = std::clamp(t.sum_w / N, 0.0, 1.0);
            const double var = std::max(0.0, t.sum_w2 / N - (t.sum_w / N) * (t.sum_w / N));
            pt.std_error = std::sqrt(var / N);
            pt.ci_lo = std::max(0.0, pt.p_hat - kZ95 * pt.std_error);
            pt.ci_hi = std::min(1.0, pt.p_hat + kZ95 * pt.std_error);
            pt.used_in_fit = t.hits > 0 && pt.p_hat > 0.0;
        } else {
            pt.p_hat = static_cast<double>(t.hits) / N;
            pt.std_error = std::sqrt(pt.p_hat * (1.0 - pt.p_hat) / N);
            const auto w = wilson_interval(t.hits, samples);
            pt.ci_lo = w.lo;
            pt.ci_hi = w.hi;
            pt.used_in_fit = t.hits >= opt.min_fit_hits;
        }
        any_hits = any_hits || t.hits > 0;
        est.points.push_back(pt);
    }
    est.total_replications = total;

    if (!any_hits) {
        std::ostringstream os;
        os << "estimate_decay(" << exp.name() << "): no hits at any n with " << samples
           << " samples per n; the event is too rare for plain Monte Carlo, use importance sampling";
        throw std::runtime_error(os.str());
    }
    fit_decay(est);
    return est;
}

void fit_decay(DecayEstimate& est) {
    std::vector<double> xs, ys, ws;
    for (const auto& p : est.points) {
        if (!p.used_in_fit || !(p.p_hat > 0.0)) continue;
        // sd of −log p̂ from the 95% interval half-width, delta method
        double sd = (p.ci_hi - p.ci_lo) / (2.0 * kZ95 * p.p_hat);
        if (!(sd > 0.0)) sd = p.samples > 0 ? 1.0 / (2.0 * kZ95 * static_cast<double>(p.samples)) : 1.0;
        xs.push_back(static_cast<double>(p.n));
        ys.push_back(-std::log(p.p_hat));
        ws.push_back(1.0 / (sd * sd));
    }
    if (xs.size() < 2)
        throw NumericalError("decay fit needs at least two grid points with usable estimates");
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += ws[i];
        sx += ws[i] * xs[i];
        sy += ws[i] * ys[i];
    }
    const double xb = sx / sw, yb = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += ws[i] * (xs[i] - xb) * (xs[i] - xb);
        sxy += ws[i] * (xs[i] - xb) * (ys[i] - yb);
    }
    est.fitted_rate = sxy / sxx;
    est.intercept = yb - est.fitted_rate * xb;
    double chi2 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - est.intercept - est.fitted_rate * xs[i];
        chi2 += ws[i] * r * r;
    }
    const double dof = static_cast<double>(xs.size()) - 2.0;
    const double inflate = dof > 0 ? std::max(1.0, chi2 / dof) : 1.0;
    est.fit_stderr = std::sqrt(inflate / sxx);
}

DecayEstimate exact_decay(std::span<const int> n_grid, const std::function<double(int)>& log_probability) {
    if (n_grid.size() < 2) throw std::invalid_argument("exact_decay needs at least two grid values");
    DecayEstimate est;
    std::vector<double> xs, ys;
    for (int n : n_grid) {
        const double lp = log_probability(n);
        DecayPoint p;
        p.n = n;
        p.p_hat = std::exp(lp);
        p.ci_lo = p.ci_hi = p.p_hat;
        p.used_in_fit = std::isfinite(lp);
        est.points.push_back(p);
        if (p.used_in_fit) {
            xs.push_back(n);
            ys.push_back(-lp);
        }
    }
    if (xs.size() < 2) throw NumericalError("exact decay fit needs two finite log-probabilities");
    const double m = static_cast<double>(xs.size());
    double xb = 0, yb = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xb += xs[i] / m;
        yb += ys[i] / m;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xb) * (xs[i] - xb);
        sxy += (xs[i] - xb) * (ys[i] - yb);
    }
    est.fitted_rate = sxy / sxx;
    est.intercept = yb - est.fitted_rate * xb;
    double rss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - est.intercept - est.fitted_rate * xs[i];
        rss += r * r;
    }
    est.fit_stderr = xs.size() > 2 ? std::sqrt(rss / (m - 2.0) / sxx) : 0.0;
    return est;
}

std::vector<int> parse_n_grid(const std::string& text) {
    std::vector<int> out;
    auto bad = [&] { return std::invalid_argument("invalid n grid '" + text + "': expected lo:hi:step or a comma list"); };
    try {
        if (text.find(':') != std::string::npos) {
            std::vector<int> parts;
            std::stringstream ss(text);
            std::string tok;
            while (std::getline(ss, tok, ':')) {
                std::size_t used = 0;
                parts.push_back(std::stoi(tok, &used));
                if (used != tok.size()) throw bad();
            }
            if (parts.size() != 3 || parts[2] <= 0 || parts[0] > parts[1]) throw bad();
            for (int n = parts[0]; n <= parts[1]; n += parts[2]) out.push_back(n);
        } else {
            std::stringstream ss(text);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                std::size_t used = 0;
                out.push_back(std::stoi(tok, &used));
                if (used != tok.size()) throw bad();
            }
        }
    } catch (const std::logic_error&) {
        throw bad();
    }
    if (out.empty()) throw bad();
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out[i] < 1 || (i > 0 && out[i] <= out[i - 1])) throw bad();
    return out;
}

// ---------------------------------------------------------------------------

PoissonTailExperiment::PoissonTailExperiment(double alpha, double q, bool importance)
    : alpha_(alpha), q_(q), importance_(importance) {
    if (!(alpha > 0.0)) throw std::invalid_argument("poisson-tail: alpha must be positive");
    if (!(q > alpha)) throw std::invalid_argument("poisson-tail: q must exceed alpha (upper tail)");
}

Outcome PoissonTailExperiment::replicate(int n, Rng& rng) const {
    const double nd = static_cast<double>(n);
    const auto k = threshold_count(q_, n);
    if (!importance_) return {sample_poisson(nd * alpha_, rng) >= k, 1.0};
    const std::int64_t N = sample_poisson(nd * q_, rng);
    const double theta = std::log(q_ / alpha_);
    return {N >= k, std::exp(-theta * static_cast<double>(N) + nd * (q_ - alpha_))};
}

double PoissonTailExperiment::analytic_rate() const { return i_poi(q_, alpha_).value; }

std::optional<double> PoissonTailExperiment::exact_log_probability(int n) const {
    return log_poisson_tail(static_cast<double>(n) * alpha_, threshold_count(q_, n), Tail::Upper);
}

MixtureTailExperiment::MixtureTailExperiment(IntensityModel model, double level, bool importance)
    : model_(std::move(model)), level_(level), importance_(importance) {
    if (model_.kind() == IntensityModel::Kind::OccupancyDriven)
        throw std::invalid_argument("mixture-tail: occupancy-driven intensities are not supported");
    if (!(level > 0.0)) throw std::invalid_argument("mixture-tail: level must be positive");
}

Outcome MixtureTailExperiment::replicate(int n, Rng& rng) const {
    const double nd = static_cast<double>(n);
    const double mass = total_mass(model_.sample_intensity(n, {0.0, 1.0}, rng));
    const auto k = threshold_count(level_, n);
    const double theta_draw = mass / nd;
    if (!importance_ || theta_draw >= level_ || theta_draw <= 0.0) return {sample_poisson(mass, rng) >= k, 1.0};
    const double tilt = std::log(level_ / theta_draw);
    const std::int64_t N = sample_poisson(nd * level_, rng);
    return {N >= k, std::exp(-tilt * static_cast<double>(N) + nd * (level_ - theta_draw))};
}

double MixtureTailExperiment::analytic_rate() const {
    return cox_empirical_rate(IntervalMeasure::uniform(0.0, 1.0, level_, 1), model_).value;
}

std::optional<double> MixtureTailExperiment::exact_log_probability(int n) const {
    std::vector<double> probs, means;
    const auto rates = model_.rates();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        probs.push_back(model_.kind() == IntensityModel::Kind::Deterministic ? 1.0 : model_.probs()[i]);
        means.push_back(static_cast<double>(n) * rates[i]);
    }
    return log_mixed_poisson_tail(probs, means, threshold_count(level_, n), Tail::Upper);
}

QueueTailExperiment::QueueTailExperiment(IntensityModel model, ServiceDistribution service, double level, double tol,
                                         bool importance)
    : model_(std::move(model)), service_(std::move(service)), level_(level), tol_(tol), importance_(importance) {
    if (model_.kind() == IntensityModel::Kind::OccupancyDriven)
        throw std::invalid_argument("queue-tail: occupancy-driven intensities are not supported");
    if (importance_ && model_.kind() != IntensityModel::Kind::Deterministic)
        throw std::invalid_argument("queue-tail: importance sampling requires a deterministic intensity");
    if (!(level > 0.0)) throw std::invalid_argument("queue-tail: level must be positive");
    if (importance_ && !(level > model_.mean_rate() * service_.mean()))
        throw std::invalid_argument("queue-tail: importance sampling needs level above the mean occupancy");
}

void QueueTailExperiment::prepare(std::span<const int> n_grid) {
    for (int n : n_grid)
        if (!truncations_.count(n))
            truncations_.emplace(n, choose_truncation(service_, n, model_.max_rate(), 0.0, tol_));
}

const Truncation& QueueTailExperiment::truncation(int n) const {
    const auto it = truncations_.find(n);
    if (it == truncations_.end()) throw std::logic_error("queue-tail: prepare() was not called for n");
    return it->second;
}

Outcome QueueTailExperiment::replicate(int n, Rng& rng) const {
    const Truncation& tr = truncation(n);
    const MarkedPointSet pts = sample_stationary(model_, n, {0.0, 1.0}, service_, tr, rng);
    std::int64_t q = queue_length(pts, 0.0);
    const auto k = threshold_count(level_, n);
    if (!importance_) return {q >= k, 1.0};

    // Extra arrivals on [u, 0] with intensity (e^θ − 1)·nλ ⊗ F; those still
    // present at 0 tilt the snapshot count from Poisson(m) to Poisson(e^θ m).
    const double nd = static_cast<double>(n);
    const double lambda = model_.mean_rate();
    const double m = nd * lambda * service_.ccdf_integral(0.0, tr.ell);
    const double theta = std::log(level_ / (lambda * service_.mean()));
    const double extra_rate = std::expm1(theta) * nd * lambda;
    const std::int64_t extra = sample_poisson(extra_rate * tr.ell, rng);
    for (std::int64_t i = 0; i < extra; ++i) {
        const double s = -tr.ell * rng.uniform_pos();
        const double x = service_.sample(rng);
        if (departs_after(s, x, 0.0)) ++q;
    }
    return {q >= k, std::exp(-theta * static_cast<double>(q) + m * std::expm1(theta))};
}

double QueueTailExperiment::analytic_rate() const {
    if (model_.kind() != IntensityModel::Kind::Deterministic) return std::numeric_limits<double>::quiet_NaN();
    return i_poi(level_, model_.mean_rate() * service_.mean()).value;
}

std::optional<double> QueueTailExperiment::exact_log_probability(int n) const {
    if (model_.kind() != IntensityModel::Kind::Deterministic) return std::nullopt;
    return log_poisson_tail(static_cast<double>(n) * model_.mean_rate() * service_.mean(), threshold_count(level_, n),
                            Tail::Upper);
}

SanovExperiment::SanovExperiment(std::vector<double> alpha, BinThreshold event)
    : alpha_(std::move(alpha)), event_(event) {
    if (event_.bin >= alpha_.size()) throw std::invalid_argument("sanov: bin index out of range");
    double s = 0.0;
    for (double a : alpha_) {
        if (!(a >= 0.0)) throw std::invalid_argument("sanov: negative probability");
        s += a;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("sanov: alpha must sum to 1");
}

Outcome SanovExperiment::replicate(int n, Rng& rng) const {
    const double a = alpha_[event_.bin];
    int count = 0;
    for (int i = 0; i < n; ++i)
        if (rng.uniform() < a) ++count;
    const double target = event_.fraction * static_cast<double>(n);
    const double slack = 1e-9 * std::max(1.0, std::abs(target));
    const bool hit = event_.strict ? count > target + slack : count >= target - slack;
    return {hit, 1.0};
}

double SanovExperiment::analytic_rate() const { return sanov_threshold_rate(alpha_, event_); }

std::optional<double> SanovExperiment::exact_log_probability(int n) const {
    return log_exact_sanov_bins(alpha_, event_, n);
}

}  // namespace coxflux
