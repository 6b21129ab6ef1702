#include "coxflux/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace coxflux {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

IntensityModel IntensityModel::deterministic(double rate) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) throw std::invalid_argument("rate must be finite and nonnegative");
    IntensityModel m(Kind::Deterministic);
    m.rates_ = {rate};
    m.probs_ = {1.0};
    return m;
}

IntensityModel IntensityModel::finite_mixture(std::vector<double> rates, std::vector<double> probs) {
    if (rates.empty() || rates.size() != probs.size())
        throw std::invalid_argument("finite mixture needs matching, nonempty rates and probs");
    for (double r : rates)
        if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("mixture rates must be nonnegative");
    for (double p : probs)
        if (!(p >= 0.0) || p > 1.0) throw std::invalid_argument("mixture probs must lie in [0,1]");
    if (std::abs(std::accumulate(probs.begin(), probs.end(), 0.0) - 1.0) > 1e-9)
        throw std::invalid_argument("mixture probs must sum to 1");
    IntensityModel m(Kind::FiniteMixture);
    m.rates_ = std::move(rates);
    m.probs_ = std::move(probs);
    return m;
}

IntensityModel IntensityModel::occupancy_driven(double gain, OccupancyPath source) {
    if (!(gain >= 0.0) || !std::isfinite(gain)) throw std::invalid_argument("gain must be finite and nonnegative");
    IntensityModel m(Kind::OccupancyDriven);
    m.gain_ = gain;
    m.source_ = std::move(source);
    return m;
}

std::string IntensityModel::name() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Deterministic: os << "deterministic(" << rates_[0] << ")"; break;
        case Kind::FiniteMixture:
            os << "finite_mixture(";
            for (std::size_t i = 0; i < rates_.size(); ++i) os << (i ? "," : "") << rates_[i] << "@" << probs_[i];
            os << ")";
            break;
        case Kind::OccupancyDriven: os << "occupancy_driven(gain=" << gain_ << ")"; break;
    }
    return os.str();
}

double IntensityModel::mean_rate() const {
    if (kind_ == Kind::OccupancyDriven) throw std::invalid_argument("occupancy-driven model has no fixed mean rate");
    double acc = 0.0;
    for (std::size_t i = 0; i < rates_.size(); ++i) acc += rates_[i] * probs_[i];
    return acc;
}

double IntensityModel::max_rate() const {
    if (kind_ == Kind::OccupancyDriven) return gain_ * source_->max_level();
    double m = 0.0;
    for (std::size_t i = 0; i < rates_.size(); ++i)
        if (probs_[i] > 0.0) m = std::max(m, rates_[i]);
    return m;
}

IntervalMeasure IntensityModel::sample_intensity(int n, Interval w, Rng& rng) const {
    if (n < 1) throw std::invalid_argument("scaling index n must be positive");
    if (!(w.lo < w.hi)) throw std::invalid_argument("sample_intensity requires u < b");
    const double scale = static_cast<double>(n);
    switch (kind_) {
        case Kind::Deterministic: return IntervalMeasure::uniform(w.lo, w.hi, scale * rates_[0], 1);
        case Kind::FiniteMixture: {
            const double u = rng.uniform();
            double acc = 0.0;
            std::size_t i = 0;
            for (; i + 1 < probs_.size(); ++i) {
                acc += probs_[i];
                if (u < acc) break;
            }
            return IntervalMeasure::uniform(w.lo, w.hi, scale * rates_[i], 1);
        }
        case Kind::OccupancyDriven: {
            const auto& src = *source_;
            if (w.lo < src.a() || w.hi > src.b())
                throw std::invalid_argument("occupancy-driven intensity: source path does not cover the window");
            std::vector<double> edges{w.lo};
            std::vector<double> masses;
            for (std::size_t i = 0; i < src.segments(); ++i) {
                const double lo = std::max(w.lo, src.breakpoints()[i]);
                const double hi = std::min(w.hi, src.segment_end(i));
                if (!(lo < hi)) continue;
                masses.push_back(scale * gain_ * src.levels()[i] * (hi - lo));
                edges.push_back(hi);
            }
            return IntervalMeasure(std::move(edges), std::move(masses));
        }
    }
    throw std::logic_error("unreachable");
}

double IntensityModel::log_mgf_unit(int n, double theta) const {
    if (n < 1) throw std::invalid_argument("scaling index n must be positive");
    if (!std::isfinite(theta)) throw std::domain_error("theta outside the MGF domain");
    if (theta == 0.0) return 0.0;
    switch (kind_) {
        case Kind::Deterministic: return theta * rates_[0];
        case Kind::FiniteMixture: {
            // log Σ p_i exp(θ θ_i), log-sum-exp
            double mx = -kInf;
            for (std::size_t i = 0; i < rates_.size(); ++i)
                if (probs_[i] > 0.0) mx = std::max(mx, theta * rates_[i]);
            double acc = 0.0;
            for (std::size_t i = 0; i < rates_.size(); ++i)
                if (probs_[i] > 0.0) acc += probs_[i] * std::exp(theta * rates_[i] - mx);
            return mx + std::log(acc);
        }
        case Kind::OccupancyDriven:
            throw std::domain_error("log MGF is not available for occupancy-driven intensities");
    }
    throw std::logic_error("unreachable");
}

nlohmann::json IntensityModel::to_json() const {
    switch (kind_) {
        case Kind::Deterministic: return {{"model", "deterministic"}, {"rate", rates_[0]}};
        case Kind::FiniteMixture: return {{"model", "finite_mixture"}, {"rates", rates_}, {"probs", probs_}};
        case Kind::OccupancyDriven: return {{"model", "occupancy_driven"}, {"gain", gain_}};
    }
    return {};
}

IntensityModel IntensityModel::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("model") || !j["model"].is_string())
        throw std::invalid_argument("model: missing or not a string");
    const std::string kind = j["model"];
    auto vec = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_array()) throw std::invalid_argument(std::string(key) + ": expected array");
        std::vector<double> v;
        for (const auto& e : j[key]) {
            if (!e.is_number()) throw std::invalid_argument(std::string(key) + ": expected numbers");
            v.push_back(e.get<double>());
        }
        return v;
    };
    if (kind == "deterministic") {
        if (!j.contains("rate") || !j["rate"].is_number()) throw std::invalid_argument("rate: expected number");
        return deterministic(j["rate"].get<double>());
    }
    if (kind == "finite_mixture") return finite_mixture(vec("rates"), vec("probs"));
    if (kind == "occupancy_driven")
        throw std::invalid_argument("model: occupancy_driven intensities are built by the tandem runner");
    throw std::invalid_argument("model: unknown intensity model '" + kind + "'");
}

double intensity_rate_function(const IntensityModel& model, const IntervalMeasure& lam) {
    if (model.kind() == IntensityModel::Kind::OccupancyDriven)
        throw std::invalid_argument("rate function available only via tandem composition");
    for (std::size_t k = 0; k < model.rates().size(); ++k) {
        if (model.probs()[k] <= 0.0) continue;
        const double rate = model.rates()[k];
        bool match = true;
        for (std::size_t i = 0; i < lam.bins() && match; ++i)
            match = std::abs(lam.masses()[i] - rate * lam.bin_width(i)) <= 1e-9 * std::max(1.0, lam.bin_width(i));
        if (match) return 0.0;
    }
    return kInf;
}

}  // namespace coxflux
