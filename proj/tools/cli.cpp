#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "coxflux/decay.hpp"
#include "coxflux/diagnostics.hpp"
#include "coxflux/errors.hpp"
#include "coxflux/io.hpp"
#include "coxflux/oracles.hpp"
#include "coxflux/parallel.hpp"
#include "coxflux/point_process.hpp"
#include "coxflux/test_functions.hpp"

namespace coxflux::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
    std::ostringstream os;
    for (std::size_t i = 0; i < issues.size(); ++i) os << (i ? "; " : "") << issues[i].pointer << ": " << issues[i].message;
    return os.str();
}

bool is_nonneg_int(const json& v) {
    return v.is_number_integer() && (v.is_number_unsigned() || v.get<long long>() >= 0);
}
bool is_pos_int(const json& v) { return is_nonneg_int(v) && v.get<long long>() > 0; }
bool is_finite_number(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

// Runs a model factory and maps its "key: message" errors onto JSON pointers.
template <class Fn>
void check_factory(const std::string& base, Fn&& fn, std::vector<ConfigIssue>& out) {
    try {
        fn();
    } catch (const std::exception& e) {
        std::string msg = e.what();
        const auto colon = msg.find(": ");
        const auto key = msg.substr(0, colon);
        const bool keyed = colon != std::string::npos &&
                           std::all_of(key.begin(), key.end(), [](char c) { return std::isalnum(c) || c == '_'; });
        if (keyed)
            out.push_back({base + "/" + key, msg.substr(colon + 2)});
        else
            out.push_back({base, msg});
    }
}

void validate_service(const json& s, const std::string& ptr, std::vector<ConfigIssue>& out) {
    if (!s.is_object()) {
        out.push_back({ptr, "expected an object"});
        return;
    }
    check_factory(ptr, [&] { (void)ServiceDistribution::from_json(s); }, out);
}

void validate_intensity(const json& j, std::vector<ConfigIssue>& out) {
    const std::string ptr = "/intensity";
    if (!j.is_object()) {
        out.push_back({ptr, "expected an object"});
        return;
    }
    if (!j.contains("model") || !j["model"].is_string()) {
        out.push_back({ptr + "/model", "required string (deterministic or finite_mixture)"});
        return;
    }
    const std::string model = j["model"];
    if (model == "deterministic") {
        if (!j.contains("rate") || !is_finite_number(j["rate"]) || j["rate"].get<double>() < 0.0)
            out.push_back({ptr + "/rate", "expected a finite nonnegative number"});
        return;
    }
    if (model != "finite_mixture") {
        out.push_back({ptr + "/model", "unknown intensity model '" + model + "'"});
        return;
    }
    auto numbers = [&](const char* key, std::vector<double>& v) {
        if (!j.contains(key) || !j[key].is_array() || j[key].empty()) {
            out.push_back({ptr + "/" + key, "expected a nonempty array of numbers"});
            return false;
        }
        for (std::size_t i = 0; i < j[key].size(); ++i) {
            const auto& e = j[key][i];
            if (!is_finite_number(e)) {
                out.push_back({ptr + "/" + key + "/" + std::to_string(i), "expected a finite number"});
                return false;
            }
            v.push_back(e.get<double>());
        }
        return true;
    };
    std::vector<double> rates, probs;
    const bool ok_rates = numbers("rates", rates);
    const bool ok_probs = numbers("probs", probs);
    if (ok_rates)
        for (std::size_t i = 0; i < rates.size(); ++i)
            if (rates[i] < 0.0) out.push_back({ptr + "/rates/" + std::to_string(i), "rates must be nonnegative"});
    if (!ok_probs) return;
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0.0 || probs[i] > 1.0)
            out.push_back({ptr + "/probs/" + std::to_string(i), "probabilities must lie in [0,1]"});
        sum += probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "probabilities must sum to 1 (sum is " << sum << ")";
        out.push_back({ptr + "/probs", os.str()});
    }
    if (ok_rates && rates.size() != probs.size())
        out.push_back({ptr + "/probs", "must have the same length as /intensity/rates"});
}

json round_rate(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::round(v * 1e10) / 1e10;
}

std::string rep_dir(std::uint64_t r) {
    std::ostringstream os;
    os << "rep_" << std::setw(5) << std::setfill('0') << r;
    return os.str();
}

json truncation_json(const Truncation& t) { return {{"u", t.u}, {"ell", t.ell}, {"leak_bound", t.leak_bound}}; }

Truncation config_truncation(const RunConfig& c, const ServiceDistribution& F, int n, double lambda_bar) {
    const double a = c.window.lo;
    if (c.u) {
        const double ell = a - *c.u;
        return {*c.u, ell, static_cast<double>(n) * lambda_bar * tail_mass_constant(F, ell)};
    }
    if (c.tol) return choose_truncation(F, n, lambda_bar, a, *c.tol);
    throw ConfigError("/truncation", "a truncation tolerance (tol) or start (u) is required");
}

json base_manifest(const std::string& command, const RunConfig& c) {
    return {{"tool", "coxflux"},
            {"version", kVersion},
            {"format", 1},
            {"command", command},
            {"config_hash", config_hash(c.raw)},
            {"seed", c.seed},
            {"config", c.raw}};
}

// Applies flag overrides to a config document before validation.
json load_document(const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::uint64_t> samples,
                   const std::string& out_dir) {
    std::ifstream f(path);
    if (!f) throw ConfigError("", "cannot read config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    if (doc.is_object()) {
        if (seed) doc["seed"] = *seed;
        if (samples) doc["samples"] = *samples;
        if (!out_dir.empty()) doc["out"] = out_dir;
    }
    return doc;
}

fs::path require_out(const RunConfig& c) {
    if (!c.out) throw ConfigError("/out", "an output directory is required (config key or --out)");
    return fs::path(*c.out);
}


}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error("invalid configuration: " + join_issues(issues)), issues_(std::move(issues)) {}

ConfigError::ConfigError(std::string pointer, std::string message)
    : ConfigError(std::vector<ConfigIssue>{{std::move(pointer), std::move(message)}}) {}

std::vector<ConfigIssue> validate_config(const json& d, const fs::path& base_dir) {
    std::vector<ConfigIssue> out;
    if (!d.is_object()) {
        out.push_back({"", "configuration must be a JSON object"});
        return out;
    }
    static const std::set<std::string> known{"seed",  "n",    "n_grid", "window", "intensity", "service", "truncation",
                                             "samples", "grid", "tandem", "out",    "rate"};
    for (const auto& [key, value] : d.items())
        if (!known.count(key)) out.push_back({"/" + key, "unknown key"});

    if (!d.contains("seed"))
        out.push_back({"/seed", "required (no implicit seed)"});
    else if (!is_nonneg_int(d["seed"]))
        out.push_back({"/seed", "expected a nonnegative integer"});

    if (d.contains("n")) {
        if (!is_pos_int(d["n"])) out.push_back({"/n", "expected a positive integer"});
    } else if (!d.contains("n_grid")) {
        out.push_back({"/n", "required (or give /n_grid)"});
    }
    if (d.contains("n_grid")) {
        const auto& g = d["n_grid"];
        if (!g.is_array() || g.size() < 4) {
            out.push_back({"/n_grid", "expected an array of at least 4 positive integers"});
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!is_pos_int(g[i]))
                    out.push_back({"/n_grid/" + std::to_string(i), "expected a positive integer"});
                else if (i > 0 && is_pos_int(g[i - 1]) && g[i].get<long long>() <= g[i - 1].get<long long>())
                    out.push_back({"/n_grid/" + std::to_string(i), "grid must be strictly increasing"});
            }
        }
    }

    bool window_ok = false;
    double a = 0.0;
    if (!d.contains("window")) {
        out.push_back({"/window", "required [a, b]"});
    } else {
        const auto& w = d["window"];
        if (!w.is_array() || w.size() != 2 || !is_finite_number(w[0]) || !is_finite_number(w[1])) {
            out.push_back({"/window", "expected [a, b] with finite numbers"});
        } else if (!(w[0].get<double>() < w[1].get<double>())) {
            out.push_back({"/window", "window start a must be less than end b"});
        } else {
            window_ok = true;
            a = w[0].get<double>();
        }
    }

    if (!d.contains("intensity"))
        out.push_back({"/intensity", "required"});
    else
        validate_intensity(d["intensity"], out);

    if (!d.contains("service"))
        out.push_back({"/service", "required"});
    else
        validate_service(d["service"], "/service", out);

    if (d.contains("truncation")) {
        const auto& t = d["truncation"];
        if (!t.is_object()) {
            out.push_back({"/truncation", "expected an object"});
        } else {
            if (!t.contains("tol") && !t.contains("u")) out.push_back({"/truncation", "give tol or u"});
            if (t.contains("tol") && (!t["tol"].is_number() || !(t["tol"].get<double>() > 0.0)))
                out.push_back({"/truncation/tol", "expected a positive number"});
            if (t.contains("u")) {
                if (!is_finite_number(t["u"]))
                    out.push_back({"/truncation/u", "expected a finite number"});
                else if (window_ok && !(t["u"].get<double>() < a))
                    out.push_back({"/truncation/u", "truncation start u must be less than window start a"});
            }
            for (const auto& [key, value] : t.items())
                if (key != "tol" && key != "u") out.push_back({"/truncation/" + key, "unknown key"});
        }
    }

    if (d.contains("samples") && !is_pos_int(d["samples"]))
        out.push_back({"/samples", "expected a positive integer"});

    if (d.contains("grid")) {
        const auto& g = d["grid"];
        if (!g.is_object()) {
            out.push_back({"/grid", "expected an object"});
        } else {
            for (const auto& [key, value] : g.items()) {
                if (key == "ns" || key == "nx" || key == "sub_s" || key == "sub_x" || key == "max_iterations") {
                    if (!is_pos_int(value)) out.push_back({"/grid/" + key, "expected a positive integer"});
                } else if (key == "service_cut") {
                    if (!is_finite_number(value) || value.get<double>() < 0.0)
                        out.push_back({"/grid/service_cut", "expected a nonnegative number"});
                } else if (key == "tolerance") {
                    if (!value.is_number() || !(value.get<double>() > 0.0))
                        out.push_back({"/grid/tolerance", "expected a positive number"});
                } else {
                    out.push_back({"/grid/" + key, "unknown key"});
                }
            }
        }
    }

    if (d.contains("tandem")) {
        const auto& t = d["tandem"];
        if (!t.is_object() || !t.contains("stages") || !t["stages"].is_array() || t["stages"].empty()) {
            out.push_back({"/tandem/stages", "expected a nonempty array of stages"});
        } else {
            const auto& st = t["stages"];
            for (std::size_t k = 0; k < st.size(); ++k) {
                const std::string p = "/tandem/stages/" + std::to_string(k);
                if (!st[k].is_object()) {
                    out.push_back({p, "expected an object"});
                    continue;
                }
                if (!st[k].contains("service"))
                    out.push_back({p + "/service", "required"});
                else
                    validate_service(st[k]["service"], p + "/service", out);
                if (st[k].contains("gain")) {
                    if (!is_finite_number(st[k]["gain"]) || st[k]["gain"].get<double>() < 0.0)
                        out.push_back({p + "/gain", "expected a finite nonnegative number"});
                } else if (k > 0) {
                    out.push_back({p + "/gain", "required for downstream stages"});
                }
            }
        }
    }

    if (d.contains("out") && !d["out"].is_string()) out.push_back({"/out", "expected a string"});

    if (d.contains("rate")) {
        const auto& r = d["rate"];
        if (!r.is_object()) {
            out.push_back({"/rate", "expected an object"});
        } else {
            if (r.contains("nu_csv")) {
                if (!r["nu_csv"].is_string()) {
                    out.push_back({"/rate/nu_csv", "expected a file path"});
                } else {
                    fs::path p = r["nu_csv"].get<std::string>();
                    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
                    if (!fs::exists(p)) out.push_back({"/rate/nu_csv", "file not found: " + p.string()});
                }
            }
            if (r.contains("level") && (!is_finite_number(r["level"]) || r["level"].get<double>() < 0.0))
                out.push_back({"/rate/level", "expected a finite nonnegative number"});
            if (r.contains("tests") && !is_pos_int(r["tests"])) out.push_back({"/rate/tests", "expected a positive integer"});
        }
    }
    return out;
}

std::vector<ConfigIssue> validate_config_file(const fs::path& path) {
    std::ifstream f(path);
    if (!f) return {{"", "cannot read config file '" + path.string() + "'"}};
    try {
        return validate_config(json::parse(f), path.parent_path());
    } catch (const json::parse_error& e) {
        return {{"", std::string("invalid JSON: ") + e.what()}};
    }
}

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
    auto issues = validate_config(doc, base_dir);
    if (!issues.empty()) throw ConfigError(std::move(issues));
    RunConfig c;
    c.raw = doc;
    c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("n_grid"))
        for (const auto& e : doc["n_grid"]) c.n_grid.push_back(e.get<int>());
    c.n = doc.contains("n") ? doc["n"].get<int>() : c.n_grid.front();
    c.window = {doc["window"][0].get<double>(), doc["window"][1].get<double>()};
    c.intensity = IntensityModel::from_json(doc["intensity"]);
    c.service = ServiceDistribution::from_json(doc["service"]);
    if (doc.contains("truncation")) {
        const auto& t = doc["truncation"];
        if (t.contains("tol")) c.tol = t["tol"].get<double>();
        if (t.contains("u")) c.u = t["u"].get<double>();
    }
    if (doc.contains("samples")) c.samples = doc["samples"].get<std::uint64_t>();
    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        c.grid.ns = g.value("ns", c.grid.ns);
        c.grid.nx = g.value("nx", c.grid.nx);
        c.grid.sub_s = g.value("sub_s", c.grid.sub_s);
        c.grid.sub_x = g.value("sub_x", c.grid.sub_x);
        c.grid.service_cut = g.value("service_cut", c.grid.service_cut);
        c.grid.tolerance = g.value("tolerance", c.grid.tolerance);
        c.grid.max_iterations = g.value("max_iterations", c.grid.max_iterations);
    }
    if (doc.contains("tandem"))
        for (const auto& st : doc["tandem"]["stages"])
            c.stages.push_back({ServiceDistribution::from_json(st["service"]), st.value("gain", 0.0)});
    if (doc.contains("out")) c.out = doc["out"].get<std::string>();
    return c;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("", "cannot read config file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc, path.parent_path());
}

// ---------------------------------------------------------------------------

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> samples;
    int workers = 0;
};

RunConfig config_from(const Common& o) {
    if (o.config.empty()) throw ConfigError("", "--config is required");
    const json doc = load_document(o.config, o.seed, o.samples, o.out);
    return parse_config(doc, fs::path(o.config).parent_path());
}

int cmd_simulate(const Common& o, std::ostream& out) {
    const RunConfig c = config_from(o);
    const fs::path dir = require_out(c);
    const unsigned workers = resolve_workers(o.workers);
    const Truncation tr = config_truncation(c, c.service, c.n, c.intensity.max_rate());

    struct Files {
        std::string points, sidecar, occupancy;
    };
    const auto reps = parallel_map<Files>(c.samples, workers, [&](std::size_t r) {
        Rng rng(c.seed, r);
        const MarkedPointSet pts = sample_stationary(c.intensity, c.n, c.window, c.service, tr, rng);
        std::ostringstream p, q;
        write_csv(p, pts);
        write_csv(q, occupancy_path(pts, c.window));
        return Files{p.str(), point_sidecar(pts, c.seed).dump(2) + "\n", q.str()};
    });

    json files = json::array();
    for (std::size_t r = 0; r < reps.size(); ++r) {
        const fs::path sub = dir / rep_dir(r);
        write_text_file(sub / "points.csv", reps[r].points);
        write_text_file(sub / "points.json", reps[r].sidecar);
        write_text_file(sub / "occupancy.csv", reps[r].occupancy);
        files.push_back(rep_dir(r));
    }
    json manifest = base_manifest("simulate", c);
    manifest["samples"] = c.samples;
    manifest["truncation"] = truncation_json(tr);
    manifest["leak_bounds"] = {tr.leak_bound};
    manifest["replications"] = files;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
    out << json{{"out", dir.string()}, {"replications", c.samples}, {"leak_bound", tr.leak_bound}}.dump() << '\n';
    return kOk;
}

int cmd_tandem(const Common& o, std::ostream& out) {
    const RunConfig c = config_from(o);
    const fs::path dir = require_out(c);
    if (c.stages.empty()) throw ConfigError("/tandem/stages", "required for the tandem command");
    if (!c.tol) throw ConfigError("/truncation/tol", "required for the tandem command");
    TandemSpec spec{c.intensity, c.n, c.window, c.stages, *c.tol};
    const unsigned workers = resolve_workers(o.workers);

    struct Rep {
        std::vector<std::string> points, occupancy;
        std::vector<double> leak;
        std::vector<Truncation> trunc;
    };
    const auto reps = parallel_map<Rep>(c.samples, workers, [&](std::size_t r) {
        Rng rng(c.seed, r);
        Rep rep;
        for (const auto& s : tandem_simulate(spec, rng)) {
            std::ostringstream p, q;
            write_csv(p, s.points);
            write_csv(q, s.path);
            rep.points.push_back(p.str());
            rep.occupancy.push_back(q.str());
            rep.leak.push_back(s.realized_leak_bound);
            rep.trunc.push_back(s.truncation);
        }
        return rep;
    });

    std::vector<double> worst(c.stages.size(), 0.0);
    for (std::size_t r = 0; r < reps.size(); ++r) {
        const fs::path sub = dir / rep_dir(r);
        for (std::size_t k = 0; k < reps[r].points.size(); ++k) {
            write_text_file(sub / ("stage_" + std::to_string(k) + "_points.csv"), reps[r].points[k]);
            write_text_file(sub / ("stage_" + std::to_string(k) + "_occupancy.csv"), reps[r].occupancy[k]);
            worst[k] = std::max(worst[k], reps[r].leak[k]);
        }
    }
    json manifest = base_manifest("tandem", c);
    manifest["samples"] = c.samples;
    json stages = json::array();
    for (std::size_t k = 0; k < c.stages.size(); ++k)
        stages.push_back({{"stage", k},
                          {"truncation", reps.empty() ? json() : truncation_json(reps.front().trunc[k])},
                          {"max_realized_leak_bound", worst[k]}});
    manifest["stages"] = stages;
    manifest["leak_bounds"] = worst;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
    out << json{{"out", dir.string()}, {"replications", c.samples}, {"leak_bounds", worst}}.dump() << '\n';
    return kOk;
}

json contraction_json(const ContractionResult& r) {
    json witness = nullptr;
    if (r.witness) {
        json masses = json::array();
        for (double m : r.witness->masses()) masses.push_back(m);
        witness = {{"total_mass", total_mass(*r.witness)}, {"masses", masses}};
    }
    json meta = {{"ns", r.grid.ns},
                 {"nx", r.grid.nx},
                 {"service_cut", r.service_cut},
                 {"constraints", r.constraints},
                 {"iterations", r.iterations},
                 {"reference_leak", r.reference_leak},
                 {"tolerance", r.grid.tolerance}};
    if (r.witness) {
        const auto& g = r.witness->grid();
        meta["s_range"] = {g.s_lo, g.s_hi};
        meta["x_range"] = {g.x_lo, g.x_hi};
    }
    json j = {{"value", round_rate(r.rate.value)},
              {"feasible", r.feasible},
              {"residual", r.residual},
              {"residuals", r.residuals},
              {"witness", witness},
              {"grid_meta", meta}};
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    return j;
}

struct RateOpts {
    double x = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> beta, alpha_vec;
    double density = std::numeric_limits<double>::quiet_NaN();
    double level = std::numeric_limits<double>::quiet_NaN();
    int tests = 0;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

int cmd_rate(const std::string& kind, const Common& o, const RateOpts& r, std::ostream& out) {
    if (kind == "ipoi") {
        require(!std::isnan(r.x) && !std::isnan(r.alpha), "rate ipoi needs --x and --alpha");
        out << json{{"value", round_rate(i_poi(r.x, r.alpha).value)}}.dump() << '\n';
        return kOk;
    }
    if (kind == "entropy") {
        require(!r.beta.empty() && !r.alpha_vec.empty(), "rate entropy needs --beta and --alpha-vec");
        out << json{{"value", round_rate(relative_entropy(r.beta, r.alpha_vec).value)}}.dump() << '\n';
        return kOk;
    }
    const RunConfig c = config_from(o);
    if (kind == "cox") {
        require(!std::isnan(r.density), "rate cox needs --density");
        const auto mu = IntervalMeasure::uniform(c.window.lo, c.window.hi, r.density, 1);
        const RateValue v = cox_empirical_rate(mu, c.intensity);
        out << json{{"value", round_rate(v.value)},
                    {"witness", v.witness_theta ? json(*v.witness_theta) : json()}}
                   .dump()
            << '\n';
        return kOk;
    }
    if (kind == "occupancy" || kind == "departure") {
        const json rate_cfg = c.raw.contains("rate") ? c.raw["rate"] : json::object();
        const int m = r.tests > 0 ? r.tests : rate_cfg.value("tests", 8);
        std::optional<IntervalMeasure> nu;
        if (rate_cfg.contains("nu_csv")) {
            fs::path p = rate_cfg["nu_csv"].get<std::string>();
            if (p.is_relative()) p = fs::path(o.config).parent_path() / p;
            std::ifstream f(p);
            nu = read_interval_measure_csv(f);
        } else {
            double level = r.level;
            if (std::isnan(level) && rate_cfg.contains("level")) level = rate_cfg["level"].get<double>();
            require(!std::isnan(level), "rate " + kind + " needs --level or /rate/level");
            nu = IntervalMeasure::uniform(c.window.lo, c.window.hi, level);
        }
        const auto tests = hat_family(nu->lo(), nu->hi(), m);
        const auto res = kind == "occupancy" ? queue_occupancy_rate(*nu, c.intensity, c.service, c.grid, tests)
                                             : departure_rate(*nu, c.intensity, c.service, c.grid, tests);
        out << contraction_json(res).dump() << '\n';
        return kOk;
    }
    throw std::invalid_argument("unknown rate kind '" + kind + "' (ipoi, entropy, cox, occupancy, departure)");
}

struct LdpOpts {
    std::string experiment;
    std::string method = "exact";
    std::string n;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double q = std::numeric_limits<double>::quiet_NaN();
    double level = std::numeric_limits<double>::quiet_NaN();
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double tol = std::numeric_limits<double>::quiet_NaN();
    double fraction = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> rates, probs, bins;
    std::string service;
    std::size_t bin = 0;
    std::uint64_t max_total = 10'000'000;
};

std::unique_ptr<DecayExperiment> make_experiment(const LdpOpts& l, const Common& o, bool importance) {
    std::optional<RunConfig> cfg;
    if (!o.config.empty()) cfg = config_from(o);
    if (l.experiment == "poisson-tail") {
        require(!std::isnan(l.alpha) && !std::isnan(l.q), "poisson-tail needs --alpha and --q");
        return std::make_unique<PoissonTailExperiment>(l.alpha, l.q, importance);
    }
    if (l.experiment == "mixture-tail") {
        require(!std::isnan(l.level), "mixture-tail needs --level");
        if (cfg) return std::make_unique<MixtureTailExperiment>(cfg->intensity, l.level, importance);
        require(!l.rates.empty(), "mixture-tail needs --rates/--probs or --config");
        return std::make_unique<MixtureTailExperiment>(IntensityModel::finite_mixture(l.rates, l.probs), l.level,
                                                       importance);
    }
    if (l.experiment == "queue-tail") {
        require(!std::isnan(l.level), "queue-tail needs --level");
        if (cfg) {
            const double tol = !std::isnan(l.tol) ? l.tol : cfg->tol.value_or(std::numeric_limits<double>::quiet_NaN());
            require(!std::isnan(tol), "queue-tail needs a truncation tolerance (--tol or /truncation/tol)");
            return std::make_unique<QueueTailExperiment>(cfg->intensity, cfg->service, l.level, tol, importance);
        }
        require(!std::isnan(l.lambda) && !l.service.empty() && !std::isnan(l.tol),
                "queue-tail needs --lambda, --service and --tol (or --config)");
        return std::make_unique<QueueTailExperiment>(IntensityModel::deterministic(l.lambda),
                                                     ServiceDistribution::from_json(json::parse(l.service)), l.level,
                                                     l.tol, importance);
    }
    if (l.experiment == "sanov") {
        require(!l.bins.empty() && !std::isnan(l.fraction), "sanov needs --bins and --fraction");
        require(!importance, "sanov supports --method exact or mc");
        return std::make_unique<SanovExperiment>(l.bins, BinThreshold{l.bin, l.fraction, false});
    }
    throw std::invalid_argument("unknown experiment '" + l.experiment +
                                "' (poisson-tail, mixture-tail, queue-tail, sanov)");
}

int cmd_verify_ldp(const LdpOpts& l, const Common& o, std::ostream& out) {
    require(!l.n.empty(), "verify-ldp needs --n lo:hi:step");
    const auto grid = parse_n_grid(l.n);
    require(l.method == "exact" || l.method == "mc" || l.method == "is", "--method must be exact, mc or is");
    auto exp = make_experiment(l, o, l.method == "is");

    DecayEstimate est;
    if (l.method == "exact") {
        require(exp->exact_log_probability(grid.front()).has_value(),
                "experiment has no exact oracle for this configuration; use --method mc");
        est = exact_decay(grid, [&](int n) { return *exp->exact_log_probability(n); });
    } else {
        require(o.seed.has_value(), "--seed is required for Monte Carlo methods");
        require(o.samples.has_value(), "--samples is required for Monte Carlo methods");
        DecayOptions opt;
        opt.samples = *o.samples;
        opt.seed = *o.seed;
        opt.workers = resolve_workers(o.workers);
        opt.max_total = l.max_total;
        est = estimate_decay(*exp, grid, opt);
    }
    const double analytic = exp->analytic_rate();
    json summary = {{"experiment", exp->name()},
                    {"method", l.method},
                    {"fitted_rate", est.fitted_rate},
                    {"stderr", est.fit_stderr},
                    {"analytic_rate", std::isfinite(analytic) ? json(analytic) : json()},
                    {"ratio", std::isfinite(analytic) && analytic > 0 ? json(est.fitted_rate / analytic) : json()},
                    {"total_replications", est.total_replications}};
    if (l.method != "exact") summary["seed"] = est.seed;

    std::ostringstream csv;
    write_csv(csv, est);
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        write_text_file(dir / "decay.csv", csv.str());
        write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    } else {
        out << csv.str();
    }
    out << summary.dump() << '\n';
    return kOk;
}

struct OracleOpts {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double fraction = std::numeric_limits<double>::quiet_NaN();
    long long k = -1;
    int n = 0;
    bool lower = false;
    bool strict = false;
    std::size_t bin = 0;
    std::vector<double> rates, probs, alpha;
    std::string service;
};

int cmd_oracle(const std::string& kind, const OracleOpts& p, std::ostream& out) {
    const Tail tail = p.lower ? Tail::Lower : Tail::Upper;
    auto emit = [&](double lp) {
        out << json{{"probability", std::exp(lp)}, {"log_probability", std::isfinite(lp) ? json(lp) : json()}}.dump()
            << '\n';
    };
    if (kind == "poisson-tail") {
        require(!std::isnan(p.mean) && p.k >= 0, "oracle poisson-tail needs --mean and --k");
        emit(log_poisson_tail(p.mean, p.k, tail));
        return kOk;
    }
    if (kind == "mixed-poisson") {
        require(!p.rates.empty() && p.k >= 0, "oracle mixed-poisson needs --rates, --probs and --k");
        emit(log_mixed_poisson_tail(p.probs, p.rates, p.k, tail));
        return kOk;
    }
    if (kind == "mg-infty") {
        require(!std::isnan(p.lambda) && !p.service.empty() && p.n > 0,
                "oracle mg-infty needs --lambda, --service and --n");
        const auto pmf = exact_mg_infty_marginal(IntensityModel::deterministic(p.lambda),
                                                 ServiceDistribution::from_json(json::parse(p.service)), p.n);
        out << "k,p\n";
        for (std::size_t k = 0; k < pmf.size(); ++k) out << k << ',' << format_number(pmf[k]) << '\n';
        return kOk;
    }
    if (kind == "sanov") {
        require(!p.alpha.empty() && !std::isnan(p.fraction) && p.n >= 0,
                "oracle sanov needs --alpha, --fraction and --n");
        emit(log_exact_sanov_bins(p.alpha, {p.bin, p.fraction, p.strict}, p.n));
        return kOk;
    }
    throw std::invalid_argument("unknown oracle '" + kind + "' (poisson-tail, mixed-poisson, mg-infty, sanov)");
}

int cmd_diag(const std::string& kind, const Common& o, int levels, double scale, std::ostream& out,
             std::ostream& err) {
    if (kind == "validate") {
        require(!o.config.empty(), "diag validate needs --config");
        const auto issues = validate_config_file(o.config);
        if (issues.empty()) {
            out << "ok\n";
            return kOk;
        }
        for (const auto& i : issues) err << (i.pointer.empty() ? "/" : i.pointer) << ": " << i.message << '\n';
        return kUsage;
    }
    if (kind == "compactness") {
        const RunConfig c = config_from(o);
        require(levels >= 1, "--levels must be positive");
        const unsigned workers = resolve_workers(o.workers);
        const Truncation tr = config_truncation(c, c.service, c.n, c.intensity.max_rate());
        const auto samples = parallel_map<MarkedPointSet>(c.samples, workers, [&](std::size_t r) {
            Rng rng(c.seed, r);
            return sample_stationary(c.intensity, c.n, c.window, c.service, tr, rng);
        });
        double cut = c.service.tail_point(1e-9);
        for (const auto& s : samples)
            for (const auto& p : s.points) cut = std::max(cut, p.x);
        const auto region = WedgeRegion::truncated_wedge(tr.u, c.window.lo, c.window.hi);
        const Grid2D grid = Grid2D::over(bounding_box(region, cut * 1.001), c.grid.ns, c.grid.nx);
        std::vector<GridMeasure2D> mus;
        for (const auto& s : samples) {
            const auto mu = empirical_measure_2d(s, region, grid);
            std::vector<double> scaled(mu.masses().begin(), mu.masses().end());
            for (double& m : scaled) m /= static_cast<double>(c.n);
            mus.emplace_back(region, grid, std::move(scaled));
        }
        std::vector<WedgeRegion> K;
        std::vector<double> eps;
        const double step = (c.window.lo - tr.u) / static_cast<double>(levels);
        for (int i = 0; i < levels; ++i) {
            K.push_back(WedgeRegion::truncated_wedge(c.window.lo - step * (i + 1), c.window.lo, c.window.hi));
            eps.push_back(scale * std::exp(-static_cast<double>(i)));
        }
        const auto rep = compactness_diagnostic(mus, K, eps);
        out << json{{"samples", rep.samples},
                    {"level_fraction", rep.level_fraction},
                    {"joint_fraction", rep.joint_fraction},
                    {"epsilons", eps},
                    {"message", rep.message}}
                   .dump()
            << '\n';
        return kOk;
    }
    throw std::invalid_argument("unknown diag kind '" + kind + "' (validate, compactness)");
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"coxflux: Cox-driven infinite-server queues, rate functions and rare-event checks", "coxflux"};
    app.require_subcommand(1);

    Common common;
    std::uint64_t seed_value = 0, samples_value = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON run configuration");
        sub->add_option("--seed", seed_value, "master seed (overrides the config)");
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--workers", common.workers, "worker threads (default: COXFLUX_WORKERS or 1)");
        sub->add_option("--samples", samples_value, "replications");
    };

    auto* simulate = app.add_subcommand("simulate", "sample stationary marked point sets");
    add_common(simulate);
    auto* tandem = app.add_subcommand("tandem", "simulate a feed-forward tandem");
    add_common(tandem);

    RateOpts rate_opts;
    std::string rate_kind;
    auto* rate = app.add_subcommand("rate", "evaluate a rate function");
    add_common(rate);
    rate->add_option("kind", rate_kind, "ipoi | entropy | cox | occupancy | departure")->required();
    rate->add_option("--x", rate_opts.x);
    rate->add_option("--alpha", rate_opts.alpha);
    rate->add_option("--beta", rate_opts.beta)->delimiter(',');
    rate->add_option("--alpha-vec", rate_opts.alpha_vec)->delimiter(',');
    rate->add_option("--density", rate_opts.density);
    rate->add_option("--level", rate_opts.level);
    rate->add_option("--tests", rate_opts.tests, "number of hat test functions minus one");

    LdpOpts ldp;
    auto* verify = app.add_subcommand("verify-ldp", "fit decay rates and compare with the analytic rate");
    add_common(verify);
    verify->add_option("--experiment", ldp.experiment)->required();
    verify->add_option("--method", ldp.method, "exact | mc | is");
    verify->add_option("--n", ldp.n, "grid lo:hi:step or comma list");
    verify->add_option("--alpha", ldp.alpha);
    verify->add_option("--q", ldp.q);
    verify->add_option("--level", ldp.level);
    verify->add_option("--lambda", ldp.lambda);
    verify->add_option("--tol", ldp.tol);
    verify->add_option("--rates", ldp.rates)->delimiter(',');
    verify->add_option("--probs", ldp.probs)->delimiter(',');
    verify->add_option("--bins", ldp.bins)->delimiter(',');
    verify->add_option("--bin", ldp.bin);
    verify->add_option("--fraction", ldp.fraction);
    verify->add_option("--service", ldp.service, "service distribution as JSON");
    verify->add_option("--max-total", ldp.max_total, "replication cap");

    OracleOpts orc;
    std::string oracle_kind;
    auto* oracle = app.add_subcommand("oracle", "exact probabilities");
    oracle->add_option("kind", oracle_kind, "poisson-tail | mixed-poisson | mg-infty | sanov")->required();
    oracle->add_option("--mean", orc.mean);
    oracle->add_option("--k", orc.k);
    oracle->add_flag("--lower", orc.lower, "lower tail P(N <= k)");
    oracle->add_option("--rates", orc.rates)->delimiter(',');
    oracle->add_option("--probs", orc.probs)->delimiter(',');
    oracle->add_option("--lambda", orc.lambda);
    oracle->add_option("--service", orc.service);
    oracle->add_option("--n", orc.n);
    oracle->add_option("--alpha", orc.alpha)->delimiter(',');
    oracle->add_option("--bin", orc.bin);
    oracle->add_option("--fraction", orc.fraction);
    oracle->add_flag("--strict", orc.strict);

    std::string diag_kind;
    int levels = 4;
    double scale = 1.0;
    auto* diag = app.add_subcommand("diag", "configuration and tightness diagnostics");
    add_common(diag);
    diag->add_option("kind", diag_kind, "validate | compactness")->required();
    diag->add_option("--levels", levels);
    diag->add_option("--scale", scale);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }
    auto* active = app.get_subcommands().front();
    if (const auto* o = active->get_option_no_throw("--seed"); o && o->count()) common.seed = seed_value;
    if (const auto* o = active->get_option_no_throw("--samples"); o && o->count()) common.samples = samples_value;

    try {
        if (*simulate) return cmd_simulate(common, out);
        if (*tandem) return cmd_tandem(common, out);
        if (*rate) return cmd_rate(rate_kind, common, rate_opts, out);
        if (*verify) return cmd_verify_ldp(ldp, common, out);
        if (*oracle) return cmd_oracle(oracle_kind, orc, out);
        if (*diag) return cmd_diag(diag_kind, common, levels, scale, out, err);
    } catch (const ConfigError& e) {
        for (const auto& i : e.issues()) err << (i.pointer.empty() ? "/" : i.pointer) << ": " << i.message << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::logic_error& e) {  // invalid_argument, domain_error, out_of_range
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        return kNumerical;
    }
    err << app.help();
    return kUsage;
}

}  // namespace coxflux::cli
