#include "coxflux/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace coxflux {

std::string format_number(double v) {
    if (v == 0.0) return "0";
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    const int mag = static_cast<int>(std::floor(std::log10(std::abs(v))));
    const int decimals = std::clamp(11 - mag, 0, 340);
    std::ostringstream os;
    os << std::fixed << std::setprecision(decimals) << v;
    std::string s = os.str();
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    return s == "-0" ? "0" : s;
}

namespace {

std::vector<std::vector<double>> read_rows(std::istream& is, const std::string& header, std::size_t width) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: missing header '" + header + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw std::runtime_error("csv: expected header '" + header + "', got '" + line + "'");
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || *end != '\0')
                throw std::runtime_error("csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != width)
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                                     " fields");
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

void write_csv(std::ostream& os, const IntervalMeasure& m) {
    os << "edge_lo,edge_hi,mass\n";
    for (std::size_t i = 0; i < m.bins(); ++i)
        os << format_number(m.edges()[i]) << ',' << format_number(m.edges()[i + 1]) << ','
           << format_number(m.masses()[i]) << '\n';
}

void write_csv(std::ostream& os, const CountingMeasure& m) {
    os << "t,x,weight\n";
    for (const auto& a : m.atoms()) os << format_number(a.t) << ',' << format_number(a.x) << ',' << a.weight << '\n';
}

void write_csv(std::ostream& os, const MarkedPointSet& pts) {
    os << "s,x\n";
    for (const auto& p : pts.points) os << format_number(p.s) << ',' << format_number(p.x) << '\n';
}

void write_csv(std::ostream& os, const OccupancyPath& path) {
    os << "t_break,level\n";
    for (std::size_t i = 0; i < path.segments(); ++i)
        os << format_number(path.breakpoints()[i]) << ',' << format_number(path.levels()[i]) << '\n';
    os << format_number(path.b()) << ',' << format_number(path.levels().back()) << '\n';
}

void write_csv(std::ostream& os, const DecayEstimate& est) {
    os << "n,samples,hits,p_hat,ci_lo,ci_hi\n";
    for (const auto& p : est.points)
        os << p.n << ',' << p.samples << ',' << p.hits << ',' << format_number(p.p_hat) << ','
           << format_number(p.ci_lo) << ',' << format_number(p.ci_hi) << '\n';
}

IntervalMeasure read_interval_measure_csv(std::istream& is) {
    const auto rows = read_rows(is, "edge_lo,edge_hi,mass", 3);
    if (rows.empty()) throw std::runtime_error("csv: interval measure needs at least one bin");
    std::vector<double> edges{rows.front()[0]}, masses;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i][0] != rows[i - 1][1])
            throw std::runtime_error("csv line " + std::to_string(i + 2) + ": bins are not contiguous");
        edges.push_back(rows[i][1]);
        masses.push_back(rows[i][2]);
    }
    return IntervalMeasure(std::move(edges), std::move(masses));
}

CountingMeasure read_counting_measure_csv(std::istream& is) {
    std::vector<Atom> atoms;
    for (const auto& r : read_rows(is, "t,x,weight", 3))
        atoms.push_back({r[0], r[1], static_cast<std::int64_t>(std::llround(r[2]))});
    return CountingMeasure(std::move(atoms));
}

std::vector<SpaceTimePoint> read_points_csv(std::istream& is) {
    std::vector<SpaceTimePoint> pts;
    for (const auto& r : read_rows(is, "s,x", 2)) pts.push_back({r[0], r[1]});
    return pts;
}

OccupancyPath read_occupancy_csv(std::istream& is) {
    const auto rows = read_rows(is, "t_break,level", 2);
    if (rows.size() < 2) throw std::runtime_error("csv: occupancy path needs a terminal row");
    std::vector<double> breaks, levels;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        breaks.push_back(rows[i][0]);
        levels.push_back(rows[i][1]);
    }
    const double a = breaks.front();  // read before the vector is moved into the call
    return OccupancyPath(a, rows.back()[0], std::move(breaks), std::move(levels));
}

nlohmann::json point_sidecar(const MarkedPointSet& pts, std::uint64_t seed) {
    return {{"arrival_window", {pts.arrivals.lo, pts.arrivals.hi}},
            {"window", {pts.certified.lo, pts.certified.hi}},
            {"seed", seed},
            {"leak_bound", pts.leak_bound},
            {"points", pts.size()}};
}

std::string config_hash(const nlohmann::json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace coxflux
