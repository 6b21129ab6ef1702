#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "coxflux/decay.hpp"
#include "coxflux/measure.hpp"
#include "coxflux/occupancy_path.hpp"
#include "coxflux/point_process.hpp"

namespace coxflux {

// Decimal fixed notation with 12 significant digits ("0" for zero).
std::string format_number(double v);

// CSV writers and their inverses. Readers throw std::runtime_error with the
// offending line number on malformed input.
void write_csv(std::ostream& os, const IntervalMeasure& m);   // edge_lo,edge_hi,mass
void write_csv(std::ostream& os, const CountingMeasure& m);   // t,x,weight
void write_csv(std::ostream& os, const MarkedPointSet& pts);  // s,x
void write_csv(std::ostream& os, const OccupancyPath& path);  // t_break,level (terminal row at b)
void write_csv(std::ostream& os, const DecayEstimate& est);   // n,samples,hits,p_hat,ci_lo,ci_hi

IntervalMeasure read_interval_measure_csv(std::istream& is);
CountingMeasure read_counting_measure_csv(std::istream& is);
std::vector<SpaceTimePoint> read_points_csv(std::istream& is);
OccupancyPath read_occupancy_csv(std::istream& is);

// Sidecar describing a point set: arrival/certified windows, seed, leak bound.
nlohmann::json point_sidecar(const MarkedPointSet& pts, std::uint64_t seed);

// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

// Writes text to path, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace coxflux
