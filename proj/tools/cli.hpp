#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coxflux/intensity.hpp"
#include "coxflux/measure.hpp"
#include "coxflux/queue_maps.hpp"
#include "coxflux/rate_functions.hpp"
#include "coxflux/service.hpp"

namespace coxflux::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

struct ConfigIssue {
    std::string pointer;  // JSON pointer, e.g. /intensity/probs
    std::string message;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    ConfigError(std::string pointer, std::string message);
    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

struct RunConfig {
    nlohmann::json raw;
    std::uint64_t seed = 0;
    int n = 1;
    std::vector<int> n_grid;
    Interval window;
    IntensityModel intensity = IntensityModel::deterministic(1.0);
    ServiceDistribution service = ServiceDistribution::exponential(1.0);
    std::optional<double> tol;  // truncation tolerance
    std::optional<double> u;    // explicit truncation start, overrides tol
    std::uint64_t samples = 1;
    ContractionGrid grid;
    std::vector<TandemStage> stages;
    std::optional<std::string> out;
};

// Full schema and cross-field check. Relative file references resolve
// against base_dir. An empty result means the document is valid.
std::vector<ConfigIssue> validate_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
std::vector<ConfigIssue> validate_config_file(const std::filesystem::path& path);

// Parses a validated document; throws ConfigError otherwise.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Entry point behind the coxflux executable. args excludes the program name.
// Returns 0 on success, 1 on usage/validation errors, 2 on numerical failures.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coxflux::cli
