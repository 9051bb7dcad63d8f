#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "weylscat/herglotz.hpp"
#include "weylscat/io.hpp"
#include "weylscat/model_zoo.hpp"

namespace weylscat::cli {

enum class Subcommand { Forward, Dissipative, LaxPhillips, Inverse, Verify };

Subcommand subcommand_from_string(std::string_view s);
std::string_view to_string(Subcommand s);

struct Grid {
    double lambda_min = -2.0;
    double lambda_max = 2.0;
    int points = 101;

    std::vector<double> nodes() const;
};

struct Tolerances {
    double rtol = kDefaultRtol;
    double defect = 1e-8;      // per-row unitarity / contraction defect
    double roundtrip = 1e-3;   // inverse
    double failure_fraction = 0.05;
};

/// A model is either a named analytic spec or a file: a model description
/// ({"dim", "alpha", ...}) or tabulated W samples ({"dim", "samples"}).
using ModelSource = std::variant<ModelSpec, std::filesystem::path>;

struct RunConfig {
    Subcommand subcommand = Subcommand::Forward;
    ModelSource model;
    std::optional<nlohmann::json> d;  // matrix, or a model spec naming random_dissipative_D
    Grid grid;
    BoundarySchedule schedule;
    std::filesystem::path output;     // empty: stdout
    OutputFormat format = OutputFormat::Csv;
    /// Inverse only; defaults to <output stem>.model.json next to the report.
    std::filesystem::path model_output;
    Tolerances tolerances;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Parses and validates; throws NumericError(ConfigError).  Relative file
/// paths are resolved against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

struct RunResult {
    int exit_code = 0;
    std::string summary;
};

/// Exit codes: 0 success, 1 defects above threshold / too many failed rows /
/// failed invariants, 2 ConfigError, 3 ModelError.
RunResult run(const RunConfig& config, std::ostream& log);

}  // namespace weylscat::cli
