#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "weylscat/herglotz.hpp"
#include "weylscat/inverse.hpp"
#include "weylscat/scattering.hpp"

namespace weylscat {

// Matrices are stored row-major as a flat list of [re, im] pairs.  On input a
// bare number x means x * I and {"scalar": [re, im]} means c * I.
nlohmann::json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const nlohmann::json& j, Eigen::Index dim);
/// Flat list of n*n pairs; the dimension is inferred.
ComplexMatrix matrix_from_json(const nlohmann::json& j);
Complex complex_from_json(const nlohmann::json& j);

/// Model description file:
/// {"dim": n, "alpha": M, "atoms": [{"t": x, "gamma": M}],
///  "density": [{"a": x|"-inf", "b": x|"inf", "kind": "constant"|"poly"|"table"|"tail", "data": ...}]}
/// constant: data = M; poly: data = [M0, M1, ...] (coefficients of t^k);
/// table: data = {"t": [...], "values": [M, ...]} (a, b are the first/last node);
/// tail: data = {"A": M, "C": M} for A + C/t^2 on an unbounded interval.
nlohmann::json measure_to_json(const NevanlinnaMeasure& m);
NevanlinnaMeasure measure_from_json(const nlohmann::json& j);

NevanlinnaMeasure load_measure(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

/// Tabulated W file: {"dim": n, "samples": [{"eta": [re, im], "w": M}, ...]}
/// evaluated through a RationalInterpolant.
ContractiveSampler load_tabulated_w(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sample output

enum class SampleStatus { Ok, BadUnitarity, SingularWeylValue, NoConvergence, NumericalFailure };

std::string_view to_string(SampleStatus s);
SampleStatus sample_status_from_string(std::string_view s);

/// One output row: a scattering sample or any other matrix-per-lambda result
/// (coupled, Lax-Phillips).  `defect` is the unitarity defect for unitary
/// outputs and the contraction defect for Lax-Phillips rows.
struct SampleRow {
    double lambda = 0.0;
    int rank = 0;
    double err_estimate = 0.0;
    double defect = 0.0;
    SampleStatus status = SampleStatus::Ok;
    ComplexMatrix fiber_basis;  // may be empty
    ComplexMatrix s;            // rank x rank (empty on failure)
};

SampleRow to_row(const ScatteringSample& s, SampleStatus status = SampleStatus::Ok);

enum class OutputFormat { Csv, Json };
OutputFormat output_format_from_string(std::string_view s);

/// CSV: lambda, rank, err_estimate, unitarity_defect, then Re/Im of the S
/// entries in row-major fiber order (padded to max_size^2 entries), then
/// status.  All numbers use 17 significant digits.
void write_samples_csv(std::ostream& os, const std::vector<SampleRow>& rows, Eigen::Index max_size);
nlohmann::json samples_to_json(const std::vector<SampleRow>& rows, Eigen::Index dim);
std::vector<SampleRow> samples_from_json(const nlohmann::json& j);
std::vector<SampleRow> read_samples_csv(std::istream& is);

/// Writes rows to `path` in the given format; throws IoError.
void write_samples(const std::filesystem::path& path, const std::vector<SampleRow>& rows,
                   Eigen::Index dim, OutputFormat format);

std::string format_double(double x);

}  // namespace weylscat
