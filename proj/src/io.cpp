#include "weylscat/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "weylscat/errors.hpp"

namespace weylscat {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json endpoint_to_json(double x) {
    if (std::isinf(x)) return x < 0 ? json("-inf") : json("inf");
    return x;
}

double endpoint_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "-inf") return -kInf;
        if (s == "inf" || s == "+inf") return kInf;
        throw NumericError(ErrorCode::BadParameters, "bad endpoint '" + s + "'");
    }
    return j.get<double>();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

// JSON has no NaN; the writer emits null for it.
double number_or_nan(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json matrix_to_json(const ComplexMatrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    return out;
}

Complex complex_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {j.at(0).get<double>(), j.at(1).get<double>()};
    throw NumericError(ErrorCode::BadParameters, "complex value must be a number or [re, im]");
}

ComplexMatrix matrix_from_json(const json& j, Eigen::Index dim) {
    if (j.is_number()) return j.get<double>() * ComplexMatrix::Identity(dim, dim);
    if (j.is_object() && j.contains("scalar")) {
        return complex_from_json(j.at("scalar")) * ComplexMatrix::Identity(dim, dim);
    }
    if (!j.is_array() || j.size() != static_cast<std::size_t>(dim * dim)) {
        throw NumericError(ErrorCode::BadParameters,
                           "matrix must be a flat list of " + std::to_string(dim * dim) + " [re, im] pairs");
    }
    ComplexMatrix m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index k = 0; k < dim; ++k) m(i, k) = complex_from_json(j.at(i * dim + k));
    return m;
}

ComplexMatrix matrix_from_json(const json& j) {
    if (!j.is_array()) throw NumericError(ErrorCode::BadParameters, "matrix must be a list");
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(j.size()))));
    if (n * n != static_cast<Eigen::Index>(j.size())) {
        throw NumericError(ErrorCode::NotSquare, "matrix entry count is not a square");
    }
    return matrix_from_json(j, n);
}

json measure_to_json(const NevanlinnaMeasure& m) {
    json atoms = json::array();
    for (const auto& a : m.atoms()) atoms.push_back({{"t", a.t}, {"gamma", matrix_to_json(a.weight)}});
    json pieces = json::array();
    for (const auto& p : m.density()) {
        json piece{{"a", endpoint_to_json(p.a())}, {"b", endpoint_to_json(p.b())}};
        switch (p.kind()) {
            case DensityPiece::Kind::Constant:
                piece["kind"] = "constant";
                piece["data"] = matrix_to_json(p.coeffs().front());
                break;
            case DensityPiece::Kind::Poly: {
                piece["kind"] = "poly";
                json cs = json::array();
                for (const auto& c : p.coeffs()) cs.push_back(matrix_to_json(c));
                piece["data"] = cs;
                break;
            }
            case DensityPiece::Kind::Tail:
                piece["kind"] = "tail";
                piece["data"] = {{"A", matrix_to_json(p.coeffs()[0])}, {"C", matrix_to_json(p.coeffs()[1])}};
                break;
            case DensityPiece::Kind::Table: {
                piece["kind"] = "table";
                json vs = json::array();
                for (const auto& v : p.values()) vs.push_back(matrix_to_json(v));
                piece["data"] = {{"t", p.nodes()}, {"values", vs}};
                break;
            }
        }
        pieces.push_back(piece);
    }
    return {{"dim", m.dim()}, {"alpha", matrix_to_json(m.alpha())}, {"atoms", atoms}, {"density", pieces}};
}

NevanlinnaMeasure measure_from_json(const json& j) {
    try {
        const auto n = j.at("dim").get<Eigen::Index>();
        if (n < 1) throw NumericError(ErrorCode::BadParameters, "dim must be >= 1");
        const ComplexMatrix alpha =
            j.contains("alpha") ? matrix_from_json(j.at("alpha"), n) : ComplexMatrix::Zero(n, n);
        std::vector<Atom> atoms;
        if (j.contains("atoms")) {
            for (const auto& a : j.at("atoms")) atoms.push_back(Atom{a.at("t").get<double>(), matrix_from_json(a.at("gamma"), n)});
        }
        std::vector<DensityPiece> density;
        if (j.contains("density")) {
            for (const auto& p : j.at("density")) {
                const auto kind = p.at("kind").get<std::string>();
                if (kind == "constant") {
                    density.push_back(DensityPiece::constant(endpoint_from_json(p.at("a")), endpoint_from_json(p.at("b")),
                                                             matrix_from_json(p.at("data"), n)));
                } else if (kind == "poly") {
                    std::vector<ComplexMatrix> cs;
                    for (const auto& c : p.at("data")) cs.push_back(matrix_from_json(c, n));
                    density.push_back(
                        DensityPiece::poly(endpoint_from_json(p.at("a")), endpoint_from_json(p.at("b")), std::move(cs)));
                } else if (kind == "tail") {
                    density.push_back(DensityPiece::tail(endpoint_from_json(p.at("a")), endpoint_from_json(p.at("b")),
                                                         matrix_from_json(p.at("data").at("A"), n),
                                                         matrix_from_json(p.at("data").at("C"), n)));
                } else if (kind == "table") {
                    std::vector<ComplexMatrix> vs;
                    for (const auto& v : p.at("data").at("values")) vs.push_back(matrix_from_json(v, n));
                    density.push_back(
                        DensityPiece::table(p.at("data").at("t").get<std::vector<double>>(), std::move(vs)));
                } else {
                    throw NumericError(ErrorCode::BadParameters, "unknown density kind '" + kind + "'");
                }
            }
        }
        return NevanlinnaMeasure(alpha, std::move(atoms), std::move(density));
    } catch (const json::exception& e) {
        throw NumericError(ErrorCode::BadParameters, std::string("model file: ") + e.what());
    }
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NumericError(ErrorCode::IoError, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw NumericError(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
}

void save_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw NumericError(ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw NumericError(ErrorCode::IoError, "write failed for " + path.string());
}

NevanlinnaMeasure load_measure(const std::filesystem::path& path) { return measure_from_json(load_json(path)); }

ContractiveSampler load_tabulated_w(const std::filesystem::path& path) {
    const json j = load_json(path);
    try {
        const auto n = j.at("dim").get<Eigen::Index>();
        std::vector<Complex> pts;
        std::vector<ComplexMatrix> vals;
        for (const auto& s : j.at("samples")) {
            pts.push_back(complex_from_json(s.at("eta")));
            vals.push_back(matrix_from_json(s.at("w"), n));
        }
        if (pts.empty()) throw NumericError(ErrorCode::BadParameters, "tabulated W has no samples");
        auto interp = std::make_shared<RationalInterpolant>(std::move(pts), std::move(vals));
        return ContractiveSampler(n, [interp](Complex eta) { return (*interp)(eta); }, "tabulated");
    } catch (const json::exception& e) {
        throw NumericError(ErrorCode::BadParameters, std::string("tabulated W: ") + e.what());
    }
}

std::string_view to_string(SampleStatus s) {
    switch (s) {
        case SampleStatus::Ok: return "ok";
        case SampleStatus::BadUnitarity: return "bad_unitarity";
        case SampleStatus::SingularWeylValue: return "singular_weyl_value";
        case SampleStatus::NoConvergence: return "no_convergence";
        case SampleStatus::NumericalFailure: return "numerical_failure";
    }
    return "numerical_failure";
}

SampleStatus sample_status_from_string(std::string_view s) {
    for (auto st : {SampleStatus::Ok, SampleStatus::BadUnitarity, SampleStatus::SingularWeylValue,
                    SampleStatus::NoConvergence, SampleStatus::NumericalFailure}) {
        if (to_string(st) == s) return st;
    }
    throw NumericError(ErrorCode::BadParameters, "unknown status '" + std::string(s) + "'");
}

SampleRow to_row(const ScatteringSample& s, SampleStatus status) {
    if (status == SampleStatus::Ok && s.flagged()) status = SampleStatus::BadUnitarity;
    return SampleRow{s.lambda, s.rank, s.err_estimate, s.unitarity_defect, status, s.fiber_basis, s.s};
}

OutputFormat output_format_from_string(std::string_view s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    throw NumericError(ErrorCode::ConfigError, "format must be csv or json");
}

void write_samples_csv(std::ostream& os, const std::vector<SampleRow>& rows, Eigen::Index max_size) {
    os << "lambda,rank,err_estimate,unitarity_defect";
    for (Eigen::Index k = 0; k < max_size * max_size; ++k) os << ",s" << k << "_re,s" << k << "_im";
    os << ",status\n";
    for (const auto& r : rows) {
        os << format_double(r.lambda) << ',' << r.rank << ',' << format_double(r.err_estimate) << ','
           << format_double(r.defect);
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < r.s.rows(); ++i)
            for (Eigen::Index j = 0; j < r.s.cols(); ++j, ++k)
                os << ',' << format_double(r.s(i, j).real()) << ',' << format_double(r.s(i, j).imag());
        for (; k < max_size * max_size; ++k) os << ",,";
        os << ',' << to_string(r.status) << '\n';
    }
}

json samples_to_json(const std::vector<SampleRow>& rows, Eigen::Index dim) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"lambda", r.lambda},
                       {"rank", r.rank},
                       {"err_estimate", r.err_estimate},
                       {"unitarity_defect", r.defect},
                       {"status", std::string(to_string(r.status))},
                       {"fiber_basis", {{"rows", r.fiber_basis.rows()},
                                        {"cols", r.fiber_basis.cols()},
                                        {"data", [&] {
                                             json d = json::array();
                                             for (Eigen::Index i = 0; i < r.fiber_basis.rows(); ++i)
                                                 for (Eigen::Index j = 0; j < r.fiber_basis.cols(); ++j)
                                                     d.push_back({r.fiber_basis(i, j).real(), r.fiber_basis(i, j).imag()});
                                             return d;
                                         }()}}},
                       {"s", matrix_to_json(r.s)}});
    }
    return {{"dim", dim}, {"samples", out}};
}

std::vector<SampleRow> samples_from_json(const json& j) {
    std::vector<SampleRow> rows;
    try {
        for (const auto& s : j.at("samples")) {
            SampleRow r;
            r.lambda = s.at("lambda").get<double>();
            r.rank = s.at("rank").get<int>();
            r.err_estimate = number_or_nan(s.at("err_estimate"));
            r.defect = number_or_nan(s.at("unitarity_defect"));
            r.status = sample_status_from_string(s.at("status").get<std::string>());
            const auto& fb = s.at("fiber_basis");
            const auto br = fb.at("rows").get<Eigen::Index>(), bc = fb.at("cols").get<Eigen::Index>();
            r.fiber_basis.resize(br, bc);
            for (Eigen::Index i = 0; i < br; ++i)
                for (Eigen::Index k = 0; k < bc; ++k) r.fiber_basis(i, k) = complex_from_json(fb.at("data").at(i * bc + k));
            r.s = s.at("s").empty() ? ComplexMatrix() : matrix_from_json(s.at("s"));
            rows.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw NumericError(ErrorCode::BadParameters, std::string("samples: ") + e.what());
    }
    return rows;
}

std::vector<SampleRow> read_samples_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw NumericError(ErrorCode::IoError, "empty CSV");
    std::vector<SampleRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() < 5) throw NumericError(ErrorCode::IoError, "short CSV row");
        SampleRow r;
        r.lambda = std::stod(cells[0]);
        r.rank = std::stoi(cells[1]);
        r.err_estimate = std::stod(cells[2]);
        r.defect = std::stod(cells[3]);
        r.status = sample_status_from_string(cells.back());
        // S may be larger than rank (coupled rows), so size it from the filled cells
        std::size_t filled = 0;
        while (4 + filled < cells.size() - 1 && !cells[4 + filled].empty()) ++filled;
        const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(0.5 * static_cast<double>(filled))));
        if (static_cast<std::size_t>(2 * n * n) != filled) throw NumericError(ErrorCode::IoError, "CSV row has a partial S");
        r.s.resize(n, n);
        for (Eigen::Index k = 0; k < n * n; ++k)
            r.s(k / n, k % n) = Complex(std::stod(cells[4 + 2 * k]), std::stod(cells[5 + 2 * k]));
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_samples(const std::filesystem::path& path, const std::vector<SampleRow>& rows, Eigen::Index dim,
                   OutputFormat format) {
    if (format == OutputFormat::Json) {
        save_json(path, samples_to_json(rows, dim));
        return;
    }
    std::ofstream out(path);
    if (!out) throw NumericError(ErrorCode::IoError, "cannot write " + path.string());
    Eigen::Index max_size = 0;
    for (const auto& r : rows) max_size = std::max(max_size, r.s.rows());
    write_samples_csv(out, rows, std::max(max_size, dim));
    if (!out) throw NumericError(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace weylscat
