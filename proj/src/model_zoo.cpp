#include "weylscat/model_zoo.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "weylscat/errors.hpp"
#include "weylscat/io.hpp"

namespace weylscat {

namespace {

using nlohmann::json;
constexpr Complex kI{0.0, 1.0};
constexpr double kInf = std::numeric_limits<double>::infinity();

ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

double number_or(const json& p, const char* key, double fallback) {
    if (!p.contains(key)) return fallback;
    if (!p.at(key).is_number()) throw NumericError(ErrorCode::BadParameters, std::string(key) + " must be a number");
    return p.at(key).get<double>();
}

std::uint64_t seed_or(const json& p, std::uint64_t fallback) {
    if (!p.contains("seed")) return fallback;
    return p.at("seed").get<std::uint64_t>();
}

ComplexMatrix matrix_param(const json& p, const char* key, Eigen::Index n, const ComplexMatrix& fallback) {
    if (!p.contains(key)) return fallback;
    try {
        return matrix_from_json(p.at(key), n);
    } catch (const json::exception& e) {
        throw NumericError(ErrorCode::BadParameters, std::string(key) + ": " + e.what());
    }
}

ComplexMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    ComplexMatrix g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = Complex(normal(rng), normal(rng));
    return g;
}

BuiltModel build_constant_w(const ModelSpec& spec) {
    const Eigen::Index n = spec.dim;
    const ComplexMatrix c = matrix_param(spec.parameters, "c", n, ComplexMatrix::Zero(n, n));
    if (!(spectral_norm(c) < 1.0)) {
        throw NumericError(ErrorCode::BadParameters, "constant_w needs ||c|| < 1");
    }
    const ComplexMatrix m = w_to_m(c);
    BuiltModel out;
    out.constant_w = c;
    out.sampler = WeylSampler::closed_form(n, [m](Complex) { return m; }, "constant_w");
    const ComplexMatrix rho = clamp_psd(imag_part(m)) / std::numbers::pi;
    out.measure = std::make_shared<NevanlinnaMeasure>(
        hermitian_part(m), std::vector<Atom>{}, std::vector<DensityPiece>{DensityPiece::constant(-kInf, kInf, rho)});
    out.notes = "M = i(I + c)(I - c)^{-1} constant; Sigma has density Im M / pi on the whole line, alpha = Re M";
    return out;
}

BuiltModel build_uniform(const ModelSpec& spec) {
    const Eigen::Index n = spec.dim;
    const double a = number_or(spec.parameters, "a", -1.0);
    const double b = number_or(spec.parameters, "b", 1.0);
    const double h = number_or(spec.parameters, "height", 1.0);
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b) || !(h > 0.0) || !std::isfinite(h)) {
        throw NumericError(ErrorCode::BadParameters, "uniform_density needs finite a < b and height > 0");
    }
    BuiltModel out;
    out.sampler = WeylSampler::closed_form(
        n, [=](Complex eta) { return ComplexMatrix(h * std::log((b - eta) / (a - eta)) * identity(n)); },
        "uniform_density");
    const double shift = 0.5 * h * std::log((1.0 + b * b) / (1.0 + a * a));
    out.measure = std::make_shared<NevanlinnaMeasure>(
        ComplexMatrix(shift * identity(n)), std::vector<Atom>{},
        std::vector<DensityPiece>{DensityPiece::constant(a, b, ComplexMatrix(h * identity(n)))});
    out.notes = "M = height * Log((b - eta)/(a - eta)) I (principal branch); alpha = height/2 * log((1 + b^2)/(1 + a^2)) I";
    return out;
}

BuiltModel build_atomic(const ModelSpec& spec) {
    const Eigen::Index n = spec.dim;
    const json& p = spec.parameters;
    if (!p.contains("atoms") || !p.at("atoms").is_array() || p.at("atoms").empty()) {
        throw NumericError(ErrorCode::BadParameters, "atomic needs a non-empty atoms list");
    }
    std::vector<Atom> atoms;
    for (const auto& a : p.at("atoms")) {
        if (!a.contains("t")) throw NumericError(ErrorCode::BadParameters, "atom without position t");
        atoms.push_back(Atom{a.at("t").get<double>(), matrix_param(a, "gamma", n, identity(n))});
    }
    const ComplexMatrix alpha = matrix_param(p, "alpha", n, ComplexMatrix::Zero(n, n));
    BuiltModel out;
    out.measure = std::make_shared<NevanlinnaMeasure>(alpha, atoms, std::vector<DensityPiece>{});
    out.sampler = WeylSampler::closed_form(
        n,
        [alpha, atoms](Complex eta) {
            ComplexMatrix m = alpha;
            for (const auto& a : atoms) m += (1.0 / (a.t - eta) - a.t / (1.0 + a.t * a.t)) * a.weight;
            return m;
        },
        "atomic");
    out.notes = "purely atomic Sigma; M has real poles at the atom positions";
    return out;
}

struct Pole {
    Complex z;  // s - i width, in the lower half-plane
    ComplexMatrix residue;
};

BuiltModel build_rational(const ModelSpec& spec) {
    const Eigen::Index n = spec.dim;
    const json& p = spec.parameters;
    std::vector<Pole> poles;
    if (p.contains("poles")) {
        for (const auto& q : p.at("poles")) {
            const double s = number_or(q, "s", 0.0);
            const double width = number_or(q, "width", 1.0);
            if (!(width > 0.0)) throw NumericError(ErrorCode::BadParameters, "pole width must be positive");
            ComplexMatrix r = matrix_param(q, "residue", n, identity(n));
            if (min_eigenvalue(r) < -1e-12 * r.norm()) {
                throw NumericError(ErrorCode::BadParameters, "pole residue must be PSD");
            }
            poles.push_back(Pole{Complex(s, -width), hermitian_part(r)});
        }
    } else {
        std::mt19937_64 rng(seed_or(p, 1));
        const int count = static_cast<int>(number_or(p, "count", 2));
        const Eigen::Index rank = static_cast<Eigen::Index>(number_or(p, "rank", static_cast<double>(n)));
        if (count < 1 || rank < 1 || rank > n) throw NumericError(ErrorCode::BadParameters, "bad count/rank");
        std::uniform_real_distribution<double> centre(-1.0, 1.0), width(0.3, 1.0);
        for (int k = 0; k < count; ++k) {
            const double s = centre(rng);
            const double w = width(rng);
            const ComplexMatrix g = gaussian_matrix(n, rank, rng);
            poles.push_back(Pole{Complex(s, -w), hermitian_part(g * g.adjoint()) / static_cast<double>(rank)});
        }
    }
    if (poles.empty()) throw NumericError(ErrorCode::BadParameters, "rational needs at least one pole");
    const ComplexMatrix alpha = matrix_param(p, "alpha", n, ComplexMatrix::Zero(n, n));
    BuiltModel out;
    out.sampler = WeylSampler::closed_form(
        n,
        [alpha, poles](Complex eta) {
            ComplexMatrix m = alpha;
            for (const auto& q : poles) m += (1.0 / (q.z - eta) - (1.0 / (q.z - kI)).real()) * q.residue;
            return m;
        },
        "rational");
    out.notes =
        "M = alpha + sum R_k (1/(z_k - eta) - Re 1/(z_k - i)), Im z_k < 0, mirrored to C- by symmetry; "
        "Sigma has Lorentzian density sum R_k w_k / (pi ((t - s_k)^2 + w_k^2))";
    return out;
}

BuiltModel build_dissipative(const ModelSpec& spec) {
    const Eigen::Index n = spec.dim;
    std::mt19937_64 rng(seed_or(spec.parameters, 0));
    const double eps = number_or(spec.parameters, "eps", 0.1);
    if (!(eps > 0.0)) throw NumericError(ErrorCode::BadParameters, "eps must be positive");
    const ComplexMatrix g = gaussian_matrix(n, n, rng);
    const ComplexMatrix a = hermitian_part(g);
    const ComplexMatrix b = gaussian_matrix(n, n, rng);
    BuiltModel out;
    out.dissipative.emplace(ComplexMatrix(a - kI * (b.adjoint() * b + eps * identity(n))));
    out.notes = "D = A - i(B*B + eps I), A Hermitian Gaussian, B complex Gaussian";
    return out;
}

}  // namespace

ContractiveSampler BuiltModel::contractive() const {
    if (constant_w) return ContractiveSampler::constant(*constant_w);
    if (!sampler) throw NumericError(ErrorCode::ModelError, "model has no Weyl function");
    return ContractiveSampler::from_weyl(*sampler);
}

BuiltModel build_model(const ModelSpec& spec) {
    if (spec.dim < 1) throw NumericError(ErrorCode::BadParameters, "dim must be >= 1");
    if (!spec.parameters.is_object()) throw NumericError(ErrorCode::BadParameters, "parameters must be an object");
    if (spec.name == "constant_w") return build_constant_w(spec);
    if (spec.name == "uniform_density") return build_uniform(spec);
    if (spec.name == "atomic") return build_atomic(spec);
    if (spec.name == "rational") return build_rational(spec);
    if (spec.name == "random_dissipative_D") return build_dissipative(spec);
    throw NumericError(ErrorCode::UnknownModel, "unknown model '" + spec.name + "'");
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
    ModelSpec spec;
    if (!j.is_object() || !j.contains("name")) throw NumericError(ErrorCode::BadParameters, "model spec needs a name");
    spec.name = j.at("name").get<std::string>();
    if (j.contains("dim")) spec.dim = j.at("dim").get<Eigen::Index>();
    if (j.contains("parameters")) spec.parameters = j.at("parameters");
    return spec;
}

nlohmann::json model_spec_to_json(const ModelSpec& spec) {
    return json{{"name", spec.name}, {"dim", spec.dim}, {"parameters", spec.parameters}};
}

ComplexMatrix quadrature_oracle(const NevanlinnaMeasure& model, Complex eta, int panels) {
    if (eta.imag() == 0.0) throw NumericError(ErrorCode::RealAxisEvaluation, "Im eta must be nonzero");
    if (panels < 2) panels = 2;
    if (panels % 2) ++panels;
    const Eigen::Index n = model.dim();
    ComplexMatrix m = model.alpha();
    for (const auto& atom : model.atoms()) {
        m += (1.0 / (atom.t - eta) - atom.t / (1.0 + atom.t * atom.t)) * atom.weight;
    }
    const double x0 = eta.real();
    const double y = std::abs(eta.imag());
    const double half_pi = 0.5 * std::numbers::pi;
    ComplexMatrix rho(n, n);
    for (const auto& piece : model.density()) {
        const double th0 = std::isinf(piece.a()) ? -half_pi : std::atan((piece.a() - x0) / y);
        const double th1 = std::isinf(piece.b()) ? half_pi : std::atan((piece.b() - x0) / y);
        auto f = [&](double th) -> ComplexMatrix {
            if (std::abs(th) >= half_pi) return (eta / y) * piece.coeffs().front();
            const double t = x0 + y * std::tan(th);
            const double c = std::cos(th);
            piece.eval_into(std::clamp(t, piece.a(), piece.b()), rho);
            const Complex kern = (1.0 + t * eta) / ((t - eta) * (1.0 + t * t));
            return (kern * (y / (c * c))) * rho;
        };
        const double h = (th1 - th0) / panels;
        ComplexMatrix sum = f(th0) + f(th1);
        for (int k = 1; k < panels; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(th0 + k * h);
        m += (h / 3.0) * sum;
    }
    return m;
}

}  // namespace weylscat
