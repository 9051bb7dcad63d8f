#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "weylscat/herglotz.hpp"
#include "weylscat/inverse.hpp"
#include "weylscat/scattering.hpp"

namespace weylscat {

/// Named analytic model.  Recognised names:
///   constant_w            c (matrix/scalar, ||c|| < 1)      M = i(I + c)(I - c)^{-1}
///   uniform_density       a, b, height                      M = height * Log((b - eta)/(a - eta)) I
///   atomic                atoms [{t, gamma}], alpha         M = alpha + sum (1/(t - eta) - t/(1 + t^2)) Gamma
///   rational              poles [{s, width, residue}] or seed/count/rank, alpha
///   random_dissipative_D  seed, eps                         D = A - i(B*B + eps I)
struct ModelSpec {
    std::string name;
    nlohmann::json parameters = nlohmann::json::object();
    Eigen::Index dim = 1;
};

struct BuiltModel {
    std::optional<WeylSampler> sampler;
    std::shared_ptr<const NevanlinnaMeasure> measure;  // null for closed-form-only models
    std::optional<DissipativeMatrix> dissipative;
    std::optional<ComplexMatrix> constant_w;           // set for constant_w
    std::string notes;

    /// W for the inverse pipeline: the constant itself for constant_w,
    /// otherwise the Cayley transform of the sampler.
    ContractiveSampler contractive() const;
};

BuiltModel build_model(const ModelSpec& spec);

ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::json model_spec_to_json(const ModelSpec& spec);

/// Brute-force reference for eval_weyl: composite Simpson in the angle
/// variable t = Re eta + |Im eta| tan(theta), fixed `panels` per density piece
/// (no adaptivity), plus exact atom sums.  Unbounded constant pieces are
/// integrated the same way up to theta = +-pi/2.
ComplexMatrix quadrature_oracle(const NevanlinnaMeasure& model, Complex eta, int panels = 100000);

}  // namespace weylscat
