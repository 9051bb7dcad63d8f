#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "weylscat/herglotz.hpp"
#include "weylscat/hermitian.hpp"

namespace weylscat {

/// Contractive analytic W on the upper half-plane.  Every evaluation checks
/// ||W(eta)||_2 <= 1 + 1e-10 and throws NotContractive otherwise.
class ContractiveSampler {
public:
    using Evaluator = std::function<ComplexMatrix(Complex)>;

    ContractiveSampler(Eigen::Index dim, Evaluator eval, std::string label = {});

    static ContractiveSampler constant(ComplexMatrix c);
    /// W = I - 2i (M + i)^{-1} built from a Nevanlinna function.
    static ContractiveSampler from_weyl(WeylSampler m);

    ComplexMatrix operator()(Complex eta) const;
    Eigen::Index dim() const { return dim_; }
    const std::string& label() const { return label_; }

private:
    Eigen::Index dim_;
    Evaluator eval_;
    std::string label_;
};

/// M = i (I + W)(I - W)^{-1}.  Throws CayleySingular if I - W is numerically singular.
ComplexMatrix w_to_m(const ComplexMatrix& w);
/// W = I - 2i (M + i)^{-1}.
ComplexMatrix m_to_w(const ComplexMatrix& m);

/// Nevanlinna function attached to W, extended to C- by symmetry.
WeylSampler weyl_from_contractive(ContractiveSampler w);

// ---------------------------------------------------------------------------

struct StrictPoint {
    Complex eta;
    double min_eigenvalue = 0.0;  // of I - W*W
};

struct GrowthPoint {
    double y = 0.0;
    double ratio = 0.0;  // ||(I - W(iy))^{-1}||_2 / y
};

struct ProbeSeries {
    ComplexVector h;
    std::vector<double> values;  // y^{1/2} ||sqrt(I - W*W)(I - W)^{-1} h||
    double slope = 0.0;          // log-log least squares slope over the ladder
    bool diverging = false;
};

struct BoundaryDefect {
    double lambda = 0.0;
    double defect = 0.0;  // ||I - W*W||_F at lambda + i0
    bool converged = true;
};

struct AdmissibilityReport {
    std::vector<StrictPoint> strict_contraction;
    bool strict_pass = false;
    std::vector<GrowthPoint> growth_53;
    bool growth_pass = false;
    std::vector<ProbeSeries> dense_domain_55;
    bool dense_domain_diverges = false;  // every probe diverging
    std::vector<BoundaryDefect> boundary;
    double unitary_fraction = 0.0;
    bool inner_flag = false;
};

struct AdmissibilityOptions {
    std::vector<double> y_ladder{1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
    int probe_count = 8;
    std::vector<double> boundary_grid;
    BoundarySchedule schedule{};
    std::uint64_t seed = 0;
    /// Horizontal extent of the strict-contraction sample; taken from the
    /// boundary grid when that is non-empty.
    double strict_x_min = -5.0;
    double strict_x_max = 5.0;
};

AdmissibilityReport check_admissibility(const ContractiveSampler& w, const AdmissibilityOptions& opts = {});

// ---------------------------------------------------------------------------

struct RealizeOptions {
    AdmissibilityOptions admissibility{};
    StieltjesOptions stieltjes{};  // extend_tails is forced on
    std::vector<double> validation_heights{0.25, 0.5, 1.0, 2.0, 4.0};
    int validation_columns = 11;
};

struct RealizeResult {
    NevanlinnaMeasure model;
    double roundtrip_error = 0.0;
    AdmissibilityReport admissibility;
    std::vector<std::size_t> interpolated_nodes;
};

/// W -> M -> (alpha, Sigma) -> M' and the round-trip distance
/// max ||m_to_w(M'(eta)) - W(eta)||_F over a validation grid in C+.
/// Throws AdmissibilityFailed unless the strict contraction and growth checks pass.
RealizeResult realize(const ContractiveSampler& w, std::span<const double> support_grid,
                      const RealizeOptions& opts = {});

// ---------------------------------------------------------------------------

/// Matrix-valued AAA rational interpolant in barycentric form, used for
/// tabulated W samples.
class RationalInterpolant {
public:
    RationalInterpolant(std::vector<Complex> points, std::vector<ComplexMatrix> values,
                        double tol = 1e-13, int max_terms = 60);

    ComplexMatrix operator()(Complex z) const;
    std::size_t support_size() const { return support_.size(); }
    double fit_error() const { return fit_error_; }

private:
    std::vector<Complex> support_;
    std::vector<ComplexMatrix> support_values_;
    ComplexVector weights_;
    double fit_error_ = 0.0;
};

}  // namespace weylscat
