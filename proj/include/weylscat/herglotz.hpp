#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "weylscat/hermitian.hpp"
#include "weylscat/quadrature.hpp"

namespace weylscat {

// ---------------------------------------------------------------------------
// Measure data (alpha, Sigma) of
//
//   M(eta) = alpha + int ( 1/(t - eta) - t/(1 + t^2) ) dSigma(t)
//
// Sigma = sum of point masses + piecewise densities.  Densities live on
// bounded intervals, except that a constant density may extend to +-infinity;
// its contribution is then added in closed form.
// ---------------------------------------------------------------------------

struct Atom {
    double t = 0.0;
    ComplexMatrix weight;  // Hermitian PSD
};

class DensityPiece {
public:
    enum class Kind { Constant, Poly, Table, Tail };

    static DensityPiece constant(double a, double b, ComplexMatrix value);
    /// sum_k coeffs[k] * t^k on [a, b]
    static DensityPiece poly(double a, double b, std::vector<ComplexMatrix> coeffs);
    /// Piecewise-linear interpolation through (nodes[i], values[i]); the
    /// interval is [nodes.front(), nodes.back()].
    static DensityPiece table(std::vector<double> nodes, std::vector<ComplexMatrix> values);
    /// A + C / t^2 on [a, inf) with a > 0, or on (-inf, b] with b < 0.
    static DensityPiece tail(double a, double b, ComplexMatrix limit, ComplexMatrix decay);

    Kind kind() const { return kind_; }
    double a() const { return a_; }
    double b() const { return b_; }
    bool bounded() const;
    Eigen::Index dim() const;

    /// Density at t (zero outside [a, b]).
    void eval_into(double t, ComplexMatrix& out) const;
    ComplexMatrix operator()(double t) const;

    const std::vector<ComplexMatrix>& coeffs() const { return coeffs_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<ComplexMatrix>& values() const { return coeffs_; }

    /// Points where the density is not smooth (interval ends, table nodes).
    std::vector<double> breakpoints() const;

private:
    Kind kind_ = Kind::Constant;
    double a_ = 0.0;
    double b_ = 0.0;
    std::vector<ComplexMatrix> coeffs_;  // constant value, poly coefficients, table values or {A, C}
    std::vector<double> nodes_;
};

class NevanlinnaMeasure {
public:
    /// Validates: alpha Hermitian, atom weights PSD, densities PSD at sampled
    /// points, consistent dimensions.  Throws BadParameters / NotHermitian / NotPSD.
    NevanlinnaMeasure(ComplexMatrix alpha, std::vector<Atom> atoms, std::vector<DensityPiece> density);

    Eigen::Index dim() const { return alpha_.rows(); }
    const ComplexMatrix& alpha() const { return alpha_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<DensityPiece>& density() const { return density_; }

    /// Sum of all piece densities at t.
    ComplexMatrix density_at(double t) const;

private:
    ComplexMatrix alpha_;
    std::vector<Atom> atoms_;
    std::vector<DensityPiece> density_;
};

/// Evaluates the integral representation at eta (Im eta != 0).  Each bounded
/// piece is split as rho(c) * Log((b - eta)/(a - eta)) plus an adaptive GK
/// integral of the smooth remainder, c being Re eta clamped into [a, b].
ComplexMatrix eval_weyl(const NevanlinnaMeasure& model, Complex eta,
                        const QuadratureOptions& opts = {});

/// gamma(mu)^* gamma(lambda) = int dSigma(t) / ((t - conj(mu)) (t - lambda)),
/// the Gram matrix of the gamma-field of the L^2_Sigma model.
ComplexMatrix gamma_gram(const NevanlinnaMeasure& model, Complex lambda, Complex mu,
                         const QuadratureOptions& opts = {});

/// Total mass int (1 + t^2)^{-1} dSigma(t), which equals Im M(i).
ComplexMatrix weighted_mass(const NevanlinnaMeasure& model, const QuadratureOptions& opts = {});

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

class WeylSampler {
public:
    enum class Kind { ClosedForm, MeasureBacked };
    using Evaluator = std::function<ComplexMatrix(Complex)>;

    /// `upper` is only called with Im eta > 0; the lower half-plane is filled in
    /// by M(conj eta) = M(eta)^*.
    static WeylSampler closed_form(Eigen::Index dim, Evaluator upper, std::string label = {});
    static WeylSampler from_measure(std::shared_ptr<const NevanlinnaMeasure> model,
                                    QuadratureOptions opts = {});

    ComplexMatrix operator()(Complex eta) const;

    Eigen::Index dim() const { return dim_; }
    Kind kind() const { return kind_; }
    const std::string& label() const { return label_; }
    std::shared_ptr<const NevanlinnaMeasure> measure() const { return measure_; }

private:
    WeylSampler() = default;

    Eigen::Index dim_ = 0;
    Kind kind_ = Kind::ClosedForm;
    std::string label_;
    Evaluator upper_;
    std::shared_ptr<const NevanlinnaMeasure> measure_;
    QuadratureOptions opts_;
};

// ---------------------------------------------------------------------------
// Boundary values M(lambda + i0)
// ---------------------------------------------------------------------------

struct BoundarySchedule {
    double eps0 = 1e-2;
    double ratio = 0.5;
    int steps = 12;
    int extrapolation_order = 2;

    void validate() const;
    double eps(int k) const;
    double smallest_eps() const { return eps(steps - 1); }
};

struct BoundaryValue {
    ComplexMatrix value;
    double err_estimate = 0.0;
};

/// Richardson extrapolation of f(eps) to eps -> 0 along the geometric ladder.
/// Throws NoConvergence when the last extrapolants stop contracting.
BoundaryValue richardson_limit(const std::function<ComplexMatrix(double)>& f,
                               const BoundarySchedule& sched);

BoundaryValue boundary_limit(const WeylSampler& sampler, double lambda,
                             const BoundarySchedule& sched = {});

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

struct HerglotzPoint {
    Complex eta;
    double psd_defect = 0.0;       // max(0, -lambda_min(Im M(eta)))
    double symmetry_defect = 0.0;  // ||M(conj eta) - M(eta)^*||_F
};

struct HerglotzReport {
    std::vector<HerglotzPoint> points;
    double tolerance = 1e-8;
    bool pass = true;
};

HerglotzReport verify_herglotz(const WeylSampler& sampler, std::span<const Complex> grid,
                               double tolerance = 1e-8);

// ---------------------------------------------------------------------------
// Stieltjes inversion
// ---------------------------------------------------------------------------

struct StieltjesOptions {
    BoundarySchedule schedule{};
    double eps = 1e-4;             // atom scan height
    double atom_threshold = 1e-6;  // on eps * ||Im M(lambda + i eps)|| and on recovered weights
    bool extend_tails = false;     // continue edge densities to +-infinity as A + C/t^2
    double edge_fraction = 0.01;   // SupportNotCovered limit when tails are not extended
    QuadratureOptions quadrature{};
};

struct StieltjesResult {
    NevanlinnaMeasure measure;
    std::vector<std::size_t> interpolated_nodes;  // nodes whose density came from neighbours
    double edge_tail_fraction = 0.0;
};

/// Recovers (alpha, Sigma) from samples of M.  Atoms are located by scanning
/// eps * Im M on the grid and refining peaks; their weights are
/// lim eps * Im M(t + i eps).  After removing the atoms, the density at each
/// grid node is Im M(lambda + i0) / pi, tabulated with linear interpolation.
/// Grid intervals whose midpoint density disagrees with the interpolant are
/// bisected, so the table also carries nodes close to density jumps.
StieltjesResult stieltjes_invert(const WeylSampler& sampler, std::span<const double> support_grid,
                                 const StieltjesOptions& opts = {});

}  // namespace weylscat
