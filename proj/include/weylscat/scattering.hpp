#pragma once

#include "weylscat/hermitian.hpp"

namespace weylscat {

/// Weyl values whose LU condition estimate exceeds this are treated as
/// singular (spectral points of the perturbed operator).
inline constexpr double kMaxWeylCondition = 1e12;

/// Unitarity defect above which a sample is flagged.
inline constexpr double kBadSampleDefect = 1e-6;

/// Dissipative parameter D with strictly negative definite Im D.
class DissipativeMatrix {
public:
    /// Throws NotDissipative unless lambda_max(Im D) <= -rtol * ||D||.
    explicit DissipativeMatrix(ComplexMatrix d, double rtol = kDefaultRtol);

    const ComplexMatrix& value() const { return d_; }
    Eigen::Index dim() const { return d_.rows(); }
    /// sqrt(-Im D), positive definite.
    const ComplexMatrix& sqrt_neg_imag() const { return root_; }

private:
    ComplexMatrix d_;
    ComplexMatrix root_;
};

struct ScatteringSample {
    double lambda = 0.0;
    int rank = 0;
    ComplexMatrix fiber_basis;  // n x rank
    ComplexMatrix s;            // rank x rank
    double unitarity_defect = 0.0;
    double err_estimate = 0.0;

    bool flagged() const { return unitarity_defect > kBadSampleDefect; }
};

/// Selfadjoint scattering matrix on the fiber ran Im M:
///   S = I - 2i Q* sqrt(Im M) M^{-1} sqrt(Im M) Q.
/// Throws SingularWeylValue when M is numerically singular on a nontrivial fiber.
ScatteringSample scattering_matrix(const ComplexMatrix& m, double rtol = kDefaultRtol);

/// Same formula compressed with a caller-supplied orthonormal fiber basis.
ComplexMatrix scattering_on_basis(const ComplexMatrix& m, const ComplexMatrix& basis,
                                  double rtol = kDefaultRtol);

/// diag(S_hat, I_extra) for a non-simple intersection.
ComplexMatrix assemble_nonsimple(const ScatteringSample& s_hat, int extra_dim);

/// S = I - 2i sqrt(Im(M - D)) (M - D)^{-1} sqrt(Im(M - D)), full rank n.
ComplexMatrix coupled_scattering(const ComplexMatrix& m, const DissipativeMatrix& d);

struct CoupledBlocks {
    int rank = 0;
    ComplexMatrix fiber_basis;
    ComplexMatrix s11, s12, s21, s22;
    ComplexMatrix full;  // (rank + n) x (rank + n)
};

/// Block form of the coupled scattering matrix on H_lambda (+) C^n.
CoupledBlocks coupled_blocks(const ComplexMatrix& m, const DissipativeMatrix& d,
                             double rtol = kDefaultRtol);

/// S^LP = I + 2i sqrt(-Im D) (D - M)^{-1} sqrt(-Im D).
ComplexMatrix lax_phillips(const ComplexMatrix& m, const DissipativeMatrix& d);

struct AppendixCheck {
    ComplexMatrix k;            // Im M / (pi (1 + lambda^2))
    ComplexMatrix z;            // -(1 + lambda^2)^{-1} M^{-1}
    ScatteringSample s_alt;
    double discrepancy = 0.0;   // ||S_alt - S||_F on the common fiber
};

/// Rebuilds S from the spectral density K and the Z-function form and
/// compares it with scattering_matrix.
AppendixCheck appendix_cross_check(const ComplexMatrix& m, double lambda, double rtol = kDefaultRtol);

}  // namespace weylscat
