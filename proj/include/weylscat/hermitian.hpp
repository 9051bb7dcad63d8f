#pragma once

#include <complex>
#include <optional>

#include <Eigen/Dense>

namespace weylscat {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Relative tolerance used for every rank and PSD decision unless a caller
/// overrides it.
inline constexpr double kDefaultRtol = 1e-10;

struct HermEig {
    RealVector eigenvalues;     // ascending
    ComplexMatrix eigenvectors; // unitary, one eigenvector per column
};

struct RangeBasis {
    int rank = 0;
    ComplexMatrix basis;  // n x rank, orthonormal columns
};

// Checks
void require_square(const ComplexMatrix& m, const char* what);
void require_finite(const ComplexMatrix& m, const char* what);
double hermitian_defect(const ComplexMatrix& h);

ComplexMatrix hermitian_part(const ComplexMatrix& m);
/// (M - M*) / 2i, the Hermitian imaginary part.
ComplexMatrix imag_part(const ComplexMatrix& m);

/// Hermitian eigendecomposition with ascending eigenvalues.  Each eigenvector
/// is rotated so that its largest-modulus entry is real and positive.
HermEig herm_eigh(const ComplexMatrix& h);

/// Principal square root of a PSD matrix.  Eigenvalues in
/// [-rtol * max|d|, 0) are clamped to zero; anything more negative throws NotPSD.
ComplexMatrix psd_sqrt(const ComplexMatrix& h, double rtol = kDefaultRtol);

/// Orthonormal basis of the eigenspace of eigenvalues above rtol * scale,
/// columns ordered by descending eigenvalue.  `scale` defaults to the largest
/// eigenvalue modulus of h; passing a larger reference scale makes the rank
/// decision robust when h itself is pure rounding noise.
RangeBasis range_basis(const ComplexMatrix& h, double rtol = kDefaultRtol,
                       std::optional<double> scale = std::nullopt);

/// Projects a nearly-PSD Hermitian matrix onto the PSD cone.
ComplexMatrix clamp_psd(const ComplexMatrix& h);

double min_eigenvalue(const ComplexMatrix& h);
double max_eigenvalue(const ComplexMatrix& h);
double spectral_norm(const ComplexMatrix& m);
double smallest_singular_value(const ComplexMatrix& m);

/// ||U*U - I||_F
double defect_unitary(const ComplexMatrix& u);
/// max(0, lambda_max(T*T) - 1)
double defect_contraction(const ComplexMatrix& t);

/// Dense LU solve A X = B with a reciprocal condition estimate.  Returns
/// nullopt when the estimated condition number exceeds max_cond.
std::optional<ComplexMatrix> guarded_solve(const ComplexMatrix& a, const ComplexMatrix& b,
                                           double max_cond);

ComplexMatrix block_diag(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace weylscat
