#include "weylscat/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "weylscat/errors.hpp"

namespace weylscat {

namespace {

constexpr double kHermitianTol = 1e-10;

// Rotate each column so that its largest-modulus entry is real positive.
void fix_phases(ComplexMatrix& v) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            // Ties are broken toward the first index so the convention is deterministic.
            const double a = std::abs(v(i, j));
            if (a > best * (1.0 + 1e-12)) {
                best = a;
                imax = i;
            }
        }
        if (best > 0.0) {
            const Complex phase = std::conj(v(imax, j)) / std::abs(v(imax, j));
            v.col(j) *= phase;
            v(imax, j) = Complex(v(imax, j).real(), 0.0);
        }
    }
}

}  // namespace

void require_square(const ComplexMatrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw NumericError(ErrorCode::NotSquare, std::string(what) + " must be square");
    }
}

void require_finite(const ComplexMatrix& m, const char* what) {
    if (!m.allFinite()) {
        throw NumericError(ErrorCode::NonFinite, std::string(what) + " has non-finite entries");
    }
}

double hermitian_defect(const ComplexMatrix& h) { return (h - h.adjoint()).norm(); }

ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

ComplexMatrix imag_part(const ComplexMatrix& m) {
    return (m - m.adjoint()) / Complex(0.0, 2.0);
}

HermEig herm_eigh(const ComplexMatrix& h) {
    require_square(h, "herm_eigh input");
    require_finite(h, "herm_eigh input");
    const double scale = h.norm();
    if (hermitian_defect(h) > kHermitianTol * scale) {
        throw NumericError(ErrorCode::NotHermitian, "defect exceeds 1e-10 * ||H||_F");
    }
    HermEig out;
    if (h.rows() == 0) {
        out.eigenvalues.resize(0);
        out.eigenvectors.resize(0, 0);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(h));
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
    fix_phases(out.eigenvectors);
    return out;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& h, double rtol) {
    const HermEig eig = herm_eigh(h);
    const Eigen::Index n = eig.eigenvalues.size();
    if (n == 0) return ComplexMatrix(0, 0);
    const double dmax = eig.eigenvalues.cwiseAbs().maxCoeff();
    RealVector root(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = eig.eigenvalues(i);
        if (d < -rtol * dmax) {
            throw NumericError(ErrorCode::NotPSD, "eigenvalue below -rtol * max|d|");
        }
        root(i) = std::sqrt(std::max(d, 0.0));
    }
    const ComplexMatrix& v = eig.eigenvectors;
    ComplexMatrix r = v * root.cast<Complex>().asDiagonal() * v.adjoint();
    return hermitian_part(r);
}

RangeBasis range_basis(const ComplexMatrix& h, double rtol, std::optional<double> scale) {
    const HermEig eig = herm_eigh(h);
    const Eigen::Index n = eig.eigenvalues.size();
    RangeBasis out;
    out.basis.resize(n, 0);
    if (n == 0) return out;
    const double dmax = eig.eigenvalues.cwiseAbs().maxCoeff();
    const double ref = std::max(dmax, scale.value_or(0.0));
    if (eig.eigenvalues(0) < -rtol * ref) {
        throw NumericError(ErrorCode::NotPSD, "range_basis input is not PSD within rtol");
    }
    const double cut = rtol * ref;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        if (eig.eigenvalues(i) > cut && eig.eigenvalues(i) > 0.0) keep.push_back(i);
    }
    out.rank = static_cast<int>(keep.size());
    out.basis.resize(n, out.rank);
    for (int k = 0; k < out.rank; ++k) out.basis.col(k) = eig.eigenvectors.col(keep[k]);
    return out;
}

ComplexMatrix clamp_psd(const ComplexMatrix& h) {
    if (h.rows() == 0) return h;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(h));
    const RealVector d = solver.eigenvalues().cwiseMax(0.0);
    const ComplexMatrix& v = solver.eigenvectors();
    return hermitian_part(v * d.cast<Complex>().asDiagonal() * v.adjoint());
}

double min_eigenvalue(const ComplexMatrix& h) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(h), Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

double max_eigenvalue(const ComplexMatrix& h) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(h), Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(solver.eigenvalues().size() - 1);
}

double spectral_norm(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    return svd.singularValues()(0);
}

double smallest_singular_value(const ComplexMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

double defect_unitary(const ComplexMatrix& u) {
    require_square(u, "defect_unitary input");
    const auto n = u.rows();
    return (u.adjoint() * u - ComplexMatrix::Identity(n, n)).norm();
}

double defect_contraction(const ComplexMatrix& t) {
    require_square(t, "defect_contraction input");
    if (t.rows() == 0) return 0.0;
    return std::max(0.0, max_eigenvalue(t.adjoint() * t) - 1.0);
}

std::optional<ComplexMatrix> guarded_solve(const ComplexMatrix& a, const ComplexMatrix& b,
                                           double max_cond) {
    require_square(a, "guarded_solve matrix");
    if (a.rows() == 0) return ComplexMatrix(0, b.cols());
    if (!a.allFinite()) return std::nullopt;
    Eigen::PartialPivLU<ComplexMatrix> lu(a);
    const double rc = lu.rcond();
    if (!(rc > 1.0 / max_cond)) return std::nullopt;
    ComplexMatrix x = lu.solve(b);
    if (!x.allFinite()) return std::nullopt;
    return x;
}

ComplexMatrix block_diag(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out = ComplexMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

}  // namespace weylscat
