#include "weylscat/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "weylscat/errors.hpp"

namespace weylscat {

namespace {

constexpr Complex kI{0.0, 1.0};

ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

// Scale for rank decisions on Im M: the full Weyl value, so that an Im M made
// of rounding noise is not promoted to a nontrivial fiber.
double fiber_scale(const ComplexMatrix& m) { return spectral_norm(m); }

// sqrt(Im M) after checking Im M is PSD relative to ||M||.
ComplexMatrix imag_root(const ComplexMatrix& m, double rtol) {
    const ComplexMatrix im = imag_part(m);
    if (im.rows() > 0 && min_eigenvalue(im) < -rtol * std::max(fiber_scale(m), 1e-300)) {
        throw NumericError(ErrorCode::NotPSD, "Im M(lambda) is not PSD within rtol");
    }
    return psd_sqrt(clamp_psd(im), rtol);
}

ComplexMatrix inverse_or_throw(const ComplexMatrix& a, ErrorCode code, const char* what) {
    auto x = guarded_solve(a, identity(a.rows()), kMaxWeylCondition);
    if (!x) throw NumericError(code, what);
    return *x;
}

void check_sizes(const ComplexMatrix& m, const DissipativeMatrix& d) {
    require_square(m, "Weyl value");
    require_finite(m, "Weyl value");
    if (m.rows() != d.dim()) throw NumericError(ErrorCode::BadParameters, "M and D differ in dimension");
}

}  // namespace

DissipativeMatrix::DissipativeMatrix(ComplexMatrix d, double rtol) : d_(std::move(d)) {
    require_square(d_, "dissipative matrix");
    require_finite(d_, "dissipative matrix");
    if (d_.rows() == 0) throw NumericError(ErrorCode::BadParameters, "empty dissipative matrix");
    const ComplexMatrix im = imag_part(d_);
    if (!(max_eigenvalue(im) <= -rtol * spectral_norm(d_))) {
        throw NumericError(ErrorCode::NotDissipative, "Im D must be negative definite");
    }
    root_ = psd_sqrt(-im, rtol);
}

ComplexMatrix scattering_on_basis(const ComplexMatrix& m, const ComplexMatrix& basis, double rtol) {
    require_square(m, "Weyl value");
    const Eigen::Index r = basis.cols();
    if (r == 0) return ComplexMatrix(0, 0);
    const ComplexMatrix root = imag_root(m, rtol);
    const ComplexMatrix minv = inverse_or_throw(m, ErrorCode::SingularWeylValue, "M(lambda) is singular");
    const ComplexMatrix inner = basis.adjoint() * root * minv * root * basis;
    return identity(r) - 2.0 * kI * inner;
}

ScatteringSample scattering_matrix(const ComplexMatrix& m, double rtol) {
    require_square(m, "Weyl value");
    require_finite(m, "Weyl value");
    const ComplexMatrix im = imag_part(m);
    const RangeBasis fiber = range_basis(im, rtol, fiber_scale(m));
    ScatteringSample out;
    out.rank = fiber.rank;
    out.fiber_basis = fiber.basis;
    out.s = scattering_on_basis(m, fiber.basis, rtol);
    out.unitarity_defect = out.rank > 0 ? defect_unitary(out.s) : 0.0;
    return out;
}

ComplexMatrix assemble_nonsimple(const ScatteringSample& s_hat, int extra_dim) {
    if (extra_dim < 0) throw NumericError(ErrorCode::BadParameters, "extra_dim must be >= 0");
    return block_diag(s_hat.s, identity(extra_dim));
}

ComplexMatrix coupled_scattering(const ComplexMatrix& m, const DissipativeMatrix& d) {
    check_sizes(m, d);
    const ComplexMatrix shifted = m - d.value();
    const ComplexMatrix im = imag_part(shifted);
    if (!(min_eigenvalue(im) > 0.0)) {
        throw NumericError(ErrorCode::NotDissipative, "Im(M - D) is not positive definite");
    }
    const ComplexMatrix root = psd_sqrt(im);
    const ComplexMatrix inv =
        inverse_or_throw(shifted, ErrorCode::SingularCoupledValue, "M - D is singular");
    return identity(m.rows()) - 2.0 * kI * root * inv * root;
}

CoupledBlocks coupled_blocks(const ComplexMatrix& m, const DissipativeMatrix& d, double rtol) {
    check_sizes(m, d);
    const Eigen::Index n = m.rows();
    const ComplexMatrix im = imag_part(m);
    const RangeBasis fiber = range_basis(im, rtol, fiber_scale(m));
    const ComplexMatrix root_m = imag_root(m, rtol);
    const ComplexMatrix& root_d = d.sqrt_neg_imag();
    const ComplexMatrix x =
        inverse_or_throw(d.value() - m, ErrorCode::SingularCoupledValue, "D - M is singular");
    const ComplexMatrix& q = fiber.basis;

    CoupledBlocks out;
    out.rank = fiber.rank;
    out.fiber_basis = q;
    // Full n x n products first, then fiber compression.
    const Eigen::Index r = fiber.rank;
    out.s11 = identity(r) + 2.0 * kI * (q.adjoint() * (root_m * x * root_m) * q);
    out.s12 = 2.0 * kI * (q.adjoint() * (root_m * x * root_d));
    out.s21 = 2.0 * kI * ((root_d * x * root_m) * q);
    out.s22 = identity(n) + 2.0 * kI * (root_d * x * root_d);

    out.full.resize(r + n, r + n);
    out.full.topLeftCorner(r, r) = out.s11;
    out.full.topRightCorner(r, n) = out.s12;
    out.full.bottomLeftCorner(n, r) = out.s21;
    out.full.bottomRightCorner(n, n) = out.s22;
    return out;
}

ComplexMatrix lax_phillips(const ComplexMatrix& m, const DissipativeMatrix& d) {
    check_sizes(m, d);
    const ComplexMatrix x =
        inverse_or_throw(d.value() - m, ErrorCode::SingularCoupledValue, "D - M is singular");
    const ComplexMatrix& root_d = d.sqrt_neg_imag();
    return identity(m.rows()) + 2.0 * kI * root_d * x * root_d;
}

AppendixCheck appendix_cross_check(const ComplexMatrix& m, double lambda, double rtol) {
    const ScatteringSample direct = scattering_matrix(m, rtol);
    const double w = 1.0 + lambda * lambda;

    AppendixCheck out;
    out.k = imag_part(m) / (std::numbers::pi * w);
    out.s_alt.lambda = lambda;
    out.s_alt.rank = direct.rank;
    out.s_alt.fiber_basis = direct.fiber_basis;
    if (direct.rank == 0) {
        out.z = ComplexMatrix(0, 0);
        out.s_alt.s = ComplexMatrix(0, 0);
        return out;
    }
    out.z = -inverse_or_throw(m, ErrorCode::SingularWeylValue, "M(lambda) is singular") / w;
    const ComplexMatrix root_k = psd_sqrt(clamp_psd(out.k), rtol);
    const ComplexMatrix& q = direct.fiber_basis;
    const Eigen::Index r = direct.rank;
    out.s_alt.s = identity(r) + 2.0 * std::numbers::pi * kI * (w * w) * (q.adjoint() * root_k * out.z * root_k * q);
    out.s_alt.unitarity_defect = defect_unitary(out.s_alt.s);
    out.discrepancy = (out.s_alt.s - direct.s).norm();
    return out;
}

}  // namespace weylscat
