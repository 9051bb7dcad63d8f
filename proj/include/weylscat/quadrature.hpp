#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include "weylscat/errors.hpp"
#include "weylscat/hermitian.hpp"

namespace weylscat {

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_subdivisions = 20000;  // bisections beyond the initial panels
};

struct QuadratureResult {
    ComplexMatrix value;
    double error = 0.0;
    int panels = 0;
};

namespace detail {

// 15-point Kronrod nodes on [-1, 1] (non-negative half) with the embedded
// 7-point Gauss rule on the odd-indexed nodes.
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a = 0.0;
    double b = 0.0;
    ComplexMatrix value;
    double error = 0.0;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gk15(F& f, double a, double b, ComplexMatrix& scratch, Eigen::Index rows, Eigen::Index cols) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    ComplexMatrix kron = ComplexMatrix::Zero(rows, cols);
    ComplexMatrix gauss = ComplexMatrix::Zero(rows, cols);
    f(c, scratch);
    kron += kKronrodWeights[7] * scratch;
    gauss += kGaussWeights[3] * scratch;
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kKronrodNodes[i];
        f(c - dx, scratch);
        kron += kKronrodWeights[i] * scratch;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * scratch;
        f(c + dx, scratch);
        kron += kKronrodWeights[i] * scratch;
        if (i % 2 == 1) gauss += kGaussWeights[i / 2] * scratch;
    }
    Panel p;
    p.a = a;
    p.b = b;
    p.value = h * kron;
    p.error = std::abs(h) * (kron - gauss).norm();
    return p;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of a matrix-valued integrand.
///
/// `f(t, out)` writes the integrand at t into `out` (pre-sized rows x cols).
/// `breaks` are sorted panel boundaries; at least two.  The worst panel is
/// bisected until the summed GK15-G7 error estimate drops below
/// max(abs_tol, rel_tol * ||integral||_F).  Throws QuadratureFailure if the
/// subdivision budget runs out first.
template <class F>
QuadratureResult integrate_adaptive(F&& f, Eigen::Index rows, Eigen::Index cols,
                                    std::span<const double> breaks,
                                    const QuadratureOptions& opts = {}) {
    QuadratureResult out;
    out.value = ComplexMatrix::Zero(rows, cols);
    if (breaks.size() < 2) return out;

    ComplexMatrix scratch(rows, cols);
    std::priority_queue<detail::Panel> heap;
    ComplexMatrix total = ComplexMatrix::Zero(rows, cols);
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i])) continue;
        detail::Panel p = detail::gk15(f, breaks[i], breaks[i + 1], scratch, rows, cols);
        total += p.value;
        err += p.error;
        heap.push(std::move(p));
    }

    int splits = 0;
    while (!heap.empty()) {
        const double target = std::max(opts.abs_tol, opts.rel_tol * total.norm());
        if (err <= target) break;
        detail::Panel worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Panel cannot be split further in double precision.
            break;
        }
        if (splits >= opts.max_subdivisions) {
            throw NumericError(ErrorCode::QuadratureFailure,
                               "adaptive refinement exhausted its subdivision budget");
        }
        heap.pop();
        detail::Panel left = detail::gk15(f, worst.a, mid, scratch, rows, cols);
        detail::Panel right = detail::gk15(f, mid, worst.b, scratch, rows, cols);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(std::move(left));
        heap.push(std::move(right));
        ++splits;
    }

    // Re-sum to shed the drift of the running updates.
    out.panels = static_cast<int>(heap.size());
    err = 0.0;
    while (!heap.empty()) {
        out.value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    out.error = err;
    if (!out.value.allFinite()) {
        throw NumericError(ErrorCode::QuadratureFailure, "integrand produced non-finite values");
    }
    return out;
}

}  // namespace weylscat
