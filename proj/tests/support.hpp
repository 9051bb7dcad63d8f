#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <doctest.h>

#include "weylscat/errors.hpp"
#include "weylscat/hermitian.hpp"

namespace testing {

using weylscat::Complex;
using weylscat::ComplexMatrix;

inline ComplexMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    ComplexMatrix g(rows, cols);
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = Complex(normal(rng), normal(rng));
    return g;
}

inline ComplexMatrix random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
    const ComplexMatrix g = random_matrix(n, n, rng);
    return 0.5 * (g + g.adjoint());
}

inline ComplexMatrix random_psd(Eigen::Index n, Eigen::Index rank, std::mt19937_64& rng) {
    const ComplexMatrix g = random_matrix(n, rank, rng);
    return g * g.adjoint();
}

/// Strict contraction with spectral norm exactly `norm` (< 1).
inline ComplexMatrix random_contraction(Eigen::Index n, double norm, std::mt19937_64& rng) {
    const ComplexMatrix g = random_matrix(n, n, rng);
    Eigen::JacobiSVD<ComplexMatrix> svd(g);
    return (norm / svd.singularValues()(0)) * g;
}

inline ComplexMatrix random_unitary(Eigen::Index n, std::mt19937_64& rng) {
    return Eigen::HouseholderQR<ComplexMatrix>(random_matrix(n, n, rng)).householderQ();
}

inline ComplexMatrix scalar(Complex c, Eigen::Index n = 1) { return c * ComplexMatrix::Identity(n, n); }

/// Composite Simpson in theta with t = x0 + y tan(theta): a brute-force
/// integral over [a, b] (possibly infinite) for integrands decaying at least
/// like 1/t^2.  At an infinite end the substituted integrand has a finite
/// limit, which is taken by evaluating just inside pi/2.
inline Complex tan_simpson(const std::function<Complex(double)>& f, double a, double b, double x0, double y,
                           int panels = 200000) {
    const double th0 = std::isinf(a) ? -0.5 * std::numbers::pi : std::atan((a - x0) / y);
    const double th1 = std::isinf(b) ? 0.5 * std::numbers::pi : std::atan((b - x0) / y);
    const double h = (th1 - th0) / panels;
    auto g = [&](double th) -> Complex {
        const double edge = 0.5 * std::numbers::pi - 1e-9;
        th = std::clamp(th, -edge, edge);
        const double c = std::cos(th);
        return f(x0 + y * std::tan(th)) * (y / (c * c));
    };
    Complex sum = g(th0) + g(th1);
    for (int k = 1; k < panels; ++k) sum += (k % 2 ? 4.0 : 2.0) * g(th0 + k * h);
    return sum * (h / 3.0);
}

}  // namespace testing

#define CHECK_CODE(expr, ec)                                             \
    do {                                                                 \
        bool thrown_ = false;                                            \
        try {                                                            \
            (void)(expr);                                                \
        } catch (const weylscat::NumericError& e_) {                     \
            thrown_ = true;                                              \
            CHECK_MESSAGE(e_.code() == (ec), e_.what());                 \
        }                                                                \
        CHECK_MESSAGE(thrown_, "expected NumericError from " #expr);     \
    } while (0)
