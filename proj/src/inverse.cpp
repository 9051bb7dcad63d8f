#include "weylscat/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "weylscat/errors.hpp"

namespace weylscat {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kMaxCayleyCondition = 1e12;

ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

// Minimum-norm solve; equals the inverse when the matrix is regular.
ComplexVector min_norm_solve(const ComplexMatrix& a, const ComplexVector& b) {
    Eigen::CompleteOrthogonalDecomposition<ComplexMatrix> cod(a);
    return cod.solve(b);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(y[i] > 0.0) || !std::isfinite(y[i])) return 0.0;
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    return denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

ComplexVector random_unit_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    ComplexVector h(n);
    for (Eigen::Index i = 0; i < n; ++i) h(i) = Complex(normal(rng), normal(rng));
    return h / h.norm();
}

}  // namespace

// ---------------------------------------------------------------------------

ContractiveSampler::ContractiveSampler(Eigen::Index dim, Evaluator eval, std::string label)
    : dim_(dim), eval_(std::move(eval)), label_(std::move(label)) {
    if (dim_ <= 0) throw NumericError(ErrorCode::BadParameters, "dimension must be positive");
}

ContractiveSampler ContractiveSampler::constant(ComplexMatrix c) {
    require_square(c, "constant W");
    require_finite(c, "constant W");
    if (spectral_norm(c) > 1.0 + 1e-10) {
        throw NumericError(ErrorCode::NotContractive, "constant W is not a contraction");
    }
    const Eigen::Index n = c.rows();
    return ContractiveSampler(n, [c = std::move(c)](Complex) { return c; }, "constant");
}

ContractiveSampler ContractiveSampler::from_weyl(WeylSampler m) {
    const Eigen::Index n = m.dim();
    return ContractiveSampler(n, [m = std::move(m)](Complex eta) { return m_to_w(m(eta)); }, "from_weyl");
}

ComplexMatrix ContractiveSampler::operator()(Complex eta) const {
    if (!(eta.imag() > 0.0)) {
        throw NumericError(ErrorCode::BadParameters, "W is only defined for Im eta > 0");
    }
    ComplexMatrix w = eval_(eta);
    if (w.rows() != dim_ || w.cols() != dim_) {
        throw NumericError(ErrorCode::BadParameters, "W evaluator returned the wrong size");
    }
    require_finite(w, "W(eta)");
    if (spectral_norm(w) > 1.0 + 1e-10) {
        throw NumericError(ErrorCode::NotContractive, "||W(eta)|| exceeds 1");
    }
    return w;
}

ComplexMatrix w_to_m(const ComplexMatrix& w) {
    require_square(w, "W");
    require_finite(w, "W");
    const Eigen::Index n = w.rows();
    // M = i (I + W)(I - W)^{-1}: solve X (I - W) = I + W via the transpose system.
    const ComplexMatrix lhs = (identity(n) - w).transpose();
    const ComplexMatrix rhs = (identity(n) + w).transpose();
    auto x = guarded_solve(lhs, rhs, kMaxCayleyCondition);
    if (!x) throw NumericError(ErrorCode::CayleySingular, "I - W is numerically singular");
    return kI * x->transpose();
}

ComplexMatrix m_to_w(const ComplexMatrix& m) {
    require_square(m, "M");
    require_finite(m, "M");
    const Eigen::Index n = m.rows();
    auto x = guarded_solve(m + kI * identity(n), identity(n), 1e14);
    if (!x) throw NumericError(ErrorCode::CayleySingular, "M + i is singular although Im M should be PSD");
    return identity(n) - 2.0 * kI * *x;
}

WeylSampler weyl_from_contractive(ContractiveSampler w) {
    const Eigen::Index n = w.dim();
    return WeylSampler::closed_form(
        n, [w = std::move(w)](Complex eta) { return w_to_m(w(eta)); }, "cayley(" + w.label() + ")");
}

// ---------------------------------------------------------------------------

AdmissibilityReport check_admissibility(const ContractiveSampler& w, const AdmissibilityOptions& opts) {
    const Eigen::Index n = w.dim();
    AdmissibilityReport rep;

    // No trivial kernel of I - W*W: 13 points at Im eta = 0.1, 12 at Im eta = 1.
    double x0 = opts.strict_x_min;
    double x1 = opts.strict_x_max;
    if (!opts.boundary_grid.empty()) {
        const auto [lo, hi] = std::minmax_element(opts.boundary_grid.begin(), opts.boundary_grid.end());
        x0 = *lo;
        x1 = *hi;
        if (!(x1 > x0)) x1 = x0 + 1.0;
    }
    rep.strict_pass = true;
    for (const auto& [y, count] : {std::pair{0.1, 13}, std::pair{1.0, 12}}) {
        for (int k = 0; k < count; ++k) {
            const Complex eta(x0 + (x1 - x0) * k / (count - 1), y);
            const ComplexMatrix wv = w(eta);
            const double lmin = min_eigenvalue(identity(n) - wv.adjoint() * wv);
            rep.strict_contraction.push_back({eta, lmin});
            if (!(lmin > 1e-10)) rep.strict_pass = false;
        }
    }

    // ||(I - W(iy))^{-1}|| / y -> 0.
    std::vector<ComplexMatrix> w_iy;
    for (const double y : opts.y_ladder) {
        w_iy.push_back(w(Complex(0.0, y)));
        const double smin = std::max(smallest_singular_value(identity(n) - w_iy.back()),
                                     std::numeric_limits<double>::min());
        rep.growth_53.push_back({y, (1.0 / smin) / y});
    }
    rep.growth_pass = !rep.growth_53.empty() && rep.growth_53.back().ratio < 1e-3;
    for (std::size_t i = 1; i < rep.growth_53.size(); ++i) {
        if (rep.growth_53[i].ratio > rep.growth_53[i - 1].ratio * (1.0 + 1e-12)) rep.growth_pass = false;
    }

    // y^{1/2} ||sqrt(I - W*W)(I - W)^{-1} h|| along the ladder, per probe.
    std::mt19937_64 rng(opts.seed);
    rep.dense_domain_diverges = opts.probe_count > 0;
    for (int p = 0; p < opts.probe_count; ++p) {
        ProbeSeries series;
        series.h = random_unit_vector(n, rng);
        for (std::size_t i = 0; i < opts.y_ladder.size(); ++i) {
            const ComplexMatrix& wv = w_iy[i];
            const ComplexMatrix root = psd_sqrt(clamp_psd(identity(n) - wv.adjoint() * wv));
            const ComplexVector v = root * min_norm_solve(identity(n) - wv, series.h);
            series.values.push_back(std::sqrt(opts.y_ladder[i]) * v.norm());
        }
        series.slope = loglog_slope(opts.y_ladder, series.values);
        series.diverging = series.slope > 0.25;
        rep.dense_domain_diverges = rep.dense_domain_diverges && series.diverging;
        rep.dense_domain_55.push_back(std::move(series));
    }

    // Unitary boundary values (inner function).
    std::size_t unitary = 0;
    for (const double lam : opts.boundary_grid) {
        BoundaryDefect bd;
        bd.lambda = lam;
        ComplexMatrix wb;
        try {
            wb = richardson_limit([&](double e) { return w(Complex(lam, e)); }, opts.schedule).value;
        } catch (const NumericError& e) {
            if (e.code() != ErrorCode::NoConvergence) throw;
            bd.converged = false;
            wb = w(Complex(lam, opts.schedule.smallest_eps()));
        }
        bd.defect = (identity(n) - wb.adjoint() * wb).norm();
        if (bd.converged && bd.defect < 1e-6) ++unitary;
        rep.boundary.push_back(bd);
    }
    if (!opts.boundary_grid.empty()) {
        rep.unitary_fraction = static_cast<double>(unitary) / opts.boundary_grid.size();
        rep.inner_flag = rep.unitary_fraction >= 0.95;
    }
    return rep;
}

// ---------------------------------------------------------------------------

RealizeResult realize(const ContractiveSampler& w, std::span<const double> support_grid,
                      const RealizeOptions& opts) {
    if (support_grid.size() < 2) throw NumericError(ErrorCode::BadParameters, "support grid needs >= 2 points");
    AdmissibilityReport report = check_admissibility(w, opts.admissibility);
    if (!report.strict_pass || !report.growth_pass) {
        throw NumericError(ErrorCode::AdmissibilityFailed,
                           "W violates the strict-contraction or growth condition");
    }

    const WeylSampler m = weyl_from_contractive(w);
    StieltjesOptions sopts = opts.stieltjes;
    sopts.extend_tails = true;
    StieltjesResult inv = stieltjes_invert(m, support_grid, sopts);

    double worst = 0.0;
    const double x0 = support_grid.front();
    const double x1 = support_grid.back();
    const int cols = std::max(opts.validation_columns, 2);
    for (const double y : opts.validation_heights) {
        for (int k = 0; k < cols; ++k) {
            const Complex eta(x0 + (x1 - x0) * k / (cols - 1), y);
            const ComplexMatrix rebuilt = eval_weyl(inv.measure, eta, sopts.quadrature);
            worst = std::max(worst, (m_to_w(rebuilt) - w(eta)).norm());
        }
    }
    return RealizeResult{std::move(inv.measure), worst, std::move(report), std::move(inv.interpolated_nodes)};
}

// ---------------------------------------------------------------------------

RationalInterpolant::RationalInterpolant(std::vector<Complex> points, std::vector<ComplexMatrix> values,
                                         double tol, int max_terms) {
    const std::size_t count = points.size();
    if (count == 0 || count != values.size()) {
        throw NumericError(ErrorCode::BadParameters, "interpolant needs matching, non-empty samples");
    }
    const Eigen::Index rows = values.front().rows();
    const Eigen::Index cols = values.front().cols();
    double scale = 0.0;
    ComplexMatrix mean = ComplexMatrix::Zero(rows, cols);
    for (const auto& v : values) {
        if (v.rows() != rows || v.cols() != cols) {
            throw NumericError(ErrorCode::BadParameters, "interpolant samples differ in size");
        }
        require_finite(v, "interpolant sample");
        scale = std::max(scale, v.cwiseAbs().maxCoeff());
        mean += v;
    }
    mean /= static_cast<double>(count);

    std::vector<bool> in_support(count, false);
    std::vector<double> err(count);
    for (std::size_t k = 0; k < count; ++k) err[k] = (values[k] - mean).cwiseAbs().maxCoeff();

    const Eigen::Index entries = rows * cols;
    const int limit = std::min<int>(max_terms, static_cast<int>(count));
    for (int m = 0; m < limit; ++m) {
        std::size_t j = 0;
        double best = -1.0;
        for (std::size_t k = 0; k < count; ++k) {
            if (!in_support[k] && err[k] > best) {
                best = err[k];
                j = k;
            }
        }
        if (m > 0 && best <= tol * std::max(scale, 1.0)) break;
        in_support[j] = true;
        support_.push_back(points[j]);
        support_values_.push_back(values[j]);

        const Eigen::Index ms = static_cast<Eigen::Index>(support_.size());
        std::vector<std::size_t> rest;
        for (std::size_t k = 0; k < count; ++k) {
            if (!in_support[k]) rest.push_back(k);
        }
        if (rest.empty()) {
            weights_ = ComplexVector::Ones(ms);
            fit_error_ = 0.0;
            break;
        }
        ComplexMatrix loewner(static_cast<Eigen::Index>(rest.size()) * entries, ms);
        for (std::size_t r = 0; r < rest.size(); ++r) {
            const std::size_t k = rest[r];
            for (Eigen::Index l = 0; l < ms; ++l) {
                const ComplexMatrix diff = (values[k] - support_values_[l]) / (points[k] - support_[l]);
                for (Eigen::Index e = 0; e < entries; ++e) {
                    loewner(static_cast<Eigen::Index>(r) * entries + e, l) = diff(e % rows, e / rows);
                }
            }
        }
        Eigen::JacobiSVD<ComplexMatrix> svd(loewner, Eigen::ComputeFullV);
        weights_ = svd.matrixV().col(ms - 1);

        fit_error_ = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
            err[k] = in_support[k] ? 0.0 : ((*this)(points[k]) - values[k]).cwiseAbs().maxCoeff();
            fit_error_ = std::max(fit_error_, err[k]);
        }
    }
    if (weights_.size() != static_cast<Eigen::Index>(support_.size())) {
        weights_ = ComplexVector::Ones(static_cast<Eigen::Index>(support_.size()));
    }
}

ComplexMatrix RationalInterpolant::operator()(Complex z) const {
    const Eigen::Index rows = support_values_.front().rows();
    const Eigen::Index cols = support_values_.front().cols();
    ComplexMatrix num = ComplexMatrix::Zero(rows, cols);
    Complex den = 0.0;
    for (std::size_t l = 0; l < support_.size(); ++l) {
        if (z == support_[l]) return support_values_[l];
        const Complex c = weights_(static_cast<Eigen::Index>(l)) / (z - support_[l]);
        num += c * support_values_[l];
        den += c;
    }
    return num / den;
}

}  // namespace weylscat
