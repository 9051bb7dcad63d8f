#include "weylscat/herglotz.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>

#include "weylscat/errors.hpp"

namespace weylscat {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_off_axis(Complex eta) {
    if (eta.imag() == 0.0) {
        throw NumericError(ErrorCode::RealAxisEvaluation, "Im eta must be nonzero");
    }
    if (!std::isfinite(eta.real()) || !std::isfinite(eta.imag())) {
        throw NumericError(ErrorCode::NonFinite, "eta is not finite");
    }
}

// lim_{t -> -inf} [Log(t - z) - log|t|] for Im z != 0: t - z stays in the
// half-plane opposite to z, so the argument tends to -pi or +pi.
Complex log_offset_at_minus_infinity(Complex z) {
    return Complex(0.0, z.imag() > 0.0 ? -std::numbers::pi : std::numbers::pi);
}

void check_psd(const ComplexMatrix& m, const char* what) {
    require_finite(m, what);
    const double scale = m.norm();
    if (hermitian_defect(m) > 1e-10 * std::max(scale, 1e-300)) {
        throw NumericError(ErrorCode::NotHermitian, std::string(what) + " is not Hermitian");
    }
    if (m.rows() > 0 && min_eigenvalue(m) < -1e-10 * scale) {
        throw NumericError(ErrorCode::NotPSD, std::string(what) + " is not PSD");
    }
}

std::vector<double> sorted_breaks(std::vector<double> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

// int_b^inf (1/(t - eta) - t/(1 + t^2)) / t^2 dt, b > 0, from
// 1/(t^2 (t - eta)) = 1/(eta^2 (t - eta)) - 1/(eta^2 t) - 1/(eta t^2).
Complex decay_weyl_right(double b, Complex eta) {
    const double lb = std::log(b);
    return (lb - std::log(b - eta)) / (eta * eta) - 1.0 / (eta * b) + lb - 0.5 * std::log1p(b * b);
}

// int_b^inf dt / (t^2 (t - p) (t - q)), b > 0, p and q off the real axis.
Complex decay_gram_right(double b, Complex p, Complex q) {
    const double lb = std::log(b);
    if (std::abs(p - q) <= 1e-12 * std::abs(p)) {
        const Complex a1 = 2.0 / (p * p * p);
        return -(a1 * lb - a1 * std::log(b - p)) + 1.0 / (p * p * b) + 1.0 / (p * p * (b - p));
    }
    const Complex bp = 1.0 / (p * p * (p - q));
    const Complex bq = 1.0 / (q * q * (q - p));
    const Complex a1 = -(bp + bq);
    return -(a1 * lb + bp * std::log(b - p) + bq * std::log(b - q)) + 1.0 / (p * q * b);
}

// Scalar factor multiplying a constant density on an unbounded interval.
Complex constant_weyl(double a, double b, Complex eta) {
    // antiderivative Log(t - eta) - log sqrt(1 + t^2)
    const Complex upper = std::isinf(b) ? Complex(0.0) : std::log(b - eta) - 0.5 * std::log1p(b * b);
    const Complex lower = std::isinf(a) ? log_offset_at_minus_infinity(eta)
                                        : std::log(a - eta) - 0.5 * std::log1p(a * a);
    return upper - lower;
}

Complex constant_gram(double a, double b, Complex lambda, Complex mb) {
    if (lambda == mb) {
        // int dt / (t - lambda)^2 = [-1/(t - lambda)]
        const Complex up = std::isinf(b) ? Complex(0.0) : -1.0 / (b - lambda);
        const Complex lo = std::isinf(a) ? Complex(0.0) : -1.0 / (a - lambda);
        return up - lo;
    }
    // Partial fractions: [Log(t - lambda) - Log(t - mb)] / (lambda - mb)
    auto anti = [&](double t) { return std::log(t - lambda) - std::log(t - mb); };
    const Complex up = std::isinf(b) ? Complex(0.0) : anti(b);
    const Complex lo = std::isinf(a) ? log_offset_at_minus_infinity(lambda) - log_offset_at_minus_infinity(mb)
                                     : anti(a);
    return (up - lo) / (lambda - mb);
}

// int_a^b rho(t) (1/(t - eta) - t/(1 + t^2)) dt for one density piece.
ComplexMatrix piece_weyl(const DensityPiece& piece, Complex eta, const QuadratureOptions& opts) {
    const Eigen::Index n = piece.dim();
    const double a = piece.a();
    const double b = piece.b();
    if (!piece.bounded()) {
        ComplexMatrix out = constant_weyl(a, b, eta) * piece.coeffs().front();
        if (piece.kind() == DensityPiece::Kind::Tail) {
            // t -> -t maps the left tail onto a right one
            const Complex f = std::isinf(b) ? decay_weyl_right(a, eta) : -decay_weyl_right(-b, -eta);
            out += f * piece.coeffs()[1];
        }
        return out;
    }

    const double c = std::clamp(eta.real(), a, b);
    const ComplexMatrix rho_c = piece(c);
    ComplexMatrix out = (std::log(b - eta) - std::log(a - eta)) * rho_c;

    std::vector<double> breaks = piece.breakpoints();
    breaks.push_back(c);
    breaks = sorted_breaks(std::move(breaks));

    ComplexMatrix diff(n, n);
    auto integrand = [&](double t, ComplexMatrix& v) {
        piece.eval_into(t, v);
        diff = v - rho_c;
        const Complex kern = 1.0 / (t - eta);
        v = diff * kern - v * (t / (1.0 + t * t));
    };
    out += integrate_adaptive(integrand, n, n, breaks, opts).value;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// DensityPiece

DensityPiece DensityPiece::constant(double a, double b, ComplexMatrix value) {
    if (!(a < b) || std::isnan(a) || std::isnan(b) || a == kInf || b == -kInf) {
        throw NumericError(ErrorCode::BadParameters, "density interval must satisfy a < b");
    }
    require_square(value, "constant density");
    DensityPiece p;
    p.kind_ = Kind::Constant;
    p.a_ = a;
    p.b_ = b;
    p.coeffs_.push_back(std::move(value));
    return p;
}

DensityPiece DensityPiece::poly(double a, double b, std::vector<ComplexMatrix> coeffs) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
        throw NumericError(ErrorCode::BadParameters, "polynomial density needs a bounded interval");
    }
    if (coeffs.empty()) throw NumericError(ErrorCode::BadParameters, "polynomial density has no coefficients");
    for (const auto& c : coeffs) {
        require_square(c, "polynomial coefficient");
        if (c.rows() != coeffs.front().rows()) {
            throw NumericError(ErrorCode::BadParameters, "polynomial coefficients differ in size");
        }
    }
    DensityPiece p;
    p.kind_ = Kind::Poly;
    p.a_ = a;
    p.b_ = b;
    p.coeffs_ = std::move(coeffs);
    return p;
}

DensityPiece DensityPiece::table(std::vector<double> nodes, std::vector<ComplexMatrix> values) {
    if (nodes.size() < 2 || nodes.size() != values.size()) {
        throw NumericError(ErrorCode::BadParameters, "table density needs >= 2 nodes with matching values");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!std::isfinite(nodes[i]) || (i > 0 && !(nodes[i] > nodes[i - 1]))) {
            throw NumericError(ErrorCode::BadParameters, "table nodes must be finite and increasing");
        }
        require_square(values[i], "table value");
        if (values[i].rows() != values.front().rows()) {
            throw NumericError(ErrorCode::BadParameters, "table values differ in size");
        }
    }
    DensityPiece p;
    p.kind_ = Kind::Table;
    p.a_ = nodes.front();
    p.b_ = nodes.back();
    p.nodes_ = std::move(nodes);
    p.coeffs_ = std::move(values);
    return p;
}

DensityPiece DensityPiece::tail(double a, double b, ComplexMatrix limit, ComplexMatrix decay) {
    const bool right = b == kInf && std::isfinite(a) && a > 0.0;
    const bool left = a == -kInf && std::isfinite(b) && b < 0.0;
    if (!right && !left) {
        throw NumericError(ErrorCode::BadParameters, "tail density needs [a, inf) with a > 0 or (-inf, b] with b < 0");
    }
    require_square(limit, "tail limit");
    require_square(decay, "tail decay");
    if (limit.rows() != decay.rows()) throw NumericError(ErrorCode::BadParameters, "tail coefficients differ in size");
    DensityPiece p;
    p.kind_ = Kind::Tail;
    p.a_ = a;
    p.b_ = b;
    p.coeffs_ = {std::move(limit), std::move(decay)};
    return p;
}

bool DensityPiece::bounded() const { return std::isfinite(a_) && std::isfinite(b_); }

Eigen::Index DensityPiece::dim() const { return coeffs_.front().rows(); }

void DensityPiece::eval_into(double t, ComplexMatrix& out) const {
    const Eigen::Index n = dim();
    if (t < a_ || t > b_) {
        out.setZero(n, n);
        return;
    }
    switch (kind_) {
        case Kind::Constant:
            out = coeffs_.front();
            return;
        case Kind::Tail:
            out = coeffs_[0] + coeffs_[1] / (t * t);
            return;
        case Kind::Poly:
            out = coeffs_.back();
            for (std::size_t k = coeffs_.size() - 1; k-- > 0;) out = out * t + coeffs_[k];
            return;
        case Kind::Table: {
            auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
            std::size_t j = static_cast<std::size_t>(it - nodes_.begin());
            if (j >= nodes_.size()) {
                out = coeffs_.back();
                return;
            }
            const std::size_t i = j - 1;
            const double w = (t - nodes_[i]) / (nodes_[j] - nodes_[i]);
            out = (1.0 - w) * coeffs_[i] + w * coeffs_[j];
            return;
        }
    }
}

ComplexMatrix DensityPiece::operator()(double t) const {
    ComplexMatrix out(dim(), dim());
    eval_into(t, out);
    return out;
}

std::vector<double> DensityPiece::breakpoints() const {
    if (!bounded()) return {};
    if (kind_ == Kind::Table) return nodes_;
    return {a_, b_};
}

// ---------------------------------------------------------------------------
// NevanlinnaMeasure

NevanlinnaMeasure::NevanlinnaMeasure(ComplexMatrix alpha, std::vector<Atom> atoms,
                                     std::vector<DensityPiece> density)
    : alpha_(std::move(alpha)), atoms_(std::move(atoms)), density_(std::move(density)) {
    require_square(alpha_, "alpha");
    require_finite(alpha_, "alpha");
    if (hermitian_defect(alpha_) > 1e-12 * std::max(alpha_.norm(), 1.0)) {
        throw NumericError(ErrorCode::NotHermitian, "alpha must be Hermitian");
    }
    const Eigen::Index n = alpha_.rows();
    if (n == 0) throw NumericError(ErrorCode::BadParameters, "dimension must be positive");
    for (const auto& atom : atoms_) {
        if (!std::isfinite(atom.t)) throw NumericError(ErrorCode::BadParameters, "atom position not finite");
        if (atom.weight.rows() != n || atom.weight.cols() != n) {
            throw NumericError(ErrorCode::BadParameters, "atom weight has wrong dimension");
        }
        check_psd(atom.weight, "atom weight");
    }
    for (const auto& piece : density_) {
        if (piece.dim() != n) throw NumericError(ErrorCode::BadParameters, "density has wrong dimension");
        if (!piece.bounded() && piece.kind() != DensityPiece::Kind::Constant &&
            piece.kind() != DensityPiece::Kind::Tail) {
            throw NumericError(ErrorCode::BadParameters, "only constant and tail densities may be unbounded");
        }
        switch (piece.kind()) {
            case DensityPiece::Kind::Constant:
                check_psd(piece.coeffs().front(), "density value");
                break;
            case DensityPiece::Kind::Poly: {
                constexpr int kSamples = 33;
                for (int k = 0; k < kSamples; ++k) {
                    const double t = piece.a() + (piece.b() - piece.a()) * k / (kSamples - 1);
                    check_psd(piece(t), "density value");
                }
                break;
            }
            case DensityPiece::Kind::Table:
                for (const auto& v : piece.values()) check_psd(v, "density value");
                break;
            case DensityPiece::Kind::Tail: {
                // A + C/t^2 moves between A and its edge value, so two checks suffice.
                check_psd(piece.coeffs()[0], "tail limit");
                check_psd(piece(std::isinf(piece.b()) ? piece.a() : piece.b()), "tail edge value");
                break;
            }
        }
    }
}

ComplexMatrix NevanlinnaMeasure::density_at(double t) const {
    ComplexMatrix out = ComplexMatrix::Zero(dim(), dim());
    for (const auto& piece : density_) out += piece(t);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

ComplexMatrix eval_weyl(const NevanlinnaMeasure& model, Complex eta, const QuadratureOptions& opts) {
    require_off_axis(eta);
    ComplexMatrix m = model.alpha();
    for (const auto& atom : model.atoms()) {
        const double t = atom.t;
        m += (1.0 / (t - eta) - t / (1.0 + t * t)) * atom.weight;
    }
    for (const auto& piece : model.density()) m += piece_weyl(piece, eta, opts);
    return m;
}

ComplexMatrix gamma_gram(const NevanlinnaMeasure& model, Complex lambda, Complex mu,
                         const QuadratureOptions& opts) {
    require_off_axis(lambda);
    require_off_axis(mu);
    const Complex mb = std::conj(mu);
    const Eigen::Index n = model.dim();
    ComplexMatrix g = ComplexMatrix::Zero(n, n);
    for (const auto& atom : model.atoms()) {
        g += atom.weight / ((atom.t - mb) * (atom.t - lambda));
    }
    for (const auto& piece : model.density()) {
        const double a = piece.a();
        const double b = piece.b();
        if (!piece.bounded()) {
            g += constant_gram(a, b, lambda, mb) * piece.coeffs().front();
            if (piece.kind() == DensityPiece::Kind::Tail) {
                const Complex f = std::isinf(b) ? decay_gram_right(a, mb, lambda) : decay_gram_right(-b, -mb, -lambda);
                g += f * piece.coeffs()[1];
            }
            continue;
        }
        std::vector<double> breaks = piece.breakpoints();
        breaks.push_back(std::clamp(lambda.real(), a, b));
        breaks.push_back(std::clamp(mu.real(), a, b));
        breaks = sorted_breaks(std::move(breaks));
        auto integrand = [&](double t, ComplexMatrix& v) {
            piece.eval_into(t, v);
            v *= 1.0 / ((t - mb) * (t - lambda));
        };
        g += integrate_adaptive(integrand, n, n, breaks, opts).value;
    }
    return g;
}

ComplexMatrix weighted_mass(const NevanlinnaMeasure& model, const QuadratureOptions& opts) {
    const Eigen::Index n = model.dim();
    ComplexMatrix mass = ComplexMatrix::Zero(n, n);
    for (const auto& atom : model.atoms()) mass += atom.weight / (1.0 + atom.t * atom.t);
    for (const auto& piece : model.density()) {
        if (!piece.bounded()) {
            mass += (std::atan(piece.b()) - std::atan(piece.a())) * piece.coeffs().front();
            if (piece.kind() == DensityPiece::Kind::Tail) {
                // int_e^inf dt / (t^2 (1 + t^2)) = 1/e - (pi/2 - atan e)
                const double e = std::isinf(piece.b()) ? piece.a() : -piece.b();
                mass += (1.0 / e - (0.5 * std::numbers::pi - std::atan(e))) * piece.coeffs()[1];
            }
            continue;
        }
        const std::vector<double> breaks = piece.breakpoints();
        auto integrand = [&](double t, ComplexMatrix& v) {
            piece.eval_into(t, v);
            v /= 1.0 + t * t;
        };
        mass += integrate_adaptive(integrand, n, n, breaks, opts).value;
    }
    return mass;
}

// ---------------------------------------------------------------------------
// WeylSampler

WeylSampler WeylSampler::closed_form(Eigen::Index dim, Evaluator upper, std::string label) {
    if (dim <= 0) throw NumericError(ErrorCode::BadParameters, "sampler dimension must be positive");
    WeylSampler s;
    s.dim_ = dim;
    s.kind_ = Kind::ClosedForm;
    s.upper_ = std::move(upper);
    s.label_ = std::move(label);
    return s;
}

WeylSampler WeylSampler::from_measure(std::shared_ptr<const NevanlinnaMeasure> model,
                                      QuadratureOptions opts) {
    if (!model) throw NumericError(ErrorCode::BadParameters, "null measure");
    WeylSampler s;
    s.dim_ = model->dim();
    s.kind_ = Kind::MeasureBacked;
    s.measure_ = std::move(model);
    s.opts_ = opts;
    s.label_ = "measure";
    return s;
}

ComplexMatrix WeylSampler::operator()(Complex eta) const {
    require_off_axis(eta);
    if (kind_ == Kind::MeasureBacked) return eval_weyl(*measure_, eta, opts_);
    if (eta.imag() > 0.0) return upper_(eta);
    return upper_(std::conj(eta)).adjoint();
}

// ---------------------------------------------------------------------------
// Boundary values

void BoundarySchedule::validate() const {
    if (!(eps0 > 0.0) || !(ratio > 0.0 && ratio < 1.0)) {
        throw NumericError(ErrorCode::BadParameters, "schedule needs eps0 > 0 and ratio in (0,1)");
    }
    if (extrapolation_order < 0 || steps < extrapolation_order + 3) {
        throw NumericError(ErrorCode::BadParameters, "schedule needs steps >= extrapolation_order + 3");
    }
    if (!(eps0 * std::pow(ratio, steps) > 1e-14)) {
        throw NumericError(ErrorCode::BadParameters, "schedule reaches below the 1e-14 noise floor");
    }
}

double BoundarySchedule::eps(int k) const { return eps0 * std::pow(ratio, k); }

BoundaryValue richardson_limit(const std::function<ComplexMatrix(double)>& f,
                               const BoundarySchedule& sched) {
    sched.validate();
    const int p = sched.extrapolation_order;
    const int steps = sched.steps;
    // Only the previous tableau row is needed.
    std::vector<ComplexMatrix> prev, cur;
    std::vector<ComplexMatrix> top;  // T[k][p] for k >= p
    top.reserve(steps);
    for (int k = 0; k < steps; ++k) {
        cur.assign(std::min(k, p) + 1, ComplexMatrix());
        cur[0] = f(sched.eps(k));
        if (!cur[0].allFinite()) {
            throw NumericError(ErrorCode::NoConvergence, "non-finite sample on the eps ladder");
        }
        double rj = 1.0;
        for (int j = 1; j <= std::min(k, p); ++j) {
            rj *= sched.ratio;
            cur[j] = (cur[j - 1] - rj * prev[j - 1]) / (1.0 - rj);
        }
        if (k >= p) top.push_back(cur[p]);
        std::swap(prev, cur);
    }
    const std::size_t m = top.size();
    const double d_last = (top[m - 1] - top[m - 2]).norm();
    const double d_prev = (top[m - 2] - top[m - 3]).norm();
    BoundaryValue out{top[m - 1], d_last};
    if (!out.value.allFinite() ||
        (d_last > 1e-6 * (1.0 + out.value.norm()) && d_last >= 0.5 * d_prev)) {
        throw NumericError(ErrorCode::NoConvergence,
                           "extrapolants do not contract (atom or pole on the real axis?)");
    }
    return out;
}

BoundaryValue boundary_limit(const WeylSampler& sampler, double lambda, const BoundarySchedule& sched) {
    if (!std::isfinite(lambda)) throw NumericError(ErrorCode::BadParameters, "lambda must be finite");
    return richardson_limit([&](double eps) { return sampler(Complex(lambda, eps)); }, sched);
}

// ---------------------------------------------------------------------------
// Verification

HerglotzReport verify_herglotz(const WeylSampler& sampler, std::span<const Complex> grid,
                               double tolerance) {
    HerglotzReport report;
    report.tolerance = tolerance;
    for (const Complex eta : grid) {
        if (!(eta.imag() > 0.0)) {
            throw NumericError(ErrorCode::BadParameters, "verify_herglotz grid must lie in C+");
        }
        const ComplexMatrix up = sampler(eta);
        const ComplexMatrix down = sampler(std::conj(eta));
        HerglotzPoint pt;
        pt.eta = eta;
        pt.psd_defect = std::max(0.0, -min_eigenvalue(imag_part(up)));
        pt.symmetry_defect = (down - up.adjoint()).norm();
        if (!(pt.psd_defect <= tolerance) || !(pt.symmetry_defect <= tolerance)) report.pass = false;
        report.points.push_back(pt);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Stieltjes inversion

namespace {

double golden_max(const std::function<double(double)>& phi, double lo, double hi, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = phi(x1);
    double f2 = phi(x2);
    for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = phi(x2);
        }
    }
    return f1 >= f2 ? x1 : x2;
}

double top_imag(const WeylSampler& m, Complex eta) { return max_eigenvalue(imag_part(m(eta))); }

}  // namespace

StieltjesResult stieltjes_invert(const WeylSampler& sampler, std::span<const double> grid,
                                 const StieltjesOptions& opts) {
    opts.schedule.validate();
    if (!(opts.eps > 0.0) || !(opts.atom_threshold > 0.0)) {
        throw NumericError(ErrorCode::BadParameters, "eps and atom_threshold must be positive");
    }
    const std::size_t count = grid.size();
    if (count < 2) throw NumericError(ErrorCode::BadParameters, "support grid needs >= 2 points");
    for (std::size_t k = 0; k < count; ++k) {
        if (!std::isfinite(grid[k]) || (k > 0 && !(grid[k] > grid[k - 1]))) {
            throw NumericError(ErrorCode::BadParameters, "support grid must be finite and increasing");
        }
    }
    const Eigen::Index n = sampler.dim();

    auto spacing = [&](std::size_t k) {
        double h = kInf;
        if (k > 0) h = std::min(h, grid[k] - grid[k - 1]);
        if (k + 1 < count) h = std::min(h, grid[k + 1] - grid[k]);
        return h;
    };

    // Atom scan.
    std::vector<double> scan_eps(count), g(count);
    for (std::size_t k = 0; k < count; ++k) {
        scan_eps[k] = std::max(opts.eps, 0.5 * spacing(k));
        g[k] = scan_eps[k] * top_imag(sampler, Complex(grid[k], scan_eps[k]));
    }

    std::vector<Atom> atoms;
    const BoundarySchedule weight_sched{10.0 * opts.eps, 0.5, 12, 2};
    for (std::size_t k = 0; k < count; ++k) {
        if (!(g[k] > opts.atom_threshold)) continue;
        if (k > 0 && g[k] < g[k - 1]) continue;
        if (k + 1 < count && g[k] < g[k + 1]) continue;
        const double ek = scan_eps[k];
        double far = 0.0;
        bool has_far = false;
        for (std::ptrdiff_t j : {static_cast<std::ptrdiff_t>(k) - 2, static_cast<std::ptrdiff_t>(k) + 2}) {
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(count)) continue;
            far = std::max(far, ek * top_imag(sampler, Complex(grid[j], ek)));
            has_far = true;
        }
        if (has_far && !(g[k] > 2.0 * far)) continue;

        // Locate the peak with shrinking eps.
        double lo = grid[k > 0 ? k - 1 : k];
        double hi = grid[k + 1 < count ? k + 1 : k];
        double eps = ek;
        double t = grid[k];
        for (int stage = 0; stage < 12; ++stage) {
            const double tol = std::max(1e-3 * eps, 1e-15 * (1.0 + std::abs(t)));
            t = golden_max([&](double x) { return top_imag(sampler, Complex(x, eps)); }, lo, hi, tol);
            if (eps < 1e-9 * (1.0 + std::abs(t))) break;
            lo = t - 5.0 * eps;
            hi = t + 5.0 * eps;
            eps /= 30.0;
        }
        bool duplicate = false;
        for (const auto& a : atoms) duplicate |= std::abs(a.t - t) <= 1e-8 * (1.0 + std::abs(t));
        if (duplicate) continue;

        ComplexMatrix weight;
        try {
            weight = richardson_limit(
                         [&](double e) { return ComplexMatrix(e * imag_part(sampler(Complex(t, e)))); },
                         weight_sched)
                         .value;
        } catch (const NumericError&) {
            continue;
        }
        weight = clamp_psd(weight);
        if (max_eigenvalue(weight) > opts.atom_threshold) atoms.push_back(Atom{t, weight});
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.t < y.t; });

    // Density at the nodes from the atom-free remainder.
    auto regular = [&](Complex eta) {
        ComplexMatrix m = sampler(eta);
        for (const auto& a : atoms) m -= a.weight / (a.t - eta);
        return m;
    };
    const double exclusion = 20.0 * opts.schedule.smallest_eps();
    std::vector<ComplexMatrix> dens(count);
    std::vector<bool> ok(count, true);
    for (std::size_t k = 0; k < count; ++k) {
        const double lam = grid[k];
        bool near_atom = false;
        for (const auto& a : atoms) near_atom |= std::abs(lam - a.t) < exclusion;
        if (near_atom) {
            ok[k] = false;
            continue;
        }
        try {
            const BoundaryValue bv = richardson_limit(
                [&](double e) { return imag_part(regular(Complex(lam, e))); }, opts.schedule);
            dens[k] = clamp_psd(bv.value) / std::numbers::pi;
        } catch (const NumericError& e) {
            if (e.code() != ErrorCode::NoConvergence) throw;
            ok[k] = false;
        }
    }

    StieltjesResult result{NevanlinnaMeasure(ComplexMatrix::Zero(n, n), {}, {}), {}, 0.0};
    for (std::size_t k = 0; k < count; ++k) {
        if (ok[k]) continue;
        result.interpolated_nodes.push_back(k);
        std::ptrdiff_t left = static_cast<std::ptrdiff_t>(k) - 1;
        while (left >= 0 && !ok[left]) --left;
        std::size_t right = k + 1;
        while (right < count && !ok[right]) ++right;
        if (left >= 0 && right < count) {
            const double w = (grid[k] - grid[left]) / (grid[right] - grid[left]);
            dens[k] = (1.0 - w) * dens[left] + w * dens[right];
        } else if (left >= 0) {
            dens[k] = dens[left];
        } else if (right < count) {
            dens[k] = dens[right];
        } else {
            dens[k] = ComplexMatrix::Zero(n, n);
        }
    }

    // Bisect intervals where the boundary density at the midpoint disagrees
    // with the linear interpolant; this is what pins down jumps.
    double peak = 0.0;
    for (const auto& d : dens) peak = std::max(peak, d.norm());
    const double refine_tol = 1e-6 * (1.0 + peak);
    std::size_t budget = 16 * count + 256;
    auto point_density = [&](double lam, double width) -> std::optional<ComplexMatrix> {
        for (const auto& a : atoms) {
            if (std::abs(lam - a.t) < exclusion) return std::nullopt;
        }
        BoundarySchedule local = opts.schedule;
        local.eps0 = std::min(local.eps0, width);
        try {
            local.validate();
            const BoundaryValue bv =
                richardson_limit([&](double e) { return imag_part(regular(Complex(lam, e))); }, local);
            return ComplexMatrix(clamp_psd(bv.value) / std::numbers::pi);
        } catch (const NumericError& e) {
            if (e.code() != ErrorCode::NoConvergence && e.code() != ErrorCode::BadParameters) throw;
            return std::nullopt;
        }
    };
    auto min_width_for = [](double h, double x) { return std::max(1e-6 * h, 1e-12 * (1.0 + std::abs(x))); };

    // Failed nodes usually sit on a jump or next to an atom.  Walk towards
    // them from each good neighbour by halving steps, so the table follows
    // the density right up to the bad point.
    struct Node {
        double t;
        ComplexMatrix v;
        bool good;
    };
    std::vector<Node> merged;
    for (std::size_t k = 0; k < count; ++k) merged.push_back({grid[k], dens[k], static_cast<bool>(ok[k])});
    for (std::size_t k = 0; k < count; ++k) {
        if (ok[k]) continue;
        for (int dir : {-1, 1}) {
            const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(k) + dir;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(count) || !ok[j]) continue;
            const double h = std::abs(grid[k] - grid[j]);
            const double min_width = min_width_for(h, grid[k]);
            for (double step = 0.5 * h; step >= min_width && budget > 0; step *= 0.5) {
                const double x = grid[k] + dir * step;
                const auto r = point_density(x, step);
                if (!r) break;
                merged.push_back({x, *r, true});
                --budget;
            }
        }
    }
    std::sort(merged.begin(), merged.end(), [](const Node& x, const Node& y) { return x.t < y.t; });
    for (std::size_t k = 0; k < merged.size(); ++k) {
        if (merged[k].good) continue;
        std::ptrdiff_t left = static_cast<std::ptrdiff_t>(k) - 1;
        while (left >= 0 && !merged[left].good) --left;
        std::size_t right = k + 1;
        while (right < merged.size() && !merged[right].good) ++right;
        if (left >= 0 && right < merged.size()) {
            const double w = (merged[k].t - merged[left].t) / (merged[right].t - merged[left].t);
            merged[k].v = (1.0 - w) * merged[left].v + w * merged[right].v;
        }
    }

    // Bisect between consecutive good nodes, breadth first so a short budget
    // is spread evenly.  An interval is split while its midpoint deviation
    // times its width (the area the interpolant misses) is above
    // refine_tol * h, h being the width it started from.
    struct Segment {
        double a, b;
        ComplexMatrix ra, rb;
        double h, min_width;
    };
    std::vector<Segment> active;
    for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
        if (!merged[k].good || !merged[k + 1].good) continue;
        const double h = merged[k + 1].t - merged[k].t;
        active.push_back({merged[k].t, merged[k + 1].t, merged[k].v, merged[k + 1].v, h, min_width_for(h, merged[k].t)});
    }
    while (!active.empty() && budget > 0) {
        std::vector<Segment> next;
        for (const Segment& seg : active) {
            if (budget == 0) break;
            const double w = seg.b - seg.a;
            if (w < seg.min_width) continue;
            const double mid = 0.5 * (seg.a + seg.b);
            const auto rm = point_density(mid, w);
            if (!rm || (*rm - 0.5 * (seg.ra + seg.rb)).norm() * w <= refine_tol * seg.h) continue;
            --budget;
            merged.push_back({mid, *rm, true});
            next.push_back({seg.a, mid, seg.ra, *rm, seg.h, seg.min_width});
            next.push_back({mid, seg.b, *rm, seg.rb, seg.h, seg.min_width});
        }
        active = std::move(next);
    }
    std::sort(merged.begin(), merged.end(), [](const Node& x, const Node& y) { return x.t < y.t; });
    std::vector<double> nodes;
    std::vector<ComplexMatrix> values;
    for (const Node& node : merged) {
        nodes.push_back(node.t);
        values.push_back(node.v);
    }

    // Edge check: mass a constant continuation past the grid would carry.
    ComplexMatrix total = ComplexMatrix::Zero(n, n);
    for (const auto& a : atoms) total += a.weight / (1.0 + a.t * a.t);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double h = nodes[k + 1] - nodes[k];
        total += 0.5 * h *
                 (values[k] / (1.0 + nodes[k] * nodes[k]) + values[k + 1] / (1.0 + nodes[k + 1] * nodes[k + 1]));
    }
    const double left_tail = std::atan(grid.front()) + 0.5 * std::numbers::pi;
    const double right_tail = 0.5 * std::numbers::pi - std::atan(grid.back());
    const ComplexMatrix tails = left_tail * dens.front() + right_tail * dens.back();
    const double denom = (total + tails).norm();
    result.edge_tail_fraction = denom > 0.0 ? tails.norm() / denom : 0.0;
    if (!opts.extend_tails && result.edge_tail_fraction > opts.edge_fraction) {
        throw NumericError(ErrorCode::SupportNotCovered,
                           "density at the grid edges carries more than the allowed mass fraction");
    }

    std::vector<DensityPiece> pieces;
    pieces.push_back(DensityPiece::table(std::move(nodes), std::move(values)));
    if (opts.extend_tails) {
        // A + C/t^2 through the two outermost grid nodes, A clamped PSD so the
        // tail stays between A and the edge value; constant when that is impossible.
        auto extend = [&](std::size_t edge, std::size_t inner, bool right) {
            const ComplexMatrix& re = dens[edge];
            if (re.norm() == 0.0 && dens[inner].norm() == 0.0) return;
            const double e = grid[edge];
            const double i = grid[inner];
            if (right ? !(i > 0.0) : !(i < 0.0)) {
                pieces.push_back(right ? DensityPiece::constant(e, kInf, re) : DensityPiece::constant(-kInf, e, re));
                return;
            }
            ComplexMatrix limit = clamp_psd(hermitian_part((re * (e * e) - dens[inner] * (i * i)) / (e * e - i * i)));
            const ComplexMatrix decay = (re - limit) * (e * e);
            pieces.push_back(right ? DensityPiece::tail(e, kInf, std::move(limit), decay)
                                   : DensityPiece::tail(-kInf, e, std::move(limit), decay));
        };
        extend(0, 1, false);
        extend(count - 1, count - 2, true);
    }

    // alpha = Re M(i) - Re of the recovered measure's contribution at i.
    const NevanlinnaMeasure bare(ComplexMatrix::Zero(n, n), atoms, pieces);
    const ComplexMatrix part = eval_weyl(bare, kI, opts.quadrature);
    const ComplexMatrix alpha = hermitian_part(hermitian_part(sampler(kI)) - hermitian_part(part));
    result.measure = NevanlinnaMeasure(alpha, std::move(atoms), std::move(pieces));
    return result;
}

}  // namespace weylscat
