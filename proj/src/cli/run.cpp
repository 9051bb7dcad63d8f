#include "weylscat/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "weylscat/errors.hpp"
#include "weylscat/scattering.hpp"

namespace weylscat::cli {

using nlohmann::json;

namespace {

constexpr Complex kI{0.0, 1.0};

[[noreturn]] void config_error(const std::string& what) { throw NumericError(ErrorCode::ConfigError, what); }

bool is_model_error(ErrorCode c) {
    switch (c) {
        case ErrorCode::UnknownModel:
        case ErrorCode::BadParameters:
        case ErrorCode::ModelError:
        case ErrorCode::NotSquare:
        case ErrorCode::NotHermitian:
        case ErrorCode::NotPSD:
        case ErrorCode::NotDissipative:
        case ErrorCode::NotContractive:
        case ErrorCode::NonFinite:
            return true;
        default:
            return false;
    }
}

SampleStatus status_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::SingularWeylValue: return SampleStatus::SingularWeylValue;
        case ErrorCode::NoConvergence: return SampleStatus::NoConvergence;
        default: return SampleStatus::NumericalFailure;
    }
}

// Everything the subcommands may need from the configured model.
struct Resolved {
    Eigen::Index dim = 0;
    std::optional<WeylSampler> m;
    std::optional<ContractiveSampler> w;
    std::shared_ptr<const NevanlinnaMeasure> measure;
    std::string label;
};

Resolved resolve_model(const RunConfig& cfg) {
    Resolved r;
    if (const auto* spec = std::get_if<ModelSpec>(&cfg.model)) {
        ModelSpec s = *spec;
        if ((s.name == "rational" || s.name == "random_dissipative_D") && !s.parameters.contains("seed")) {
            s.parameters["seed"] = cfg.seed;
        }
        BuiltModel built = build_model(s);
        r.dim = s.dim;
        r.label = s.name;
        r.measure = built.measure;
        if (built.sampler) {
            r.m = built.sampler;
            r.w = built.contractive();
        }
        return r;
    }
    const auto& path = std::get<std::filesystem::path>(cfg.model);
    const json j = load_json(path);
    r.label = path.filename().string();
    if (j.contains("samples")) {
        r.w = load_tabulated_w(path);
        r.dim = r.w->dim();
        r.m = weyl_from_contractive(*r.w);
    } else {
        auto measure = std::make_shared<NevanlinnaMeasure>(measure_from_json(j));
        r.dim = measure->dim();
        r.measure = measure;
        r.m = WeylSampler::from_measure(measure);
        r.w = ContractiveSampler::from_weyl(*r.m);
    }
    return r;
}

DissipativeMatrix resolve_d(const RunConfig& cfg, Eigen::Index dim) {
    if (!cfg.d) return DissipativeMatrix(ComplexMatrix(-kI * ComplexMatrix::Identity(dim, dim)), cfg.tolerances.rtol);
    const json& j = *cfg.d;
    if (j.is_object() && j.contains("name")) {
        ModelSpec s = model_spec_from_json(j);
        if (!j.contains("dim")) s.dim = dim;
        if (!s.parameters.contains("seed")) s.parameters["seed"] = cfg.seed;
        BuiltModel built = build_model(s);
        if (!built.dissipative) throw NumericError(ErrorCode::ModelError, "D model '" + s.name + "' is not dissipative");
        if (built.dissipative->dim() != dim) throw NumericError(ErrorCode::ModelError, "D has the wrong dimension");
        return *built.dissipative;
    }
    return DissipativeMatrix(matrix_from_json(j, dim), cfg.tolerances.rtol);
}

WeylSampler require_m(const Resolved& r) {
    if (!r.m) throw NumericError(ErrorCode::ModelError, "model '" + r.label + "' has no Weyl function");
    return *r.m;
}

// Rows are computed concurrently; results land in lambda order.
template <class F>
std::vector<SampleRow> compute_rows(const std::vector<double>& grid, int threads, F&& row) {
    std::vector<SampleRow> rows(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            SampleRow& out = rows[i];
            try {
                out = row(grid[i]);
            } catch (const NumericError& e) {
                out = SampleRow{};
                out.status = status_for(e.code());
                out.defect = std::nan("");
                out.err_estimate = std::nan("");
            }
            out.lambda = grid[i];
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(grid.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

bool computed(const SampleRow& r) {
    return r.status == SampleStatus::Ok || r.status == SampleStatus::BadUnitarity;
}

RunResult judge_rows(const std::vector<SampleRow>& rows, const Tolerances& tol, std::ostream& log) {
    std::size_t failed = 0, above = 0;
    double worst = 0.0;
    for (const auto& r : rows) {
        if (!computed(r)) {
            ++failed;
            continue;
        }
        worst = std::max(worst, r.defect);
        if (!(r.defect < tol.defect)) ++above;
    }
    const double frac = rows.empty() ? 0.0 : static_cast<double>(failed) / rows.size();
    std::ostringstream s;
    s << rows.size() << " rows, " << failed << " failed, " << above << " above defect threshold "
      << format_double(tol.defect) << ", worst defect " << format_double(worst);
    log << s.str() << '\n';
    const bool ok = above == 0 && frac <= tol.failure_fraction;
    return {ok ? 0 : 1, s.str()};
}

void emit_json(const RunConfig& cfg, const json& j) {
    if (cfg.output.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        save_json(cfg.output, j);
    }
}

void emit_rows(const RunConfig& cfg, const std::vector<SampleRow>& rows, Eigen::Index dim) {
    if (!cfg.output.empty()) {
        write_samples(cfg.output, rows, dim, cfg.format);
        return;
    }
    if (cfg.format == OutputFormat::Json) {
        std::cout << samples_to_json(rows, dim).dump(2) << '\n';
    } else {
        Eigen::Index width = dim;
        for (const auto& r : rows) width = std::max(width, r.s.rows());
        write_samples_csv(std::cout, rows, width);
    }
}

// ---------------------------------------------------------------------------

RunResult run_forward(const RunConfig& cfg, const Resolved& model, std::ostream& log) {
    const WeylSampler m = require_m(model);
    const auto grid = cfg.grid.nodes();
    auto rows = compute_rows(grid, cfg.threads, [&](double lambda) {
        const BoundaryValue bv = boundary_limit(m, lambda, cfg.schedule);
        ScatteringSample s = scattering_matrix(bv.value, cfg.tolerances.rtol);
        s.lambda = lambda;
        s.err_estimate = bv.err_estimate;
        return to_row(s);
    });
    emit_rows(cfg, rows, model.dim);
    return judge_rows(rows, cfg.tolerances, log);
}

RunResult run_dissipative(const RunConfig& cfg, const Resolved& model, std::ostream& log) {
    const WeylSampler m = require_m(model);
    const DissipativeMatrix d = resolve_d(cfg, model.dim);
    const auto grid = cfg.grid.nodes();
    auto rows = compute_rows(grid, cfg.threads, [&](double lambda) {
        const BoundaryValue bv = boundary_limit(m, lambda, cfg.schedule);
        CoupledBlocks b = coupled_blocks(bv.value, d, cfg.tolerances.rtol);
        SampleRow r;
        r.rank = b.rank;
        r.err_estimate = bv.err_estimate;
        r.defect = defect_unitary(b.full);
        r.status = r.defect > kBadSampleDefect ? SampleStatus::BadUnitarity : SampleStatus::Ok;
        r.fiber_basis = std::move(b.fiber_basis);
        r.s = std::move(b.full);
        return r;
    });
    emit_rows(cfg, rows, 2 * model.dim);
    return judge_rows(rows, cfg.tolerances, log);
}

RunResult run_laxphillips(const RunConfig& cfg, const Resolved& model, std::ostream& log) {
    const WeylSampler m = require_m(model);
    const DissipativeMatrix d = resolve_d(cfg, model.dim);
    const auto grid = cfg.grid.nodes();
    auto rows = compute_rows(grid, cfg.threads, [&](double lambda) {
        const BoundaryValue bv = boundary_limit(m, lambda, cfg.schedule);
        SampleRow r;
        r.s = lax_phillips(bv.value, d);
        r.rank = static_cast<int>(r.s.rows());
        r.err_estimate = bv.err_estimate;
        r.defect = defect_contraction(r.s);
        return r;
    });
    emit_rows(cfg, rows, model.dim);
    return judge_rows(rows, cfg.tolerances, log);
}

json pair(Complex z) { return json::array({z.real(), z.imag()}); }

json vector_to_json(const ComplexVector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(pair(v(i)));
    return out;
}

json admissibility_to_json(const AdmissibilityReport& a) {
    json strict = json::array(), growth = json::array(), probes = json::array(), boundary = json::array();
    for (const auto& p : a.strict_contraction) strict.push_back({{"eta", pair(p.eta)}, {"min_eigenvalue", p.min_eigenvalue}});
    for (const auto& g : a.growth_53) growth.push_back({{"y", g.y}, {"ratio", g.ratio}});
    for (const auto& p : a.dense_domain_55) {
        probes.push_back({{"h", vector_to_json(p.h)}, {"values", p.values}, {"slope", p.slope}, {"diverging", p.diverging}});
    }
    for (const auto& b : a.boundary) {
        boundary.push_back({{"lambda", b.lambda}, {"defect", b.defect}, {"converged", b.converged}});
    }
    return {{"strict_contraction", {{"pass", a.strict_pass}, {"points", strict}}},
            {"growth", {{"pass", a.growth_pass}, {"points", growth}}},
            {"dense_domain", {{"all_diverging", a.dense_domain_diverges}, {"probes", probes}}},
            {"boundary", {{"unitary_fraction", a.unitary_fraction}, {"inner", a.inner_flag}, {"points", boundary}}}};
}

AdmissibilityOptions admissibility_options(const RunConfig& cfg, const std::vector<double>& grid) {
    AdmissibilityOptions o;
    o.boundary_grid = grid;
    o.schedule = cfg.schedule;
    o.seed = cfg.seed;
    return o;
}

RunResult run_inverse(const RunConfig& cfg, const Resolved& model, std::ostream& log) {
    if (!model.w) throw NumericError(ErrorCode::ModelError, "model '" + model.label + "' has no contractive function");
    const auto grid = cfg.grid.nodes();
    RealizeOptions opts;
    opts.admissibility = admissibility_options(cfg, grid);
    opts.stieltjes.schedule = cfg.schedule;

    json report{{"model", model.label}};
    RunResult result;
    try {
        RealizeResult r = realize(*model.w, grid, opts);
        const json recovered = measure_to_json(r.model);
        std::filesystem::path model_path = cfg.model_output;
        if (model_path.empty() && !cfg.output.empty()) {
            model_path = cfg.output;
            model_path.replace_extension(".model.json");
        }
        if (!model_path.empty()) save_json(model_path, recovered);
        const bool ok = r.roundtrip_error < cfg.tolerances.roundtrip;
        report["realized"] = true;
        report["roundtrip_error"] = r.roundtrip_error;
        report["roundtrip_threshold"] = cfg.tolerances.roundtrip;
        report["pass"] = ok;
        report["interpolated_nodes"] = r.interpolated_nodes;
        report["recovered_model_file"] = model_path.empty() ? json(nullptr) : json(model_path.filename().string());
        report["recovered_model"] = recovered;
        report["admissibility"] = admissibility_to_json(r.admissibility);
        result.summary = "roundtrip_error " + format_double(r.roundtrip_error) + (r.admissibility.inner_flag ? ", inner" : "");
        result.exit_code = ok ? 0 : 1;
    } catch (const NumericError& e) {
        if (e.code() != ErrorCode::AdmissibilityFailed) throw;
        report["realized"] = false;
        report["pass"] = false;
        report["error"] = e.what();
        report["admissibility"] = admissibility_to_json(check_admissibility(*model.w, opts.admissibility));
        result.summary = std::string("not admissible: ") + e.what();
        result.exit_code = 1;
    }
    emit_json(cfg, report);
    log << result.summary << '\n';
    return result;
}

// ---------------------------------------------------------------------------
// verify

struct Check {
    std::string name;
    std::string status;  // pass | fail | skipped
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

Check check_below(std::string name, double value, double threshold, std::string detail = {}) {
    return Check{std::move(name), value < threshold ? "pass" : "fail", value, threshold, std::move(detail)};
}

Check skipped(std::string name, std::string why) { return Check{std::move(name), "skipped", 0.0, 0.0, std::move(why)}; }

std::vector<double> thin(const std::vector<double>& grid, std::size_t count) {
    if (grid.size() <= count) return grid;
    std::vector<double> out;
    for (std::size_t k = 0; k < count; ++k) out.push_back(grid[k * (grid.size() - 1) / (count - 1)]);
    return out;
}

double breakpoint_distance(const NevanlinnaMeasure& m, double x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& a : m.atoms()) d = std::min(d, std::abs(x - a.t));
    for (const auto& p : m.density()) {
        if (std::isfinite(p.a())) d = std::min(d, std::abs(x - p.a()));
        if (std::isfinite(p.b())) d = std::min(d, std::abs(x - p.b()));
    }
    return d;
}

RunResult run_verify(const RunConfig& cfg, const Resolved& model, std::ostream& log) {
    const WeylSampler m = require_m(model);
    const auto grid = cfg.grid.nodes();
    const auto coarse = thin(grid, 21);
    const double rtol = cfg.tolerances.rtol;
    std::vector<Check> checks;

    std::vector<Complex> upper;
    for (double x : coarse)
        for (double y : {0.1, 1.0, 10.0}) upper.emplace_back(x, y);

    {
        const HerglotzReport h = verify_herglotz(m, upper);
        double worst = 0.0;
        for (const auto& p : h.points) worst = std::max({worst, p.psd_defect, p.symmetry_defect});
        checks.push_back(check_below("herglotz_psd_and_symmetry", worst, h.tolerance));
    }

    if (model.measure) {
        const NevanlinnaMeasure& mu = *model.measure;
        double worst = 0.0;
        for (double x : thin(coarse, 5)) {
            const Complex eta(x, 0.5);
            const ComplexMatrix a = eval_weyl(mu, eta);
            worst = std::max(worst, (a - quadrature_oracle(mu, eta)).norm() / std::max(1.0, a.norm()));
        }
        checks.push_back(check_below("weyl_quadrature_vs_oracle", worst, 1e-6));

        double gamma = 0.0;
        std::vector<Complex> pts;
        for (double x : thin(coarse, 4))
            for (double y : {0.2, 2.0}) pts.emplace_back(x, y);
        for (Complex l : pts) {
            const ComplexMatrix ml = m(l);
            for (Complex u : pts) {
                const ComplexMatrix lhs = ml - m(u).adjoint();
                const ComplexMatrix rhs = (l - std::conj(u)) * gamma_gram(mu, l, u);
                gamma = std::max(gamma, (lhs - rhs).norm() / std::max(ml.norm(), 1e-300));
            }
        }
        checks.push_back(check_below("gamma_field_identity", gamma, 1e-6));

        const ComplexMatrix mass = weighted_mass(mu);
        checks.push_back(check_below("weighted_mass_equals_im_m_i", (mass - imag_part(m(kI))).norm(), 1e-8));

        double diag = 0.0;
        for (Complex l : pts) diag = std::max(diag, (gamma_gram(mu, l, l) - imag_part(m(l)) / l.imag()).norm());
        checks.push_back(check_below("gamma_gram_diagonal", diag, 1e-8));

        StieltjesOptions so;
        so.schedule = cfg.schedule;
        so.extend_tails = true;
        double worst_density = 0.0;
        try {
            // Recover on a grid reaching past the bounded part of the support,
            // otherwise the tail fit continues the density where there is none.
            const double h = grid.size() > 1 ? grid[1] - grid[0] : 1.0;
            double lo = grid.front(), hi = grid.back();
            for (const auto& a : mu.atoms()) lo = std::min(lo, a.t - 1.0), hi = std::max(hi, a.t + 1.0);
            for (const auto& p : mu.density()) {
                if (std::isfinite(p.a())) lo = std::min(lo, p.a() - 1.0);
                if (std::isfinite(p.b())) hi = std::max(hi, p.b() + 1.0);
            }
            const int points = std::clamp(static_cast<int>(std::ceil((hi - lo) / h)) + 1, static_cast<int>(grid.size()), 2001);
            std::vector<double> wide(points);
            for (int k = 0; k < points; ++k) wide[k] = lo + (hi - lo) * k / (points - 1);
            const StieltjesResult sr = stieltjes_invert(m, wide, so);
            for (double x : grid) {
                if (breakpoint_distance(mu, x) < std::max(0.05, 3 * h)) continue;
                if (x == grid.front() || x == grid.back()) continue;
                worst_density = std::max(worst_density, (sr.measure.density_at(x) - mu.density_at(x)).norm());
            }
            checks.push_back(check_below("stieltjes_density_recovery", worst_density, 1e-4));

            const ComplexMatrix mi = m(kI);
            const double moment = std::max((hermitian_part(mi) - sr.measure.alpha()).norm(),
                                           (imag_part(mi) - weighted_mass(sr.measure)).norm());
            checks.push_back(check_below("recovered_moment_identity", moment, 1e-4));

            double atoms = 0.0;
            for (const auto& a : mu.atoms()) {
                if (a.t <= grid.front() || a.t >= grid.back()) continue;
                double best = std::numeric_limits<double>::infinity();
                for (const auto& b : sr.measure.atoms()) {
                    if (std::abs(b.t - a.t) < 1e-3) best = std::min(best, (b.weight - a.weight).norm());
                }
                atoms = std::max(atoms, best);
            }
            checks.push_back(check_below("recovered_atom_weights", atoms, 1e-6));
        } catch (const NumericError& e) {
            for (const char* n : {"stieltjes_density_recovery", "recovered_moment_identity", "recovered_atom_weights"}) {
                checks.push_back(Check{n, "fail", 0.0, 1e-4, e.what()});
            }
        }
    } else {
        for (const char* n : {"weyl_quadrature_vs_oracle", "gamma_field_identity", "weighted_mass_equals_im_m_i",
                              "gamma_gram_diagonal", "stieltjes_density_recovery", "recovered_moment_identity",
                              "recovered_atom_weights"}) {
            checks.push_back(skipped(n, "closed-form model without a measure"));
        }
    }

    {
        double worst = 0.0;
        for (Complex eta : upper) worst = std::max(worst, defect_contraction(m_to_w(m(eta))));
        checks.push_back(check_below("cayley_image_contractive", worst, 1e-10));
    }

    // boundary sweep shared by the scattering checks
    const DissipativeMatrix d = resolve_d(cfg, model.dim);
    std::mt19937_64 basis_rng(cfg.seed);
    std::normal_distribution<double> basis_normal;
    std::size_t failed = 0, flagged = 0, rank_changes = 0;
    double unitarity = 0.0, appendix = 0.0, coupled = 0.0, lp_block = 0.0, lp_contraction = 0.0, coupled_full = 0.0;
    double sqrt_defect = 0.0, projector = 0.0, eig_unitary = 0.0, err_bound = 0.0, basis = 0.0, involution = 0.0,
           lp_cayley = 0.0;
    const DissipativeMatrix minus_i(ComplexMatrix(-kI * ComplexMatrix::Identity(model.dim, model.dim)));
    for (double lambda : grid) {
        try {
            const BoundaryValue bv = boundary_limit(m, lambda, cfg.schedule);
            const ComplexMatrix im = imag_part(bv.value);
            const double scale = std::max(im.norm(), 1e-300);
            const ComplexMatrix h = clamp_psd(im);
            const ComplexMatrix root = psd_sqrt(h, rtol);
            sqrt_defect = std::max(sqrt_defect, (root * root - h).norm() / std::max(h.norm(), 1e-300));
            const RangeBasis rb = range_basis(h, rtol);
            projector = std::max(projector, (rb.basis * rb.basis.adjoint() * h - h).norm() / scale);
            eig_unitary = std::max(eig_unitary, defect_unitary(herm_eigh(im).eigenvectors));
            const double norm_m = spectral_norm(bv.value);
            if (range_basis(h, 1e-12, norm_m).rank != range_basis(h, 1e-8, norm_m).rank) ++rank_changes;

            const ComplexMatrix w = m_to_w(bv.value);
            if (smallest_singular_value(ComplexMatrix::Identity(model.dim, model.dim) - w) > 1e-6) {
                involution = std::max(involution, (w_to_m(w) - bv.value).norm() / (1.0 + bv.value.norm()));
            }
            lp_cayley = std::max(lp_cayley, (lax_phillips(bv.value, minus_i) - w).norm());

            const ScatteringSample s = scattering_matrix(bv.value, rtol);
            if (s.flagged()) {
                ++flagged;
                continue;
            }
            unitarity = std::max(unitarity, s.unitarity_defect);
            if (bv.err_estimate < 1e-7) {
                err_bound = std::max(err_bound, s.unitarity_defect - (10.0 * bv.err_estimate + 1e-10));
            }
            if (s.rank > 0) {
                ComplexMatrix g(s.rank, s.rank);
                for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = Complex(basis_normal(basis_rng), basis_normal(basis_rng));
                const ComplexMatrix u = Eigen::HouseholderQR<ComplexMatrix>(g).householderQ();
                const ComplexMatrix s2 = scattering_on_basis(bv.value, s.fiber_basis * u, rtol);
                basis = std::max(basis, (u * s2 * u.adjoint() - s.s).norm());
            }
            appendix = std::max(appendix, appendix_cross_check(bv.value, lambda, rtol).discrepancy);
            const CoupledBlocks b = coupled_blocks(bv.value, d, rtol);
            const ComplexMatrix lp = lax_phillips(bv.value, d);
            coupled = std::max(coupled, defect_unitary(b.full));
            lp_block = std::max(lp_block, (b.s22 - lp).norm());
            lp_contraction = std::max(lp_contraction, defect_contraction(lp));
            coupled_full = std::max(coupled_full, defect_unitary(coupled_scattering(bv.value, d)));
        } catch (const NumericError&) {
            ++failed;
        }
    }
    const double fail_frac = grid.empty() ? 0.0 : static_cast<double>(failed + flagged) / grid.size();
    checks.push_back(check_below("boundary_failure_fraction", fail_frac, cfg.tolerances.failure_fraction + 1e-15,
                                 std::to_string(failed) + " failed, " + std::to_string(flagged) + " flagged"));
    checks.push_back(check_below("psd_sqrt_squares_back", sqrt_defect, 1e-10));
    checks.push_back(check_below("range_basis_captures_range", projector, 10 * rtol));
    checks.push_back(check_below("eigenvectors_unitary", eig_unitary, 1e-12));
    checks.push_back(check_below("fiber_rank_rtol_invariant", static_cast<double>(rank_changes), 0.5));
    checks.push_back(check_below("scattering_unitarity", unitarity, cfg.tolerances.defect));
    checks.push_back(check_below("unitarity_within_error_estimate", err_bound, 1e-300));
    checks.push_back(check_below("fiber_basis_independence", basis, 1e-10));
    checks.push_back(check_below("cayley_inverse_involution", involution, 1e-12));
    checks.push_back(check_below("lax_phillips_minus_i_is_cayley", lp_cayley, 1e-13));
    checks.push_back(check_below("appendix_cross_check", appendix, 1e-10));
    checks.push_back(check_below("coupled_blocks_unitary", coupled, cfg.tolerances.defect));
    checks.push_back(check_below("coupled_scattering_unitary", coupled_full, cfg.tolerances.defect));
    checks.push_back(check_below("lax_phillips_equals_lower_block", lp_block, 1e-12));
    checks.push_back(check_below("lax_phillips_contraction", lp_contraction, 1e-12));

    {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> normal;
        double worst = 0.0, positivity = 0.0;
        for (int k = 0; k < 100; ++k) {
            const Eigen::Index n = std::array<Eigen::Index, 3>{1, 2, 4}[k % 3];
            ComplexMatrix g(n, n);
            for (Eigen::Index i = 0; i < n * n; ++i) g(i) = Complex(normal(rng), normal(rng));
            const ComplexMatrix w = (0.9 / spectral_norm(g)) * g;
            const ComplexMatrix mw = w_to_m(w);
            worst = std::max(worst, (m_to_w(mw) - w).norm());
            positivity = std::max(positivity, -min_eigenvalue(imag_part(mw)));
        }
        checks.push_back(check_below("cayley_round_trip", worst, 1e-12));
        checks.push_back(check_below("cayley_positivity_transfer", positivity, 1e-12));
    }

    if (model.w && model.measure && model.measure->density().empty() && !model.measure->atoms().empty()) {
        const NevanlinnaMeasure& mu = *model.measure;
        std::string detail;
        double value = 1.0;
        try {
            RealizeOptions ro;
            ro.admissibility = admissibility_options(cfg, grid);
            ro.stieltjes.schedule = cfg.schedule;
            const RealizeResult r = realize(*model.w, grid, ro);
            const NevanlinnaMeasure density_only(ComplexMatrix::Zero(model.dim, model.dim), {}, r.model.density());
            const double mass = weighted_mass(density_only).norm();
            const auto recovered = WeylSampler::from_measure(std::make_shared<NevanlinnaMeasure>(r.model));
            std::size_t away = 0, rank0 = 0;
            const double h = grid.size() > 1 ? grid[1] - grid[0] : 1.0;
            for (double lambda : grid) {
                if (breakpoint_distance(mu, lambda) < std::max(0.05, 3 * h)) continue;
                ++away;
                try {
                    if (scattering_matrix(boundary_limit(recovered, lambda, cfg.schedule).value, rtol).rank == 0) ++rank0;
                } catch (const NumericError&) {
                }
            }
            const double frac = away ? static_cast<double>(rank0) / away : 0.0;
            const bool ok = r.admissibility.inner_flag && mass < 1e-6 && frac >= 0.95;
            value = ok ? 0.0 : 1.0;
            detail = std::string("inner ") + (r.admissibility.inner_flag ? "yes" : "no") + ", density mass " +
                     format_double(mass) + ", rank-0 fraction " + format_double(frac);
        } catch (const NumericError& e) {
            detail = e.what();
        }
        checks.push_back(Check{"inner_implies_singular", value == 0.0 ? "pass" : "fail", value, 0.5, detail});
    } else {
        checks.push_back(skipped("inner_implies_singular", "model is not purely atomic"));
    }

    if (model.w) {
        const auto opts = admissibility_options(cfg, coarse);
        const bool same = admissibility_to_json(check_admissibility(*model.w, opts)).dump() ==
                          admissibility_to_json(check_admissibility(*model.w, opts)).dump();
        checks.push_back(Check{"admissibility_deterministic", same ? "pass" : "fail", same ? 0.0 : 1.0, 0.5, {}});
    } else {
        checks.push_back(skipped("admissibility_deterministic", "no contractive function"));
    }

    {
        std::vector<SampleRow> rows;
        for (double lambda : coarse) {
            try {
                ScatteringSample s = scattering_matrix(boundary_limit(m, lambda, cfg.schedule).value, rtol);
                s.lambda = lambda;
                rows.push_back(to_row(s));
            } catch (const NumericError&) {
            }
        }
        const json a = samples_to_json(rows, model.dim);
        const bool json_ok = samples_to_json(samples_from_json(json::parse(a.dump())), model.dim) == a;
        std::stringstream csv;
        write_samples_csv(csv, rows, model.dim);
        const auto back = read_samples_csv(csv);
        bool csv_ok = back.size() == rows.size();
        for (std::size_t i = 0; csv_ok && i < rows.size(); ++i) {
            csv_ok = back[i].lambda == rows[i].lambda && back[i].defect == rows[i].defect && back[i].s == rows[i].s;
        }
        checks.push_back(Check{"output_round_trip", json_ok && csv_ok ? "pass" : "fail", json_ok && csv_ok ? 0.0 : 1.0, 0.5,
                               json_ok ? (csv_ok ? "" : "csv mismatch") : "json mismatch"});
    }

    bool all = true;
    json list = json::array();
    for (const auto& c : checks) {
        all = all && c.status != "fail";
        list.push_back({{"name", c.name}, {"status", c.status}, {"value", c.value}, {"threshold", c.threshold}, {"detail", c.detail}});
        log << c.status << "  " << c.name << "  " << format_double(c.value) << (c.detail.empty() ? "" : "  (" + c.detail + ")")
            << '\n';
    }
    if (cfg.format == OutputFormat::Json) {
        emit_json(cfg, json{{"model", model.label}, {"pass", all}, {"invariants", list}});
    } else {
        std::ostringstream os;
        os << "invariant,status,value,threshold\n";
        for (const auto& c : checks) os << c.name << ',' << c.status << ',' << format_double(c.value) << ',' << format_double(c.threshold) << '\n';
        if (cfg.output.empty()) {
            std::cout << os.str();
        } else {
            std::ofstream out(cfg.output);
            if (!(out << os.str())) throw NumericError(ErrorCode::IoError, "cannot write " + cfg.output.string());
        }
    }
    const auto failed_checks = std::count_if(checks.begin(), checks.end(), [](const Check& c) { return c.status == "fail"; });
    return {all ? 0 : 1, std::to_string(checks.size()) + " invariants, " + std::to_string(failed_checks) + " failed"};
}

}  // namespace

// ---------------------------------------------------------------------------

Subcommand subcommand_from_string(std::string_view s) {
    if (s == "forward") return Subcommand::Forward;
    if (s == "dissipative") return Subcommand::Dissipative;
    if (s == "laxphillips") return Subcommand::LaxPhillips;
    if (s == "inverse") return Subcommand::Inverse;
    if (s == "verify") return Subcommand::Verify;
    config_error("unknown subcommand '" + std::string(s) + "'");
}

std::string_view to_string(Subcommand s) {
    switch (s) {
        case Subcommand::Forward: return "forward";
        case Subcommand::Dissipative: return "dissipative";
        case Subcommand::LaxPhillips: return "laxphillips";
        case Subcommand::Inverse: return "inverse";
        case Subcommand::Verify: return "verify";
    }
    return "forward";
}

std::vector<double> Grid::nodes() const {
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        out[k] = k + 1 == points ? lambda_max : lambda_min + (lambda_max - lambda_min) * k / (points - 1);
    }
    return out;
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) config_error("config must be a JSON object");
    RunConfig cfg;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    try {
        if (!j.contains("subcommand")) config_error("config needs a subcommand");
        cfg.subcommand = subcommand_from_string(j.at("subcommand").get<std::string>());

        if (!j.contains("model")) config_error("config needs a model");
        const json& model = j.at("model");
        if (model.is_string()) {
            const auto path = resolve(model.get<std::string>());
            if (!std::filesystem::exists(path)) config_error("model file not found: " + path.string());
            cfg.model = path;
        } else {
            cfg.model = model_spec_from_json(model);
        }
        if (j.contains("D")) cfg.d = j.at("D");

        if (j.contains("grid")) {
            const json& g = j.at("grid");
            cfg.grid.lambda_min = g.value("lambda_min", cfg.grid.lambda_min);
            cfg.grid.lambda_max = g.value("lambda_max", cfg.grid.lambda_max);
            cfg.grid.points = g.value("points", cfg.grid.points);
        }
        if (cfg.grid.points < 2) config_error("grid.points must be >= 2");
        if (!(cfg.grid.lambda_min < cfg.grid.lambda_max)) config_error("grid needs lambda_min < lambda_max");

        if (j.contains("schedule")) {
            const json& s = j.at("schedule");
            cfg.schedule.eps0 = s.value("eps0", cfg.schedule.eps0);
            cfg.schedule.ratio = s.value("ratio", cfg.schedule.ratio);
            cfg.schedule.steps = s.value("steps", cfg.schedule.steps);
            cfg.schedule.extrapolation_order = s.value("order", cfg.schedule.extrapolation_order);
        }
        try {
            cfg.schedule.validate();
        } catch (const NumericError& e) {
            config_error(std::string("schedule: ") + e.what());
        }

        if (j.contains("output")) {
            const json& o = j.at("output");
            if (o.is_string()) {
                cfg.output = resolve(o.get<std::string>());
            } else {
                if (o.contains("path")) cfg.output = resolve(o.at("path").get<std::string>());
                if (o.contains("format")) cfg.format = output_format_from_string(o.at("format").get<std::string>());
                if (o.contains("model_path")) cfg.model_output = resolve(o.at("model_path").get<std::string>());
            }
        }
        if (j.contains("tolerances")) {
            const json& t = j.at("tolerances");
            cfg.tolerances.rtol = t.value("rtol", cfg.tolerances.rtol);
            cfg.tolerances.defect = t.value("defect", cfg.tolerances.defect);
            cfg.tolerances.roundtrip = t.value("roundtrip", cfg.tolerances.roundtrip);
            cfg.tolerances.failure_fraction = t.value("failure_fraction", cfg.tolerances.failure_fraction);
        }
        const auto& t = cfg.tolerances;
        if (!(t.rtol > 0 && t.defect > 0 && t.roundtrip > 0 && t.failure_fraction > 0)) {
            config_error("tolerances must be positive");
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.threads = j.value("threads", cfg.threads);
        if (cfg.threads < 1) config_error("threads must be >= 1");
    } catch (const json::exception& e) {
        config_error(std::string("config: ") + e.what());
    } catch (const NumericError& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        config_error(e.what());
    }
    return cfg;
}

RunResult run(const RunConfig& cfg, std::ostream& log) {
    Resolved model;
    try {
        model = resolve_model(cfg);
    } catch (const NumericError& e) {
        if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::IoError) return {2, e.what()};
        return {3, e.what()};
    }
    try {
        switch (cfg.subcommand) {
            case Subcommand::Forward: return run_forward(cfg, model, log);
            case Subcommand::Dissipative: return run_dissipative(cfg, model, log);
            case Subcommand::LaxPhillips: return run_laxphillips(cfg, model, log);
            case Subcommand::Inverse: return run_inverse(cfg, model, log);
            case Subcommand::Verify: return run_verify(cfg, model, log);
        }
    } catch (const NumericError& e) {
        if (e.code() == ErrorCode::ConfigError) return {2, e.what()};
        if (is_model_error(e.code())) return {3, e.what()};
        return {1, e.what()};
    }
    return {1, "unreachable"};
}

}  // namespace weylscat::cli
