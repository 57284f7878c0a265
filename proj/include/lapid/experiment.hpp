#pragma once

// Experiment runner: wires simulation -> library -> Laplace transform ->
// per-pivot regression -> scoring/selection, driven by INI configs, and writes
// candidates/selection/prediction artifacts deterministically.

#include "lapid/config.hpp"
#include "lapid/csv.hpp"
#include "lapid/eval.hpp"
#include "lapid/laplace.hpp"
#include "lapid/library.hpp"
#include "lapid/pde.hpp"
#include "lapid/regress.hpp"
#include "lapid/sim.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

namespace lapid {

enum class EvalMode { resim, laplace_residual };

struct ExperimentConfig {
    std::string name = "experiment";
    SystemSpec system;
    double t_start = 0.0, t_end = 1.0;
    long m = 0;
    int sim_substeps = 10;
    bool has_space = false;
    double x_start = 0.0, x_end = 1.0;
    long nx = 0;
    NoiseSpec noise;
    LibrarySpec library;
    std::vector<double> init_derivs;   // overrides for u^(j)(t1); empty = estimate
    int pde_k = 3;
    double s_start = 1.0, s_step = 0.1;
    long s_count = 20;
    int windows = 1;                   // >1: shifted transform windows (coupled systems)
    RegressionOptions regression;
    TransformOptions transform;
    PdeAssemblyOptions pde;
    EvalMode eval_mode = EvalMode::resim;
    int eval_substeps = 0;             // 0 = sim_substeps
    std::string out_dir;

    static ExperimentConfig from_file(const std::string& path) {
        return from_ini(IniFile::parse_file(path));
    }

    static ExperimentConfig from_ini(const IniFile& ini) {
        ExperimentConfig cfg;
        cfg.name = ini.get_or("experiment.name", "experiment");
        cfg.system.kind = system_kind_from_string(ini.get("system.kind"));
        for (const auto& [key, val] : ini.entries()) {
            if (key.rfind("system.", 0) == 0) {
                const std::string leaf = key.substr(7);
                if (leaf == "kind" || leaf == "ic" || leaf == "ic_kind") continue;
                cfg.system.params[leaf] = std::stod(val);
            }
        }
        cfg.system.ic = ini.get_list_or("system.ic");
        cfg.system.ic_kind = ini.get_or("system.ic_kind", "gaussian");

        cfg.t_start = ini.get_double("grid.t_start");
        cfg.t_end = ini.get_double("grid.t_end");
        cfg.m = ini.get_int("grid.m");
        cfg.sim_substeps = static_cast<int>(ini.get_int_or("grid.substeps", 10));
        if (ini.has("space.n")) {
            cfg.has_space = true;
            cfg.x_start = ini.get_double("space.x_start");
            cfg.x_end = ini.get_double("space.x_end");
            cfg.nx = ini.get_int("space.n");
        }
        cfg.noise.level = ini.get_double_or("noise.level", 0.0);
        cfg.noise.seed = static_cast<std::uint64_t>(ini.get_int_or("noise.seed", 42));

        cfg.library.d = static_cast<int>(ini.get_int_or("library.d", 1));
        cfg.library.k = static_cast<int>(ini.get_int_or("library.k", 1));
        cfg.library.n = static_cast<int>(ini.get_int_or("library.n", 1));
        cfg.library.term_cap = static_cast<std::size_t>(ini.get_int_or("library.cap", 10000));
        for (const auto& word : ini.get_words_or("library.specials"))
            cfg.library.specials.push_back(parse_special_spec(word));
        const std::string products = ini.get_or("library.products", "full");
        if (products == "full") cfg.library.products = ProductPolicy::full;
        else if (products == "cross") cfg.library.products = ProductPolicy::cross;
        else throw ConfigError("unknown library.products: " + products);
        cfg.init_derivs = ini.get_list_or("library.init_derivs");
        cfg.pde_k = static_cast<int>(ini.get_int_or("library.pde_k", 3));

        cfg.s_start = ini.get_double("frequencies.s_start");
        cfg.s_step = ini.get_double("frequencies.s_step");
        cfg.s_count = ini.get_int_or("frequencies.count", 20);
        cfg.windows = static_cast<int>(ini.get_int_or("frequencies.windows", 1));

        cfg.regression.threshold = ini.get_double_or("regression.threshold", 0.01);
        cfg.regression.max_iters = static_cast<int>(ini.get_int_or("regression.max_iters", 20));
        cfg.regression.rcond = ini.get_double_or("regression.rcond", 1e-12);
        cfg.regression.optimizer = ini.get_or("regression.optimizer", "stls");

        const std::string scheme = ini.get_or("transform.scheme", "as_written");
        if (scheme == "as_written") cfg.transform.scheme = QuadScheme::as_written;
        else if (scheme == "true_trapezoid") cfg.transform.scheme = QuadScheme::true_trapezoid;
        else throw ConfigError("unknown transform.scheme: " + scheme);
        cfg.transform.use_ibp = ini.get_bool_or("transform.use_ibp", true);

        const std::string mode = ini.get_or("eval.mode", "resim");
        if (mode == "resim") cfg.eval_mode = EvalMode::resim;
        else if (mode == "laplace_residual") cfg.eval_mode = EvalMode::laplace_residual;
        else throw ConfigError("unknown eval.mode: " + mode);
        cfg.eval_substeps = static_cast<int>(ini.get_int_or("eval.substeps", 0));

        cfg.pde.scheme = cfg.transform.scheme;
        cfg.pde.snapshot_stride = static_cast<int>(ini.get_int_or("pde.snapshot_stride", 10));
        cfg.pde.snapshot_min = static_cast<int>(ini.get_int_or("pde.snapshot_min", 1));
        cfg.pde.snapshot_max = static_cast<int>(ini.get_int_or("pde.snapshot_max", 0));
        cfg.pde.snapshot_group = static_cast<int>(ini.get_int_or("pde.snapshot_group", 1));
        const std::string bnd = ini.get_or("pde.boundary", "one_sided");
        if (bnd == "one_sided") cfg.pde.boundary = BoundaryEstimator::one_sided;
        else if (bnd == "savgol") cfg.pde.boundary = BoundaryEstimator::savgol;
        else if (bnd == "fft_lowpass") cfg.pde.boundary = BoundaryEstimator::fft_lowpass;
        else throw ConfigError("unknown pde.boundary: " + bnd);
        cfg.pde.savgol_window = static_cast<int>(ini.get_int_or("pde.savgol_window", 120));
        cfg.pde.savgol_degree = static_cast<int>(ini.get_int_or("pde.savgol_degree", 4));
        cfg.pde.fft_cutoff = ini.get_double_or("pde.fft_cutoff", 2.0);
        cfg.pde.smooth_x_window = static_cast<int>(ini.get_int_or("pde.smooth_x", 0));
        cfg.pde.smooth_x_degree = static_cast<int>(ini.get_int_or("pde.smooth_x_degree", 3));
        cfg.pde.ut_window = static_cast<int>(ini.get_int_or("pde.ut_window", 0));
        cfg.pde.ut_degree = static_cast<int>(ini.get_int_or("pde.ut_degree", 2));

        cfg.out_dir = ini.get_or("output.dir", "");
        return cfg;
    }
};

/// Everything run_experiment learned, plus where artifacts were written.
struct ExperimentReport {
    std::string name;
    std::vector<std::string> term_labels;
    std::vector<ScoredModel> candidates;
    std::vector<PivotFailure> failures;
    int selected = -1;
    std::string selected_equation;
    // leading-normalized coefficients of the recovered equation (scalar/PDE runs)
    std::vector<std::pair<std::string, double>> recovered;
    std::optional<CanonicalSystem> canonical;
    double log_rmse_selected = kPosInfinity;
    double aicc_selected = kPosInfinity;
    bool is_pde = false;
};

namespace detail {

inline std::string render_model_equation(const SparseModel& model,
                                         const std::vector<TermDescriptor>& terms,
                                         const std::vector<std::string>& names) {
    // pivot first, then active terms in descriptor order
    std::ostringstream out;
    out << render_term(terms[static_cast<std::size_t>(model.pivot)], names);
    for (Eigen::Index j = 0; j < model.xi.size(); ++j) {
        if (j == model.pivot || model.xi[j] == 0.0) continue;
        const double c = model.xi[j];
        out << (c >= 0 ? " + " : " - ");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", std::abs(c));
        out << buf << "*" << render_term(terms[static_cast<std::size_t>(j)], names);
    }
    out << " = 0";
    return out.str();
}

/// Divides by the coefficient of the highest-order active derivative (scalar runs)
/// or the u_t term (PDE runs), giving the conventional reporting form.
inline std::vector<std::pair<std::string, double>> leading_normalized(
    const SparseModel& model, const std::vector<TermDescriptor>& terms,
    const std::vector<std::string>& names, bool pde) {
    Eigen::Index lead = -1;
    int best_order = 0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
        if (model.xi[static_cast<Eigen::Index>(j)] == 0.0) continue;
        const auto& term = terms[j];
        if (!term.is_single_deriv()) continue;
        const auto& f = term.factors[0];
        if (pde) {
            if (f.axis == DerivAxis::time) lead = static_cast<Eigen::Index>(j);
        } else if (f.axis == DerivAxis::time && f.order > best_order) {
            best_order = f.order;
            lead = static_cast<Eigen::Index>(j);
        }
    }
    std::vector<std::pair<std::string, double>> out;
    const double div = (lead >= 0) ? model.xi[lead] : 1.0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const double c = model.xi[static_cast<Eigen::Index>(j)];
        if (c != 0.0) out.emplace_back(render_term(terms[j], names), c / div);
    }
    return out;
}

inline void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp);
        f << content;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string format_metric(double v) {
    if (v == kPosInfinity) return "inf";
    if (v == kNegInfinity) return "-inf";
    return format_double(v);
}

}  // namespace detail

// declared here, defined below (run_experiment uses it for coupled prediction)
inline TimeSeriesSet resimulate_canonical(const CanonicalSystem& canon,
                                          const Eigen::VectorXd& ic, const TimeGrid& grid,
                                          int substeps);

/// Executes one configured experiment end to end and (when out_dir is set) writes
/// measurements.csv, candidates.csv, selected.txt, prediction.csv and summary.txt.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    ExperimentReport rep;
    rep.name = cfg.name;
    const TimeGrid tgrid = TimeGrid::uniform(cfg.t_start, cfg.t_end, static_cast<std::size_t>(cfg.m));
    const FrequencyGrid freq =
        FrequencyGrid::linear(cfg.s_start, cfg.s_step, static_cast<std::size_t>(cfg.s_count));
    const int eval_sub = cfg.eval_substeps > 0 ? cfg.eval_substeps : cfg.sim_substeps;

    std::optional<TimeSeriesSet> series;
    std::optional<SpatioTemporalField> field;
    LaplaceLibrary lib;
    std::vector<TermDescriptor> terms;
    Eigen::VectorXd init_derivs;

    if (is_pde_kind(cfg.system.kind)) {
        rep.is_pde = true;
        if (!cfg.has_space) throw ConfigError("PDE experiment needs a [space] section");
        std::vector<double> xgrid(static_cast<std::size_t>(cfg.nx));
        const double dx = (cfg.x_end - cfg.x_start) / static_cast<double>(cfg.nx - 1);
        for (long i = 0; i < cfg.nx; ++i)
            xgrid[static_cast<std::size_t>(i)] = cfg.x_start + dx * static_cast<double>(i);
        auto clean = solve_pde(cfg.system, tgrid, xgrid, cfg.sim_substeps);
        field = add_noise(clean, cfg.noise);
        lib = assemble_pde_library(*field, cfg.pde_k, freq, cfg.pde);
        terms = lib.terms;
    } else {
        auto clean = simulate_canonical(cfg.system, tgrid, cfg.sim_substeps);
        series = add_noise(clean, cfg.noise);
        LibrarySpec lspec = cfg.library;
        lspec.d = static_cast<int>(series->channels());
        TimeLibraryOptions lopts;
        lopts.use_ibp = cfg.transform.use_ibp;
        if (!cfg.init_derivs.empty()) {
            Eigen::MatrixXd ov(lspec.d, static_cast<Eigen::Index>(cfg.init_derivs.size()) / lspec.d);
            if (static_cast<Eigen::Index>(cfg.init_derivs.size()) != ov.rows() * ov.cols())
                throw ConfigError("library.init_derivs length must be d*k");
            for (Eigen::Index c = 0; c < ov.rows(); ++c)
                for (Eigen::Index j = 0; j < ov.cols(); ++j)
                    ov(c, j) = cfg.init_derivs[static_cast<std::size_t>(c * ov.cols() + j)];
            lopts.initial_derivative_override = ov;
        }
        const TimeLibrary tlib = build_time_library(*series, lspec, lopts);
        TransformOptions topts = cfg.transform;
        topts.window_count = cfg.windows;
        lib = assemble_library(tlib, freq, topts);
        terms = lib.terms;
        init_derivs = tlib.initial_derivatives.cols() > 0
                          ? Eigen::VectorXd(tlib.initial_derivatives.row(0).transpose())
                          : Eigen::VectorXd();
    }
    rep.term_labels = lib.term_labels();

    const FitResult fit = fit_all_pivots(lib, cfg.regression);
    rep.failures = fit.failures;

    const bool use_resim = cfg.eval_mode == EvalMode::resim && !rep.is_pde && lib.d == 1;
    for (const auto& model : fit.models) {
        ScoredModel sm;
        sm.model = model;
        sm.p = model.active_count();
        if (use_resim) {
            try {
                ResimOptions ropts;
                ropts.substeps = eval_sub;
                TimeSeriesSet pred = resimulate(model, terms, init_derivs, tgrid, ropts);
                sm.log_rmse = log_rmse(series->states, pred.states);
                sm.aicc = aicc(sm.p, series->states, pred.states);
                sm.status = (sm.aicc == kNegInfinity) ? ModelStatus::perfect_fit : ModelStatus::ok;
                sm.prediction = std::move(pred);
            } catch (const NotExplicitlySolvableError&) {
                sm.status = ModelStatus::not_solvable;
            } catch (const NonFiniteError&) {
                sm.status = ModelStatus::diverged;
            } catch (const DegenerateSampleSizeError&) {
                sm.status = ModelStatus::diverged;
            }
        } else if (rep.is_pde) {
            // residual of the explicit form (u_t coefficient scaled to one) keeps
            // candidates with different pivots on one scale; models that never use
            // u_t cannot describe the evolution and rank last
            Eigen::Index ut = -1;
            for (std::size_t q = 0; q < terms.size(); ++q)
                if (terms[q].is_single_deriv() && terms[q].factors[0].axis == DerivAxis::time)
                    ut = static_cast<Eigen::Index>(q);
            const double lead = ut >= 0 ? model.xi[ut] : 0.0;
            const Eigen::Index rows = lib.theta.rows();
            if (lead == 0.0) {
                sm.status = ModelStatus::not_solvable;
                sm.aicc = kPosInfinity;
            } else {
                const double scaled = model.residual_norm / std::abs(lead);
                const double sse = scaled * scaled;
                try {
                    sm.aicc = aicc_from_sse(sse, rows, sm.p);
                } catch (const DegenerateSampleSizeError&) {
                    sm.aicc = kPosInfinity;
                }
                sm.log_rmse = sse > 0.0 ? 0.5 * std::log(sse / static_cast<double>(rows))
                                        : kNegInfinity;
                sm.status = (sm.aicc == kNegInfinity) ? ModelStatus::perfect_fit : ModelStatus::ok;
            }
        } else {
            // coupled systems: normalized-column residual
            const double sse = model.residual_norm_normalized * model.residual_norm_normalized;
            const Eigen::Index rows = lib.theta.rows();
            try {
                sm.aicc = aicc_from_sse(sse, rows, sm.p);
            } catch (const DegenerateSampleSizeError&) {
                sm.aicc = kPosInfinity;
            }
            sm.log_rmse = sse > 0.0
                              ? 0.5 * std::log(sse / static_cast<double>(rows))
                              : kNegInfinity;
            sm.status = (sm.aicc == kNegInfinity) ? ModelStatus::perfect_fit : ModelStatus::ok;
        }
        rep.candidates.push_back(std::move(sm));
    }
    if (rep.candidates.empty()) throw EmptyError("run_experiment: no viable pivot models");

    const ScoredModel& best = select_best(rep.candidates);
    for (std::size_t i = 0; i < rep.candidates.size(); ++i)
        if (&rep.candidates[i] == &best) rep.selected = static_cast<int>(i);
    rep.selected_equation = detail::render_model_equation(best.model, terms, lib.names);
    rep.recovered = detail::leading_normalized(best.model, terms, lib.names, rep.is_pde);
    rep.log_rmse_selected = best.log_rmse;
    rep.aicc_selected = best.aicc;

    std::optional<TimeSeriesSet> coupled_pred;
    if (!rep.is_pde && lib.d > 1) {
        const auto picked = select_independent_models(rep.candidates, terms, lib.d);
        rep.canonical = canonicalize(picked, terms, lib.names, lib.d);
        try {
            coupled_pred = resimulate_canonical(*rep.canonical, series->states.col(0), tgrid,
                                                eval_sub);
            rep.log_rmse_selected = log_rmse(series->states, coupled_pred->states);
        } catch (const Error&) {
            // canonical system not explicitly integrable; keep residual-space metrics
        }
    }

    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        const std::string base = cfg.out_dir + "/";
        if (series) write_csv(*series, base + "measurements.csv");
        if (field) write_csv(*field, base + "measurements.csv");

        std::ostringstream cand;
        cand << "pivot,equation,p,log_rmse,aicc,status\n";
        for (const auto& sm : rep.candidates) {
            cand << rep.term_labels[static_cast<std::size_t>(sm.model.pivot)] << ",\""
                 << detail::render_model_equation(sm.model, terms, lib.names) << "\"," << sm.p
                 << "," << detail::format_metric(sm.log_rmse) << ","
                 << detail::format_metric(sm.aicc) << "," << to_string(sm.status) << "\n";
        }
        for (const auto& f : rep.failures) {
            cand << rep.term_labels[static_cast<std::size_t>(f.pivot)] << ",,," << "," << ","
                 << "skipped: " << f.reason << "\n";
        }
        detail::atomic_write(base + "candidates.csv", cand.str());

        std::ostringstream sel;
        sel << rep.selected_equation << "\n";
        if (rep.canonical)
            for (int c = 0; c < rep.canonical->d; ++c)
                sel << rep.canonical->render_equation(c) << "\n";
        detail::atomic_write(base + "selected.txt", sel.str());

        if (best.prediction) write_csv(*best.prediction, base + "prediction.csv");
        else if (coupled_pred) write_csv(*coupled_pred, base + "prediction.csv");

        std::ostringstream sum;
        sum << "experiment: " << cfg.name << "\n";
        sum << "noise_level: " << format_double(cfg.noise.level) << "\n";
        sum << "seed: " << cfg.noise.seed << "\n";
        sum << "selected_pivot: " << rep.term_labels[static_cast<std::size_t>(best.model.pivot)]
            << "\n";
        sum << "selected_equation: " << rep.selected_equation << "\n";
        sum << "p: " << best.p << "\n";
        sum << "log_rmse: " << detail::format_metric(rep.log_rmse_selected) << "\n";
        sum << "aicc: " << detail::format_metric(rep.aicc_selected) << "\n";
        for (const auto& [label, coef] : rep.recovered)
            sum << "coef " << label << ": " << format_double(coef) << "\n";
        if (rep.canonical)
            for (int c = 0; c < rep.canonical->d; ++c)
                sum << "canonical_" << lib.names[static_cast<std::size_t>(c)] << ": "
                    << rep.canonical->render_equation(c) << "\n";
        detail::atomic_write(base + "summary.txt", sum.str());
    }
    return rep;
}

/// RK4 integration of a canonical coupled system (explicit first-order form).
inline TimeSeriesSet resimulate_canonical(const CanonicalSystem& canon,
                                          const Eigen::VectorXd& ic, const TimeGrid& grid,
                                          int substeps) {
    const int d = canon.d;
    for (Eigen::Index j = 0; j < canon.coeffs.cols(); ++j) {
        const auto& term = canon.terms[static_cast<std::size_t>(j)];
        bool used = false;
        for (int c = 0; c < d; ++c) used = used || canon.coeffs(c, j) != 0.0;
        if (!used) continue;
        for (const auto& f : term.factors)
            if (f.kind == FactorKind::deriv &&
                !(term.is_single_deriv() && f.order == 1 && f.axis == DerivAxis::time))
                throw NotExplicitlySolvableError(
                    "resimulate_canonical: derivative inside a non-canonical term");
    }
    const CanonicalSystem* cn = &canon;
    RhsFn rhs = [cn, d](double t, const Eigen::VectorXd& y) {
        Eigen::VectorXd dy = Eigen::VectorXd::Zero(d);
        for (int c = 0; c < d; ++c) {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < cn->coeffs.cols(); ++j) {
                const double coef = cn->coeffs(c, j);
                if (coef == 0.0) continue;
                const auto& term = cn->terms[static_cast<std::size_t>(j)];
                if (term.is_single_deriv() && term.factors[0].order == 1 &&
                    term.factors[0].axis == DerivAxis::time)
                    continue;  // the unit derivative itself
                double v = 1.0;
                for (const auto& f : term.factors) {
                    if (f.kind == FactorKind::time) v *= t;
                    else if (f.kind == FactorKind::state) v *= y[f.channel];
                    else throw NotExplicitlySolvableError("resimulate_canonical: bad factor");
                }
                acc += coef * v;
            }
            dy[c] = -acc;
        }
        return dy;
    };
    return rk4_integrate(rhs, ic, grid, substeps, canon.names);
}

// ---------------------------------------------------------------------------
// Suites and frequency scans
// ---------------------------------------------------------------------------

struct SuiteEntry {
    std::string config_path;
    ExperimentReport report;
    std::string error;   // nonempty when the run failed
};

/// Runs every config listed in the manifest (one path per line, '#' comments),
/// continuing past failures, and writes an aggregate CSV keyed by experiment
/// and noise level.
inline std::vector<SuiteEntry> run_suite(const std::string& manifest_path,
                                         const std::string& out_csv = "") {
    std::ifstream f(manifest_path);
    if (!f) throw ConfigError("cannot open manifest: " + manifest_path);
    std::vector<std::string> paths;
    std::string line;
    const auto dir = std::filesystem::path(manifest_path).parent_path();
    while (std::getline(f, line)) {
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
        while (!line.empty() && line.front() == ' ') line.erase(0, 1);
        if (line.empty()) continue;
        std::filesystem::path p(line);
        paths.push_back(p.is_absolute() ? p.string() : (dir / p).string());
    }
    if (paths.empty()) throw EmptyError("run_suite: manifest lists no configs");

    std::vector<SuiteEntry> entries;
    for (const auto& path : paths) {
        SuiteEntry e;
        e.config_path = path;
        try {
            e.report = run_experiment(ExperimentConfig::from_file(path));
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        entries.push_back(std::move(e));
    }
    if (!out_csv.empty()) {
        std::ostringstream out;
        out << "experiment,noise_level,status,selected_equation,p,log_rmse,aicc\n";
        for (const auto& e : entries) {
            std::string name = e.config_path, noise = "";
            double level = 0.0;
            int p = 0;
            try {
                const auto cfg = ExperimentConfig::from_file(e.config_path);
                name = cfg.name;
                level = cfg.noise.level;
            } catch (...) {
            }
            if (!e.error.empty()) {
                out << name << "," << format_double(level) << ",error,\"" << e.error << "\",,,\n";
                continue;
            }
            const auto& sm = e.report.candidates[static_cast<std::size_t>(e.report.selected)];
            p = sm.p;
            out << name << "," << format_double(level) << ",ok,\"" << e.report.selected_equation
                << "\"," << p << "," << detail::format_metric(e.report.log_rmse_selected) << ","
                << detail::format_metric(e.report.aicc_selected) << "\n";
        }
        detail::atomic_write(out_csv, out.str());
    }
    return entries;
}

struct ScanRange {
    double lo = 0.0, hi = 0.0;
    long count = 1;

    static ScanRange parse(const std::string& text) {
        // "A:B:N"
        ScanRange r;
        const auto c1 = text.find(':');
        const auto c2 = text.find(':', c1 == std::string::npos ? 0 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ConfigError("scan range must be A:B:N, got '" + text + "'");
        r.lo = std::stod(text.substr(0, c1));
        r.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        r.count = std::stol(text.substr(c2 + 1));
        if (r.count < 1 || (r.count > 1 && !(r.hi > r.lo)))
            throw ConfigError("bad scan range '" + text + "'");
        return r;
    }
    double at(long i) const {
        return count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
};

/// Grid scan over (s_start, s_step): each cell runs the identification pipeline and
/// records the selected model's log RMSE (NaN on failure). Returns CSV text
/// "s_start,s_step,log_rmse".
inline std::string scan_frequencies(ExperimentConfig cfg, const ScanRange& start_range,
                                    const ScanRange& step_range) {
    if (!(start_range.lo > 0.0)) throw NonPositiveFrequencyError("scan: s_start must be positive");
    if (!(step_range.lo > 0.0)) throw Error("scan: s_step must be positive");
    cfg.out_dir.clear();
    std::ostringstream out;
    out << "s_start,s_step,log_rmse\n";
    for (long i = 0; i < start_range.count; ++i) {
        for (long j = 0; j < step_range.count; ++j) {
            ExperimentConfig cell = cfg;
            cell.s_start = start_range.at(i);
            cell.s_step = step_range.at(j);
            double val = std::numeric_limits<double>::quiet_NaN();
            try {
                const auto rep = run_experiment(cell);
                val = rep.log_rmse_selected;
            } catch (const std::exception&) {
                // recorded as NaN
            }
            out << format_double(cell.s_start) << "," << format_double(cell.s_step) << ","
                << (std::isnan(val) ? "nan" : detail::format_metric(val)) << "\n";
        }
    }
    return out.str();
}

}  // namespace lapid
