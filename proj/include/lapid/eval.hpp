#pragma once

// Model scoring and selection: trajectory re-simulation, log RMSE, corrected AIC,
// best-model selection, and Gaussian-elimination canonicalization of coupled systems.

#include "lapid/core.hpp"
#include "lapid/library.hpp"
#include "lapid/regress.hpp"
#include "lapid/sim.hpp"

#include <Eigen/LU>

namespace lapid {

enum class ModelStatus { ok, perfect_fit, diverged, not_solvable };

inline const char* to_string(ModelStatus s) {
    switch (s) {
        case ModelStatus::ok: return "ok";
        case ModelStatus::perfect_fit: return "perfect_fit";
        case ModelStatus::diverged: return "diverged";
        case ModelStatus::not_solvable: return "not_solvable";
    }
    return "?";
}

struct ScoredModel {
    SparseModel model;
    int p = 0;
    double log_rmse = kPosInfinity;
    double aicc = kPosInfinity;
    ModelStatus status = ModelStatus::ok;
    std::optional<TimeSeriesSet> prediction;
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// ln of the root-mean-square trajectory error; -inf flags a perfect fit.
inline double log_rmse(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
    if (truth.rows() != prediction.rows() || truth.cols() != prediction.cols())
        throw ShapeError("log_rmse: shape mismatch");
    if (!prediction.allFinite()) throw NonFiniteError("log_rmse: prediction not finite");
    const double mse = (truth - prediction).squaredNorm() / static_cast<double>(truth.cols());
    if (mse == 0.0) return kNegInfinity;
    return 0.5 * std::log(mse);
}

/// AICc from a residual sum of squares over m samples with p active terms:
/// sigma^2 = SSE/m, AIC = 2p + m ln(2 pi sigma^2) + SSE/sigma^2, plus the
/// small-sample correction. SSE == 0 reports a perfect fit as -inf.
inline double aicc_from_sse(double sse, Eigen::Index m, int p) {
    if (m <= p + 2) throw DegenerateSampleSizeError("aicc: need m > p + 2");
    if (sse < 0.0 || !std::isfinite(sse)) throw NonFiniteError("aicc: bad SSE");
    if (sse == 0.0) return kNegInfinity;  // ZeroVariance: rank first
    const double md = static_cast<double>(m);
    const double sigma2 = sse / md;
    const double aic = 2.0 * p + md * std::log(2.0 * 3.14159265358979323846 * sigma2) + sse / sigma2;
    return aic + 2.0 * (p + 1.0) * (p + 2.0) / (md - p - 2.0);
}

inline double aicc(int p, const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction) {
    if (truth.rows() != prediction.rows() || truth.cols() != prediction.cols())
        throw ShapeError("aicc: shape mismatch");
    if (!prediction.allFinite()) return kPosInfinity;  // Diverged
    return aicc_from_sse((truth - prediction).squaredNorm(), truth.cols(), p);
}

// ---------------------------------------------------------------------------
// Re-simulation
// ---------------------------------------------------------------------------

struct ResimOptions {
    int substeps = 4;
};

namespace detail {

struct ScalarOdeForm {
    int kstar = 0;                 // isolated derivative order
    double lead = 0.0;             // coefficient on d^kstar u/dt^kstar
    double delta_coeff = 0.0;      // coefficient on the delta term, if any
    double delta_t0 = 0.0;
    std::vector<std::pair<double, TermDescriptor>> rhs_terms;  // all other active terms
};

inline ScalarOdeForm explicit_form(const SparseModel& model,
                                   const std::vector<TermDescriptor>& terms) {
    ScalarOdeForm form;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (model.xi[static_cast<Eigen::Index>(i)] == 0.0) continue;
        const auto& term = terms[i];
        if (term.is_single_deriv() && term.factors[0].axis == DerivAxis::time)
            form.kstar = std::max(form.kstar, term.factors[0].order);
    }
    if (form.kstar < 1)
        throw NotExplicitlySolvableError("resimulate: no isolatable derivative term");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const double c = model.xi[static_cast<Eigen::Index>(i)];
        if (c == 0.0) continue;
        const auto& term = terms[i];
        if (term.is_single_deriv() && term.factors[0].order == form.kstar &&
            term.factors[0].axis == DerivAxis::time) {
            form.lead = c;
            continue;
        }
        for (const auto& f : term.factors) {
            if (f.kind == FactorKind::deriv &&
                (f.axis != DerivAxis::time || f.order >= form.kstar))
                throw NotExplicitlySolvableError(
                    "resimulate: active term carries a non-isolatable derivative");
        }
        if (term.is_single_special() && term.factors[0].special == SpecialKind::delta) {
            form.delta_coeff = c;
            form.delta_t0 = term.factors[0].t0;
            continue;
        }
        if (term.contains_special(SpecialKind::delta))
            throw NotExplicitlySolvableError("resimulate: delta inside a product term");
        form.rhs_terms.emplace_back(c, term);
    }
    if (form.lead == 0.0)
        throw NotExplicitlySolvableError("resimulate: leading derivative has zero coefficient");
    return form;
}

inline double eval_term_on_state(const TermDescriptor& term, double t, const Eigen::VectorXd& y,
                                 int kstar) {
    double v = 1.0;
    for (const auto& f : term.factors) {
        switch (f.kind) {
            case FactorKind::time: v *= t; break;
            case FactorKind::state: v *= y[0]; break;
            case FactorKind::deriv: v *= y[f.order]; (void)kstar; break;
            case FactorKind::special:
                switch (f.special) {
                    case SpecialKind::step: v *= (t >= f.t0) ? 1.0 : 0.0; break;
                    case SpecialKind::sine: v *= std::sin(f.omega * t); break;
                    case SpecialKind::cosine: v *= std::cos(f.omega * t); break;
                    case SpecialKind::hsinh: v *= std::sinh(f.omega * t); break;
                    case SpecialKind::hcosh: v *= std::cosh(f.omega * t); break;
                    case SpecialKind::delta: v *= 0.0; break;  // handled as a jump
                }
                break;
        }
    }
    return v;
}

}  // namespace detail

/// Converts one scalar implicit model to companion form and integrates it with RK4
/// from the given initial derivatives u^(j)(t1), j = 0..k*-1. Throws
/// NotExplicitlySolvableError when no derivative can be isolated; NonFiniteError
/// signals divergence.
inline TimeSeriesSet resimulate(const SparseModel& model, const std::vector<TermDescriptor>& terms,
                                const Eigen::VectorXd& initial_derivs, const TimeGrid& grid,
                                const ResimOptions& opts = {}) {
    const auto form = detail::explicit_form(model, terms);
    if (initial_derivs.size() < form.kstar)
        throw MissingInitialValuesError("resimulate: need k* initial derivative values");

    RhsFn rhs = [form](double t, const Eigen::VectorXd& y) {
        Eigen::VectorXd dy(form.kstar);
        for (int j = 0; j + 1 < form.kstar; ++j) dy[j] = y[j + 1];
        double acc = 0.0;
        for (const auto& [c, term] : form.rhs_terms)
            acc += c * detail::eval_term_on_state(term, t, y, form.kstar);
        dy[form.kstar - 1] = -acc / form.lead;
        return dy;
    };

    Eigen::VectorXd y0 = initial_derivs.head(form.kstar);
    // a delta term forces a jump of -c/lead in u^(k*-1) at its location; step factors
    // switch inside the RHS, and the integrator splits intervals at t0 either way
    double t0 = std::numeric_limits<double>::quiet_NaN();
    double jump = 0.0;
    if (form.delta_coeff != 0.0) {
        t0 = form.delta_t0;
        jump = -form.delta_coeff / form.lead;
    } else {
        for (const auto& [c, term] : form.rhs_terms)
            for (const auto& f : term.factors)
                if (f.kind == FactorKind::special && f.special == SpecialKind::step) t0 = f.t0;
    }
    TimeSeriesSet full =
        std::isnan(t0)
            ? rk4_integrate(rhs, y0, grid, opts.substeps)
            : detail::rk4_with_jump(rhs, y0, grid, t0, form.kstar - 1, jump, opts.substeps,
                                    std::vector<std::string>(
                                        static_cast<std::size_t>(form.kstar), "y"));
    // keep only the u component
    Eigen::MatrixXd u = full.states.row(0);
    return TimeSeriesSet(grid, std::move(u), {"u"});
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

/// argmin AICc; ties broken by smaller active count, then smaller pivot index.
/// Perfect fits (-inf) rank first, diverged models (+inf) never beat finite ones.
inline const ScoredModel& select_best(const std::vector<ScoredModel>& scored) {
    if (scored.empty()) throw EmptyError("select_best: no candidates");
    const ScoredModel* best = nullptr;
    for (const auto& cand : scored) {
        if (!best) {
            best = &cand;
            continue;
        }
        const auto key = [](const ScoredModel& sm) {
            return std::make_tuple(sm.aicc, sm.p, sm.model.pivot);
        };
        if (key(cand) < key(*best)) best = &cand;
    }
    return *best;
}

// ---------------------------------------------------------------------------
// Canonicalization of coupled systems
// ---------------------------------------------------------------------------

/// One explicit equation per channel: unit coefficient on that channel's first
/// derivative, zero on every other channel's derivative.
struct CanonicalSystem {
    std::vector<TermDescriptor> terms;
    Eigen::MatrixXd coeffs;   // d x D, row c is channel c's equation
    std::vector<std::string> names;
    int d = 1;

    std::string render_equation(int channel) const {
        std::string out = names.at(static_cast<std::size_t>(channel)) + "_t";
        for (Eigen::Index j = 0; j < coeffs.cols(); ++j) {
            const auto& term = terms[static_cast<std::size_t>(j)];
            if (term.is_single_deriv() && term.factors[0].order == 1 &&
                term.factors[0].axis == DerivAxis::time)
                continue;  // derivative block is the identity
            const double c = coeffs(channel, j);
            if (c == 0.0) continue;
            char buf[64];
            std::snprintf(buf, sizeof(buf), " %c %.6g*", c >= 0 ? '+' : '-', std::abs(c));
            out += buf + render_term(term, names);
        }
        return out + " = 0";
    }
};

/// Gaussian elimination on the first-derivative coefficient block so equation c has
/// unit weight on channel c's derivative and zero on the others. Coefficients below
/// 1e-3 are pruned afterwards.
inline CanonicalSystem canonicalize(const std::vector<SparseModel>& models,
                                    const std::vector<TermDescriptor>& terms,
                                    const std::vector<std::string>& names, int d,
                                    double prune_tol = 1e-3) {
    if (static_cast<int>(models.size()) != d)
        throw ShapeError("canonicalize: need exactly d equations");
    std::vector<Eigen::Index> didx(static_cast<std::size_t>(d), -1);
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const auto& term = terms[j];
        if (term.is_single_deriv() && term.factors[0].order == 1 &&
            term.factors[0].axis == DerivAxis::time)
            didx[static_cast<std::size_t>(term.factors[0].channel)] = static_cast<Eigen::Index>(j);
    }
    for (int c = 0; c < d; ++c)
        if (didx[static_cast<std::size_t>(c)] < 0)
            throw Error("canonicalize: library lacks a first-derivative term for channel " +
                        std::to_string(c));

    const Eigen::Index D = static_cast<Eigen::Index>(terms.size());
    Eigen::MatrixXd C(d, D);
    for (int r = 0; r < d; ++r) {
        if (models[static_cast<std::size_t>(r)].xi.size() != D)
            throw ShapeError("canonicalize: model size mismatch");
        C.row(r) = models[static_cast<std::size_t>(r)].xi.transpose();
    }
    Eigen::MatrixXd M(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) M(r, c) = C(r, didx[static_cast<std::size_t>(c)]);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible())
        throw SingularDerivativeBlockError("canonicalize: derivative coefficient block singular");
    Eigen::MatrixXd canon = lu.solve(C);

    for (int r = 0; r < d; ++r) {
        for (Eigen::Index j = 0; j < D; ++j)
            if (std::abs(canon(r, j)) < prune_tol) canon(r, j) = 0.0;
        for (int c = 0; c < d; ++c)
            canon(r, didx[static_cast<std::size_t>(c)]) = (r == c) ? 1.0 : 0.0;
    }

    CanonicalSystem out;
    out.terms = terms;
    out.coeffs = std::move(canon);
    out.names = names;
    out.d = d;
    return out;
}

/// Walks the scored models best-first and keeps the first d whose first-derivative
/// coefficient rows are linearly independent.
inline std::vector<SparseModel> select_independent_models(const std::vector<ScoredModel>& scored,
                                                          const std::vector<TermDescriptor>& terms,
                                                          int d) {
    std::vector<const ScoredModel*> order;
    for (const auto& sm : scored) order.push_back(&sm);
    std::sort(order.begin(), order.end(), [](const ScoredModel* a, const ScoredModel* b) {
        return std::make_tuple(a->aicc, a->p, a->model.pivot) <
               std::make_tuple(b->aicc, b->p, b->model.pivot);
    });

    std::vector<Eigen::Index> didx;
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const auto& term = terms[j];
        if (term.is_single_deriv() && term.factors[0].order == 1 &&
            term.factors[0].axis == DerivAxis::time)
            didx.push_back(static_cast<Eigen::Index>(j));
    }
    if (static_cast<int>(didx.size()) < d)
        throw Error("select_independent_models: library lacks first-derivative terms");

    std::vector<SparseModel> picked;
    Eigen::MatrixXd rows(0, static_cast<Eigen::Index>(didx.size()));
    for (const auto* sm : order) {
        if (!std::isfinite(sm->aicc) && sm->aicc > 0) continue;  // diverged
        Eigen::RowVectorXd r(static_cast<Eigen::Index>(didx.size()));
        for (std::size_t q = 0; q < didx.size(); ++q)
            r[static_cast<Eigen::Index>(q)] = sm->model.xi[didx[q]];
        Eigen::MatrixXd trial(rows.rows() + 1, rows.cols());
        trial << rows, r;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
        lu.setThreshold(1e-8);
        if (lu.rank() == trial.rows()) {
            rows = std::move(trial);
            picked.push_back(sm->model);
            if (static_cast<int>(picked.size()) == d) return picked;
        }
    }
    throw SingularDerivativeBlockError(
        "select_independent_models: fewer than d independent equations found");
}

}  // namespace lapid
