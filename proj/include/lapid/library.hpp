#pragma once

// Time-domain candidate library: factor/term descriptors, tensor-product term
// enumeration, finite-difference derivative estimation, and term evaluation.

#include "lapid/core.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <tuple>

namespace lapid {

enum class FactorKind { time, state, deriv, special };
enum class DerivAxis { time, space };
enum class SpecialKind { delta, step, sine, cosine, hsinh, hcosh };

/// One multiplicand of a candidate term.
struct Factor {
    FactorKind kind = FactorKind::time;
    int channel = 0;             // state/deriv
    int order = 0;               // deriv (>= 1)
    DerivAxis axis = DerivAxis::time;
    SpecialKind special = SpecialKind::delta;
    double t0 = 0.0;             // delta/step location
    double omega = 0.0;          // trig/hyperbolic angular frequency

    static Factor time_var() { return Factor{FactorKind::time, 0, 0, DerivAxis::time, SpecialKind::delta, 0, 0}; }
    static Factor state(int ch) { return Factor{FactorKind::state, ch, 0, DerivAxis::time, SpecialKind::delta, 0, 0}; }
    static Factor deriv(int ch, int order, DerivAxis axis = DerivAxis::time) {
        if (order < 1) throw Error("Factor::deriv: order must be >= 1");
        return Factor{FactorKind::deriv, ch, order, axis, SpecialKind::delta, 0, 0};
    }
    static Factor special_at(SpecialKind k, double t0) {
        return Factor{FactorKind::special, 0, 0, DerivAxis::time, k, t0, 0};
    }
    static Factor special_omega(SpecialKind k, double omega) {
        return Factor{FactorKind::special, 0, 0, DerivAxis::time, k, 0, omega};
    }

    friend bool operator==(const Factor& a, const Factor& b) {
        return a.key() == b.key();
    }
    friend bool operator<(const Factor& a, const Factor& b) { return a.key() < b.key(); }

    std::tuple<int, int, int, int, int, double, double> key() const {
        // ordering: t < states < time-derivs (order, channel) < space-derivs < specials
        return {static_cast<int>(kind), kind == FactorKind::deriv ? static_cast<int>(axis) : 0,
                order, channel, static_cast<int>(special), t0, omega};
    }
};

/// Canonical (sorted) multiset of factors; the empty multiset is the constant term 1.
struct TermDescriptor {
    std::vector<Factor> factors;

    TermDescriptor() = default;
    explicit TermDescriptor(std::vector<Factor> f) : factors(std::move(f)) {
        std::sort(factors.begin(), factors.end());
    }

    int degree() const { return static_cast<int>(factors.size()); }
    bool is_constant() const { return factors.empty(); }

    bool contains_special(SpecialKind k) const {
        for (const auto& f : factors)
            if (f.kind == FactorKind::special && f.special == k) return true;
        return false;
    }
    bool is_single_special() const {
        return factors.size() == 1 && factors[0].kind == FactorKind::special;
    }
    bool is_single_deriv() const {
        return factors.size() == 1 && factors[0].kind == FactorKind::deriv;
    }

    friend bool operator==(const TermDescriptor& a, const TermDescriptor& b) {
        return a.factors == b.factors;
    }
    friend bool operator<(const TermDescriptor& a, const TermDescriptor& b) {
        if (a.degree() != b.degree()) return a.degree() < b.degree();
        return std::lexicographical_compare(a.factors.begin(), a.factors.end(),
                                            b.factors.begin(), b.factors.end());
    }
};

// ---------------------------------------------------------------------------
// Rendering / parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline std::string render_factor(const Factor& f, const std::vector<std::string>& names) {
    switch (f.kind) {
        case FactorKind::time:
            return "t";
        case FactorKind::state:
            return names.at(static_cast<std::size_t>(f.channel));
        case FactorKind::deriv: {
            const char axis = (f.axis == DerivAxis::time) ? 't' : 'x';
            return names.at(static_cast<std::size_t>(f.channel)) + "_" +
                   std::string(static_cast<std::size_t>(f.order), axis);
        }
        case FactorKind::special:
            switch (f.special) {
                case SpecialKind::delta: return "delta(t-" + trim_number(f.t0) + ")";
                case SpecialKind::step: return "H(t-" + trim_number(f.t0) + ")";
                case SpecialKind::sine: return "sin(" + trim_number(f.omega) + "t)";
                case SpecialKind::cosine: return "cos(" + trim_number(f.omega) + "t)";
                case SpecialKind::hsinh: return "sinh(" + trim_number(f.omega) + "t)";
                case SpecialKind::hcosh: return "cosh(" + trim_number(f.omega) + "t)";
            }
    }
    throw Error("render_factor: unreachable");
}

}  // namespace detail

/// Human-readable term, e.g. "1", "t^2", "u*u_t", "sin(3t)".
inline std::string render_term(const TermDescriptor& term, const std::vector<std::string>& names) {
    if (term.is_constant()) return "1";
    std::string out;
    std::size_t i = 0;
    while (i < term.factors.size()) {
        std::size_t j = i;
        while (j < term.factors.size() && term.factors[j] == term.factors[i]) ++j;
        if (!out.empty()) out += "*";
        out += detail::render_factor(term.factors[i], names);
        if (j - i > 1) out += "^" + std::to_string(j - i);
        i = j;
    }
    return out;
}

/// Inverse of render_term for the same channel-name list.
inline TermDescriptor parse_term(const std::string& text, const std::vector<std::string>& names) {
    if (text == "1") return TermDescriptor{};
    std::vector<Factor> factors;
    std::size_t pos = 0;
    auto fail = [&](const std::string& why) { throw ParseError("parse_term '" + text + "': " + why); };
    while (pos < text.size()) {
        std::size_t star = text.find('*', pos);
        std::string tok = text.substr(pos, star == std::string::npos ? std::string::npos : star - pos);
        pos = (star == std::string::npos) ? text.size() : star + 1;
        int power = 1;
        if (auto car = tok.find('^'); car != std::string::npos) {
            power = std::stoi(tok.substr(car + 1));
            tok = tok.substr(0, car);
            if (power < 1) fail("bad power");
        }
        Factor f;
        auto parse_paren = [&](const std::string& head) -> std::string {
            if (tok.rfind(head + "(", 0) != 0 || tok.back() != ')') return {};
            return tok.substr(head.size() + 1, tok.size() - head.size() - 2);
        };
        if (tok == "t") {
            f = Factor::time_var();
        } else if (auto arg = parse_paren("delta"); !arg.empty()) {
            if (arg.rfind("t-", 0) != 0) fail("bad delta argument");
            f = Factor::special_at(SpecialKind::delta, std::stod(arg.substr(2)));
        } else if (auto arg2 = parse_paren("H"); !arg2.empty()) {
            if (arg2.rfind("t-", 0) != 0) fail("bad step argument");
            f = Factor::special_at(SpecialKind::step, std::stod(arg2.substr(2)));
        } else if (auto a3 = parse_paren("sinh"); !a3.empty()) {
            f = Factor::special_omega(SpecialKind::hsinh, std::stod(a3));
        } else if (auto a4 = parse_paren("cosh"); !a4.empty()) {
            f = Factor::special_omega(SpecialKind::hcosh, std::stod(a4));
        } else if (auto a5 = parse_paren("sin"); !a5.empty()) {
            f = Factor::special_omega(SpecialKind::sine, std::stod(a5));
        } else if (auto a6 = parse_paren("cos"); !a6.empty()) {
            f = Factor::special_omega(SpecialKind::cosine, std::stod(a6));
        } else {
            // state or derivative: <name> or <name>_ttt / <name>_xx
            std::string base = tok;
            int order = 0;
            DerivAxis axis = DerivAxis::time;
            if (auto us = tok.rfind('_'); us != std::string::npos) {
                const std::string suffix = tok.substr(us + 1);
                const bool all_t = !suffix.empty() && suffix.find_first_not_of('t') == std::string::npos;
                const bool all_x = !suffix.empty() && suffix.find_first_not_of('x') == std::string::npos;
                if (all_t || all_x) {
                    base = tok.substr(0, us);
                    order = static_cast<int>(suffix.size());
                    axis = all_t ? DerivAxis::time : DerivAxis::space;
                }
            }
            auto it = std::find(names.begin(), names.end(), base);
            if (it == names.end()) fail("unknown symbol '" + tok + "'");
            const int ch = static_cast<int>(it - names.begin());
            f = order == 0 ? Factor::state(ch) : Factor::deriv(ch, order, axis);
        }
        for (int q = 0; q < power; ++q) factors.push_back(f);
    }
    return TermDescriptor(std::move(factors));
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Library shape: d state channels, derivatives to order k, n tensor copies, plus
/// standalone special forcing terms.
enum class ProductPolicy {
    full,   // every factor multiset of size <= n
    cross,  // products keep distinct non-derivative factors only (t may repeat);
            // derivatives appear solely as standalone terms
};

struct LibrarySpec {
    int d = 1;
    int k = 0;
    int n = 1;
    std::vector<Factor> specials;   // admitted at multiplicity 1, never in products
    std::size_t term_cap = 10000;
    ProductPolicy products = ProductPolicy::full;
};

/// All factor multisets of size <= n over {t, states, derivatives}, ordered by
/// (degree, lexicographic), then the special terms. A factor of 1 absorbs, so the
/// count without specials is C(kd+d+n+1, n).
inline std::vector<TermDescriptor> enumerate_terms(const LibrarySpec& spec) {
    if (spec.d < 1 || spec.k < 0 || spec.n < 1) throw Error("enumerate_terms: invalid spec");
    std::vector<Factor> base;
    base.push_back(Factor::time_var());
    for (int c = 0; c < spec.d; ++c) base.push_back(Factor::state(c));
    for (int o = 1; o <= spec.k; ++o)
        for (int c = 0; c < spec.d; ++c) base.push_back(Factor::deriv(c, o));
    std::sort(base.begin(), base.end());

    std::vector<TermDescriptor> terms;
    terms.emplace_back();  // the constant term
    std::vector<int> pick;
    // multisets as nondecreasing index sequences
    std::function<void(std::size_t, int)> rec = [&](std::size_t start, int left) {
        if (left == 0) return;
        for (std::size_t i = start; i < base.size(); ++i) {
            pick.push_back(static_cast<int>(i));
            std::vector<Factor> fs;
            fs.reserve(pick.size());
            for (int idx : pick) fs.push_back(base[static_cast<std::size_t>(idx)]);
            bool admit = true;
            if (spec.products == ProductPolicy::cross && fs.size() > 1) {
                for (std::size_t q = 0; q < fs.size() && admit; ++q) {
                    if (fs[q].kind == FactorKind::deriv) admit = false;
                    if (q > 0 && fs[q] == fs[q - 1] && fs[q].kind != FactorKind::time)
                        admit = false;
                }
            }
            if (admit) {
                terms.emplace_back(std::move(fs));
                if (terms.size() > spec.term_cap)
                    throw OverflowError("enumerate_terms: term count exceeds cap of " +
                                        std::to_string(spec.term_cap));
            }
            rec(i, left - 1);
            pick.pop_back();
        }
    };
    rec(0, spec.n);
    for (const auto& sp : spec.specials) {
        if (sp.kind != FactorKind::special) throw Error("enumerate_terms: specials must be special factors");
        terms.emplace_back(std::vector<Factor>{sp});
    }
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    if (terms.size() > spec.term_cap)
        throw OverflowError("enumerate_terms: term count exceeds cap");
    return terms;
}

/// Candidate set for PDE identification in one field u(x,t):
/// { u_t } + { u, u_x, .., d^k u/dx^k } + { u*u_x, .., u * d^k u/dx^k }.
inline std::vector<TermDescriptor> enumerate_pde_terms(int k_max) {
    if (k_max < 1) throw Error("enumerate_pde_terms: k_max must be >= 1");
    std::vector<TermDescriptor> terms;
    terms.emplace_back(std::vector<Factor>{Factor::deriv(0, 1, DerivAxis::time)});
    terms.emplace_back(std::vector<Factor>{Factor::state(0)});
    for (int o = 1; o <= k_max; ++o)
        terms.emplace_back(std::vector<Factor>{Factor::deriv(0, o, DerivAxis::space)});
    for (int o = 1; o <= k_max; ++o)
        terms.emplace_back(std::vector<Factor>{Factor::state(0), Factor::deriv(0, o, DerivAxis::space)});
    return terms;
}

// ---------------------------------------------------------------------------
// Derivative estimation
// ---------------------------------------------------------------------------

/// Finite-difference derivatives of each channel: second-order central stencils in
/// the interior, second-order one-sided stencils at the ends, higher orders by
/// repeated application. Also reports d^j u/dt^j at t1 for j = 0..k-1.
struct DerivativeTable {
    std::vector<Eigen::MatrixXd> by_order;  // [o-1]: d x m, order o = 1..k
    Eigen::MatrixXd initial;                // d x k, column j = d^j u/dt^j at t1
};

namespace detail {

inline Eigen::VectorXd diff_once_uniform(const Eigen::VectorXd& f, double h) {
    const Eigen::Index m = f.size();
    Eigen::VectorXd d(m);
    for (Eigen::Index j = 1; j + 1 < m; ++j) d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[m - 1] = (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * h);
    return d;
}

inline Eigen::VectorXd diff_once_nonuniform(const Eigen::VectorXd& f,
                                            const std::vector<double>& t) {
    const Eigen::Index m = f.size();
    Eigen::VectorXd d(m);
    for (Eigen::Index j = 1; j + 1 < m; ++j)
        d[j] = (f[j + 1] - f[j - 1]) / (t[static_cast<std::size_t>(j + 1)] - t[static_cast<std::size_t>(j - 1)]);
    d[0] = (f[1] - f[0]) / (t[1] - t[0]);
    d[m - 1] = (f[m - 1] - f[m - 2]) / (t[t.size() - 1] - t[t.size() - 2]);
    return d;
}

}  // namespace detail

inline DerivativeTable estimate_derivatives(const TimeSeriesSet& data, int max_order) {
    if (max_order < 1) throw Error("estimate_derivatives: max_order must be >= 1");
    const Eigen::Index m = data.samples();
    if (m < 2 * max_order + 2)
        throw TooShortError("estimate_derivatives: need m >= 2k+2 samples");
    const bool uniform = data.grid.is_uniform();
    if (!uniform && max_order > 1)
        throw NonUniformGridError("estimate_derivatives: orders > 1 need a uniform grid");
    const double h = uniform ? data.grid.uniform_spacing() : 0.0;

    DerivativeTable table;
    table.initial.resize(data.channels(), max_order);
    Eigen::MatrixXd cur = data.states;
    table.initial.col(0) = cur.col(0);
    for (int o = 1; o <= max_order; ++o) {
        Eigen::MatrixXd next(data.channels(), m);
        for (Eigen::Index c = 0; c < data.channels(); ++c) {
            next.row(c) = uniform
                ? detail::diff_once_uniform(cur.row(c).transpose(), h).transpose()
                : detail::diff_once_nonuniform(cur.row(c).transpose(), data.grid.points()).transpose();
        }
        table.by_order.push_back(next);
        if (o < max_order) table.initial.col(o) = next.col(0);
        cur = std::move(next);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Evaluated time-domain library
// ---------------------------------------------------------------------------

struct TimeLibrary {
    std::vector<TermDescriptor> terms;
    Eigen::MatrixXd series;             // D x m; rows of delta-bearing terms are zero
    std::vector<bool> symbolic;         // true for terms with a delta factor
    Eigen::MatrixXd channel_data;       // d x m raw measurements (IBP transforms read these)
    Eigen::MatrixXd initial_derivatives;  // d x k_needed (j = 0..k_needed-1 at t1)
    TimeGrid grid;
    std::vector<std::string> names;
    int d = 1;
};

struct TimeLibraryOptions {
    bool use_ibp = true;  // single-factor derivative terms go through IBP, so their
                          // sampled series are only materialized when needed
    // overrides estimate_derivatives for the boundary values in the IBP sums;
    // layout d x k (column j holds d^j u/dt^j at t1)
    std::optional<Eigen::MatrixXd> initial_derivative_override;
};

/// Evaluates every term of the library on the data. Derivative series come from
/// estimate_derivatives and are only computed when some term actually samples them.
inline TimeLibrary build_time_library(const TimeSeriesSet& data, const LibrarySpec& spec,
                                      const TimeLibraryOptions& opts = {}) {
    if (static_cast<int>(data.channels()) != spec.d)
        throw ShapeError("build_time_library: spec.d must match data channels");
    TimeLibrary lib;
    lib.terms = enumerate_terms(spec);
    lib.grid = data.grid;
    lib.names = data.names;
    lib.d = spec.d;
    lib.channel_data = data.states;
    const Eigen::Index m = data.samples();
    const Eigen::Index D = static_cast<Eigen::Index>(lib.terms.size());

    // which derivative orders must be sampled (inside products, or everywhere
    // when IBP is disabled)
    int sampled_order = 0;
    int boundary_order = 0;  // highest single-factor derivative order (IBP boundary needs)
    for (const auto& term : lib.terms) {
        for (const auto& f : term.factors) {
            if (f.kind != FactorKind::deriv || f.axis != DerivAxis::time) continue;
            if (term.degree() > 1 || !opts.use_ibp) sampled_order = std::max(sampled_order, f.order);
            if (term.degree() == 1) boundary_order = std::max(boundary_order, f.order);
        }
    }

    std::optional<DerivativeTable> derivs;
    if (sampled_order > 0) derivs = estimate_derivatives(data, sampled_order);

    const int k_init = std::max(boundary_order, 1);
    if (opts.initial_derivative_override) {
        lib.initial_derivatives = *opts.initial_derivative_override;
        if (lib.initial_derivatives.rows() != data.channels() ||
            lib.initial_derivatives.cols() < k_init)
            throw ShapeError("initial derivative override has wrong shape");
    } else if (boundary_order > 1 || sampled_order > 0) {
        const auto table = derivs && sampled_order >= boundary_order
                               ? *derivs
                               : estimate_derivatives(data, std::max(boundary_order, 1));
        lib.initial_derivatives = table.initial.leftCols(k_init);
    } else {
        // only first-order boundary values are needed: the first samples themselves
        lib.initial_derivatives.resize(data.channels(), 1);
        lib.initial_derivatives.col(0) = data.states.col(0);
    }

    Eigen::RowVectorXd trow(m);
    for (Eigen::Index j = 0; j < m; ++j) trow[j] = data.grid[static_cast<std::size_t>(j)];

    lib.series.setZero(D, m);
    lib.symbolic.assign(static_cast<std::size_t>(D), false);
    for (Eigen::Index i = 0; i < D; ++i) {
        const auto& term = lib.terms[static_cast<std::size_t>(i)];
        if (term.contains_special(SpecialKind::delta)) {
            lib.symbolic[static_cast<std::size_t>(i)] = true;
            continue;  // no sample representation; consumed by the closed-form transform
        }
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(m);
        bool skipped_deriv = false;
        for (const auto& f : term.factors) {
            switch (f.kind) {
                case FactorKind::time:
                    row.array() *= trow.array();
                    break;
                case FactorKind::state:
                    row.array() *= data.states.row(f.channel).array();
                    break;
                case FactorKind::deriv: {
                    if (f.axis != DerivAxis::time)
                        throw Error("build_time_library: spatial factors need the PDE path");
                    if (term.degree() == 1 && opts.use_ibp) {
                        skipped_deriv = true;  // transformed by IBP, no samples needed
                        break;
                    }
                    if (!derivs || f.order > sampled_order)
                        throw MissingInitialValuesError("derivative series unavailable");
                    row.array() *= derivs->by_order[static_cast<std::size_t>(f.order - 1)]
                                       .row(f.channel).array();
                    break;
                }
                case FactorKind::special: {
                    for (Eigen::Index j = 0; j < m; ++j) {
                        const double tj = trow[j];
                        double v = 0.0;
                        switch (f.special) {
                            case SpecialKind::step: v = tj >= f.t0 ? 1.0 : 0.0; break;
                            case SpecialKind::sine: v = std::sin(f.omega * tj); break;
                            case SpecialKind::cosine: v = std::cos(f.omega * tj); break;
                            case SpecialKind::hsinh: v = std::sinh(f.omega * tj); break;
                            case SpecialKind::hcosh: v = std::cosh(f.omega * tj); break;
                            case SpecialKind::delta: break;  // handled above
                        }
                        row[j] *= v;
                    }
                    break;
                }
            }
        }
        if (!skipped_deriv) lib.series.row(i) = row;
    }
    return lib;
}

}  // namespace lapid
