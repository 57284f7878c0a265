#pragma once

// Laplace-domain featurization: discretized transform sums, the integration-by-parts
// path for pure derivative terms, closed forms for forcing specials, and library
// assembly for both ODE trajectories and spatial-transform PDE snapshots.

#include "lapid/core.hpp"
#include "lapid/library.hpp"

#include <iostream>

namespace lapid {

/// Ordered positive real frequencies s1..sL.
struct FrequencyGrid {
    std::vector<double> s;

    FrequencyGrid() = default;
    explicit FrequencyGrid(std::vector<double> values) : s(std::move(values)) {
        if (s.empty()) throw EmptyError("FrequencyGrid: empty");
        for (std::size_t l = 0; l < s.size(); ++l) {
            if (!(s[l] > 0.0)) throw NonPositiveFrequencyError("FrequencyGrid: s must be positive");
            if (l > 0 && !(s[l] > s[l - 1]))
                throw Error("FrequencyGrid: frequencies must be strictly increasing");
        }
    }
    static FrequencyGrid linear(double start, double step, std::size_t count) {
        if (count == 0) throw EmptyError("FrequencyGrid: empty");
        if (!(step > 0.0)) throw Error("FrequencyGrid: step must be positive");
        std::vector<double> v(count);
        for (std::size_t l = 0; l < count; ++l) v[l] = start + step * static_cast<double>(l);
        return FrequencyGrid(std::move(v));
    }
    std::size_t size() const { return s.size(); }
};

enum class QuadScheme {
    as_written,      // rectangle-type weighted sum with duplicated last weight
    true_trapezoid,  // standard trapezoid rule
};

struct TransformOptions {
    QuadScheme scheme = QuadScheme::as_written;
    bool use_ibp = true;            // IBP for single-factor derivative terms
    int snapshot_stride = 1;        // PDE rows per snapshot selection
    double pole_tol = 1e-3;         // |s^2 - w^2| < pole_tol * max(1, w^2) trips PoleProximity
    // >1 stacks transforms over shifted trajectory windows (rows become
    // (window, s) pairs); only valid for libraries with first-order derivatives
    // and no specials. Large tensor libraries need this to beat the small
    // numerical rank of a single exponential-weight family.
    int window_count = 1;
};

// ---------------------------------------------------------------------------
// Scalar transforms
// ---------------------------------------------------------------------------

/// Weighted sum approximating the transform of a sampled series, with weight
/// exp(-s (t - t1)). The as_written scheme multiplies sample j by dt_j = t_{j+1}-t_j
/// (the last sample reuses the final spacing); true_trapezoid is the usual rule.
template <typename SeriesLike>
double transform_series(const SeriesLike& values, const std::vector<double>& t, double s,
                        QuadScheme scheme = QuadScheme::as_written) {
    if (!(s > 0.0)) throw NonPositiveFrequencyError("transform_series: s must be positive");
    const std::size_t m = t.size();
    if (static_cast<std::size_t>(values.size()) != m)
        throw ShapeError("transform_series: series and grid disagree");
    const double t1 = t[0];
    double acc = 0.0;
    if (scheme == QuadScheme::as_written) {
        for (std::size_t j = 0; j < m; ++j) {
            const double dt = (j + 1 < m) ? (t[j + 1] - t[j]) : (t[m - 1] - t[m - 2]);
            acc += std::exp(-s * (t[j] - t1)) * values[static_cast<Eigen::Index>(j)] * dt;
        }
    } else {
        for (std::size_t j = 0; j + 1 < m; ++j) {
            const double f0 = std::exp(-s * (t[j] - t1)) * values[static_cast<Eigen::Index>(j)];
            const double f1 = std::exp(-s * (t[j + 1] - t1)) * values[static_cast<Eigen::Index>(j + 1)];
            acc += 0.5 * (f0 + f1) * (t[j + 1] - t[j]);
        }
    }
    return acc;
}

inline double transform_series(const Eigen::VectorXd& values, const TimeGrid& grid, double s,
                               QuadScheme scheme = QuadScheme::as_written) {
    return transform_series(values, grid.points(), s, scheme);
}

/// Transform of d^order u / dt^order via integration by parts:
///   s^k L{u} - sum_{j=0}^{k-1} s^{k-j-1} u^(j)(t1),
/// with L{u} evaluated by the as_written / trapezoid sum of the raw samples.
template <typename SeriesLike>
double transform_derivative_ibp(const SeriesLike& u, const std::vector<double>& t, double s,
                                int order, const Eigen::VectorXd& initial_derivs,
                                QuadScheme scheme = QuadScheme::as_written) {
    if (order < 1) throw Error("transform_derivative_ibp: order must be >= 1");
    if (initial_derivs.size() < order)
        throw MissingInitialValuesError("transform_derivative_ibp: need u^(j)(t1) for j < order");
    double val = std::pow(s, order) * transform_series(u, t, s, scheme);
    for (int j = 0; j < order; ++j) val -= std::pow(s, order - j - 1) * initial_derivs[j];
    return val;
}

/// Closed-form transforms of the forcing specials. delta/step locations are shifted
/// by t1 to match the exp(-s (t - t1)) convention of transform_series.
inline double transform_special(const Factor& f, double s, double t1 = 0.0,
                                double pole_tol = 1e-3) {
    if (!(s > 0.0)) throw NonPositiveFrequencyError("transform_special: s must be positive");
    if (f.kind != FactorKind::special) throw Error("transform_special: not a special factor");
    switch (f.special) {
        case SpecialKind::delta:
            return std::exp(-(f.t0 - t1) * s);
        case SpecialKind::step:
            return std::exp(-(f.t0 - t1) * s) / s;
        case SpecialKind::sine:
            return f.omega / (s * s + f.omega * f.omega);
        case SpecialKind::cosine:
            return s / (s * s + f.omega * f.omega);
        case SpecialKind::hsinh:
        case SpecialKind::hcosh: {
            const double gap = s * s - f.omega * f.omega;
            if (std::abs(gap) < pole_tol * std::max(1.0, f.omega * f.omega))
                throw PoleProximityError("transform_special: s too close to the pole at omega");
            if (s <= f.omega)
                throw PoleProximityError("transform_special: hyperbolic transforms need s > omega");
            return (f.special == SpecialKind::hsinh ? f.omega : s) / gap;
        }
    }
    throw Error("transform_special: unreachable");
}

// ---------------------------------------------------------------------------
// Library assembly
// ---------------------------------------------------------------------------

/// Laplace-domain candidate matrix. Rows sweep frequencies (and, for PDEs,
/// time snapshots); columns follow the term list.
struct LaplaceLibrary {
    Eigen::MatrixXd theta;                 // L' x D
    std::vector<TermDescriptor> terms;
    FrequencyGrid freq;
    std::vector<std::pair<double, double>> row_index;  // (s, snapshot t or NaN)
    std::vector<std::string> names;        // channel names for rendering
    int d = 1;

    std::vector<std::string> term_labels() const {
        std::vector<std::string> out;
        out.reserve(terms.size());
        for (const auto& term : terms) out.push_back(render_term(term, names));
        return out;
    }
};

/// Transforms every (term, frequency) cell of an evaluated time library:
/// pure derivative terms through IBP (when enabled), specials through closed
/// forms, everything else by quadrature of its sampled row. With
/// window_count > 1 the same transforms are repeated over shifted trajectory
/// windows; first-derivative IBP then uses the exact samples at both window
/// ends, so it needs no estimated boundary values.
inline LaplaceLibrary assemble_library(const TimeLibrary& tlib, const FrequencyGrid& freq,
                                       const TransformOptions& opts = {}) {
    const std::size_t L = freq.size();
    const std::size_t D = tlib.terms.size();
    const std::size_t m = tlib.grid.size();
    const int W = std::max(1, opts.window_count);
    if (L * static_cast<std::size_t>(W) < D)
        std::cerr << "[lapid] warning: " << L * static_cast<std::size_t>(W) << " rows for " << D
                  << " candidate terms; recommend at least D\n";
    if (W > 1) {
        for (const auto& term : tlib.terms) {
            if (term.is_single_special())
                throw ConfigError("windowed transforms do not support special terms");
            if (term.is_single_deriv() && term.factors[0].order > 1)
                throw ConfigError("windowed transforms support first-order derivatives only");
        }
    }

    LaplaceLibrary lib;
    lib.terms = tlib.terms;
    lib.freq = freq;
    lib.names = tlib.names;
    lib.d = tlib.d;
    lib.theta.resize(static_cast<Eigen::Index>(L * static_cast<std::size_t>(W)),
                     static_cast<Eigen::Index>(D));
    const auto& t = tlib.grid.points();

    // window start indices; the last window keeps at least a tenth of the samples
    std::vector<std::size_t> starts;
    if (W == 1) {
        starts.push_back(0);
    } else {
        const std::size_t last = m - std::max<std::size_t>(m / 10, 8);
        for (int w = 0; w < W; ++w)
            starts.push_back(static_cast<std::size_t>(
                std::llround(static_cast<double>(last) * w / (W - 1))));
    }

    Eigen::Index row = 0;
    for (const std::size_t a : starts) {
        const std::vector<double> tw(t.begin() + static_cast<std::ptrdiff_t>(a), t.end());
        const Eigen::Index len = static_cast<Eigen::Index>(tw.size());
        const double t1 = tw.front();
        const double span = tw.back() - tw.front();
        for (std::size_t l = 0; l < L; ++l, ++row) {
            const double s = freq.s[l];
            lib.row_index.emplace_back(s, W == 1 ? std::numeric_limits<double>::quiet_NaN() : t1);
            for (std::size_t i = 0; i < D; ++i) {
                const auto& term = tlib.terms[i];
                double v = 0.0;
                if (term.is_single_special()) {
                    v = transform_special(term.factors[0], s, t1, opts.pole_tol);
                } else if (term.is_single_deriv() && opts.use_ibp) {
                    const auto& f = term.factors[0];
                    if (f.axis != DerivAxis::time)
                        throw Error("assemble_library: spatial derivatives need assemble_pde_library");
                    const Eigen::VectorXd u =
                        tlib.channel_data.row(f.channel).segment(static_cast<Eigen::Index>(a), len)
                            .transpose();
                    if (a == 0) {
                        if (tlib.initial_derivatives.cols() < f.order)
                            throw MissingInitialValuesError(
                                "assemble_library: initial derivatives missing");
                        v = transform_derivative_ibp(u, tw, s, f.order,
                                                     tlib.initial_derivatives.row(f.channel)
                                                         .transpose(),
                                                     opts.scheme);
                    } else {
                        // first-order IBP with exact boundary samples at both ends
                        v = s * transform_series(u, tw, s, opts.scheme) - u[0] +
                            std::exp(-s * span) * u[len - 1];
                    }
                } else {
                    v = transform_series(
                        Eigen::VectorXd(tlib.series.row(static_cast<Eigen::Index>(i))
                                            .segment(static_cast<Eigen::Index>(a), len)),
                        tw, s, opts.scheme);
                }
                if (!std::isfinite(v)) throw NonFiniteError("assemble_library: non-finite entry");
                lib.theta(row, static_cast<Eigen::Index>(i)) = v;
            }
        }
    }
    return lib;
}

}  // namespace lapid
