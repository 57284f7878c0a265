#pragma once

// Spatial-transform library assembly for PDE identification: rows are
// (time snapshot, frequency) pairs, spatial derivative terms go through IBP
// along x with boundary values at both ends, u_t comes from finite differences
// in time, and nonlinear terms are formed pointwise then transformed.

#include "lapid/core.hpp"
#include "lapid/laplace.hpp"
#include "lapid/sim.hpp"

namespace lapid {

enum class BoundaryEstimator { one_sided, savgol, fft_lowpass };

struct PdeAssemblyOptions {
    QuadScheme scheme = QuadScheme::true_trapezoid;
    int snapshot_stride = 10;
    int snapshot_min = 1;          // first usable interior snapshot index
    int snapshot_max = 0;          // 0 = last interior snapshot
    int snapshot_group = 1;        // rows average this many consecutive snapshots
    BoundaryEstimator boundary = BoundaryEstimator::one_sided;
    int savgol_window = 120;       // boundary polynomial-fit window (points)
    int savgol_degree = 4;
    double fft_cutoff = 2.0;       // wavenumber cutoff for periodic boundary estimates
    int smooth_x_window = 0;       // Savitzky-Golay window along x (0 = off)
    int smooth_x_degree = 3;
    int ut_window = 0;             // Savitzky-Golay window in time for u_t (0 = central diff)
    int ut_degree = 2;
};

namespace detail {

/// Least-squares polynomial fit over the first `window` samples of a profile;
/// returns the derivatives 0..jmax-1 at the first sample.
inline std::vector<double> polyfit_boundary(const Eigen::VectorXd& prof, double dx, int jmax,
                                            int window, int degree) {
    const int W = std::min<int>(window, static_cast<int>(prof.size()));
    if (W < degree + 1) throw TooShortError("boundary fit: window too small");
    Eigen::MatrixXd V(W, degree + 1);
    for (int i = 0; i < W; ++i) {
        double p = 1.0;
        for (int j = 0; j <= degree; ++j) {
            V(i, j) = p;
            p *= i * dx;
        }
    }
    const Eigen::VectorXd coef = V.colPivHouseholderQr().solve(prof.head(W));
    std::vector<double> out(static_cast<std::size_t>(jmax), 0.0);
    double fact = 1.0;
    for (int j = 0; j < jmax; ++j) {
        if (j > 0) fact *= j;
        if (j <= degree) out[static_cast<std::size_t>(j)] = coef[j] * fact;
    }
    return out;
}

/// Repeated one-sided/central differencing; returns derivatives 0..jmax-1 at x1.
inline std::vector<double> fd_boundary(const Eigen::VectorXd& prof, double dx, int jmax) {
    std::vector<double> out;
    out.push_back(prof[0]);
    Eigen::VectorXd cur = prof;
    for (int j = 1; j < jmax; ++j) {
        cur = diff_once_uniform(cur, dx);
        out.push_back(cur[0]);
    }
    return out;
}

/// Low-pass spectral derivatives at x1 for periodic profiles.
inline std::vector<double> fft_boundary(const Eigen::VectorXd& prof, double dx, int jmax,
                                        double cutoff) {
    const std::size_t n = static_cast<std::size_t>(prof.size());
    std::vector<std::complex<double>> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = {prof[static_cast<Eigen::Index>(i)], 0.0};
    fft_radix2(v, false);
    const double two_pi = 2.0 * 3.14159265358979323846;
    std::vector<double> out(static_cast<std::size_t>(jmax), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = two_pi / (dx * static_cast<double>(n)) *
                         (i <= n / 2 ? static_cast<double>(i)
                                     : static_cast<double>(i) - static_cast<double>(n));
        if (std::abs(k) > cutoff) continue;
        std::complex<double> p(1.0, 0.0);
        const std::complex<double> ik(0.0, k);
        for (int j = 0; j < jmax; ++j) {
            out[static_cast<std::size_t>(j)] += (v[i] * p).real() / static_cast<double>(n);
            p *= ik;
        }
    }
    return out;
}

/// Savitzky-Golay smoothing of a profile (interior full windows, polynomial fits
/// re-evaluated near the ends).
inline Eigen::VectorXd savgol_smooth(const Eigen::VectorXd& prof, int window, int degree) {
    if (window <= 1) return prof;
    int W = window | 1;  // odd
    const Eigen::Index n = prof.size();
    if (W > n) W = static_cast<int>(n) | 1;
    const int half = W / 2;
    Eigen::MatrixXd V(W, degree + 1);
    for (int i = 0; i < W; ++i) {
        double p = 1.0;
        for (int j = 0; j <= degree; ++j) {
            V(i, j) = p;
            p *= static_cast<double>(i - half);
        }
    }
    const Eigen::MatrixXd pinv =
        (V.transpose() * V).ldlt().solve(V.transpose());  // (deg+1) x W
    const Eigen::RowVectorXd w0 = pinv.row(0);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = half; i < n - half; ++i)
        out[i] = w0.dot(prof.segment(i - half, W).transpose());
    // ends: evaluate the boundary window's polynomial fit at each edge offset
    const Eigen::VectorXd cl = pinv * prof.head(W);
    const Eigen::VectorXd cr = pinv * prof.tail(W);
    for (int i = 0; i < half; ++i) {
        double pl = 0.0, pr = 0.0, q = 1.0;
        for (int j = 0; j <= degree; ++j) {
            pl += cl[j] * q;
            q *= static_cast<double>(i - half);
        }
        q = 1.0;
        for (int j = 0; j <= degree; ++j) {
            pr += cr[j] * q;
            q *= static_cast<double>(half - i);
        }
        out[i] = pl;
        out[n - 1 - i] = pr;
    }
    return out;
}

/// Time derivative of every grid point at snapshot j: central difference, or a
/// Savitzky-Golay slope over ut_window samples.
inline Eigen::VectorXd time_derivative(const SpatioTemporalField& field, Eigen::Index j,
                                       int window, int degree) {
    const Eigen::Index m = static_cast<Eigen::Index>(field.nt());
    if (window <= 1) {
        if (j <= 0 || j + 1 >= m) throw TooFewSnapshotsError("u_t needs interior snapshots");
        const double dt = field.tgrid[static_cast<std::size_t>(j + 1)] -
                          field.tgrid[static_cast<std::size_t>(j - 1)];
        return (field.values.col(j + 1) - field.values.col(j - 1)) / dt;
    }
    const int W = window | 1;
    const int half = W / 2;
    const Eigen::Index lo = std::max<Eigen::Index>(0, j - half);
    const Eigen::Index hi = std::min<Eigen::Index>(m, j + half + 1);
    const Eigen::Index len = hi - lo;
    Eigen::MatrixXd V(len, degree + 1);
    for (Eigen::Index i = 0; i < len; ++i) {
        const double tau = field.tgrid[static_cast<std::size_t>(lo + i)] -
                           field.tgrid[static_cast<std::size_t>(j)];
        double p = 1.0;
        for (int q = 0; q <= degree; ++q) {
            V(i, q) = p;
            p *= tau;
        }
    }
    const Eigen::MatrixXd pinv = (V.transpose() * V).ldlt().solve(V.transpose());
    return field.values.middleCols(lo, len) * pinv.row(1).transpose();
}

}  // namespace detail

/// Builds the Laplace-domain PDE library over (snapshot, frequency) rows.
/// Terms come from enumerate_pde_terms(k_max): u_t, pure spatial derivatives
/// (IBP along x, boundary values at both ends), and u-times-derivative products
/// (pointwise, then quadrature).
inline LaplaceLibrary assemble_pde_library(const SpatioTemporalField& field, int k_max,
                                           const FrequencyGrid& freq,
                                           const PdeAssemblyOptions& opts = {}) {
    const Eigen::Index m = static_cast<Eigen::Index>(field.nt());
    const double dx = field.dx();
    const Eigen::Index hi0 = (opts.snapshot_max > 0)
                                 ? std::min<Eigen::Index>(opts.snapshot_max, m - 1)
                                 : m - 1;
    const int group = std::max(1, opts.snapshot_group);
    std::vector<Eigen::Index> anchors;
    for (Eigen::Index j = std::max<Eigen::Index>(1, opts.snapshot_min); j + group - 1 < hi0;
         j += opts.snapshot_stride)
        anchors.push_back(j);
    if (anchors.empty()) throw TooFewSnapshotsError("assemble_pde_library: no usable snapshots");

    const auto terms = enumerate_pde_terms(k_max);
    const std::size_t D = terms.size();
    const std::size_t L = freq.size();
    if (L * anchors.size() < D)
        std::cerr << "[lapid] warning: " << L * anchors.size() << " rows for " << D
                  << " candidate terms\n";

    LaplaceLibrary lib;
    lib.terms = terms;
    lib.freq = freq;
    lib.names = {"u"};
    lib.d = 1;
    lib.theta.setZero(static_cast<Eigen::Index>(L * anchors.size()),
                      static_cast<Eigen::Index>(D));
    const double X = field.xgrid.back() - field.xgrid.front();

    std::vector<Eigen::Index> snaps;  // all group members, grouped per anchor
    for (const Eigen::Index a : anchors)
        for (int g = 0; g < group; ++g) snaps.push_back(a + g);

    Eigen::Index member = 0;
    for (const Eigen::Index j : snaps) {
        const Eigen::Index row_base =
            static_cast<Eigen::Index>(member / group) * static_cast<Eigen::Index>(L);
        ++member;
        const Eigen::VectorXd raw = field.values.col(j);
        const Eigen::VectorXd prof =
            detail::savgol_smooth(raw, opts.smooth_x_window, opts.smooth_x_degree);
        const Eigen::VectorXd ut = detail::time_derivative(field, j, opts.ut_window, opts.ut_degree);

        std::vector<double> bl, br;
        switch (opts.boundary) {
            case BoundaryEstimator::one_sided: {
                bl = detail::fd_boundary(prof, dx, k_max);
                br = detail::fd_boundary(prof.reverse(), dx, k_max);
                break;
            }
            case BoundaryEstimator::savgol: {
                bl = detail::polyfit_boundary(raw, dx, k_max, opts.savgol_window,
                                              opts.savgol_degree);
                br = detail::polyfit_boundary(raw.reverse(), dx, k_max, opts.savgol_window,
                                              opts.savgol_degree);
                break;
            }
            case BoundaryEstimator::fft_lowpass: {
                bl = detail::fft_boundary(prof, dx, k_max, opts.fft_cutoff);
                br.assign(static_cast<std::size_t>(k_max), 0.0);  // e^{-sX} drop, periodic
                break;
            }
        }
        for (int q = 0; q < k_max; ++q) br[static_cast<std::size_t>(q)] *= (q % 2 == 0) ? 1.0 : -1.0;

        std::vector<Eigen::VectorXd> dprof;
        if (opts.boundary == BoundaryEstimator::fft_lowpass) {
            // periodic: pointwise derivatives from the (low-passed) spectrum
            const std::size_t nn = static_cast<std::size_t>(prof.size());
            std::vector<std::complex<double>> v(nn);
            for (std::size_t i = 0; i < nn; ++i) v[i] = {prof[static_cast<Eigen::Index>(i)], 0.0};
            detail::fft_radix2(v, false);
            const double two_pi = 2.0 * 3.14159265358979323846;
            for (int o = 1; o <= k_max; ++o) {
                std::vector<std::complex<double>> w(nn);
                for (std::size_t i = 0; i < nn; ++i) {
                    const double kw = two_pi / (dx * static_cast<double>(nn)) *
                                      (i <= nn / 2 ? static_cast<double>(i)
                                                   : static_cast<double>(i) - static_cast<double>(nn));
                    std::complex<double> p(1.0, 0.0);
                    const std::complex<double> ik(0.0, kw);
                    for (int q = 0; q < o; ++q) p *= ik;
                    w[i] = (std::abs(kw) > opts.fft_cutoff) ? std::complex<double>(0, 0)
                                                            : v[i] * p;
                }
                detail::fft_radix2(w, true);
                Eigen::VectorXd der(prof.size());
                for (std::size_t i = 0; i < nn; ++i) der[static_cast<Eigen::Index>(i)] = w[i].real();
                dprof.push_back(std::move(der));
            }
        } else {
            Eigen::VectorXd cur = prof;
            for (int o = 1; o <= k_max; ++o) {
                cur = detail::diff_once_uniform(cur, dx);
                dprof.push_back(cur);
            }
        }

        for (std::size_t l = 0; l < L; ++l) {
            const Eigen::Index row = row_base + static_cast<Eigen::Index>(l);
            const double s = freq.s[l];
            if ((member - 1) % group == 0)
                lib.row_index.emplace_back(s, field.tgrid[static_cast<std::size_t>(j)]);
            const double Lu = transform_series(prof, field.xgrid, s, opts.scheme);
            const double eR = std::exp(-s * X);
            for (std::size_t i = 0; i < D; ++i) {
                const auto& term = terms[i];
                double v = 0.0;
                if (term.is_single_deriv() && term.factors[0].axis == DerivAxis::time) {
                    v = transform_series(ut, field.xgrid, s, opts.scheme);
                } else if (term.is_single_deriv()) {
                    const int o = term.factors[0].order;
                    v = std::pow(s, o) * Lu;
                    for (int q = 0; q < o; ++q)
                        v -= std::pow(s, o - q - 1) *
                             (bl[static_cast<std::size_t>(q)] - eR * br[static_cast<std::size_t>(q)]);
                } else if (term.degree() == 1 && term.factors[0].kind == FactorKind::state) {
                    v = Lu;
                } else {
                    Eigen::VectorXd series = Eigen::VectorXd::Ones(prof.size());
                    for (const auto& f : term.factors) {
                        if (f.kind == FactorKind::state) series.array() *= prof.array();
                        else if (f.kind == FactorKind::deriv && f.axis == DerivAxis::space)
                            series.array() *= dprof[static_cast<std::size_t>(f.order - 1)].array();
                        else throw Error("assemble_pde_library: unsupported product factor");
                    }
                    v = transform_series(series, field.xgrid, s, opts.scheme);
                }
                if (!std::isfinite(v)) throw NonFiniteError("assemble_pde_library: non-finite entry");
                lib.theta(row, static_cast<Eigen::Index>(i)) += v / group;
            }
        }
    }
    return lib;
}

}  // namespace lapid
