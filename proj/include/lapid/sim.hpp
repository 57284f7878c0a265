#pragma once

// Benchmark-system simulation: RK4 for ODE kinds (with exact impulse jumps and
// forcing switches), Crank-Nicolson / semi-implicit / ETDRK4 solvers for the
// PDE kinds, and seeded Gaussian measurement noise.

#include "lapid/core.hpp"

#include <algorithm>
#include <complex>
#include <functional>
#include <map>
#include <optional>

namespace lapid {

enum class SystemKind {
    duffing,
    fourth_order,
    delta_forced,
    step_forced,
    sine_forced,
    cosine_forced,
    sinh_forced,
    cosh_forced,
    lorenz,
    lotka_volterra,
    convection_diffusion,
    burgers,
    kuramoto_sivashinsky,
    custom_rhs,
};

inline SystemKind system_kind_from_string(const std::string& s) {
    static const std::map<std::string, SystemKind> table = {
        {"duffing", SystemKind::duffing},
        {"fourth_order", SystemKind::fourth_order},
        {"delta_forced", SystemKind::delta_forced},
        {"step_forced", SystemKind::step_forced},
        {"sine_forced", SystemKind::sine_forced},
        {"cosine_forced", SystemKind::cosine_forced},
        {"sinh_forced", SystemKind::sinh_forced},
        {"cosh_forced", SystemKind::cosh_forced},
        {"lorenz", SystemKind::lorenz},
        {"lotka_volterra", SystemKind::lotka_volterra},
        {"convection_diffusion", SystemKind::convection_diffusion},
        {"burgers", SystemKind::burgers},
        {"kuramoto_sivashinsky", SystemKind::kuramoto_sivashinsky},
        {"custom_rhs", SystemKind::custom_rhs},
    };
    auto it = table.find(s);
    if (it == table.end()) throw UnknownKindError("unknown system kind: " + s);
    return it->second;
}

inline bool is_pde_kind(SystemKind k) {
    return k == SystemKind::convection_diffusion || k == SystemKind::burgers ||
           k == SystemKind::kuramoto_sivashinsky;
}

using RhsFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

/// Which canonical system to integrate plus its named parameters and initial state.
struct SystemSpec {
    SystemKind kind = SystemKind::custom_rhs;
    std::map<std::string, double> params;
    std::vector<double> ic;       // initial state (ODE) or initial-field parameters (PDE)
    std::string ic_kind;          // PDE initial condition family: "gaussian" | "cosine_mix"
    RhsFn custom;                 // used only with kind == custom_rhs

    double param(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end()) throw UnknownKindError("SystemSpec: missing parameter '" + key + "'");
        return it->second;
    }
    double param_or(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

struct NoiseSpec {
    double level = 0.0;       // fraction of per-channel signal std
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// RK4
// ---------------------------------------------------------------------------

/// Classical fourth-order Runge-Kutta over each grid interval. Throws NonFiniteError
/// on blow-up. `substeps` refines each interval while still sampling on the grid.
inline TimeSeriesSet rk4_integrate(const RhsFn& rhs, const Eigen::VectorXd& ic,
                                   const TimeGrid& grid, int substeps = 1,
                                   std::vector<std::string> names = {}) {
    if (substeps < 1) throw Error("rk4_integrate: substeps must be >= 1");
    const std::size_t m = grid.size();
    const Eigen::Index d = ic.size();
    Eigen::MatrixXd out(d, static_cast<Eigen::Index>(m));
    Eigen::VectorXd y = ic;
    out.col(0) = y;
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double h = (grid[j + 1] - grid[j]) / substeps;
        double tk = grid[j];
        for (int k = 0; k < substeps; ++k) {
            const Eigen::VectorXd k1 = rhs(tk, y);
            const Eigen::VectorXd k2 = rhs(tk + 0.5 * h, y + 0.5 * h * k1);
            const Eigen::VectorXd k3 = rhs(tk + 0.5 * h, y + 0.5 * h * k2);
            const Eigen::VectorXd k4 = rhs(tk + h, y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            tk += h;
        }
        if (!y.allFinite()) throw NonFiniteError("rk4_integrate: state diverged near t=" + std::to_string(tk));
        out.col(static_cast<Eigen::Index>(j + 1)) = y;
    }
    if (names.empty()) {
        for (Eigen::Index c = 0; c < d; ++c) names.push_back("u" + std::to_string(c + 1));
    }
    return TimeSeriesSet(grid, std::move(out), std::move(names));
}

namespace detail {

/// RK4 that splits intervals at t0 and applies a jump to one state component there.
/// Used for the impulse-forced kinds; the trajectory stays continuous in u while
/// the tracked derivative picks up the jump exactly.
inline TimeSeriesSet rk4_with_jump(const RhsFn& rhs, const Eigen::VectorXd& ic,
                                   const TimeGrid& grid, double t0, Eigen::Index jump_index,
                                   double jump_value, int substeps,
                                   std::vector<std::string> names) {
    const std::size_t m = grid.size();
    Eigen::MatrixXd out(ic.size(), static_cast<Eigen::Index>(m));
    Eigen::VectorXd y = ic;
    bool applied = (t0 <= grid.front());
    if (applied) y[jump_index] += jump_value;
    out.col(0) = y;
    auto advance = [&](double a, double b) {
        if (b <= a) return;
        const double h = (b - a) / substeps;
        double tk = a;
        for (int k = 0; k < substeps; ++k) {
            const Eigen::VectorXd k1 = rhs(tk, y);
            const Eigen::VectorXd k2 = rhs(tk + 0.5 * h, y + 0.5 * h * k1);
            const Eigen::VectorXd k3 = rhs(tk + 0.5 * h, y + 0.5 * h * k2);
            const Eigen::VectorXd k4 = rhs(tk + h, y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            tk += h;
        }
    };
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double a = grid[j], b = grid[j + 1];
        if (!applied && t0 > a && t0 <= b) {
            advance(a, t0);
            y[jump_index] += jump_value;
            applied = true;
            advance(t0, b);
        } else {
            advance(a, b);
        }
        if (!y.allFinite()) throw NonFiniteError("simulate: state diverged");
        out.col(static_cast<Eigen::Index>(j + 1)) = y;
    }
    return TimeSeriesSet(grid, std::move(out), std::move(names));
}

}  // namespace detail


namespace detail {

inline TimeSeriesSet first_channel(TimeSeriesSet full) {
    Eigen::MatrixXd u = full.states.row(0);
    return TimeSeriesSet(full.grid, std::move(u), {"u"});
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Canonical ODE benchmarks
// ---------------------------------------------------------------------------

/// Simulates the ODE benchmark kinds. High-order scalar equations are converted to
/// first-order companion form internally; delta forcing is an exact velocity jump,
/// step forcing an exact right-hand-side switch at t0.
inline TimeSeriesSet simulate_canonical(const SystemSpec& spec, const TimeGrid& grid,
                                        int substeps = 10) {
    auto ic_vec = [&](std::size_t need) {
        if (spec.ic.size() != need)
            throw UnknownKindError("SystemSpec: initial state must have " + std::to_string(need) +
                                   " entries");
        return Eigen::Map<const Eigen::VectorXd>(spec.ic.data(), static_cast<Eigen::Index>(need));
    };
    switch (spec.kind) {
        case SystemKind::duffing: {
            const double om = spec.param("omega"), ze = spec.param("zeta");
            const double al = spec.param_or("alpha", 0.0), de = spec.param_or("delta", 0.0);
            const double omd = spec.param_or("omega_d", 0.0);
            RhsFn rhs = [=](double t, const Eigen::VectorXd& y) {
                Eigen::VectorXd dy(2);
                dy[0] = y[1];
                dy[1] = -2.0 * om * ze * y[1] - om * om * y[0] - al * y[0] * y[0] * y[0] +
                        de * std::cos(omd * t);
                return dy;
            };
            return detail::first_channel(rk4_integrate(rhs, ic_vec(2), grid, substeps, {"u", "u_t"}));
        }
        case SystemKind::fourth_order: {
            const double al = spec.param("alpha"), be = spec.param("beta");
            RhsFn rhs = [=](double, const Eigen::VectorXd& y) {
                Eigen::VectorXd dy(4);
                dy[0] = y[1];
                dy[1] = y[2];
                dy[2] = y[3];
                dy[3] = -al * y[2] - be * y[0];
                return dy;
            };
            return detail::first_channel(
                rk4_integrate(rhs, ic_vec(4), grid, substeps, {"u", "u_t", "u_tt", "u_ttt"}));
        }
        case SystemKind::delta_forced: {
            // u_tt + alpha u_t + beta u + f0 delta(t - t0) = 0
            const double al = spec.param("alpha"), be = spec.param("beta");
            const double f0 = spec.param("f0"), t0 = spec.param("t0");
            RhsFn rhs = [=](double, const Eigen::VectorXd& y) {
                Eigen::VectorXd dy(2);
                dy[0] = y[1];
                dy[1] = -al * y[1] - be * y[0];
                return dy;
            };
            return detail::first_channel(
                detail::rk4_with_jump(rhs, ic_vec(2), grid, t0, 1, -f0, substeps, {"u", "u_t"}));
        }
        case SystemKind::step_forced: {
            // u_t + alpha u + f0 H(t - t0) = 0
            const double al = spec.param("alpha"), f0 = spec.param("f0"), t0 = spec.param("t0");
            RhsFn rhs = [=](double t, const Eigen::VectorXd& y) {
                Eigen::VectorXd dy(1);
                dy[0] = -al * y[0] - (t >= t0 ? f0 : 0.0);
                return dy;
            };
            // split the step interval at t0 so the switch lands exactly on t0
            return detail::rk4_with_jump(rhs, ic_vec(1), grid, t0, 0, 0.0, substeps, {"u"});
        }
        case SystemKind::sine_forced:
        case SystemKind::cosine_forced:
        case SystemKind::sinh_forced:
        case SystemKind::cosh_forced: {
            // u_tt + beta u + amp f(omega t) = 0
            const double be = spec.param("beta"), amp = spec.param("amp"), om = spec.param("omega");
            const SystemKind kind = spec.kind;
            RhsFn rhs = [=](double t, const Eigen::VectorXd& y) {
                double f = 0.0;
                switch (kind) {
                    case SystemKind::sine_forced: f = std::sin(om * t); break;
                    case SystemKind::cosine_forced: f = std::cos(om * t); break;
                    case SystemKind::sinh_forced: f = std::sinh(om * t); break;
                    default: f = std::cosh(om * t); break;
                }
                Eigen::VectorXd dy(2);
                dy[0] = y[1];
                dy[1] = -be * y[0] - amp * f;
                return dy;
            };
            return detail::first_channel(rk4_integrate(rhs, ic_vec(2), grid, substeps, {"u", "u_t"}));
        }
        case SystemKind::lorenz: {
            const double si = spec.param("sigma"), rho = spec.param("rho"), be = spec.param("beta");
            RhsFn rhs = [=](double, const Eigen::VectorXd& y) {
                Eigen::VectorXd dy(3);
                dy[0] = si * (y[1] - y[0]);
                dy[1] = y[0] * (rho - y[2]) - y[1];
                dy[2] = y[0] * y[1] - be * y[2];
                return dy;
            };
            return rk4_integrate(rhs, ic_vec(3), grid, substeps, {"x", "y", "z"});
        }
        case SystemKind::lotka_volterra: {
            const double al = spec.param("alpha"), be = spec.param("beta");
            const double de = spec.param("delta"), ga = spec.param("gamma");
            RhsFn rhs = [=](double, const Eigen::VectorXd& y) {
                Eigen::VectorXd dy(2);
                dy[0] = al * y[0] - be * y[0] * y[1];
                dy[1] = de * y[0] * y[1] - ga * y[1];
                return dy;
            };
            return rk4_integrate(rhs, ic_vec(2), grid, substeps, {"x", "y"});
        }
        case SystemKind::custom_rhs: {
            if (!spec.custom) throw UnknownKindError("custom_rhs kind requires a callable");
            Eigen::Map<const Eigen::VectorXd> ic(spec.ic.data(),
                                                 static_cast<Eigen::Index>(spec.ic.size()));
            return rk4_integrate(spec.custom, ic, grid, substeps);
        }
        default:
            throw UnknownKindError("simulate_canonical: PDE kinds go through solve_pde");
    }
}

// ---------------------------------------------------------------------------
// PDE solvers
// ---------------------------------------------------------------------------

namespace detail {

/// Thomas algorithm for a constant-coefficient tridiagonal system.
inline Eigen::VectorXd solve_tridiag(double lo, double di, double up, Eigen::VectorXd rhs) {
    const Eigen::Index n = rhs.size();
    Eigen::VectorXd c(n);
    c[0] = up / di;
    rhs[0] /= di;
    for (Eigen::Index i = 1; i < n; ++i) {
        const double m = di - lo * c[i - 1];
        c[i] = up / m;
        rhs[i] = (rhs[i] - lo * rhs[i - 1]) / m;
    }
    for (Eigen::Index i = n - 2; i >= 0; --i) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
}

/// In-place radix-2 FFT (power-of-two lengths only).
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if ((n & (n - 1)) != 0) throw Error("fft: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * 3.14159265358979323846 / static_cast<double>(len) *
                           (inverse ? 1.0 : -1.0);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& z : a) z /= static_cast<double>(n);
    }
}

inline Eigen::VectorXd gaussian_profile(const std::vector<double>& x, double x0, double sigma,
                                        double amp) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = (x[i] - x0) / sigma;
        u[static_cast<Eigen::Index>(i)] = amp * std::exp(-0.5 * z * z);
    }
    return u;
}

inline Eigen::VectorXd initial_field(const SystemSpec& spec, const std::vector<double>& x) {
    const std::size_t n = x.size();
    Eigen::VectorXd u(static_cast<Eigen::Index>(n));
    if (spec.ic_kind == "gaussian" || spec.ic_kind.empty()) {
        const double x0 = spec.param_or("ic_center", 0.5 * (x.front() + x.back()));
        const double sg = spec.param_or("ic_width", 0.1 * (x.back() - x.front()));
        const double am = spec.param_or("ic_amp", 1.0);
        return gaussian_profile(x, x0, sg, am);
    }
    if (spec.ic_kind == "cosine_mix") {
        // periodic multiscale seed; develops KS spatiotemporal chaos
        const double L = x.back() - x.front() + (x[1] - x[0]);
        for (std::size_t i = 0; i < n; ++i) {
            const double q = 2.0 * 3.14159265358979323846 * (x[i] - x.front()) / L;
            u[static_cast<Eigen::Index>(i)] =
                std::cos(q) * (1.0 + std::sin(q)) + 0.5 * std::cos(3.0 * q + 0.7);
        }
        return u;
    }
    throw UnknownKindError("unknown initial-condition kind: " + spec.ic_kind);
}

}  // namespace detail

/// Generic periodic pseudo-spectral ETDRK4 stepper for u_t = sum_k a_k d^k u/dx^k + b u u_x.
/// Coefficients are given for the explicit form; lapid uses it both to generate KS data
/// and to re-solve identified periodic PDEs.
inline SpatioTemporalField etdrk4_periodic(const Eigen::VectorXd& u0, const TimeGrid& tgrid,
                                           const std::vector<double>& xgrid,
                                           const std::vector<double>& linear_coeffs,
                                           double advection_coeff, int substeps = 8) {
    using cd = std::complex<double>;
    const std::size_t n = xgrid.size();
    if ((n & (n - 1)) != 0) throw GridTooCoarseError("spectral solver needs a power-of-two grid");
    const double dx0 = xgrid[1] - xgrid[0];
    const double L = (xgrid.back() - xgrid.front()) + dx0;   // periodic period
    const double two_pi = 2.0 * 3.14159265358979323846;

    std::vector<cd> lin(n);
    std::vector<double> wav(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = two_pi / L * (i <= n / 2 ? static_cast<double>(i)
                                                  : static_cast<double>(i) - static_cast<double>(n));
        wav[i] = k;
        cd ik(0.0, k), acc(0.0, 0.0), p(1.0, 0.0);
        for (std::size_t o = 1; o <= linear_coeffs.size(); ++o) {
            p *= ik;
            acc += linear_coeffs[o - 1] * p;
        }
        lin[i] = acc;
    }

    const double ht = (tgrid.back() - tgrid.front()) / static_cast<double>((tgrid.size() - 1) * substeps);
    // phi-function weights via 32-point contour quadrature (Kassam-Trefethen)
    std::vector<cd> E(n), E2(n), Q(n), f1(n), f2(n), f3(n);
    const int M = 32;
    for (std::size_t i = 0; i < n; ++i) {
        const cd z = ht * lin[i];
        E[i] = std::exp(z);
        E2[i] = std::exp(0.5 * z);
        cd q(0, 0), a(0, 0), b(0, 0), c(0, 0);
        for (int j = 0; j < M; ++j) {
            const double th = two_pi * (j + 0.5) / M;
            const cd r = z + std::polar(1.0, th);
            q += (std::exp(0.5 * r) - 1.0) / r;
            a += (-4.0 - r + std::exp(r) * (4.0 - 3.0 * r + r * r)) / (r * r * r);
            b += (2.0 + r + std::exp(r) * (-2.0 + r)) / (r * r * r);
            c += (-4.0 - 3.0 * r - r * r + std::exp(r) * (4.0 - r)) / (r * r * r);
        }
        Q[i] = ht * q / static_cast<double>(M);
        f1[i] = ht * a / static_cast<double>(M);
        f2[i] = ht * b / static_cast<double>(M);
        f3[i] = ht * c / static_cast<double>(M);
    }

    std::vector<cd> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = cd(u0[static_cast<Eigen::Index>(i)], 0.0);
    detail::fft_radix2(v, false);

    auto nonlinear = [&](const std::vector<cd>& vhat) {
        // b * u u_x  ->  spectral: b/2 * d/dx (u^2); 2/3 dealiasing
        std::vector<cd> w = vhat;
        detail::fft_radix2(w, true);
        for (std::size_t i = 0; i < n; ++i) {
            const double ur = w[i].real();
            w[i] = cd(ur * ur, 0.0);
        }
        detail::fft_radix2(w, false);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= cd(0.0, wav[i]) * (0.5 * advection_coeff);
            if (std::abs(wav[i]) > two_pi / L * (static_cast<double>(n) / 3.0)) w[i] = cd(0, 0);
        }
        return w;
    };

    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(tgrid.size()));
    auto store = [&](Eigen::Index col) {
        std::vector<cd> w = v;
        detail::fft_radix2(w, true);
        for (std::size_t i = 0; i < n; ++i) {
            const double val = w[i].real();
            if (!std::isfinite(val)) throw NonFiniteError("etdrk4: field diverged");
            out(static_cast<Eigen::Index>(i), col) = val;
        }
    };
    store(0);
    for (std::size_t jt = 0; jt + 1 < tgrid.size(); ++jt) {
        for (int ss = 0; ss < substeps; ++ss) {
            const auto Nv = nonlinear(v);
            std::vector<cd> a(n), b(n), c(n);
            for (std::size_t i = 0; i < n; ++i) a[i] = E2[i] * v[i] + Q[i] * Nv[i];
            const auto Na = nonlinear(a);
            for (std::size_t i = 0; i < n; ++i) b[i] = E2[i] * v[i] + Q[i] * Na[i];
            const auto Nb = nonlinear(b);
            for (std::size_t i = 0; i < n; ++i) c[i] = E2[i] * a[i] + Q[i] * (2.0 * Nb[i] - Nv[i]);
            const auto Nc = nonlinear(c);
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = E[i] * v[i] + Nv[i] * f1[i] + 2.0 * (Na[i] + Nb[i]) * f2[i] + Nc[i] * f3[i];
            }
        }
        store(static_cast<Eigen::Index>(jt + 1));
    }
    return SpatioTemporalField(tgrid, xgrid, std::move(out));
}

/// Solves the three PDE benchmark kinds on the given grids.
///  - convection_diffusion: Crank-Nicolson, Dirichlet boundaries from the analytic
///    advected-and-spread Gaussian of the initial profile
///  - burgers: implicit diffusion + explicit upstream-biased advection, outflow ends
///  - kuramoto_sivashinsky: ETDRK4 pseudo-spectral on a periodic domain
inline SpatioTemporalField solve_pde(const SystemSpec& spec, const TimeGrid& tgrid,
                                     const std::vector<double>& xgrid, int substeps = 8) {
    const std::size_t n = xgrid.size();
    const std::size_t m = tgrid.size();
    if (n < 8) throw GridTooCoarseError("solve_pde: spatial grid too coarse");
    const double dx = xgrid[1] - xgrid[0];

    switch (spec.kind) {
        case SystemKind::convection_diffusion: {
            // u_t + c u_x - D u_xx = 0
            const double c = spec.param("c"), D = spec.param("D");
            const double x0 = spec.param_or("ic_center", 1.0);
            const double sg = spec.param_or("ic_width", 0.25);
            const double am = spec.param_or("ic_amp", 1.0);

            auto exact = [&](double x, double t) {
                const double var = sg * sg + 2.0 * D * t;
                const double z = x - x0 - c * t;
                return am * sg / std::sqrt(var) * std::exp(-0.5 * z * z / var);
            };

            Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            Eigen::VectorXd u = detail::gaussian_profile(xgrid, x0, sg, am);
            out.col(0) = u;
            for (std::size_t jt = 0; jt + 1 < m; ++jt) {
                double tcur = tgrid[jt];
                const double ht = (tgrid[jt + 1] - tgrid[jt]) / substeps;
                for (int ss = 0; ss < substeps; ++ss) {
                    const double r = D * ht / (dx * dx);
                    const double a = c * ht / (4.0 * dx);
                    // interior Crank-Nicolson on n-2 unknowns
                    const Eigen::Index ni = static_cast<Eigen::Index>(n) - 2;
                    Eigen::VectorXd rhs(ni);
                    for (Eigen::Index i = 0; i < ni; ++i) {
                        const double um = u[i], uc = u[i + 1], up = u[i + 2];
                        rhs[i] = uc + 0.5 * r * (up - 2.0 * uc + um) - a * (up - um);
                    }
                    const double uL = exact(xgrid.front(), tcur + ht);
                    const double uR = exact(xgrid.back(), tcur + ht);
                    rhs[0] += (0.5 * r + a) * uL;
                    rhs[ni - 1] += (0.5 * r - a) * uR;
                    Eigen::VectorXd sol =
                        detail::solve_tridiag(-0.5 * r - a, 1.0 + r, -0.5 * r + a, std::move(rhs));
                    u[0] = uL;
                    u[static_cast<Eigen::Index>(n) - 1] = uR;
                    u.segment(1, ni) = sol;
                    tcur += ht;
                }
                if (!u.allFinite()) throw NonFiniteError("convection-diffusion solve diverged");
                out.col(static_cast<Eigen::Index>(jt + 1)) = u;
            }
            return SpatioTemporalField(tgrid, xgrid, std::move(out));
        }
        case SystemKind::burgers: {
            // u_t + u u_x - nu u_xx = 0; implicit diffusion, explicit advection, outflow ends
            const double nu = spec.param("nu");
            Eigen::VectorXd u = detail::initial_field(spec, xgrid);
            Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            out.col(0) = u;
            for (std::size_t jt = 0; jt + 1 < m; ++jt) {
                const double ht = (tgrid[jt + 1] - tgrid[jt]) / substeps;
                for (int ss = 0; ss < substeps; ++ss) {
                    const double r = nu * ht / (dx * dx);
                    const Eigen::Index ni = static_cast<Eigen::Index>(n) - 2;
                    Eigen::VectorXd rhs(ni);
                    for (Eigen::Index i = 0; i < ni; ++i) {
                        const double um = u[i], uc = u[i + 1], up = u[i + 2];
                        rhs[i] = uc - ht * uc * (up - um) / (2.0 * dx);
                    }
                    // pinned upstream value on the left, outflow on the right
                    Eigen::VectorXd sol = detail::solve_tridiag(-r, 1.0 + 2.0 * r, -r, std::move(rhs));
                    u.segment(1, ni) = sol;
                    u[static_cast<Eigen::Index>(n) - 1] = sol[ni - 1];
                }
                if (!u.allFinite()) throw NonFiniteError("burgers solve diverged");
                const double cfl = u.cwiseAbs().maxCoeff() * (tgrid[jt + 1] - tgrid[jt]) /
                                   (substeps * dx);
                if (cfl > 1.0) throw GridTooCoarseError("burgers: advective CFL exceeded");
                out.col(static_cast<Eigen::Index>(jt + 1)) = u;
            }
            return SpatioTemporalField(tgrid, xgrid, std::move(out));
        }
        case SystemKind::kuramoto_sivashinsky: {
            // u_t + u u_x + u_xx + u_xxxx = 0  ->  u_t = -u_xx - u_xxxx - u u_x
            const Eigen::VectorXd u0 = detail::initial_field(spec, xgrid);
            return etdrk4_periodic(u0, tgrid, xgrid, {0.0, -1.0, 0.0, -1.0}, -1.0, substeps);
        }
        default:
            throw UnknownKindError("solve_pde: not a PDE kind");
    }
}

// ---------------------------------------------------------------------------
// Measurement noise
// ---------------------------------------------------------------------------

/// Adds i.i.d. zero-mean Gaussian noise, per channel, with standard deviation
/// level * population std of that channel. Deterministic per seed.
inline TimeSeriesSet add_noise(const TimeSeriesSet& data, const NoiseSpec& noise) {
    if (noise.level < 0.0) throw Error("add_noise: level must be nonnegative");
    TimeSeriesSet out = data;
    if (noise.level == 0.0) return out;
    GaussianStream g(noise.seed);
    for (Eigen::Index c = 0; c < out.states.rows(); ++c) {
        const double mean = out.states.row(c).mean();
        const double sd = std::sqrt((out.states.row(c).array() - mean).square().mean());
        for (Eigen::Index j = 0; j < out.states.cols(); ++j) {
            out.states(c, j) += noise.level * sd * g.next();
        }
    }
    return out;
}

inline SpatioTemporalField add_noise(const SpatioTemporalField& field, const NoiseSpec& noise) {
    if (noise.level < 0.0) throw Error("add_noise: level must be nonnegative");
    SpatioTemporalField out = field;
    if (noise.level == 0.0) return out;
    GaussianStream g(noise.seed);
    const double mean = out.values.mean();
    const double sd = std::sqrt((out.values.array() - mean).square().mean());
    for (Eigen::Index jt = 0; jt < out.values.cols(); ++jt) {
        for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
            out.values(i, jt) += noise.level * sd * g.next();
        }
    }
    return out;
}

}  // namespace lapid
