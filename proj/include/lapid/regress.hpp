#pragma once

// Per-pivot sparse regression in the Laplace domain: sequentially thresholded
// least squares over unit-normalized columns, one fit per pivot term.

#include "lapid/core.hpp"
#include "lapid/laplace.hpp"

#include <Eigen/QR>

namespace lapid {

struct RegressionOptions {
    double threshold = 0.01;   // applied in normalized-column space
    int max_iters = 20;
    double rcond = 1e-12;      // rank cutoff of the pivoted-QR solves
    // the only supported optimizer; the tag keeps configs forward-compatible
    std::string optimizer = "stls";

    void validate() const {
        if (threshold < 0.0) throw Error("RegressionOptions: threshold must be >= 0");
        if (max_iters < 1) throw Error("RegressionOptions: max_iters must be >= 1");
        if (optimizer != "stls")
            throw UnknownKindError("RegressionOptions: unsupported optimizer '" + optimizer + "'");
    }
};

/// One identified implicit equation xi . terms = 0 with xi_pivot = +1.
struct SparseModel {
    int pivot = -1;
    Eigen::VectorXd xi;            // de-normalized coefficients, exact zeros off-support
    std::vector<bool> active;
    double residual_norm = 0.0;    // ||Theta xi|| on the de-normalized library
    double residual_norm_normalized = 0.0;  // ||Theta_hat xi_hat|| on unit-norm columns

    int active_count() const {
        int p = 0;
        for (bool a : active) p += a ? 1 : 0;
        return p;
    }
};

struct PivotFailure {
    int pivot = -1;
    std::string reason;
};

struct FitResult {
    std::vector<SparseModel> models;
    std::vector<PivotFailure> failures;
};

namespace detail {

/// Least squares by column-pivoted Householder QR. Columns judged dependent at the
/// rcond cutoff are dropped from the solve and receive exact zeros.
inline Eigen::VectorXd qr_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double rcond,
                                bool* deficient = nullptr) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(rcond);
    if (deficient) *deficient = qr.rank() < A.cols();
    return qr.solve(b);
}

}  // namespace detail

/// Sequentially thresholded least squares: alternate a least-squares solve on the
/// active columns with hard-thresholding of coefficients below `threshold`, until
/// the active set stabilizes. Inactive coefficients are exact zeros.
inline Eigen::VectorXd stls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            const RegressionOptions& opts = {}) {
    opts.validate();
    const Eigen::Index ncol = A.cols();
    if (A.rows() != b.size()) throw ShapeError("stls: row mismatch");
    std::vector<bool> active(static_cast<std::size_t>(ncol), true);
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(ncol);
    bool deficient = false;

    for (int it = 0; it < opts.max_iters; ++it) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < ncol; ++j)
            if (active[static_cast<std::size_t>(j)]) idx.push_back(j);
        if (idx.empty()) throw AllZeroError("stls: every coefficient thresholded away");

        Eigen::MatrixXd Aa(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t q = 0; q < idx.size(); ++q) Aa.col(static_cast<Eigen::Index>(q)) = A.col(idx[q]);
        const Eigen::VectorXd sol = detail::qr_solve(Aa, b, opts.rcond, &deficient);

        coef.setZero();
        for (std::size_t q = 0; q < idx.size(); ++q) coef[idx[q]] = sol[static_cast<Eigen::Index>(q)];

        bool changed = false;
        for (Eigen::Index j = 0; j < ncol; ++j) {
            const bool keep = std::abs(coef[j]) >= opts.threshold;
            if (keep != active[static_cast<std::size_t>(j)]) changed = true;
            active[static_cast<std::size_t>(j)] = keep;
            if (!keep) coef[j] = 0.0;
        }
        if (!changed) break;
    }
    bool any = false;
    for (Eigen::Index j = 0; j < ncol; ++j) any = any || coef[j] != 0.0;
    if (!any) throw AllZeroError("stls: every coefficient thresholded away");
    if (deficient)
        throw RankDeficientError("stls: active least-squares problem is rank-deficient beyond rcond");
    return coef;
}

/// Unit-norm column scales; columns whose norm vanishes relative to the largest
/// keep scale 1 so they stay harmless.
inline Eigen::VectorXd column_scales(const Eigen::MatrixXd& theta) {
    Eigen::VectorXd scales(theta.cols());
    double nmax = 0.0;
    for (Eigen::Index j = 0; j < theta.cols(); ++j) nmax = std::max(nmax, theta.col(j).norm());
    for (Eigen::Index j = 0; j < theta.cols(); ++j) {
        const double n = theta.col(j).norm();
        scales[j] = (n > 1e-12 * nmax && n > 0.0) ? n : 1.0;
    }
    return scales;
}

/// Fixes each term's coefficient to one in turn and solves for the remaining
/// coefficients by STLS in normalized-column space. Models whose own pivot weight
/// would fall below the threshold in their equation are rejected; AllZero and
/// RankDeficient pivots are skipped and recorded.
inline FitResult fit_all_pivots(const LaplaceLibrary& lib, const RegressionOptions& opts = {}) {
    opts.validate();
    const Eigen::Index D = lib.theta.cols();
    if (D < 2) throw ShapeError("fit_all_pivots: need at least two candidate terms");
    const Eigen::VectorXd scales = column_scales(lib.theta);
    Eigen::MatrixXd normed = lib.theta;
    for (Eigen::Index j = 0; j < D; ++j) normed.col(j) /= scales[j];

    FitResult out;
    for (Eigen::Index i = 0; i < D; ++i) {
        Eigen::MatrixXd A(normed.rows(), D - 1);
        std::vector<Eigen::Index> idx;
        idx.reserve(static_cast<std::size_t>(D - 1));
        for (Eigen::Index j = 0; j < D; ++j) {
            if (j == i) continue;
            A.col(static_cast<Eigen::Index>(idx.size())) = normed.col(j);
            idx.push_back(j);
        }
        Eigen::VectorXd ctil;
        try {
            ctil = stls(A, normed.col(i), opts);
        } catch (const AllZeroError&) {
            out.failures.push_back({static_cast<int>(i), "all coefficients thresholded away"});
            continue;
        } catch (const RankDeficientError&) {
            out.failures.push_back({static_cast<int>(i), "rank-deficient active set"});
            continue;
        }

        SparseModel model;
        model.pivot = static_cast<int>(i);
        model.xi = Eigen::VectorXd::Zero(D);
        model.xi[i] = 1.0;
        for (std::size_t q = 0; q < idx.size(); ++q) {
            const Eigen::Index j = idx[q];
            const double c = ctil[static_cast<Eigen::Index>(q)];
            model.xi[j] = (c == 0.0) ? 0.0 : -c * scales[i] / scales[j];
        }

        // normalized-space weights of the assembled equation; a pivot that would be
        // thresholded out of its own equation is not a valid anchor
        double wmax = 0.0;
        for (Eigen::Index j = 0; j < D; ++j) wmax = std::max(wmax, std::abs(model.xi[j]) * scales[j]);
        if (std::abs(model.xi[i]) * scales[i] < opts.threshold * wmax) {
            out.failures.push_back({static_cast<int>(i), "pivot weight below threshold"});
            continue;
        }

        model.active.assign(static_cast<std::size_t>(D), false);
        for (Eigen::Index j = 0; j < D; ++j)
            model.active[static_cast<std::size_t>(j)] = model.xi[j] != 0.0;
        model.residual_norm = (lib.theta * model.xi).norm();
        Eigen::VectorXd xin = model.xi.cwiseProduct(scales);
        model.residual_norm_normalized = (normed * xin).norm();
        out.models.push_back(std::move(model));
    }
    return out;
}

}  // namespace lapid
