#pragma once

// Core value types and error hierarchy shared by every lapid module.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lapid {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class of all lapid errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteError : Error { using Error::Error; };
struct UnknownKindError : Error { using Error::Error; };
struct GridTooCoarseError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct TooShortError : Error { using Error::Error; };
struct NonUniformGridError : Error { using Error::Error; };
struct OverflowError : Error { using Error::Error; };
struct NonPositiveFrequencyError : Error { using Error::Error; };
struct PoleProximityError : Error { using Error::Error; };
struct MissingInitialValuesError : Error { using Error::Error; };
struct TooFewSnapshotsError : Error { using Error::Error; };
struct AllZeroError : Error { using Error::Error; };
struct RankDeficientError : Error { using Error::Error; };
struct NotExplicitlySolvableError : Error { using Error::Error; };
struct DegenerateSampleSizeError : Error { using Error::Error; };
struct EmptyError : Error { using Error::Error; };
struct SingularDerivativeBlockError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Grids and sampled data
// ---------------------------------------------------------------------------

/// Strictly increasing sample instants t1..tm with t1 >= 0 and m >= 4.
class TimeGrid {
public:
    TimeGrid() = default;

    explicit TimeGrid(std::vector<double> t) : t_(std::move(t)) {
        if (t_.size() < 4) throw TooShortError("TimeGrid: need at least 4 samples");
        if (t_.front() < 0.0) throw Error("TimeGrid: t1 must be nonnegative");
        for (std::size_t j = 1; j < t_.size(); ++j) {
            if (!(t_[j] > t_[j - 1])) throw Error("TimeGrid: instants must be strictly increasing");
        }
    }

    /// m uniformly spaced samples covering [a, b].
    static TimeGrid uniform(double a, double b, std::size_t m) {
        if (m < 4) throw TooShortError("TimeGrid::uniform: need m >= 4");
        if (!(b > a)) throw Error("TimeGrid::uniform: empty interval");
        std::vector<double> t(m);
        const double h = (b - a) / static_cast<double>(m - 1);
        for (std::size_t j = 0; j < m; ++j) t[j] = a + h * static_cast<double>(j);
        t.back() = b;
        return TimeGrid(std::move(t));
    }

    std::size_t size() const { return t_.size(); }
    double operator[](std::size_t j) const { return t_[j]; }
    double front() const { return t_.front(); }
    double back() const { return t_.back(); }
    const std::vector<double>& points() const { return t_; }

    /// Spacing of a uniform grid; throws if spacing varies beyond a relative 1e-9.
    double uniform_spacing() const {
        const double h = (t_.back() - t_.front()) / static_cast<double>(t_.size() - 1);
        for (std::size_t j = 1; j < t_.size(); ++j) {
            if (std::abs((t_[j] - t_[j - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
                throw NonUniformGridError("grid is not uniform");
            }
        }
        return h;
    }

    bool is_uniform() const {
        const double h = (t_.back() - t_.front()) / static_cast<double>(t_.size() - 1);
        for (std::size_t j = 1; j < t_.size(); ++j) {
            if (std::abs((t_[j] - t_[j - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) return false;
        }
        return true;
    }

private:
    std::vector<double> t_;
};

/// Sampled state trajectories: one row per channel, one column per instant.
struct TimeSeriesSet {
    TimeGrid grid;
    Eigen::MatrixXd states;           // d x m
    std::vector<std::string> names;   // d labels

    TimeSeriesSet() = default;

    TimeSeriesSet(TimeGrid g, Eigen::MatrixXd s, std::vector<std::string> n)
        : grid(std::move(g)), states(std::move(s)), names(std::move(n)) {
        if (static_cast<std::size_t>(states.cols()) != grid.size())
            throw ShapeError("TimeSeriesSet: column count must equal grid size");
        if (names.size() != static_cast<std::size_t>(states.rows()))
            throw ShapeError("TimeSeriesSet: one name per channel required");
        if (!states.allFinite()) throw NonFiniteError("TimeSeriesSet: non-finite entries");
    }

    Eigen::Index channels() const { return states.rows(); }
    Eigen::Index samples() const { return states.cols(); }
};

/// A scalar field u(x, t) sampled on a space-time lattice (rows = space).
struct SpatioTemporalField {
    TimeGrid tgrid;
    std::vector<double> xgrid;        // strictly increasing
    Eigen::MatrixXd values;           // n x m  (space x time)

    SpatioTemporalField() = default;

    SpatioTemporalField(TimeGrid tg, std::vector<double> xg, Eigen::MatrixXd v)
        : tgrid(std::move(tg)), xgrid(std::move(xg)), values(std::move(v)) {
        if (xgrid.size() < 4) throw TooShortError("SpatioTemporalField: need at least 4 spatial samples");
        for (std::size_t i = 1; i < xgrid.size(); ++i) {
            if (!(xgrid[i] > xgrid[i - 1]))
                throw Error("SpatioTemporalField: x grid must be strictly increasing");
        }
        if (static_cast<std::size_t>(values.rows()) != xgrid.size() ||
            static_cast<std::size_t>(values.cols()) != tgrid.size())
            throw ShapeError("SpatioTemporalField: values must be n x m");
        if (!values.allFinite()) throw NonFiniteError("SpatioTemporalField: non-finite entries");
    }

    std::size_t nx() const { return xgrid.size(); }
    std::size_t nt() const { return tgrid.size(); }

    double dx() const {
        const double h = (xgrid.back() - xgrid.front()) / static_cast<double>(xgrid.size() - 1);
        for (std::size_t i = 1; i < xgrid.size(); ++i) {
            if (std::abs((xgrid[i] - xgrid[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
                throw NonUniformGridError("x grid is not uniform");
        }
        return h;
    }
};

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

inline constexpr double kNegInfinity = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInfinity = std::numeric_limits<double>::infinity();

/// Deterministic standard-normal stream (Box-Muller on a 64-bit LCG-free engine).
/// std::normal_distribution is implementation-defined, so we roll our own to keep
/// noise bit-reproducible across standard libraries.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 1e-300);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    // splitmix64; passes through the full 64-bit state space deterministically
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;

    double uniform() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
        return (static_cast<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }
};

}  // namespace lapid
