#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace fsvdd::svdd {

// ---------------------------------------------------------------------------
// Kernel

/// Squared Frobenius distance; for complex vectors the sum of squared moduli.
template <Field T>
double squared_distance(const Vector<T>& x, const Vector<T>& y) {
    if (x.size() != y.size()) throw DataError("rbf kernel: length mismatch");
    return (x - y).squaredNorm();
}

template <Field T>
double rbf_kernel(const Vector<T>& x, const Vector<T>& y, double gamma) {
    return std::exp(-gamma * squared_distance(x, y));
}

/// Pairwise squared distances, rows = xs, cols = ys.
template <Field T>
Eigen::MatrixXd squared_distances(std::span<const Vector<T>> xs, std::span<const Vector<T>> ys) {
    Eigen::MatrixXd d(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(ys.size()));
    for (size_t i = 0; i < xs.size(); ++i)
        for (size_t j = 0; j < ys.size(); ++j)
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = squared_distance(xs[i], ys[j]);
    return d;
}

/// Symmetric pairwise squared distances of one set.
template <Field T>
Eigen::MatrixXd squared_distances(std::span<const Vector<T>> xs) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (xs[static_cast<size_t>(i)].size() != xs.front().size()) throw DataError("gram: mixed vector lengths");
        for (Eigen::Index j = i + 1; j < n; ++j)
            d(i, j) = d(j, i) = (xs[static_cast<size_t>(i)] - xs[static_cast<size_t>(j)]).squaredNorm();
    }
    return d;
}

inline Eigen::MatrixXd kernel_from_distances(const Eigen::MatrixXd& d2, double gamma) {
    return (-gamma * d2.array()).exp().matrix();
}

template <Field T>
Eigen::MatrixXd gram(std::span<const Vector<T>> xs, double gamma) {
    if (xs.empty()) throw DataError("gram: empty input");
    return kernel_from_distances(squared_distances(xs), gamma);
}

template <Field T>
Eigen::MatrixXd gram(const std::vector<Vector<T>>& xs, double gamma) {
    return gram(std::span<const Vector<T>>(xs), gamma);
}

// ---------------------------------------------------------------------------
// Quadratic program: min a'Ka  s.t.  sum a = 1, 0 <= a <= C

struct SolverOptions {
    double tolerance = 1e-10;
    long max_iterations = 100000;
};

struct FitReport {
    double objective = 0.0;
    long iterations = 0;
    double kkt_violation = 0.0;
};

struct QpSolution {
    Eigen::VectorXd alpha;
    FitReport report;
};

namespace detail {

// Maximal KKT violation: largest gradient among coordinates that may decrease
// minus smallest gradient among coordinates that may increase.
inline double kkt_violation(const Eigen::VectorXd& alpha, const Eigen::VectorXd& grad, double C) {
    double up = std::numeric_limits<double>::infinity();
    double low = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < alpha.size(); ++k) {
        if (alpha[k] < C) up = std::min(up, grad[k]);
        if (alpha[k] > 0.0) low = std::max(low, grad[k]);
    }
    if (!std::isfinite(up) || !std::isfinite(low)) return 0.0;
    return std::max(0.0, low - up);
}

}  // namespace detail

/// Pairwise coordinate descent (SMO with second-order working-set choice)
/// started from the uniform point 1/K, which is feasible for every C >= 1/K.
inline QpSolution solve_capped_simplex(const Eigen::MatrixXd& K, double C, const SolverOptions& opts = {}) {
    const Eigen::Index n = K.rows();
    if (n < 1 || K.cols() != n) throw DataError("svdd solver: kernel matrix must be square and nonempty");
    const double min_c = 1.0 / static_cast<double>(n);
    if (!(C <= 1.0) || C < min_c * (1.0 - 1e-12))
        throw ConfigError("svdd: C must lie in [1/K, 1], got " + std::to_string(C));
    C = std::max(C, min_c);

    Eigen::VectorXd alpha = Eigen::VectorXd::Constant(n, min_c);
    Eigen::VectorXd grad = 2.0 * K * alpha;

    long it = 0;
    double violation = detail::kkt_violation(alpha, grad, C);
    for (; it < opts.max_iterations && violation >= opts.tolerance; ++it) {
        // i: coordinate to increase (smallest gradient with room below C)
        Eigen::Index i = -1;
        double gi = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < n; ++k)
            if (alpha[k] < C && grad[k] < gi) {
                gi = grad[k];
                i = k;
            }
        // j: coordinate to decrease, chosen by the largest guaranteed decrease
        Eigen::Index j = -1;
        double best = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (!(alpha[k] > 0.0) || k == i) continue;
            const double diff = grad[k] - gi;
            if (diff <= 0.0) continue;
            const double eta = std::max(K(i, i) + K(k, k) - 2.0 * K(i, k), 1e-12);
            const double gain = diff * diff / eta;
            if (gain > best) {
                best = gain;
                j = k;
            }
        }
        if (i < 0 || j < 0) break;
        const double eta = std::max(K(i, i) + K(j, j) - 2.0 * K(i, j), 1e-12);
        double t = (grad[j] - grad[i]) / (2.0 * eta);
        const double room_i = C - alpha[i];
        const double room_j = alpha[j];
        t = std::min({t, room_i, room_j});
        alpha[i] = t == room_i ? C : std::min(C, alpha[i] + t);
        alpha[j] = t == room_j ? 0.0 : std::max(0.0, alpha[j] - t);
        grad.noalias() += (2.0 * t) * (K.col(i) - K.col(j));
        violation = detail::kkt_violation(alpha, grad, C);
    }
    grad = 2.0 * K * alpha;
    violation = detail::kkt_violation(alpha, grad, C);
    if (violation >= opts.tolerance && it >= opts.max_iterations)
        throw NumericalError("svdd solver did not converge after " + std::to_string(it) + " iterations");
    return {alpha, {alpha.dot(K * alpha), it, violation}};
}

// ---------------------------------------------------------------------------
// Model

/// Weights below this are dropped from the fitted model.
inline constexpr double kPruneThreshold = 1e-9;

/// Slack on the density/limit comparison. Training points sitting exactly on
/// the boundary land within this band of the limit after finite-precision
/// optimization.
inline constexpr double kDecisionTolerance = 1e-9;

template <Field T>
struct SvddModel {
    std::vector<Vector<T>> support_vectors;
    Eigen::VectorXd alpha;
    double gamma = 1.0;
    double C = 1.0;
    double density_limit = 1.0;
    std::optional<double> corrected_limit;
};

template <Field T>
struct FitResult {
    SvddModel<T> model;
    FitReport report;
    std::vector<Eigen::Index> support_indices;  // positions in the training set
};

namespace detail {

/// Drops negligible weights and returns their mass to the free coordinates
/// so that the weights still sum to one without exceeding C.
inline std::vector<Eigen::Index> prune(Eigen::VectorXd& alpha, double C) {
    std::vector<Eigen::Index> keep;
    double dropped = 0.0;
    for (Eigen::Index k = 0; k < alpha.size(); ++k) {
        if (alpha[k] > kPruneThreshold) {
            keep.push_back(k);
        } else {
            dropped += alpha[k];
        }
    }
    for (int pass = 0; pass < 4 && dropped > 0.0; ++pass) {
        double room = 0.0;
        for (auto k : keep) room += C - alpha[k];
        if (!(room > 0.0)) break;
        const double frac = std::min(1.0, dropped / room);
        double moved = 0.0;
        for (auto k : keep) {
            const double add = frac * (C - alpha[k]);
            alpha[k] = std::min(C, alpha[k] + add);
            moved += add;
        }
        dropped -= moved;
    }
    return keep;
}

}  // namespace detail

/// Fits on a precomputed kernel matrix; `points` provides the vectors that
/// become support vectors.
template <Field T>
FitResult<T> fit_from_kernel(std::span<const Vector<T>> points, const Eigen::MatrixXd& K, double gamma, double C,
                             const SolverOptions& opts = {}) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("svdd: gamma must be > 0");
    auto sol = solve_capped_simplex(K, C, opts);
    Eigen::VectorXd alpha = sol.alpha;
    const double c_eff = std::max(C, 1.0 / static_cast<double>(K.rows()));
    const auto keep = detail::prune(alpha, c_eff);

    FitResult<T> out;
    out.model.gamma = gamma;
    out.model.C = C;
    out.model.alpha.resize(static_cast<Eigen::Index>(keep.size()));
    Eigen::MatrixXd Ks(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
    for (size_t a = 0; a < keep.size(); ++a) {
        out.model.alpha[static_cast<Eigen::Index>(a)] = alpha[keep[a]];
        out.model.support_vectors.push_back(points[static_cast<size_t>(keep[a])]);
        for (size_t b = 0; b < keep.size(); ++b)
            Ks(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = K(keep[a], keep[b]);
    }
    out.model.density_limit = out.model.alpha.dot(Ks * out.model.alpha);
    out.report = sol.report;
    out.report.objective = out.model.density_limit;
    out.support_indices = keep;
    return out;
}

template <Field T>
FitResult<T> fit(std::span<const Vector<T>> points, double gamma, double C, const SolverOptions& opts = {}) {
    if (points.empty()) throw DataError("svdd fit: empty training set");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("svdd: gamma must be > 0");
    return fit_from_kernel(points, gram(points, gamma), gamma, C, opts);
}

template <Field T>
FitResult<T> fit(const std::vector<Vector<T>>& points, double gamma, double C, const SolverOptions& opts = {}) {
    return fit(std::span<const Vector<T>>(points), gamma, C, opts);
}

/// Weighted kernel density of the support vectors at x.
template <Field T>
double density(const SvddModel<T>& model, const Vector<T>& x) {
    double d = 0.0;
    for (size_t k = 0; k < model.support_vectors.size(); ++k) {
        const auto& sv = model.support_vectors[k];
        if (sv.size() != x.size()) throw DataError("svdd density: dimension mismatch");
        d += model.alpha[static_cast<Eigen::Index>(k)] * std::exp(-model.gamma * (sv - x).squaredNorm());
    }
    return d;
}

/// The one comparison every SVDD-style decision goes through: 1 (abnormal)
/// when the density falls below the limit, ties count as healthy.
inline int decide_density(double density, double limit) { return density >= limit - kDecisionTolerance ? 0 : 1; }

template <Field T>
int decide(const SvddModel<T>& model, const Vector<T>& x) {
    return decide_density(density(model, x), model.density_limit);
}

/// Mean density of a set under the model.
template <Field T>
double mean_density(const SvddModel<T>& model, std::span<const Vector<T>> xs) {
    if (xs.empty()) throw DataError("mean_density: empty set");
    double s = 0.0;
    for (const auto& x : xs) s += density(model, x);
    return s / static_cast<double>(xs.size());
}

template <Field T>
void validate(const SvddModel<T>& m) {
    if (m.support_vectors.size() != static_cast<size_t>(m.alpha.size()) || m.support_vectors.empty())
        throw DataError("svdd model: support vectors and weights disagree");
    if (!(m.gamma > 0.0)) throw DataError("svdd model: gamma must be > 0");
    if (std::abs(m.alpha.sum() - 1.0) > 1e-8) throw DataError("svdd model: weights do not sum to one");
    if ((m.alpha.array() < -1e-12).any() || (m.alpha.array() > m.C + 1e-12).any())
        throw DataError("svdd model: weight outside [0, C]");
    if (!(m.density_limit > 0.0 && m.density_limit <= 1.0 + 1e-12))
        throw DataError("svdd model: density limit outside (0, 1]");
    const auto dim = m.support_vectors.front().size();
    for (const auto& sv : m.support_vectors)
        if (sv.size() != dim) throw DataError("svdd model: mixed support vector lengths");
}

// ---------------------------------------------------------------------------
// Kernel width selection

/// Log-spaced 2^-24 ... 2^8, 33 points.
inline std::vector<double> default_gamma_grid() {
    std::vector<double> g;
    for (int e = -24; e <= 8; ++e) g.push_back(std::ldexp(1.0, e));
    return g;
}

struct GammaSelection {
    double gamma = 0.0;
    double flagged_fraction = 0.0;
    bool fallback = false;  // no grid value met the target; smallest returned
};

/// True when a limit can separate densities at all: at or below the
/// comparison tolerance every density ties with it and nothing is flagged.
inline bool limit_is_resolvable(double limit) { return limit > kDecisionTolerance; }

namespace detail {

template <class T>
struct is_optional : std::false_type {};
template <class T>
struct is_optional<std::optional<T>> : std::true_type {};

}  // namespace detail

/// Largest grid value whose fitted model flags at most `epsilon` of the
/// validation set. `fit_at(gamma)` returns a callable mapping a validation
/// element to 0 (healthy) or 1 (abnormal), or an empty optional when the fit
/// at that gamma is degenerate; degenerate grid values are never selected.
template <class V, class FitFn>
GammaSelection select_gamma(FitFn&& fit_at, std::span<const V> validation, double epsilon,
                            std::span<const double> grid) {
    if (grid.empty()) throw ConfigError("select_gamma: empty grid");
    if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("select_gamma: grid must be ascending");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("select_gamma: epsilon must be in [0, 1)");
    if (validation.empty()) throw DataError("select_gamma: empty validation set");
    auto flagged_fraction = [&](const auto& decide_fn) {
        size_t flagged = 0;
        for (const auto& v : validation) flagged += static_cast<size_t>(decide_fn(v) != 0);
        return static_cast<double>(flagged) / static_cast<double>(validation.size());
    };
    auto evaluate = [&](double gamma) -> std::optional<double> {
        auto decider = fit_at(gamma);
        if constexpr (detail::is_optional<decltype(decider)>::value) {
            if (!decider) return std::nullopt;
            return flagged_fraction(*decider);
        } else {
            return flagged_fraction(decider);
        }
    };
    for (size_t g = grid.size(); g-- > 0;) {
        const auto frac = evaluate(grid[g]);
        if (frac && *frac <= epsilon) return {grid[g], *frac, false};
    }
    return {grid.front(), evaluate(grid.front()).value_or(1.0), true};
}

}  // namespace fsvdd::svdd
