#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/nn/autoencoder.hpp"
#include "fsvdd/signal_repr.hpp"
#include "fsvdd/svdd.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace fsvdd::focus {

/// Residual set r_k = x_k - H(x_k), aligned with the source ids.
template <Field T>
struct ResidualDataset {
    std::vector<Vector<T>> residuals;
    std::vector<std::string> source_ids;
    Representation representation = Representation::real;
};

/// An autoencoder trained on healthy data plus an SVDD boundary fitted on its
/// training residuals. `svdd.corrected_limit` holds D - m_T + m_V.
template <Field T>
struct FocusModel {
    nn::Autoencoder<T> autoencoder;
    svdd::SvddModel<T> svdd;
    double m_train = 0.0;
    double m_val = 0.0;
    Representation representation = Representation::real;

    [[nodiscard]] double corrected_limit() const { return *svdd.corrected_limit; }
};

template <Field T>
Vector<T> residual(const Vector<T>& x, const nn::Autoencoder<T>& ae) {
    if (x.size() != ae.input_dim) throw DataError("residual: dimension mismatch");
    return x - nn::forward(ae, x);
}

template <Field T>
std::vector<Vector<T>> residuals(std::span<const Vector<T>> xs, const nn::Autoencoder<T>& ae) {
    std::vector<Vector<T>> out;
    if (xs.empty()) return out;
    const Matrix<T> batch = nn::stack_columns(xs);
    if (batch.rows() != ae.input_dim) throw DataError("residual: dimension mismatch");
    const Matrix<T> r = batch - nn::forward(ae, batch);
    out.reserve(xs.size());
    for (Eigen::Index c = 0; c < r.cols(); ++c) out.emplace_back(r.col(c));
    return out;
}

/// D - m_T + m_V where m_T, m_V are mean densities of the training and
/// validation sets under `model`.
template <Field T>
double corrected_limit(const svdd::SvddModel<T>& model, double m_train, double m_val) {
    return model.density_limit - m_train + m_val;
}

/// Rejects residual sets whose pooled variance is numerically zero.
template <Field T>
void require_nondegenerate(std::span<const Vector<T>> rs) {
    if (rs.empty()) throw DataError("focus: empty residual set");
    Vector<T> mean = Vector<T>::Zero(rs.front().size());
    for (const auto& r : rs) mean += r;
    mean /= static_cast<double>(rs.size());
    double ss = 0.0;
    for (const auto& r : rs) ss += (r - mean).squaredNorm();
    const double var = ss / static_cast<double>(rs.size() * static_cast<size_t>(mean.size()));
    if (!(var >= 1e-12))
        throw NumericalError("focus: residual variance below 1e-12, the autoencoder reproduces its input exactly");
}

/// Fits the residual boundary from already computed residual sets.
template <Field T>
FocusModel<T> fit_focus_residuals(nn::Autoencoder<T> ae, std::span<const Vector<T>> r_train,
                                  std::span<const Vector<T>> r_val, double gamma, double C,
                                  Representation representation = Representation::real,
                                  const svdd::SolverOptions& opts = {}) {
    require_nondegenerate(r_train);
    if (r_val.empty()) throw DataError("fit_focus: empty validation set");
    FocusModel<T> fm;
    fm.svdd = svdd::fit(r_train, gamma, C, opts).model;
    fm.m_train = svdd::mean_density(fm.svdd, r_train);
    fm.m_val = svdd::mean_density(fm.svdd, r_val);
    fm.svdd.corrected_limit = corrected_limit(fm.svdd, fm.m_train, fm.m_val);
    fm.autoencoder = std::move(ae);
    fm.representation = representation;
    return fm;
}

/// Builds R_T and R_V through `ae`, fits SVDD on R_T and sets the corrected
/// density limit.
template <Field T>
FocusModel<T> fit_focus(std::span<const Vector<T>> x_train, std::span<const Vector<T>> x_val,
                        const nn::Autoencoder<T>& ae, double gamma, double C,
                        Representation representation = Representation::real,
                        const svdd::SolverOptions& opts = {}) {
    if (x_train.empty()) throw DataError("fit_focus: empty training set");
    if (x_val.empty()) throw DataError("fit_focus: empty validation set");
    const auto r_train = residuals(x_train, ae);
    const auto r_val = residuals(x_val, ae);
    return fit_focus_residuals<T>(ae, r_train, r_val, gamma, C, representation, opts);
}

template <Field T>
FocusModel<T> fit_focus(const std::vector<Vector<T>>& x_train, const std::vector<Vector<T>>& x_val,
                        const nn::Autoencoder<T>& ae, double gamma, double C,
                        Representation representation = Representation::real) {
    return fit_focus(std::span<const Vector<T>>(x_train), std::span<const Vector<T>>(x_val), ae, gamma, C,
                     representation);
}

template <Field T>
double residual_density(const FocusModel<T>& fm, const Vector<T>& x) {
    return svdd::density(fm.svdd, residual(x, fm.autoencoder));
}

/// Decision on the residual with the uncorrected limit D.
template <Field T>
int decide_r(const FocusModel<T>& fm, const Vector<T>& x) {
    return svdd::decide(fm.svdd, residual(x, fm.autoencoder));
}

/// Decision on the residual with the corrected limit D_m.
template <Field T>
int decide_m(const FocusModel<T>& fm, const Vector<T>& x) {
    if (!fm.svdd.corrected_limit) throw DataError("decide_m: model has no corrected limit");
    return svdd::decide_density(residual_density(fm, x), *fm.svdd.corrected_limit);
}

// ---------------------------------------------------------------------------
// Residual-norm baseline

/// Nearest-rank (1 - epsilon) quantile of the validation residual norms.
template <Field T>
double norm_threshold(const nn::Autoencoder<T>& ae, std::span<const Vector<T>> x_val, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("norm_baseline: epsilon must be in [0, 1)");
    if (x_val.empty()) throw DataError("norm_baseline: empty validation set");
    std::vector<double> norms;
    for (const auto& r : residuals(x_val, ae)) norms.push_back(r.norm());
    std::sort(norms.begin(), norms.end());
    const auto n = norms.size();
    auto rank = static_cast<size_t>(std::ceil((1.0 - epsilon) * static_cast<double>(n) - 1e-12));
    rank = std::clamp<size_t>(rank, 1, n);
    return norms[rank - 1];
}

inline int decide_norm(double residual_norm, double threshold) { return residual_norm > threshold ? 1 : 0; }

template <Field T>
std::vector<int> norm_baseline(const nn::Autoencoder<T>& ae, std::span<const Vector<T>> x_val,
                               std::span<const Vector<T>> queries, double epsilon) {
    const double thr = norm_threshold(ae, x_val, epsilon);
    std::vector<int> out;
    for (const auto& r : residuals(queries, ae)) out.push_back(decide_norm(r.norm(), thr));
    return out;
}

}  // namespace fsvdd::focus
