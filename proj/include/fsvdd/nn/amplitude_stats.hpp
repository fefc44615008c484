#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/nn/autoencoder.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace fsvdd::nn {

/// Mean, variance, normalized skewness and normalized (non-excess) kurtosis.
struct AmplitudeStats {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;

    [[nodiscard]] double excess_kurtosis() const { return kurtosis - 3.0; }

    /// Statistics of 1 - u given those of u.
    [[nodiscard]] AmplitudeStats complement() const { return {1.0 - mean, variance, -skewness, kurtosis}; }
};

/// Closed-form statistics of u = exp(-b r^2) for r Rayleigh with density
/// 2 omega r exp(-omega r^2).
///
/// With beta = b / omega the raw moments are E[u^k] = 1 / (1 + k beta), which
/// reduces to
///   variance = beta^2 / ((1+beta)^2 (1+2beta))
///   skewness = 2 (beta-1) sqrt(1+2beta) / (1+3beta)
///   kurtosis = 3 (1+2beta)(2beta^2 - beta + 3) / ((1+3beta)(1+4beta)).
/// At b == omega this is the U(0, 1) law: (1/2, 1/12, 0, 9/5). At b == 0 the
/// variable is constant; skewness and kurtosis then report their limits.
/// The EAD amplitude is 1 - u, see AmplitudeStats::complement.
inline AmplitudeStats ead_statistics(double b, double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigError("ead_statistics: omega must be > 0");
    if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("ead_statistics: b must be >= 0");
    const double beta = b / omega;
    const double p = 1.0 + beta;
    const double q = 1.0 + 2.0 * beta;
    const double r = 1.0 + 3.0 * beta;
    const double s = 1.0 + 4.0 * beta;
    AmplitudeStats out;
    out.mean = 1.0 / p;
    out.variance = beta * beta / (p * p * q);
    out.skewness = 2.0 * (beta - 1.0) * std::sqrt(q) / r;
    out.kurtosis = 3.0 * q * (2.0 * beta * beta - beta + 3.0) / (r * s);
    return out;
}

/// Empirical moments of a sample (population normalization).
inline AmplitudeStats sample_statistics(std::span<const double> values) {
    if (values.size() < 4) throw NumericalError("sample_statistics: fewer than 4 samples");
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // Variance at rounding level of the mean counts as zero.
    if (!(m2 > 1e-24 * mean * mean) || m2 == 0.0) throw NumericalError("sample_statistics: zero variance");
    return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

/// Amplitude statistics after each layer, pooled over all samples and nodes.
template <Field T>
std::vector<AmplitudeStats> layer_amplitude_stats(const Autoencoder<T>& ae, std::span<const Vector<T>> dataset) {
    if (dataset.empty()) throw DataError("layer_amplitude_stats: empty dataset");
    const auto outs = forward_trace(ae, stack_columns(dataset));
    std::vector<AmplitudeStats> stats;
    std::vector<double> amp;
    for (const auto& out : outs) {
        amp.resize(static_cast<size_t>(out.size()));
        for (Eigen::Index k = 0; k < out.size(); ++k) amp[static_cast<size_t>(k)] = std::abs(out.data()[k]);
        stats.push_back(sample_statistics(amp));
    }
    return stats;
}

template <Field T>
std::vector<AmplitudeStats> layer_amplitude_stats(const Autoencoder<T>& ae, const std::vector<Vector<T>>& dataset) {
    return layer_amplitude_stats(ae, std::span<const Vector<T>>(dataset));
}

}  // namespace fsvdd::nn
