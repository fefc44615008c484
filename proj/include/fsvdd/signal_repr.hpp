#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/fft.hpp"
#include "fsvdd/types.hpp"

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fsvdd {

enum class Label { healthy = 0, abnormal = 1, unknown = 2 };

inline std::string_view to_string(Label label) {
    switch (label) {
        case Label::healthy: return "healthy";
        case Label::abnormal: return "abnormal";
        case Label::unknown: return "unknown";
    }
    return "unknown";
}

inline Label label_from_string(std::string_view s) {
    if (s == "healthy") return Label::healthy;
    if (s == "abnormal") return Label::abnormal;
    if (s == "unknown") return Label::unknown;
    throw DataError("unknown label '" + std::string(s) + "'");
}

/// A real intermediate-frequency sweep. All signals of one dataset share the
/// same length.
struct IFSignal {
    RealVector samples;
    Label label = Label::unknown;
    std::map<std::string, std::string> meta;
};

/// Complex analytic counterpart of an IFSignal (negative frequencies removed).
struct AnalyticSignal {
    ComplexVector samples;
};

/// Signal representations fed to the detectors.
enum class Representation { real, amplitude, analytic };

inline std::string_view to_string(Representation r) {
    switch (r) {
        case Representation::real: return "real";
        case Representation::amplitude: return "amplitude";
        case Representation::analytic: return "analytic";
    }
    return "real";
}

inline Representation representation_from_string(std::string_view s) {
    if (s == "real") return Representation::real;
    if (s == "amplitude") return Representation::amplitude;
    if (s == "analytic") return Representation::analytic;
    throw ConfigError("unknown representation '" + std::string(s) + "'");
}

/// Mean and standard deviation of healthy signals.
///
/// The default is a single pair of scalars pooled over every sample of every
/// healthy signal. When `bin_mean`/`bin_std` are non-empty the statistics are
/// applied per time bin instead.
struct Standardizer {
    double mean = 0.0;
    double std = 1.0;
    RealVector bin_mean;
    RealVector bin_std;

    [[nodiscard]] bool per_bin() const { return bin_mean.size() > 0; }
};

namespace detail {

inline void require_finite(const RealVector& x, const char* what) {
    if (!x.allFinite()) throw DataError(std::string(what) + ": non-finite sample");
}

}  // namespace detail

inline Standardizer fit_standardizer(std::span<const IFSignal> healthy) {
    if (healthy.empty()) throw DataError("fit_standardizer: no signals");
    const Eigen::Index length = healthy.front().samples.size();
    // Two passes, pooled over all signals and bins.
    double sum = 0.0;
    size_t count = 0;
    for (const auto& s : healthy) {
        if (s.samples.size() != length) throw DataError("fit_standardizer: mixed signal lengths");
        detail::require_finite(s.samples, "fit_standardizer");
        sum += s.samples.sum();
        count += static_cast<size_t>(s.samples.size());
    }
    if (count == 0) throw DataError("fit_standardizer: empty signals");
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (const auto& s : healthy) ss += (s.samples.array() - mean).square().sum();
    const double var = ss / static_cast<double>(count);
    if (!(var > 0.0)) throw NumericalError("fit_standardizer: zero pooled variance");
    return Standardizer{mean, std::sqrt(var), {}, {}};
}

/// Per-time-bin variant of fit_standardizer.
inline Standardizer fit_binwise_standardizer(std::span<const IFSignal> healthy) {
    if (healthy.empty()) throw DataError("fit_binwise_standardizer: no signals");
    const Eigen::Index length = healthy.front().samples.size();
    RealVector mean = RealVector::Zero(length);
    for (const auto& s : healthy) {
        if (s.samples.size() != length) throw DataError("fit_binwise_standardizer: mixed signal lengths");
        detail::require_finite(s.samples, "fit_binwise_standardizer");
        mean += s.samples;
    }
    mean /= static_cast<double>(healthy.size());
    RealVector var = RealVector::Zero(length);
    for (const auto& s : healthy) var.array() += (s.samples - mean).array().square();
    var /= static_cast<double>(healthy.size());
    if (!(var.array() > 0.0).all()) throw NumericalError("fit_binwise_standardizer: zero variance bin");
    Standardizer out;
    out.mean = mean.mean();
    out.std = std::sqrt(var.mean());
    out.bin_mean = std::move(mean);
    out.bin_std = var.cwiseSqrt();
    return out;
}

inline void validate(const Standardizer& s) {
    if (!(s.std > 0.0) || !std::isfinite(s.mean)) throw ConfigError("standardizer: std must be > 0");
    if (s.per_bin() && (s.bin_std.size() != s.bin_mean.size() || !(s.bin_std.array() > 0.0).all()))
        throw ConfigError("standardizer: invalid per-bin statistics");
}

inline IFSignal standardize(const IFSignal& x, const Standardizer& s) {
    IFSignal out{x.samples, x.label, x.meta};
    if (s.per_bin()) {
        if (s.bin_mean.size() != x.samples.size()) throw DataError("standardize: length mismatch");
        out.samples = (x.samples - s.bin_mean).cwiseQuotient(s.bin_std);
    } else {
        out.samples = (x.samples.array() - s.mean) / s.std;
    }
    return out;
}

inline IFSignal unstandardize(const IFSignal& x, const Standardizer& s) {
    IFSignal out{x.samples, x.label, x.meta};
    if (s.per_bin()) {
        if (s.bin_mean.size() != x.samples.size()) throw DataError("unstandardize: length mismatch");
        out.samples = x.samples.cwiseProduct(s.bin_std) + s.bin_mean;
    } else {
        out.samples = x.samples.array() * s.std + s.mean;
    }
    return out;
}

/// Standardizes an analytic signal in place of its real source. The
/// analytic transform is linear and keeps the DC bin, so
/// analytic((x - m) / s) == (analytic(x) - m) / s for global statistics.
inline AnalyticSignal standardize(const AnalyticSignal& z, const Standardizer& s) {
    if (s.per_bin()) throw ConfigError("per-bin standardization of analytic input is not supported");
    AnalyticSignal out;
    out.samples = (z.samples.array() - Complex(s.mean, 0.0)) / s.std;
    return out;
}

/// Discrete analytic signal: DC (and the Nyquist bin for even lengths) kept,
/// strictly positive frequencies doubled, negative frequencies zeroed.
inline AnalyticSignal analytic(const RealVector& x) {
    const Eigen::Index n = x.size();
    if (n < 2) throw DataError("analytic: need at least 2 samples");
    detail::require_finite(x, "analytic");
    ComplexVector spectrum = fft::forward(x.cast<Complex>());
    const Eigen::Index half = (n - 1) / 2;  // strictly positive bins: 1..half
    for (Eigen::Index k = 1; k <= half; ++k) spectrum[k] *= 2.0;
    for (Eigen::Index k = n / 2 + 1; k < n; ++k) spectrum[k] = 0.0;
    AnalyticSignal out{fft::inverse(spectrum)};
    // The real part is x by construction; drop the transform's round-off.
    out.samples.real() = x;
    return out;
}

inline AnalyticSignal analytic(const IFSignal& x) { return analytic(x.samples); }

inline IFSignal instantaneous_amplitude(const AnalyticSignal& xh) {
    IFSignal out;
    out.samples = xh.samples.cwiseAbs();
    return out;
}

/// Standardized input vector in the requested representation. Real and
/// amplitude representations are real vectors; the analytic one is complex.
inline RealVector to_real_representation(const IFSignal& raw, const Standardizer& s, Representation r) {
    const IFSignal x = standardize(raw, s);
    switch (r) {
        case Representation::real: return x.samples;
        case Representation::amplitude: return instantaneous_amplitude(analytic(x)).samples;
        case Representation::analytic: break;
    }
    throw ConfigError("to_real_representation: analytic representation is complex");
}

inline ComplexVector to_analytic_representation(const IFSignal& raw, const Standardizer& s) {
    return analytic(standardize(raw, s)).samples;
}

}  // namespace fsvdd
