#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of them call into the library code they check.

#include "fsvdd/types.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using fsvdd::Complex;

/// Periodic discrete Hilbert transform by direct convolution:
/// H[x](t) = sum_j h[j] x(t - j), h[j] = (2/L) sum_{k=1}^{floor((L-1)/2)} sin(2 pi k j / L).
/// O(L^2), independent of any FFT.
inline std::vector<double> hilbert_direct(const std::vector<double>& x) {
    const auto n = static_cast<long>(x.size());
    std::vector<double> h(x.size(), 0.0);
    const long kmax = (n - 1) / 2;
    for (long j = 0; j < n; ++j) {
        double s = 0.0;
        for (long k = 1; k <= kmax; ++k) s += std::sin(2.0 * std::numbers::pi * static_cast<double>(k * j % n) / static_cast<double>(n));
        h[static_cast<size_t>(j)] = 2.0 * s / static_cast<double>(n);
    }
    std::vector<double> out(x.size(), 0.0);
    for (long t = 0; t < n; ++t) {
        double s = 0.0;
        for (long j = 0; j < n; ++j) s += h[static_cast<size_t>(j)] * x[static_cast<size_t>(((t - j) % n + n) % n)];
        out[static_cast<size_t>(t)] = s;
    }
    return out;
}

/// Naive O(L^2) DFT, X[k] = sum_t z(t) e^{-2 pi i k t / L}.
inline std::vector<Complex> dft(const std::vector<Complex>& z) {
    const auto n = z.size();
    std::vector<Complex> twiddle(n);
    for (size_t j = 0; j < n; ++j) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        twiddle[j] = Complex(std::cos(ang), std::sin(ang));
    }
    std::vector<Complex> out(n);
    for (size_t k = 0; k < n; ++k) {
        Complex s = 0.0;
        for (size_t t = 0, j = 0; t < n; ++t, j = (j + k) % n) s += z[t] * twiddle[j];
        out[k] = s;
    }
    return out;
}

/// Minimum of a' K a over the simplex {a >= 0, sum a = 1, a <= cap} by
/// enumerating every point of the grid with spacing `step`. The quadratic
/// form is accumulated coordinate by coordinate along the enumeration.
inline double simplex_grid_minimum(const std::vector<std::vector<double>>& K, double step, double cap = 1.0) {
    const size_t n = K.size();
    const int units = static_cast<int>(std::lround(1.0 / step));
    std::vector<double> a(n, 0.0);
    double best = std::numeric_limits<double>::infinity();
    // partial = a' K a restricted to the first i coordinates.
    std::function<void(size_t, int, double)> rec = [&](size_t i, int left, double partial) {
        double cross = 0.0;
        for (size_t p = 0; p < i; ++p) cross += a[p] * K[p][i];
        const auto value = [&](double ai) { return partial + ai * ai * K[i][i] + 2.0 * ai * cross; };
        if (i + 1 == n) {
            const double ai = static_cast<double>(left) * step;
            if (ai > cap + 1e-12) return;
            best = std::min(best, value(ai));
            return;
        }
        for (int u = 0; u <= left; ++u) {
            a[i] = static_cast<double>(u) * step;
            if (a[i] > cap + 1e-12) break;
            rec(i + 1, left - u, value(a[i]));
        }
        a[i] = 0.0;
    };
    rec(0, units, 0.0);
    return best;
}

struct Confusion {
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion confusion(const std::vector<int>& y, const std::vector<int>& p) {
    Confusion c;
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1 && p[i] == 1) ++c.tp;
        if (y[i] == 0 && p[i] == 1) ++c.fp;
        if (y[i] == 0 && p[i] == 0) ++c.tn;
        if (y[i] == 1 && p[i] == 0) ++c.fn;
    }
    return c;
}

/// AUC as the fraction of (positive, negative) pairs ordered correctly,
/// ties counting one half. O(n^2).
inline double auc_pairs(const std::vector<int>& y, const std::vector<double>& s) {
    double good = 0.0, pairs = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 1) continue;
        for (size_t j = 0; j < y.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1.0;
            if (s[i] > s[j]) good += 1.0;
            else if (s[i] == s[j]) good += 0.5;
        }
    }
    return good / pairs;
}

/// Rayleigh draw with density 2 omega r exp(-omega r^2), by inversion.
template <class Rng>
double rayleigh(Rng& rng, double omega) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double v = u(rng);
    while (v <= 0.0) v = u(rng);
    return std::sqrt(-std::log(v) / omega);
}

/// Sample mean, variance, skewness, kurtosis (population moments) and the
/// standard error of each, estimated from the empirical influence function
/// (delta method).
struct Moments {
    double mean, var, skew, kurt;
    double se_mean, se_var, se_skew, se_kurt;
};

inline Moments moments(const std::vector<double>& xs) {
    const auto n = static_cast<double>(xs.size());
    long double s = 0.0L;
    for (double x : xs) s += x;
    const double mean = static_cast<double>(s / n);
    long double m2 = 0, m3 = 0, m4 = 0;
    for (double x : xs) {
        const long double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    Moments m{};
    m.mean = mean;
    m.var = static_cast<double>(m2 / n);
    const double sd = std::sqrt(m.var);
    m.skew = static_cast<double>(m3 / n) / (m.var * sd);
    m.kurt = static_cast<double>(m4 / n) / (m.var * m.var);
    long double v_mean = 0, v_var = 0, v_skew = 0, v_kurt = 0;
    for (double x : xs) {
        const double d = x - mean, z = d / sd;
        const double if_var = d * d - m.var;
        const double if_skew = (z * z * z - m.skew - 3.0 * z) - 1.5 * m.skew * (z * z - 1.0);
        const double if_kurt = (z * z * z * z - m.kurt - 4.0 * m.skew * z) - 2.0 * m.kurt * (z * z - 1.0);
        v_mean += d * d;
        v_var += if_var * if_var;
        v_skew += if_skew * if_skew;
        v_kurt += if_kurt * if_kurt;
    }
    m.se_mean = std::sqrt(static_cast<double>(v_mean / n) / n);
    m.se_var = std::sqrt(static_cast<double>(v_var / n) / n);
    m.se_skew = std::sqrt(static_cast<double>(v_skew / n) / n);
    m.se_kurt = std::sqrt(static_cast<double>(v_kurt / n) / n);
    return m;
}

}  // namespace oracle
