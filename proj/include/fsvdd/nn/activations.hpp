#pragma once

#include "fsvdd/error.hpp"
#include "fsvdd/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

namespace fsvdd::nn {

enum class Activation { linear, real_relu, crelu, modrelu, ead };

inline std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::real_relu: return "relu";
        case Activation::crelu: return "crelu";
        case Activation::modrelu: return "modrelu";
        case Activation::ead: return "ead";
    }
    return "linear";
}

inline Activation activation_from_string(std::string_view s) {
    if (s == "linear") return Activation::linear;
    if (s == "relu") return Activation::real_relu;
    if (s == "crelu") return Activation::crelu;
    if (s == "modrelu") return Activation::modrelu;
    if (s == "ead") return Activation::ead;
    throw ConfigError("unknown activation '" + std::string(s) + "'");
}

inline bool has_parameter(Activation a) { return a == Activation::modrelu || a == Activation::ead; }

/// Lower clamp applied to the raw EAD parameter.
inline constexpr double kEadMinB = 1e-6;

inline double effective_ead_b(double raw) { return std::max(raw, kEadMinB); }

// ---------------------------------------------------------------------------
// Scalar activations

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

inline Complex crelu(const Complex& z) { return {relu(z.real()), relu(z.imag())}; }

/// ReLU(|z| - b) e^{i arg z}.
template <Field T>
T modrelu(const T& z, double b) {
    const double m = std::abs(z);
    if (!(m > b) || m == 0.0) return T(0);
    return z * ((m - b) / m);
}

/// (1 - e^{-b |z|^2}) e^{i arg z}; b must already be positive.
template <Field T>
T ead(const T& z, double b) {
    const double m = std::abs(z);
    if (m == 0.0) return T(0);
    return z * (-std::expm1(-b * m * m) / m);
}

// Vector forms
inline ComplexVector crelu(const ComplexVector& z) { return z.unaryExpr([](const Complex& v) { return crelu(v); }); }

template <Field T>
Vector<T> modrelu(const Vector<T>& z, double b) {
    return z.unaryExpr([b](const T& v) { return modrelu(v, b); });
}

template <Field T>
Vector<T> ead(const Vector<T>& z, double b) {
    if (!(b > 0.0)) throw ConfigError("ead: b must be > 0");
    return z.unaryExpr([b](const T& v) { return ead(v, b); });
}

// ---------------------------------------------------------------------------
// Backward rules. Gradients of a real loss w.r.t. a complex quantity are
// carried as dL/dRe + i dL/dIm. For a real scalar type they are ordinary
// derivatives.

/// Gradient through an amplitude-only map y = A(|a|) a/|a|, given A/|a| and
/// dA/d|a| at the point.
template <Field T>
T amplitude_map_backward(const T& a, const T& g, double a_over_m, double a_prime) {
    const double m = std::abs(a);
    if (m == 0.0) return T(0);
    const T s = a / m;
    return a_over_m * g + (a_prime - a_over_m) * real_part(conj(g) * s) * s;
}

/// Applies activation `kind` elementwise. `b` is the effective parameter for
/// that element.
template <Field T>
T activate(Activation kind, const T& a, double b) {
    switch (kind) {
        case Activation::linear: return a;
        case Activation::real_relu:  // complex models reject real_relu at construction
        case Activation::crelu:
            if constexpr (is_complex_v<T>) {
                return crelu(a);
            } else {
                return relu(a);
            }
        case Activation::modrelu: return modrelu(a, b);
        case Activation::ead: return ead(a, b);
    }
    return a;
}

/// Backward pass for one element. Returns dL/da and accumulates dL/db into
/// `dparam` for parameterized activations.
template <Field T>
T activate_backward(Activation kind, const T& a, const T& g, double b, double& dparam) {
    switch (kind) {
        case Activation::linear: return g;
        case Activation::real_relu:
        case Activation::crelu:
            if constexpr (is_complex_v<T>) {
                return {a.real() > 0.0 ? g.real() : 0.0, a.imag() > 0.0 ? g.imag() : 0.0};
            } else {
                return a > 0.0 ? g : T(0);
            }
        case Activation::modrelu: {
            const double m = std::abs(a);
            if (!(m > b) || m == 0.0) return T(0);
            const T s = a / m;
            dparam -= real_part(conj(g) * s);
            return amplitude_map_backward(a, g, (m - b) / m, 1.0);
        }
        case Activation::ead: {
            const double m = std::abs(a);
            if (m == 0.0) return T(0);
            const double decay = std::exp(-b * m * m);
            const T s = a / m;
            dparam += real_part(conj(g) * s) * m * m * decay;
            return amplitude_map_backward(a, g, -std::expm1(-b * m * m) / m, 2.0 * b * m * decay);
        }
    }
    return g;
}

}  // namespace fsvdd::nn
