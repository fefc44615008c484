#pragma once

#include <Eigen/Dense>

#include <complex>
#include <type_traits>

namespace fsvdd {

using Complex = std::complex<double>;

template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using RealVector = Vector<double>;
using ComplexVector = Vector<Complex>;

template <class T>
inline constexpr bool is_complex_v = false;
template <class R>
inline constexpr bool is_complex_v<std::complex<R>> = true;

/// Scalar types the numeric templates are instantiated with.
template <class T>
concept Field = std::is_same_v<T, double> || std::is_same_v<T, Complex>;

inline double real_part(double v) { return v; }
inline double real_part(const Complex& v) { return v.real(); }
inline double conj(double v) { return v; }
inline Complex conj(const Complex& v) { return std::conj(v); }

/// Number of real degrees of freedom carried by one scalar.
template <Field T>
inline constexpr int real_dof = is_complex_v<T> ? 2 : 1;

}  // namespace fsvdd
