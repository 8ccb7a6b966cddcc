#pragma once

// First-order forward-mode jets. Nesting Dual<Dual<...>> gives exact higher
// directional derivatives, which is what nested Lie brackets need.

#include <cmath>
#include <type_traits>

namespace pdmpcert::jet {

template <class T>
struct Dual {
    T v{};  // value
    T d{};  // derivative along the seeded direction

    constexpr Dual() = default;
    constexpr Dual(double value) : v(value), d(0.0) {}  // NOLINT: implicit lift of constants
    constexpr Dual(T value, T deriv) : v(value), d(deriv) {}

    Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
    Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
    Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
    Dual& operator/=(const Dual& o) {
        T inv = T(1.0) / o.v;
        d = (d - v * inv * o.d) * inv;
        v *= inv;
        return *this;
    }
};

template <class T> struct is_dual : std::false_type {};
template <class T> struct is_dual<Dual<T>> : std::true_type {};

/// Jet<0> = double, Jet<k> = Dual<Jet<k-1>>.
template <int Level> struct JetOf { using type = Dual<typename JetOf<Level - 1>::type>; };
template <> struct JetOf<0> { using type = double; };
template <int Level> using Jet = typename JetOf<Level>::type;

template <class T> struct jet_level : std::integral_constant<int, 0> {};
template <class T> struct jet_level<Dual<T>> : std::integral_constant<int, 1 + jet_level<T>::value> {};

inline double primal(double x) { return x; }
template <class T> double primal(const Dual<T>& x) { return primal(x.v); }

template <class T> Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <class T> Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <class T> Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <class T> Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator+(const Dual<T>& a) { return a; }

template <class T> Dual<T> operator+(Dual<T> a, double b) { a.v += b; return a; }
template <class T> Dual<T> operator+(double b, Dual<T> a) { a.v += b; return a; }
template <class T> Dual<T> operator-(Dual<T> a, double b) { a.v -= b; return a; }
template <class T> Dual<T> operator-(double b, const Dual<T>& a) { return {b - a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, double b) { return {a.v * b, a.d * b}; }
template <class T> Dual<T> operator*(double b, const Dual<T>& a) { return {a.v * b, a.d * b}; }
template <class T> Dual<T> operator/(const Dual<T>& a, double b) { return {a.v / b, a.d / b}; }
template <class T> Dual<T> operator/(double b, const Dual<T>& a) { return Dual<T>(b) / a; }

template <class T> bool operator<(const Dual<T>& a, double b) { return primal(a) < b; }
template <class T> bool operator>(const Dual<T>& a, double b) { return primal(a) > b; }
template <class T> bool operator<=(const Dual<T>& a, double b) { return primal(a) <= b; }
template <class T> bool operator>=(const Dual<T>& a, double b) { return primal(a) >= b; }

inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }

template <class T> Dual<T> sin(const Dual<T>& x) { return {sin(x.v), cos(x.v) * x.d}; }
template <class T> Dual<T> cos(const Dual<T>& x) { return {cos(x.v), -sin(x.v) * x.d}; }
template <class T> Dual<T> exp(const Dual<T>& x) {
    T e = exp(x.v);
    return {e, e * x.d};
}
template <class T> Dual<T> log(const Dual<T>& x) { return {log(x.v), x.d / x.v}; }
template <class T> Dual<T> sqrt(const Dual<T>& x) {
    T s = sqrt(x.v);
    return {s, x.d / (2.0 * s)};
}

/// Seeds a first-order variable: value x, derivative direction dx.
template <class T> Dual<T> variable(const T& x, const T& dx) { return {x, dx}; }

}  // namespace pdmpcert::jet
