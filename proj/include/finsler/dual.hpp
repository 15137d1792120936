#pragma once

// Nested dual numbers for forward-mode differentiation.  A Dual<T> carries a
// value and one directional derivative; nesting Dual<Dual<...>> yields exact
// mixed partials of any order without step-size tuning.

#include <cmath>
#include <ostream>
#include <type_traits>

namespace finsler {

template <class T>
struct Dual {
    T re{};
    T du{};

    constexpr Dual() = default;
    constexpr Dual(double r) : re(r), du() {}  // constants have zero derivative
    constexpr Dual(T r) requires(!std::is_same_v<T, double>) : re(std::move(r)), du() {}
    constexpr Dual(T r, T d) : re(std::move(r)), du(std::move(d)) {}

    Dual& operator+=(const Dual& o) { re = re + o.re; du = du + o.du; return *this; }
    Dual& operator-=(const Dual& o) { re = re - o.re; du = du - o.du; return *this; }
    Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
    Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

    friend Dual operator+(const Dual& a, const Dual& b) { return {a.re + b.re, a.du + b.du}; }
    friend Dual operator-(const Dual& a, const Dual& b) { return {a.re - b.re, a.du - b.du}; }
    friend Dual operator-(const Dual& a) { return {-a.re, -a.du}; }
    friend Dual operator+(const Dual& a) { return a; }
    friend Dual operator*(const Dual& a, const Dual& b)
    { return {a.re * b.re, a.re * b.du + a.du * b.re}; }
    friend Dual operator/(const Dual& a, const Dual& b)
    {
        T inv = T(1.0) / b.re;
        T q = a.re * inv;
        return {q, (a.du - q * b.du) * inv};
    }

    friend Dual operator+(const Dual& a, double b) { return {a.re + b, a.du}; }
    friend Dual operator+(double a, const Dual& b) { return {a + b.re, b.du}; }
    friend Dual operator-(const Dual& a, double b) { return {a.re - b, a.du}; }
    friend Dual operator-(double a, const Dual& b) { return {a - b.re, -b.du}; }
    friend Dual operator*(const Dual& a, double b) { return {a.re * b, a.du * b}; }
    friend Dual operator*(double a, const Dual& b) { return {a * b.re, a * b.du}; }
    friend Dual operator/(const Dual& a, double b) { return {a.re / b, a.du / b}; }
    friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
};

// Recursive extraction of the underlying value, used for branching and pivoting.
inline double real_of(double x) { return x; }
template <class T> double real_of(const Dual<T>& x) { return real_of(x.re); }

template <class T> bool isfinite_deep(const T& x);
inline bool isfinite_deep(double x) { return std::isfinite(x); }
template <class T> bool isfinite_deep(const Dual<T>& x)
{ return isfinite_deep(x.re) && isfinite_deep(x.du); }

using std::sin; using std::cos; using std::sqrt; using std::exp;
using std::log; using std::pow; using std::tan;

template <class T> Dual<T> sin(const Dual<T>& a) { return {sin(a.re), cos(a.re) * a.du}; }
template <class T> Dual<T> cos(const Dual<T>& a) { return {cos(a.re), -(sin(a.re) * a.du)}; }
template <class T> Dual<T> tan(const Dual<T>& a)
{ T c = cos(a.re); return {tan(a.re), a.du / (c * c)}; }
template <class T> Dual<T> exp(const Dual<T>& a) { T e = exp(a.re); return {e, e * a.du}; }
template <class T> Dual<T> log(const Dual<T>& a) { return {log(a.re), a.du / a.re}; }
template <class T> Dual<T> sqrt(const Dual<T>& a)
{ T s = sqrt(a.re); return {s, a.du / (2.0 * s)}; }
template <class T> Dual<T> pow(const Dual<T>& a, double p)
{ return {pow(a.re, p), p * pow(a.re, p - 1.0) * a.du}; }

template <class T>
std::ostream& operator<<(std::ostream& o, const Dual<T>& a)
{ return o << '(' << a.re << ';' << a.du << ')'; }

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;
using D4 = Dual<D3>;
using D5 = Dual<D4>;
using D6 = Dual<D5>;

// Lift a scalar one dual level with the given seed.
template <class S> Dual<S> lift(const S& value, double seed)
{ return Dual<S>(value, S(seed)); }

template <class S> struct dual_depth { static constexpr int value = 0; };
template <class T> struct dual_depth<Dual<T>>
{ static constexpr int value = 1 + dual_depth<T>::value; };

}  // namespace finsler
