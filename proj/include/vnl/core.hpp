#pragma once
// Small value types shared by every module: 3-vectors, 4x4 component
// matrices, forward-mode dual numbers and the error hierarchy.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace vnl {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class CapabilityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Forward-mode dual number. Nesting Dual<Dual<double>> gives exact mixed
// second derivatives, which is how composed vector fields are applied.

template <class T>
struct Dual {
    T a{};  // value
    T b{};  // derivative along the seeded direction

    constexpr Dual() = default;
    constexpr Dual(T value, T deriv) : a(value), b(deriv) {}
    template <class U>
        requires std::is_arithmetic_v<U>
    constexpr Dual(U x) : a(static_cast<double>(x)), b(0.0) {}
};

template <class T> struct is_dual : std::false_type {};
template <class T> struct is_dual<Dual<T>> : std::true_type {};

template <class T>
constexpr double value_of(const T& x) {
    if constexpr (is_dual<T>::value) return value_of(x.a);
    else return static_cast<double>(x);
}

template <class T> constexpr Dual<T> operator+(const Dual<T>& x, const Dual<T>& y) { return {x.a + y.a, x.b + y.b}; }
template <class T> constexpr Dual<T> operator-(const Dual<T>& x, const Dual<T>& y) { return {x.a - y.a, x.b - y.b}; }
template <class T> constexpr Dual<T> operator-(const Dual<T>& x) { return {-x.a, -x.b}; }
template <class T> constexpr Dual<T> operator*(const Dual<T>& x, const Dual<T>& y) { return {x.a * y.a, x.a * y.b + x.b * y.a}; }
template <class T> constexpr Dual<T> operator/(const Dual<T>& x, const Dual<T>& y) {
    T inv = T(1.0) / y.a;
    return {x.a * inv, (x.b - x.a * y.b * inv) * inv};
}
template <class T> constexpr Dual<T> operator+(const Dual<T>& x, double s) { return {x.a + s, x.b}; }
template <class T> constexpr Dual<T> operator+(double s, const Dual<T>& x) { return {x.a + s, x.b}; }
template <class T> constexpr Dual<T> operator-(const Dual<T>& x, double s) { return {x.a - s, x.b}; }
template <class T> constexpr Dual<T> operator-(double s, const Dual<T>& x) { return {s - x.a, -x.b}; }
template <class T> constexpr Dual<T> operator*(const Dual<T>& x, double s) { return {x.a * s, x.b * s}; }
template <class T> constexpr Dual<T> operator*(double s, const Dual<T>& x) { return {x.a * s, x.b * s}; }
template <class T> constexpr Dual<T> operator/(const Dual<T>& x, double s) { return {x.a / s, x.b / s}; }
template <class T> constexpr Dual<T> operator/(double s, const Dual<T>& x) { return Dual<T>(T(s), T(0.0)) / x; }
template <class T> constexpr Dual<T>& operator+=(Dual<T>& x, const Dual<T>& y) { return x = x + y; }
template <class T> constexpr Dual<T>& operator-=(Dual<T>& x, const Dual<T>& y) { return x = x - y; }
template <class T> constexpr Dual<T>& operator*=(Dual<T>& x, const Dual<T>& y) { return x = x * y; }
template <class T> constexpr Dual<T>& operator+=(Dual<T>& x, double y) { return x = x + y; }
template <class T> constexpr Dual<T>& operator*=(Dual<T>& x, double y) { return x = x * y; }
template <class T> constexpr Dual<T>& operator/=(Dual<T>& x, double y) { return x = x / y; }

template <class T> constexpr bool operator<(const Dual<T>& x, const Dual<T>& y) { return value_of(x) < value_of(y); }
template <class T> constexpr bool operator>(const Dual<T>& x, const Dual<T>& y) { return value_of(x) > value_of(y); }
template <class T> constexpr bool operator<(const Dual<T>& x, double y) { return value_of(x) < y; }
template <class T> constexpr bool operator>(const Dual<T>& x, double y) { return value_of(x) > y; }
template <class T> constexpr bool operator<=(const Dual<T>& x, double y) { return value_of(x) <= y; }
template <class T> constexpr bool operator>=(const Dual<T>& x, double y) { return value_of(x) >= y; }

// Elementary functions. The double overloads live in this namespace too so
// that generic code can call them unqualified for every scalar type.
inline double sqrt(double x) { return std::sqrt(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double atan(double x) { return std::atan(x); }
inline double tanh(double x) { return std::tanh(x); }

template <class T> Dual<T> sqrt(const Dual<T>& x) {
    T s = sqrt(x.a);
    return {s, x.b / (2.0 * s)};
}
template <class T> Dual<T> exp(const Dual<T>& x) {
    T e = exp(x.a);
    return {e, e * x.b};
}
template <class T> Dual<T> log(const Dual<T>& x) { return {log(x.a), x.b / x.a}; }
template <class T> Dual<T> sin(const Dual<T>& x) { return {sin(x.a), cos(x.a) * x.b}; }
template <class T> Dual<T> cos(const Dual<T>& x) { return {cos(x.a), -sin(x.a) * x.b}; }
template <class T> Dual<T> atan(const Dual<T>& x) { return {atan(x.a), x.b / (1.0 + x.a * x.a)}; }
template <class T> Dual<T> tanh(const Dual<T>& x) {
    T th = tanh(x.a);
    return {th, (1.0 - th * th) * x.b};
}

template <class T>
T ipow(const T& x, int n) {
    T r(1.0);
    for (int i = 0; i < n; ++i) r = r * x;
    return r;
}

// ---------------------------------------------------------------------------

template <class T>
struct Vec3T {
    std::array<T, 3> c{};

    constexpr T& operator[](std::size_t i) { return c[i]; }
    constexpr const T& operator[](std::size_t i) const { return c[i]; }
    bool operator==(const Vec3T&) const = default;
};

using Vec3 = Vec3T<double>;

template <class T> constexpr Vec3T<T> operator+(const Vec3T<T>& a, const Vec3T<T>& b) { return {{a[0] + b[0], a[1] + b[1], a[2] + b[2]}}; }
template <class T> constexpr Vec3T<T> operator-(const Vec3T<T>& a, const Vec3T<T>& b) { return {{a[0] - b[0], a[1] - b[1], a[2] - b[2]}}; }
template <class T> constexpr Vec3T<T> operator-(const Vec3T<T>& a) { return {{-a[0], -a[1], -a[2]}}; }
template <class T> constexpr Vec3T<T> operator*(const Vec3T<T>& a, const T& s) { return {{a[0] * s, a[1] * s, a[2] * s}}; }
template <class T> constexpr Vec3T<T> operator*(const T& s, const Vec3T<T>& a) { return a * s; }
template <class T> constexpr Vec3T<T> operator/(const Vec3T<T>& a, const T& s) { return {{a[0] / s, a[1] / s, a[2] / s}}; }
template <class T> requires is_dual<T>::value
constexpr Vec3T<T> operator*(const Vec3T<T>& a, double s) { return {{a[0] * s, a[1] * s, a[2] * s}}; }
template <class T> requires is_dual<T>::value
constexpr Vec3T<T> operator*(double s, const Vec3T<T>& a) { return a * s; }
template <class T> constexpr Vec3T<T>& operator+=(Vec3T<T>& a, const Vec3T<T>& b) { return a = a + b; }
template <class T> constexpr Vec3T<T>& operator-=(Vec3T<T>& a, const Vec3T<T>& b) { return a = a - b; }

template <class T> constexpr T dot(const Vec3T<T>& a, const Vec3T<T>& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
template <class T> constexpr Vec3T<T> cross(const Vec3T<T>& a, const Vec3T<T>& b) {
    return {{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]}};
}
template <class T> T norm(const Vec3T<T>& a) { return sqrt(dot(a, a)); }

template <class T, class U>
Vec3T<T> vec_cast(const Vec3T<U>& a) { return {{T(a[0]), T(a[1]), T(a[2])}}; }

inline Vec3 value_of(const Vec3 & a) { return a; }
template <class T> Vec3 values_of(const Vec3T<T>& a) { return {{value_of(a[0]), value_of(a[1]), value_of(a[2])}}; }

template <class T> using Vec4T = std::array<T, 4>;
using Vec4 = Vec4T<double>;
template <class T> using Mat4T = std::array<std::array<T, 4>, 4>;
using Mat4 = Mat4T<double>;

// Minkowski metric diag(-1, 1, 1, 1); raising and lowering are sign flips on
// the time index.
constexpr double eta(int mu, int nu) { return mu != nu ? 0.0 : (mu == 0 ? -1.0 : 1.0); }
constexpr double eta_diag(int mu) { return mu == 0 ? -1.0 : 1.0; }

// Totally antisymmetric symbol with eps(0,1,2,3) = +1, computed by counting
// inversions so it doubles as an oracle for hand-written contractions.
constexpr int levi_civita4(int a, int b, int c, int d) {
    const int p[4] = {a, b, c, d};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (p[i] == p[j]) return 0;
    int inv = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (p[i] > p[j]) ++inv;
    return inv % 2 == 0 ? 1 : -1;
}

constexpr int levi_civita3(int i, int j, int k) { return levi_civita4(0, i + 1, j + 1, k + 1); }

constexpr double pi = 3.14159265358979323846;

}  // namespace vnl
