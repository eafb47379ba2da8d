#ifndef VISCO2D_DUAL_HPP
#define VISCO2D_DUAL_HPP

#include <array>
#include <cstddef>

namespace visco2d {

// Forward-mode derivative scalar with N seed directions. Used by the
// nonlinear assemblers to obtain element Jacobians alongside residuals.
template <int N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}

    static Dual seeded(double value, int slot) {
        Dual x(value);
        x.d[slot] = 1.0;
        return x;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (int i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (int i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(double s) {
        v *= s;
        for (int i = 0; i < N; ++i) d[i] *= s;
        return *this;
    }
};

template <int N>
inline Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N>
inline Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N>
inline Dual<N> operator-(const Dual<N>& a) {
    Dual<N> r;
    r.v = -a.v;
    for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
}
template <int N>
inline Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> r;
    r.v = a.v * b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.v * b.d[i] + b.v * a.d[i];
    return r;
}
template <int N>
inline Dual<N> operator*(Dual<N> a, double s) { return a *= s; }
template <int N>
inline Dual<N> operator*(double s, Dual<N> a) { return a *= s; }
template <int N>
inline Dual<N> operator+(Dual<N> a, double s) { a.v += s; return a; }
template <int N>
inline Dual<N> operator+(double s, Dual<N> a) { a.v += s; return a; }
template <int N>
inline Dual<N> operator-(Dual<N> a, double s) { a.v -= s; return a; }
template <int N>
inline Dual<N> operator-(double s, const Dual<N>& a) { return -a + s; }

inline double value_of(double x) { return x; }
template <int N>
inline double value_of(const Dual<N>& x) { return x.v; }

}  // namespace visco2d

#endif
