#ifndef VISCO2D_TENSOR_HPP
#define VISCO2D_TENSOR_HPP

#include <array>
#include <cmath>

namespace visco2d {

// Small fixed-size vector/matrix helpers templated on the scalar so the
// same kernels serve plain evaluation and dual-number differentiation.

template <typename S>
struct Vec2T {
    S x{}, y{};
};

// Row-major 2x2; a(i,j) = rows[i][j].
template <typename S>
struct Mat2T {
    std::array<std::array<S, 2>, 2> a{};

    S& operator()(int i, int j) { return a[i][j]; }
    const S& operator()(int i, int j) const { return a[i][j]; }
};

using Vec2 = Vec2T<double>;
using Mat2 = Mat2T<double>;

template <typename S>
inline Mat2T<S> operator+(const Mat2T<S>& A, const Mat2T<S>& B) {
    Mat2T<S> r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = A(i, j) + B(i, j);
    return r;
}

template <typename S>
inline Mat2T<S> operator-(const Mat2T<S>& A, const Mat2T<S>& B) {
    Mat2T<S> r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = A(i, j) - B(i, j);
    return r;
}

template <typename S, typename T>
inline auto scale(const Mat2T<S>& A, const T& s) {
    using R = decltype(A(0, 0) * s);
    Mat2T<R> r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = A(i, j) * s;
    return r;
}

template <typename S>
inline Mat2T<S> matmul(const Mat2T<S>& A, const Mat2T<S>& B) {
    Mat2T<S> r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            r(i, j) = A(i, 0) * B(0, j) + A(i, 1) * B(1, j);
    return r;
}

template <typename S>
inline Mat2T<S> transpose(const Mat2T<S>& A) {
    Mat2T<S> r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = A(j, i);
    return r;
}

// Full contraction A:B = A_ij B_ij.
template <typename S>
inline S contract(const Mat2T<S>& A, const Mat2T<S>& B) {
    return A(0, 0) * B(0, 0) + A(0, 1) * B(0, 1) + A(1, 0) * B(1, 0) +
           A(1, 1) * B(1, 1);
}

// B.v for matrix B, vector v.
template <typename S>
inline Vec2T<S> matvec(const Mat2T<S>& B, const Vec2T<S>& v) {
    return {B(0, 0) * v.x + B(0, 1) * v.y, B(1, 0) * v.x + B(1, 1) * v.y};
}

// Rate of deformation D(u) = (grad u + grad u^t) / 2.
template <typename S>
inline Mat2T<S> deformation(const Mat2T<S>& grad_u) {
    Mat2T<S> r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            r(i, j) = (grad_u(i, j) + grad_u(j, i)) * 0.5;
    return r;
}

// Spin W(u) = (grad u^t - grad u) / 2.  With this sign, grad u = D - W.
template <typename S>
inline Mat2T<S> spin(const Mat2T<S>& grad_u) {
    Mat2T<S> r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            r(i, j) = (grad_u(j, i) - grad_u(i, j)) * 0.5;
    return r;
}

struct ModelParams {
    double eta0 = 1.0;    // kinematic viscosity
    double lambda1 = 0.0; // relaxation time
    double mu1 = 0.0;     // slip-scaled parameter, mu1 = a*lambda1

    bool valid() const {
        return eta0 > 0.0 && lambda1 >= 0.0 &&
               std::abs(mu1) <= lambda1 + 1e-14;
    }
};

inline ModelParams ucm_params(double eta0, double lambda1) {
    return {eta0, lambda1, lambda1};
}
inline ModelParams corotational_params(double eta0, double lambda1) {
    return {eta0, lambda1, 0.0};
}

// Steady left side of the 3-parameter constitutive law at a point:
//   T + lambda1 (adv_T + W.T - T.W) - mu1 (D.T + T.D)
// where adv_T = u.grad T is supplied from quadrature-point gradients.
template <typename S>
inline Mat2T<S> o3_constitutive_lhs(const Mat2T<S>& adv_T,
                                    const Mat2T<S>& grad_u,
                                    const Mat2T<S>& T,
                                    const ModelParams& p) {
    const Mat2T<S> D = deformation(grad_u);
    const Mat2T<S> W = spin(grad_u);
    const Mat2T<S> rot = matmul(W, T) - matmul(T, W);
    const Mat2T<S> str = matmul(D, T) + matmul(T, D);
    return T + scale(adv_T + rot, S(p.lambda1)) - scale(str, S(p.mu1));
}

}  // namespace visco2d

#endif
