#ifndef VISCO2D_QUADRATURE_HPP
#define VISCO2D_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace visco2d {

// All assembly and norm evaluation uses this single exactness degree; the
// worst integrand in the codebase (SUPG-weighted trilinear P2 terms) is
// near degree 7.
inline constexpr int kAssemblyQuadDegree = 6;

struct QuadPoint {
    // barycentric coordinates (l0, l1, l2), l0 + l1 + l2 = 1
    std::array<double, 3> bary;
    double weight;  // reference-triangle weight; weights sum to 1/2
};

struct QuadratureRule {
    int degree = 0;
    std::vector<QuadPoint> points;
};

namespace detail {

// Gauss-Legendre nodes/weights on [0,1] via Newton on P_n.
inline void gauss_legendre_01(int n, std::vector<double>& x,
                              std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        // Chebyshev initial guess on [-1,1]
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p0, p1, dp;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-16) break;
        }
        p0 = 1.0;
        p1 = t;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = 0.5 * (1.0 + t);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
}

}  // namespace detail

// Rule of given exactness degree on the reference triangle, built from a
// tensor Gauss rule through the Duffy map x = s, y = t (1 - s).  The
// (1 - s) Jacobian raises the s-degree by one, hence the +2.
inline QuadratureRule triangle_rule(int degree) {
    if (degree < 0) throw std::invalid_argument("quadrature degree < 0");
    const int n = (degree + 3) / 2;  // ceil((degree + 2) / 2)
    std::vector<double> gx, gw;
    detail::gauss_legendre_01(n, gx, gw);
    QuadratureRule rule;
    rule.degree = degree;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double s = gx[i];
            const double t = gx[j];
            const double x = s;
            const double y = t * (1.0 - s);
            const double w = gw[i] * gw[j] * (1.0 - s);
            rule.points.push_back({{1.0 - x - y, x, y}, w});
        }
    }
    return rule;
}

}  // namespace visco2d

#endif
