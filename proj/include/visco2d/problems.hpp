#ifndef VISCO2D_PROBLEMS_HPP
#define VISCO2D_PROBLEMS_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include "visco2d/solvers.hpp"

namespace visco2d {

enum class Geometry { unit_square, eccentric_annulus };

// Journal-bearing geometry is fixed.
inline constexpr double kBearingOuterRadius = 1.0;
inline constexpr double kBearingInnerRadius = 0.5;
inline constexpr double kBearingEccentricity = 0.25;

struct ProblemSpec {
    std::string name;
    Geometry geometry = Geometry::unit_square;
    BoundaryData dirichlet;
    VectorField body_force;  // empty means zero
    double U = 1.0;
    double wi_factor = 1.0;  // Wi = wi_factor * lambda1

    double wi_of(double lambda1) const { return wi_factor * lambda1; }
    double re_of(double eta0) const { return wi_factor * U / eta0; }
};

// Regularized-lid cavity: the lid profile vanishes at the corners and
// peaks at U in the middle; Wi = lambda1 U.
inline ProblemSpec lid_driven_cavity(double U) {
    if (U <= 0.0) throw std::invalid_argument("lid_driven_cavity: U <= 0");
    ProblemSpec p;
    p.name = "ldc";
    p.geometry = Geometry::unit_square;
    p.U = U;
    p.wi_factor = U;
    p.dirichlet = {
        {BoundaryTag::square_top,
         [U](const Vec2& x) {
             const double s = x.x * (1.0 - x.x);
             return Vec2{16.0 * U * s * s, 0.0};
         }},
        {BoundaryTag::square_walls_floor,
         [](const Vec2&) { return Vec2{0.0, 0.0}; }}};
    return p;
}

// Eccentric rotating-journal problem: the inner circle spins at angular
// speed omega = U / r (boundary speed U), the outer circle is fixed;
// Wi = lambda1 omega = 2 lambda1 U.
inline ProblemSpec journal_bearing(double U) {
    if (U <= 0.0) throw std::invalid_argument("journal_bearing: U <= 0");
    ProblemSpec p;
    p.name = "jb";
    p.geometry = Geometry::eccentric_annulus;
    p.U = U;
    p.wi_factor = 2.0 * U;
    const double omega = U / kBearingInnerRadius;
    const double cy = kBearingEccentricity;
    p.dirichlet = {
        {BoundaryTag::annulus_inner,
         [omega, cy](const Vec2& x) {
             return Vec2{-omega * (x.y - cy), omega * x.x};
         }},
        {BoundaryTag::annulus_outer,
         [](const Vec2&) { return Vec2{0.0, 0.0}; }}};
    return p;
}

// Manufactured Navier-Stokes flow on the unit square, built from the
// stream function psi = sin^2(pi x) sin^2(pi y) (divergence-free, zero
// boundary data) with p = sin(pi x) cos(pi y) (zero mean).
inline Vec2 manufactured_velocity(const Vec2& v) {
    const double sx = std::sin(M_PI * v.x), cx = std::cos(M_PI * v.x);
    const double sy = std::sin(M_PI * v.y), cy = std::cos(M_PI * v.y);
    return {2.0 * M_PI * sx * sx * sy * cy, -2.0 * M_PI * sx * sy * sy * cx};
}

inline double manufactured_pressure(const Vec2& v) {
    return std::sin(M_PI * v.x) * std::cos(M_PI * v.y);
}

inline VectorField manufactured_forcing(double eta0) {
    return [eta0](const Vec2& v) {
        const double pi = M_PI;
        const double sx = std::sin(pi * v.x), cx = std::cos(pi * v.x);
        const double sy = std::sin(pi * v.y), cy = std::cos(pi * v.y);
        const double pi2 = pi * pi;
        const double fx =
            pi * (16.0 * pi2 * eta0 * sx * sx * sy * cy -
                  2.0 * pi2 * eta0 * std::sin(2.0 * pi * v.y) +
                  4.0 * pi2 * sx * sx * sx * sy * sy * cx + cx * cy);
        const double fy =
            pi * sx *
            (-16.0 * pi2 * eta0 * sy * sy * cx + 4.0 * pi2 * eta0 * cx +
             4.0 * pi2 * sx * sy * sy * sy * cy - sy);
        return Vec2{fx, fy};
    };
}

inline ProblemSpec manufactured_nse_problem(double eta0) {
    ProblemSpec p;
    p.name = "manufactured";
    p.geometry = Geometry::unit_square;
    p.U = 1.0;
    p.wi_factor = 1.0;
    p.body_force = manufactured_forcing(eta0);
    p.dirichlet = {
        {BoundaryTag::square_top, [](const Vec2&) { return Vec2{0.0, 0.0}; }},
        {BoundaryTag::square_walls_floor,
         [](const Vec2&) { return Vec2{0.0, 0.0}; }}};
    return p;
}

// Mesh for a problem at characteristic size h (unit square: n = round(
// sqrt(2)/h) crossed grid so the cell diameter matches h).
inline Mesh problem_mesh(const ProblemSpec& p, double h) {
    if (p.geometry == Geometry::unit_square) {
        const int n = std::max(1, (int)std::lround(std::sqrt(2.0) / h));
        return unit_square_mesh(n);
    }
    return eccentric_annulus_mesh(kBearingOuterRadius, kBearingInnerRadius,
                                  kBearingEccentricity, h);
}

// Largest deviation of g.n from zero over all boundary quadrature
// points; both benchmark problems keep this at machine precision.  The
// normal is the analytic one of the tagged boundary curve (radial for
// the annulus circles), not the chord normal of the polygonal edge.
inline double max_normal_boundary_data(const ProblemSpec& p, const Mesh& m) {
    const int nq = 5;
    double worst = 0.0;
    for (int e = 0; e < m.n_edges(); ++e) {
        const BoundaryTag tag = m.boundary_tags[e];
        if (tag == BoundaryTag::interior) continue;
        const VectorField* g = nullptr;
        for (const auto& [t, fn] : p.dirichlet)
            if (t == tag) g = &fn;
        if (!g) continue;
        const Vec2 a = m.vertices[m.edges[e][0]];
        const Vec2 b = m.vertices[m.edges[e][1]];
        for (int q = 0; q < nq; ++q) {
            const double t = (q + 0.5) / nq;
            const Vec2 x{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
            Vec2 n;
            if (tag == BoundaryTag::annulus_inner ||
                tag == BoundaryTag::annulus_outer) {
                const double cy =
                    tag == BoundaryTag::annulus_inner ? kBearingEccentricity : 0.0;
                const double len = std::hypot(x.x, x.y - cy);
                n = {x.x / len, (x.y - cy) / len};
            } else {
                const double len = std::hypot(b.x - a.x, b.y - a.y);
                n = {(b.y - a.y) / len, -(b.x - a.x) / len};
            }
            const Vec2 v = (*g)(x);
            worst = std::max(worst, std::abs(v.x * n.x + v.y * n.y));
        }
    }
    return worst;
}

}  // namespace visco2d

#endif
