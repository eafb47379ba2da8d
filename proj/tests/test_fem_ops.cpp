#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "visco2d/fem_ops.hpp"

using namespace visco2d;

namespace {

FEFunction interpolate(const FunctionSpace& s,
                       const std::function<double(const Vec2&)>& f) {
    FEFunction out(s);
    for (int n = 0; n < s.n_nodes; ++n) out.coeffs[n] = f(s.dof_coords[n]);
    return out;
}

}  // namespace

TEST_CASE("norms of simple interpolants", "[fem_ops]") {
    const Mesh m = unit_square_mesh(10);
    const FunctionSpace p1 = build_space(m, Family::P1, ValueShape::scalar);
    const FunctionSpace p2 = build_space(m, Family::P2, ValueShape::scalar);

    // f = x is in P1: ||f||_L2 = 1/sqrt(3)
    const FEFunction fx = interpolate(p1, [](const Vec2& v) { return v.x; });
    CHECK(std::abs(function_norm(fx, NormType::L2) - 1.0 / std::sqrt(3.0)) < 1e-12);

    // f = x^2 is in P2: ||f||_H1 = sqrt(1/5 + 4/3)
    const FEFunction fx2 =
        interpolate(p2, [](const Vec2& v) { return v.x * v.x; });
    CHECK(std::abs(function_norm(fx2, NormType::H1) -
                   std::sqrt(1.0 / 5.0 + 4.0 / 3.0)) < 1e-12);

    FEFunction zero(p1);
    CHECK(function_norm(zero, NormType::L2) == 0.0);
    CHECK(function_norm(zero, NormType::H1) == 0.0);
}

TEST_CASE("interpolation between meshes", "[fem_ops]") {
    const Mesh coarse = unit_square_mesh(10);
    const Mesh fine = unit_square_mesh(20);
    const FunctionSpace cs = build_space(coarse, Family::P1, ValueShape::scalar);
    const FunctionSpace fs = build_space(fine, Family::P1, ValueShape::scalar);

    // same space: identity
    const FEFunction f =
        interpolate(cs, [](const Vec2& v) { return 3.0 * v.x - v.y; });
    const FEFunction same = interpolate_to(f, cs);
    CHECK((same.coeffs - f.coeffs).norm() == 0.0);

    // linear functions transfer exactly
    const FEFunction up = interpolate_to(f, fs);
    const FEFunction exact =
        interpolate(fs, [](const Vec2& v) { return 3.0 * v.x - v.y; });
    CHECK((up.coeffs - exact.coeffs).lpNorm<Eigen::Infinity>() < 1e-13);

    // quadratics transfer exactly between P2 spaces
    const FunctionSpace cs2 = build_space(coarse, Family::P2, ValueShape::scalar);
    const FunctionSpace fs2 = build_space(fine, Family::P2, ValueShape::scalar);
    const FEFunction q =
        interpolate(cs2, [](const Vec2& v) { return v.x * v.x + v.y; });
    const FEFunction q_up = interpolate_to(q, fs2);
    const FEFunction q_exact =
        interpolate(fs2, [](const Vec2& v) { return v.x * v.x + v.y; });
    CHECK((q_up.coeffs - q_exact.coeffs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("error norms against zero recover the function norm", "[fem_ops]") {
    const Mesh coarse = unit_square_mesh(5);
    const Mesh fine = unit_square_mesh(10);
    const FunctionSpace cs = build_space(coarse, Family::P1, ValueShape::scalar);
    const FunctionSpace fs = build_space(fine, Family::P1, ValueShape::scalar);
    const FEFunction fx = interpolate(fs, [](const Vec2& v) { return v.x; });
    const FEFunction zero(cs);
    CHECK(std::abs(error_norm(fx, zero, NormType::L2) - 1.0 / std::sqrt(3.0)) <
          1e-12);
    // identical fields have zero error
    const FEFunction cx = interpolate(cs, [](const Vec2& v) { return v.x; });
    CHECK(error_norm(fx, cx, NormType::L2) < 1e-13);
    // shape mismatch is rejected
    const FunctionSpace vs = build_space(fine, Family::P2, ValueShape::vector2);
    CHECK_THROWS_AS(error_norm(FEFunction(vs), zero, NormType::L2),
                    std::invalid_argument);
}

TEST_CASE("mean value and demean", "[fem_ops]") {
    const Mesh m = unit_square_mesh(8);
    const FunctionSpace s = build_space(m, Family::P1, ValueShape::scalar);
    FEFunction f = interpolate(s, [](const Vec2& v) { return v.x; });
    CHECK(std::abs(mean_value(f) - 0.5) < 1e-13);
    demean(f);
    CHECK(std::abs(mean_value(f)) < 1e-13);
}

TEST_CASE("boundary node selection", "[fem_ops]") {
    const Mesh m1 = unit_square_mesh(1);
    const FunctionSpace v1 = build_space(m1, Family::P2, ValueShape::vector2);
    // 18 dofs total; only the diagonal midpoint node is interior
    CHECK(v1.n_dofs == 18);
    CHECK((int)all_boundary_nodes(v1).size() * 2 == 16);

    const Mesh m10 = unit_square_mesh(10);
    const FunctionSpace v10 = build_space(m10, Family::P2, ValueShape::vector2);
    const auto top = boundary_nodes(v10, BoundaryTag::square_top);
    CHECK((int)top.size() == 21);  // 11 vertices + 10 edge midpoints
    CHECK((int)dirichlet_dofs(v10, BoundaryTag::square_top).size() == 42);
    CHECK_THROWS_WITH(boundary_nodes(v10, BoundaryTag::annulus_inner),
                      Catch::Matchers::ContainsSubstring("absent"));
}

TEST_CASE("cell locator rejects far-away points by name", "[fem_ops]") {
    const Mesh m = unit_square_mesh(4);
    const CellLocator loc(m);
    CHECK_THROWS_WITH(loc.locate({3.0, 0.5}),
                      Catch::Matchers::ContainsSubstring("3.0"));
    // small extrapolation budget admits slightly-outside points
    const auto hit = loc.locate({1.0 + 1e-4, 0.5}, 1e-3);
    CHECK(hit.cell >= 0);
    CHECK(hit.outside > 0.0);
}
