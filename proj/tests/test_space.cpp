#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "visco2d/space.hpp"

using namespace visco2d;

TEST_CASE("dof counts on the n = 10 square", "[space]") {
    const Mesh m = unit_square_mesh(10);
    const FunctionSpace Vu = build_space(m, Family::P2, ValueShape::vector2);
    const FunctionSpace Qp = build_space(m, Family::P1, ValueShape::scalar);
    const FunctionSpace St = build_space(m, Family::P2, ValueShape::symtensor2);
    const FunctionSpace Sd =
        build_space(m, Family::P1, ValueShape::symtensor2_traceless);
    CHECK(Vu.n_dofs == 882);
    CHECK(Qp.n_dofs == 121);
    CHECK(Vu.n_dofs + Qp.n_dofs == 1003);
    CHECK(St.n_dofs == 1323);
    CHECK(Sd.n_dofs == 242);
    CHECK(Vu.n_dofs + Qp.n_dofs + St.n_dofs + Sd.n_dofs == 2568);
}

TEST_CASE("component counts per value shape", "[space]") {
    CHECK(n_components(ValueShape::scalar) == 1);
    CHECK(n_components(ValueShape::vector2) == 2);
    CHECK(n_components(ValueShape::symtensor2) == 3);
    CHECK(n_components(ValueShape::symtensor2_traceless) == 2);
}

TEST_CASE("symmetric expansion", "[space]") {
    const double full[3] = {1.0, 2.0, 3.0};
    const Mat2 t = expand_sym(ValueShape::symtensor2, full);
    CHECK(t(0, 0) == 1.0);
    CHECK(t(0, 1) == 2.0);
    CHECK(t(1, 0) == 2.0);
    CHECK(t(1, 1) == 3.0);
    const double tr[2] = {1.5, -0.5};
    const Mat2 s = expand_sym(ValueShape::symtensor2_traceless, tr);
    CHECK(s(0, 0) == 1.5);
    CHECK(s(1, 1) == -1.5);
    CHECK(s(0, 1) == -0.5);
}

TEST_CASE("Lagrange property at the reference nodes", "[space]") {
    const std::array<std::array<double, 3>, 6> nodes = {{
        {1, 0, 0}, {0, 1, 0}, {0, 0, 1},          // vertices
        {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}  // midpoint opposite vertex l
    }};
    for (int i = 0; i < 6; ++i) {
        const BasisEval b = eval_basis(Family::P2, nodes[i]);
        for (int j = 0; j < 6; ++j)
            CHECK(std::abs(b.val[j] - (i == j ? 1.0 : 0.0)) < 1e-15);
    }
    for (int i = 0; i < 3; ++i) {
        const BasisEval b = eval_basis(Family::P1, nodes[i]);
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(b.val[j] - (i == j ? 1.0 : 0.0)) < 1e-15);
    }
}

TEST_CASE("partition of unity at random points", "[space]") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        double l1 = dist(rng), l2 = dist(rng) * (1.0 - l1);
        const std::array<double, 3> bary = {1.0 - l1 - l2, l1, l2};
        for (Family fam : {Family::P1, Family::P2}) {
            const BasisEval b = eval_basis(fam, bary);
            double sum = 0.0, dsum[2] = {0.0, 0.0};
            for (int i = 0; i < b.n; ++i) {
                sum += b.val[i];
                dsum[0] += b.dref[i][0];
                dsum[1] += b.dref[i][1];
            }
            CHECK(std::abs(sum - 1.0) < 1e-14);
            CHECK(std::abs(dsum[0]) < 1e-14);
            CHECK(std::abs(dsum[1]) < 1e-14);
        }
    }
}

TEST_CASE("P2 node coordinates include edge midpoints", "[space]") {
    const Mesh m = unit_square_mesh(3);
    const FunctionSpace s = build_space(m, Family::P2, ValueShape::scalar);
    CHECK(s.n_nodes == m.n_vertices() + m.n_edges());
    for (int e = 0; e < m.n_edges(); ++e) {
        const Vec2 a = m.vertices[m.edges[e][0]], b = m.vertices[m.edges[e][1]];
        const Vec2 mid = s.dof_coords[m.n_vertices() + e];
        CHECK(mid.x == 0.5 * (a.x + b.x));
        CHECK(mid.y == 0.5 * (a.y + b.y));
    }
}

TEST_CASE("interpolants of quadratics are reproduced exactly", "[space]") {
    const Mesh m = unit_square_mesh(2);
    const FunctionSpace s = build_space(m, Family::P2, ValueShape::scalar);
    FEFunction f(s);
    for (int n = 0; n < s.n_nodes; ++n) {
        const Vec2 p = s.dof_coords[n];
        f.coeffs[n] = p.x * p.x + 2.0 * p.x * p.y - p.y;
    }
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int cell = (int)(dist(rng) * m.n_cells()) % m.n_cells();
        double l1 = dist(rng), l2 = dist(rng) * (1.0 - l1);
        const std::array<double, 3> bary = {1.0 - l1 - l2, l1, l2};
        const CellGeometry g = cell_geometry(m, cell);
        const Vec2 x = map_to_physical(g, bary);
        double v;
        eval_function(f, cell, bary, &v);
        CHECK(std::abs(v - (x.x * x.x + 2.0 * x.x * x.y - x.y)) < 1e-13);
    }
}
