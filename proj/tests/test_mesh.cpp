#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "visco2d/mesh.hpp"

using namespace visco2d;

TEST_CASE("unit square counts and Euler characteristic", "[mesh]") {
    const Mesh m = unit_square_mesh(10);
    CHECK(m.n_vertices() == 121);
    CHECK(m.n_cells() == 200);
    CHECK(m.n_edges() == 320);  // 3n^2 + 2n
    CHECK(m.n_vertices() - m.n_edges() + m.n_cells() == 1);
    CHECK(std::abs(m.h_char - std::sqrt(2.0) / 10.0) < 1e-14);
    CHECK(std::abs(total_area(m) - 1.0) < 1e-12);
}

TEST_CASE("single-square mesh geometry", "[mesh]") {
    const Mesh m = unit_square_mesh(1);
    CHECK(m.n_vertices() == 4);
    CHECK(m.n_cells() == 2);
    CHECK(m.n_edges() == 5);
    const MeshStats s = mesh_stats(m);
    CHECK(std::abs(s.min_angle - M_PI / 4.0) < 1e-14);
    CHECK_THROWS_AS(unit_square_mesh(0), std::invalid_argument);
}

TEST_CASE("all cells are counterclockwise with consistent edge maps", "[mesh]") {
    for (const Mesh& m : {unit_square_mesh(7),
                          eccentric_annulus_mesh(1.0, 0.5, 0.25, 0.1)}) {
        for (int c = 0; c < m.n_cells(); ++c) {
            CHECK(signed_area(m, c) > 0.0);
            for (int l = 0; l < 3; ++l) {
                // edge l is opposite vertex l
                int a = m.cells[c][(l + 1) % 3], b = m.cells[c][(l + 2) % 3];
                if (a > b) std::swap(a, b);
                CHECK(m.edges[m.cell_edges[c][l]] == std::array<int, 2>{a, b});
            }
        }
    }
}

TEST_CASE("square boundary tags split at the lid", "[mesh]") {
    const Mesh m = unit_square_mesh(4);
    int top = 0, rest = 0, interior = 0;
    for (int e = 0; e < m.n_edges(); ++e) {
        switch (m.boundary_tags[e]) {
            case BoundaryTag::square_top:
                CHECK(m.vertices[m.edges[e][0]].y == 1.0);
                CHECK(m.vertices[m.edges[e][1]].y == 1.0);
                ++top;
                break;
            case BoundaryTag::square_walls_floor:
                ++rest;
                break;
            case BoundaryTag::interior:
                ++interior;
                break;
            default:
                FAIL("unexpected tag on a square mesh");
        }
    }
    CHECK(top == 4);
    CHECK(rest == 12);
    CHECK(top + rest + interior == m.n_edges());
}

TEST_CASE("eccentric annulus mesh quality and size", "[mesh]") {
    const Mesh m = eccentric_annulus_mesh(1.0, 0.5, 0.25, 0.05);
    CHECK(m.n_cells() >= 1175);
    CHECK(m.n_cells() <= 4700);
    // one hole: V - E + T = 0
    CHECK(m.n_vertices() - m.n_edges() + m.n_cells() == 0);
    const MeshStats s = mesh_stats(m);
    CHECK(s.min_angle >= 20.0 * M_PI / 180.0);
    // polygonal area approaches pi (R^2 - r^2) from below
    const double exact = M_PI * (1.0 - 0.25);
    CHECK(total_area(m) < exact);
    CHECK(total_area(m) > 0.98 * exact);
    // boundary vertices sit exactly on their circles
    for (int e = 0; e < m.n_edges(); ++e) {
        if (m.boundary_tags[e] == BoundaryTag::interior) continue;
        for (int v : m.edges[e]) {
            const Vec2 p = m.vertices[v];
            if (m.boundary_tags[e] == BoundaryTag::annulus_outer)
                CHECK(std::abs(std::hypot(p.x, p.y) - 1.0) < 1e-12);
            else
                CHECK(std::abs(std::hypot(p.x, p.y - 0.25) - 0.5) < 1e-12);
        }
    }
}

TEST_CASE("concentric annulus is mirror symmetric about x = 0", "[mesh]") {
    const Mesh m = eccentric_annulus_mesh(1.0, 0.5, 0.0, 0.1);
    const auto key = [](double x, double y) {
        return std::make_pair(std::llround(x * 1e9), std::llround(y * 1e9));
    };
    std::set<std::set<std::pair<long long, long long>>> cells, mirrored;
    for (int c = 0; c < m.n_cells(); ++c) {
        std::set<std::pair<long long, long long>> plain, flip;
        for (int v : m.cells[c]) {
            const Vec2 p = m.vertices[v];
            plain.insert(key(p.x, p.y));
            flip.insert(key(-p.x, p.y));
        }
        cells.insert(plain);
        mirrored.insert(flip);
    }
    CHECK(cells == mirrored);
}

TEST_CASE("annulus constructor rejects bad geometry", "[mesh]") {
    CHECK_THROWS_AS(eccentric_annulus_mesh(1.0, 0.5, 0.6, 0.1),
                    std::invalid_argument);  // r + e >= R
    CHECK_THROWS_AS(eccentric_annulus_mesh(0.5, 1.0, 0.0, 0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(eccentric_annulus_mesh(1.0, 0.5, 0.0, -1.0),
                    std::invalid_argument);
}

TEST_CASE("finalize rejects inverted cells and non-manifold edges", "[mesh]") {
    Mesh bad;
    bad.vertices = {{0, 0}, {1, 0}, {0, 1}};
    bad.cells = {{0, 2, 1}};  // clockwise
    CHECK_THROWS_WITH(
        finalize_mesh(bad, [](int, int) { return BoundaryTag::square_top; }),
        Catch::Matchers::ContainsSubstring("counterclockwise"));

    Mesh dup;
    dup.vertices = {{0, 0}, {1, 0}, {0, 1}};
    dup.cells = {{0, 1, 2}, {0, 1, 2}, {0, 1, 2}};
    CHECK_THROWS_WITH(
        finalize_mesh(dup, [](int, int) { return BoundaryTag::square_top; }),
        Catch::Matchers::ContainsSubstring("> 2 cells"));
}
