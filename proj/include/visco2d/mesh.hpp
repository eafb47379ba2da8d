#ifndef VISCO2D_MESH_HPP
#define VISCO2D_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "visco2d/tensor.hpp"

namespace visco2d {

enum class BoundaryTag {
    interior,
    square_top,
    square_walls_floor,
    annulus_inner,
    annulus_outer,
};

inline const char* to_string(BoundaryTag t) {
    switch (t) {
        case BoundaryTag::interior: return "interior";
        case BoundaryTag::square_top: return "square_top";
        case BoundaryTag::square_walls_floor: return "square_walls_floor";
        case BoundaryTag::annulus_inner: return "annulus_inner";
        case BoundaryTag::annulus_outer: return "annulus_outer";
    }
    return "?";
}

// Immutable after construction (finalize() fills the derived data); safe
// to share across threads read-only.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> cells;  // counterclockwise vertex triples

    // Derived connectivity: deduplicated vertex-index pairs (a < b),
    // lexicographically sorted.
    std::vector<std::array<int, 2>> edges;
    std::vector<BoundaryTag> boundary_tags;       // per edge
    std::vector<std::array<int, 3>> cell_edges;   // edge l opposite vertex l
    double h_char = 0.0;                          // max cell diameter

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_cells() const { return static_cast<int>(cells.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }
};

inline double signed_area(const Mesh& m, int cell) {
    const auto& c = m.cells[cell];
    const Vec2 a = m.vertices[c[0]], b = m.vertices[c[1]], d = m.vertices[c[2]];
    return 0.5 * ((b.x - a.x) * (d.y - a.y) - (b.y - a.y) * (d.x - a.x));
}

inline double cell_diameter(const Mesh& m, int cell) {
    const auto& c = m.cells[cell];
    double dmax = 0.0;
    for (int l = 0; l < 3; ++l) {
        const Vec2 p = m.vertices[c[l]], q = m.vertices[c[(l + 1) % 3]];
        dmax = std::max(dmax, std::hypot(q.x - p.x, q.y - p.y));
    }
    return dmax;
}

inline double cell_min_angle(const Mesh& m, int cell) {
    const auto& c = m.cells[cell];
    double amin = M_PI;
    for (int l = 0; l < 3; ++l) {
        const Vec2 o = m.vertices[c[l]];
        const Vec2 p = m.vertices[c[(l + 1) % 3]];
        const Vec2 q = m.vertices[c[(l + 2) % 3]];
        const double ax = p.x - o.x, ay = p.y - o.y;
        const double bx = q.x - o.x, by = q.y - o.y;
        const double cosang = (ax * bx + ay * by) /
                              (std::hypot(ax, ay) * std::hypot(bx, by));
        amin = std::min(amin, std::acos(std::clamp(cosang, -1.0, 1.0)));
    }
    return amin;
}

// Builds edges, cell->edge maps and boundary tags, validates orientation.
// `tag_of` receives the two endpoint vertex indices (a < b) of a
// boundary edge.
inline void finalize_mesh(
    Mesh& m, const std::function<BoundaryTag(int, int)>& tag_of) {
    const int nv = m.n_vertices();
    for (int c = 0; c < m.n_cells(); ++c) {
        for (int v : m.cells[c])
            if (v < 0 || v >= nv)
                throw std::runtime_error("mesh: cell references vertex " +
                                         std::to_string(v) + " out of range");
        if (signed_area(m, c) <= 0.0)
            throw std::runtime_error("mesh: cell " + std::to_string(c) +
                                     " is not counterclockwise");
    }

    std::map<std::array<int, 2>, int> edge_count;
    for (const auto& c : m.cells) {
        for (int l = 0; l < 3; ++l) {
            int a = c[(l + 1) % 3], b = c[(l + 2) % 3];
            if (a > b) std::swap(a, b);
            ++edge_count[{a, b}];
        }
    }
    std::map<std::array<int, 2>, int> edge_index;
    m.edges.clear();
    m.boundary_tags.clear();
    for (const auto& [e, cnt] : edge_count) {
        if (cnt > 2)
            throw std::runtime_error("mesh: edge shared by > 2 cells");
        edge_index[e] = m.n_edges();
        m.edges.push_back(e);
        m.boundary_tags.push_back(cnt == 1 ? tag_of(e[0], e[1])
                                           : BoundaryTag::interior);
    }
    m.cell_edges.resize(m.cells.size());
    for (size_t c = 0; c < m.cells.size(); ++c) {
        for (int l = 0; l < 3; ++l) {
            int a = m.cells[c][(l + 1) % 3], b = m.cells[c][(l + 2) % 3];
            if (a > b) std::swap(a, b);
            m.cell_edges[c][l] = edge_index.at({a, b});
        }
    }
    m.h_char = 0.0;
    for (int c = 0; c < m.n_cells(); ++c)
        m.h_char = std::max(m.h_char, cell_diameter(m, c));
}

// n x n grid of squares, each split into 2 triangles along the
// lower-left-to-upper-right diagonal.
inline Mesh unit_square_mesh(int n) {
    if (n < 1) throw std::invalid_argument("unit_square_mesh: n must be >= 1");
    Mesh m;
    const auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            m.vertices.push_back({double(i) / n, double(j) / n});
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.cells.push_back({v00, v10, v11});
            m.cells.push_back({v00, v11, v01});
        }
    }
    finalize_mesh(m, [&](int a, int b) {
        return (m.vertices[a].y > 1.0 - 1e-12 && m.vertices[b].y > 1.0 - 1e-12)
                   ? BoundaryTag::square_top
                   : BoundaryTag::square_walls_floor;
    });
    return m;
}

// Region between the circle of radius R centered at the origin and the
// circle of radius r centered at (0, e).  Structured rings of nodes, all
// boundary vertices exactly on the circles; each quad split along its
// shorter diagonal (mirror-consistent tie-break for the concentric case).
inline Mesh eccentric_annulus_mesh(double R, double r, double e, double h) {
    if (!(r > 0.0 && R > r && r + e < R))
        throw std::invalid_argument(
            "eccentric_annulus_mesh: need 0 < r, r + e < R");
    if (!(h > 0.0))
        throw std::invalid_argument("eccentric_annulus_mesh: need h > 0");

    // Angular resolution from the mean circumference, rounded up to a
    // multiple of 4 so the concentric mesh is mirror symmetric.
    const double mean_circ = M_PI * (R + r);
    const int ntheta = 4 * std::max(1, (int)std::ceil(mean_circ / (4.0 * h)));
    const int nlayer = std::max(1, (int)std::ceil(0.85 * (R - r) / h));

    Mesh m;
    const auto vid = [&](int k, int j) { return (k % ntheta) * (nlayer + 1) + j; };
    for (int k = 0; k < ntheta; ++k) {
        const double th = 2.0 * M_PI * k / ntheta;
        const Vec2 pin{r * std::cos(th), e + r * std::sin(th)};
        const Vec2 pout{R * std::cos(th), R * std::sin(th)};
        for (int j = 0; j <= nlayer; ++j) {
            const double s = double(j) / nlayer;
            m.vertices.push_back(
                {pin.x + s * (pout.x - pin.x), pin.y + s * (pout.y - pin.y)});
        }
    }
    const auto dist2 = [&](int a, int b) {
        const Vec2 p = m.vertices[a], q = m.vertices[b];
        return (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
    };
    for (int k = 0; k < ntheta; ++k) {
        for (int j = 0; j < nlayer; ++j) {
            const int a = vid(k, j), b = vid(k + 1, j);
            const int c = vid(k + 1, j + 1), d = vid(k, j + 1);
            const double dac = dist2(a, c), dbd = dist2(b, d);
            bool use_ac;
            if (std::abs(dac - dbd) > 1e-12 * (dac + dbd)) {
                use_ac = dac < dbd;
            } else {
                // concentric tie: flip across the mirror plane x = 0
                const double mid = 2.0 * M_PI * (k + 0.5) / ntheta;
                use_ac = std::cos(mid) > 0.0;
            }
            // counterclockwise quad order is a, d, c, b
            if (use_ac) {
                m.cells.push_back({a, d, c});
                m.cells.push_back({a, c, b});
            } else {
                m.cells.push_back({a, d, b});
                m.cells.push_back({d, c, b});
            }
        }
    }
    finalize_mesh(m, [&](int a, int b) {
        const Vec2 pa = m.vertices[a], pb = m.vertices[b];
        if (std::abs(std::hypot(pa.x, pa.y) - R) < 1e-9 &&
            std::abs(std::hypot(pb.x, pb.y) - R) < 1e-9)
            return BoundaryTag::annulus_outer;
        return BoundaryTag::annulus_inner;
    });
    return m;
}

struct MeshStats {
    int V = 0, E = 0, T = 0;
    double h_char = 0.0;
    double min_angle = 0.0;  // radians
};

inline MeshStats mesh_stats(const Mesh& m) {
    MeshStats s;
    s.V = m.n_vertices();
    s.E = m.n_edges();
    s.T = m.n_cells();
    s.h_char = m.h_char;
    s.min_angle = M_PI;
    for (int c = 0; c < m.n_cells(); ++c)
        s.min_angle = std::min(s.min_angle, cell_min_angle(m, c));
    return s;
}

inline double total_area(const Mesh& m) {
    double a = 0.0;
    for (int c = 0; c < m.n_cells(); ++c) a += signed_area(m, c);
    return a;
}

}  // namespace visco2d

#endif
