#ifndef VISCO2D_SPACE_HPP
#define VISCO2D_SPACE_HPP

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <vector>

#include "visco2d/mesh.hpp"
#include "visco2d/quadrature.hpp"
#include "visco2d/tensor.hpp"

namespace visco2d {

enum class Family { P1, P2 };
enum class ValueShape { scalar, vector2, symtensor2, symtensor2_traceless };

inline int n_components(ValueShape s) {
    switch (s) {
        case ValueShape::scalar: return 1;
        case ValueShape::vector2: return 2;
        case ValueShape::symtensor2: return 3;            // xx, xy, yy
        case ValueShape::symtensor2_traceless: return 2;  // xx, xy
    }
    return 0;
}

// Expand stored independent components into the full symmetric 2x2.
template <typename S>
inline Mat2T<S> expand_sym(ValueShape shape, const S* c) {
    Mat2T<S> t;
    if (shape == ValueShape::symtensor2) {
        t(0, 0) = c[0];
        t(0, 1) = c[1];
        t(1, 0) = c[1];
        t(1, 1) = c[2];
    } else {
        t(0, 0) = c[0];
        t(0, 1) = c[1];
        t(1, 0) = c[1];
        t(1, 1) = -c[0];
    }
    return t;
}

struct BasisEval {
    int n = 0;
    std::array<double, 6> val{};
    std::array<std::array<double, 2>, 6> dref{};  // gradient wrt (x, y) ref coords
};

// Lagrange basis on the reference triangle (0,0)-(1,0)-(0,1), local node
// order: vertices 0..2 then edge midpoints (edge l opposite vertex l).
inline BasisEval eval_basis(Family family, const std::array<double, 3>& bary) {
    const double l0 = bary[0], l1 = bary[1], l2 = bary[2];
    // reference gradients of the barycentric coordinates
    static constexpr double dl[3][2] = {{-1, -1}, {1, 0}, {0, 1}};
    BasisEval b;
    if (family == Family::P1) {
        b.n = 3;
        for (int i = 0; i < 3; ++i) {
            b.val[i] = bary[i];
            b.dref[i] = {dl[i][0], dl[i][1]};
        }
        return b;
    }
    b.n = 6;
    const double l[3] = {l0, l1, l2};
    for (int i = 0; i < 3; ++i) {
        b.val[i] = l[i] * (2.0 * l[i] - 1.0);
        for (int k = 0; k < 2; ++k) b.dref[i][k] = (4.0 * l[i] - 1.0) * dl[i][k];
    }
    for (int e = 0; e < 3; ++e) {
        const int a = (e + 1) % 3, c = (e + 2) % 3;
        b.val[3 + e] = 4.0 * l[a] * l[c];
        for (int k = 0; k < 2; ++k)
            b.dref[3 + e][k] = 4.0 * (l[a] * dl[c][k] + l[c] * dl[a][k]);
    }
    return b;
}

// Per-cell affine geometry: x = v0 + J (xi, eta).
struct CellGeometry {
    Vec2 v0;
    double J[2][2];
    double invJT[2][2];  // maps reference gradients to physical gradients
    double detJ;         // 2 * area
};

inline CellGeometry cell_geometry(const Mesh& m, int cell) {
    const auto& c = m.cells[cell];
    const Vec2 a = m.vertices[c[0]], b = m.vertices[c[1]], d = m.vertices[c[2]];
    CellGeometry g;
    g.v0 = a;
    g.J[0][0] = b.x - a.x;
    g.J[0][1] = d.x - a.x;
    g.J[1][0] = b.y - a.y;
    g.J[1][1] = d.y - a.y;
    g.detJ = g.J[0][0] * g.J[1][1] - g.J[0][1] * g.J[1][0];
    // inv(J)^T = adj(J)^T / det
    g.invJT[0][0] = g.J[1][1] / g.detJ;
    g.invJT[0][1] = -g.J[1][0] / g.detJ;
    g.invJT[1][0] = -g.J[0][1] / g.detJ;
    g.invJT[1][1] = g.J[0][0] / g.detJ;
    return g;
}

inline Vec2 map_to_physical(const CellGeometry& g, const std::array<double, 3>& bary) {
    return {g.v0.x + g.J[0][0] * bary[1] + g.J[0][1] * bary[2],
            g.v0.y + g.J[1][0] * bary[1] + g.J[1][1] * bary[2]};
}

// Physical gradient of local basis function i.
inline Vec2 phys_grad(const CellGeometry& g, const BasisEval& b, int i) {
    return {g.invJT[0][0] * b.dref[i][0] + g.invJT[0][1] * b.dref[i][1],
            g.invJT[1][0] * b.dref[i][0] + g.invJT[1][1] * b.dref[i][1]};
}

struct FunctionSpace {
    const Mesh* mesh = nullptr;
    Family family = Family::P1;
    ValueShape shape = ValueShape::scalar;
    int ncomp = 1;
    int n_nodes = 0;  // scalar node count: V (P1) or V + E (P2)
    int n_dofs = 0;   // n_nodes * ncomp
    int nodes_per_cell = 3;
    std::vector<Vec2> dof_coords;                // per node
    std::vector<std::array<int, 6>> cell_nodes;  // global node ids per cell

    int dof(int node, int comp) const { return node * ncomp + comp; }
};

inline FunctionSpace build_space(const Mesh& mesh, Family family,
                                 ValueShape shape) {
    FunctionSpace s;
    s.mesh = &mesh;
    s.family = family;
    s.shape = shape;
    s.ncomp = n_components(shape);
    const int V = mesh.n_vertices(), E = mesh.n_edges();
    s.n_nodes = family == Family::P1 ? V : V + E;
    s.n_dofs = s.n_nodes * s.ncomp;
    s.nodes_per_cell = family == Family::P1 ? 3 : 6;
    s.dof_coords.resize(s.n_nodes);
    for (int v = 0; v < V; ++v) s.dof_coords[v] = mesh.vertices[v];
    if (family == Family::P2) {
        for (int e = 0; e < E; ++e) {
            const Vec2 a = mesh.vertices[mesh.edges[e][0]];
            const Vec2 b = mesh.vertices[mesh.edges[e][1]];
            s.dof_coords[V + e] = {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
        }
    }
    s.cell_nodes.resize(mesh.n_cells());
    for (int c = 0; c < mesh.n_cells(); ++c) {
        for (int l = 0; l < 3; ++l) s.cell_nodes[c][l] = mesh.cells[c][l];
        if (family == Family::P2)
            for (int l = 0; l < 3; ++l)
                s.cell_nodes[c][3 + l] = V + mesh.cell_edges[c][l];
    }
    return s;
}

struct FEFunction {
    const FunctionSpace* space = nullptr;
    Eigen::VectorXd coeffs;

    FEFunction() = default;
    explicit FEFunction(const FunctionSpace& s)
        : space(&s), coeffs(Eigen::VectorXd::Zero(s.n_dofs)) {}
};

// Value of all components at a barycentric point of a cell.
inline void eval_function(const FEFunction& f, int cell,
                          const std::array<double, 3>& bary, double* out) {
    const FunctionSpace& s = *f.space;
    const BasisEval b = eval_basis(s.family, bary);
    for (int c = 0; c < s.ncomp; ++c) out[c] = 0.0;
    for (int i = 0; i < b.n; ++i) {
        const int node = s.cell_nodes[cell][i];
        for (int c = 0; c < s.ncomp; ++c)
            out[c] += b.val[i] * f.coeffs[s.dof(node, c)];
    }
}

}  // namespace visco2d

#endif
