#ifndef VISCO2D_FEM_OPS_HPP
#define VISCO2D_FEM_OPS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "visco2d/space.hpp"

namespace visco2d {

// Uniform-grid bin over cell bounding boxes; read-only after build.
class CellLocator {
  public:
    explicit CellLocator(const Mesh& mesh) : mesh_(&mesh) {
        xmin_ = ymin_ = 1e300;
        xmax_ = ymax_ = -1e300;
        for (const auto& v : mesh.vertices) {
            xmin_ = std::min(xmin_, v.x);
            xmax_ = std::max(xmax_, v.x);
            ymin_ = std::min(ymin_, v.y);
            ymax_ = std::max(ymax_, v.y);
        }
        nx_ = std::max(1, (int)std::sqrt((double)mesh.n_cells() / 2.0));
        ny_ = nx_;
        bins_.resize((size_t)nx_ * ny_);
        for (int c = 0; c < mesh.n_cells(); ++c) {
            double cx0 = 1e300, cx1 = -1e300, cy0 = 1e300, cy1 = -1e300;
            for (int v : mesh.cells[c]) {
                cx0 = std::min(cx0, mesh.vertices[v].x);
                cx1 = std::max(cx1, mesh.vertices[v].x);
                cy0 = std::min(cy0, mesh.vertices[v].y);
                cy1 = std::max(cy1, mesh.vertices[v].y);
            }
            const int i0 = bin_x(cx0), i1 = bin_x(cx1);
            const int j0 = bin_y(cy0), j1 = bin_y(cy1);
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i)
                    bins_[(size_t)j * nx_ + i].push_back(c);
        }
    }

    struct Hit {
        int cell = -1;
        std::array<double, 3> bary{};
        double outside = 0.0;  // approx. geometric distance outside the cell
    };

    // Containing cell with snap tolerance 1e-10; falls back to the
    // nearest cell (barycentric extrapolation) when the point lies
    // outside the mesh by at most `extrap_dist`.
    Hit locate(const Vec2& p, double extrap_dist = 1e-10) const {
        constexpr double snap = 1e-10;
        Hit best;
        double best_def = -1e300;
        const auto consider = [&](int c) {
            const auto bary = barycentric(c, p);
            const double deficiency =
                std::min({bary[0], bary[1], bary[2]});  // >= 0 means inside
            const double scaled = deficiency * cell_diameter(*mesh_, c);
            if (scaled > best_def) {
                best_def = scaled;
                best = {c, bary, std::max(0.0, -scaled)};
            }
        };
        for (int c : bins_[(size_t)bin_y(p.y) * nx_ + bin_x(p.x)]) {
            consider(c);
            if (best_def >= 0.0) return best;
        }
        if (best_def > -snap) return best;
        // walk failed; brute-force fallback over all cells
        best_def = -1e300;
        for (int c = 0; c < mesh_->n_cells(); ++c) consider(c);
        if (best_def > -std::max(snap, extrap_dist)) return best;
        throw std::runtime_error(
            "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
            ") lies outside the mesh by " + std::to_string(-best_def));
    }

  private:
    std::array<double, 3> barycentric(int c, const Vec2& p) const {
        const CellGeometry g = cell_geometry(*mesh_, c);
        const double rx = p.x - g.v0.x, ry = p.y - g.v0.y;
        const double xi = (g.J[1][1] * rx - g.J[0][1] * ry) / g.detJ;
        const double eta = (-g.J[1][0] * rx + g.J[0][0] * ry) / g.detJ;
        return {1.0 - xi - eta, xi, eta};
    }
    int bin_x(double x) const {
        const double t = (x - xmin_) / std::max(xmax_ - xmin_, 1e-300);
        return std::clamp((int)(t * nx_), 0, nx_ - 1);
    }
    int bin_y(double y) const {
        const double t = (y - ymin_) / std::max(ymax_ - ymin_, 1e-300);
        return std::clamp((int)(t * ny_), 0, ny_ - 1);
    }

    const Mesh* mesh_;
    double xmin_, xmax_, ymin_, ymax_;
    int nx_, ny_;
    std::vector<std::vector<int>> bins_;
};

// Point evaluation of f at the dof coordinates of `target`.  For curved
// domains remeshed at a different resolution the target nodes can fall
// slightly outside the source polygon; `extrap_dist` bounds the allowed
// nearest-cell extrapolation.
inline FEFunction interpolate_to(const FEFunction& f, const FunctionSpace& target,
                                 double extrap_dist = 1e-10) {
    const FunctionSpace& src = *f.space;
    if (n_components(src.shape) != n_components(target.shape) ||
        src.shape != target.shape)
        throw std::invalid_argument("interpolate_to: value shapes differ");
    FEFunction out(target);
    if (&src == &target || (src.mesh == target.mesh && src.family == target.family)) {
        out.coeffs = f.coeffs;
        return out;
    }
    const CellLocator locator(*src.mesh);
    std::vector<double> vals(src.ncomp);
    for (int node = 0; node < target.n_nodes; ++node) {
        const auto hit = locator.locate(target.dof_coords[node], extrap_dist);
        eval_function(f, hit.cell, hit.bary, vals.data());
        for (int c = 0; c < target.ncomp; ++c)
            out.coeffs[target.dof(node, c)] = vals[c];
    }
    return out;
}

enum class NormType { L2, H1 };

// Norm of a discrete field, integrated with the global assembly rule.
// Symmetric-tensor shapes use the Frobenius norm of the expanded tensor.
inline double function_norm(const FEFunction& f, NormType norm) {
    const FunctionSpace& s = *f.space;
    const QuadratureRule rule = triangle_rule(kAssemblyQuadDegree);
    const bool sym = s.shape == ValueShape::symtensor2 ||
                     s.shape == ValueShape::symtensor2_traceless;
    double acc = 0.0;
    std::vector<BasisEval> basis;
    for (const auto& qp : rule.points) basis.push_back(eval_basis(s.family, qp.bary));
    for (int cell = 0; cell < s.mesh->n_cells(); ++cell) {
        const CellGeometry g = cell_geometry(*s.mesh, cell);
        for (size_t q = 0; q < rule.points.size(); ++q) {
            const BasisEval& b = basis[q];
            double val[3] = {0, 0, 0};
            double grad[3][2] = {{0, 0}, {0, 0}, {0, 0}};
            for (int i = 0; i < b.n; ++i) {
                const int node = s.cell_nodes[cell][i];
                const Vec2 gphi = phys_grad(g, b, i);
                for (int c = 0; c < s.ncomp; ++c) {
                    const double u = f.coeffs[s.dof(node, c)];
                    val[c] += b.val[i] * u;
                    grad[c][0] += gphi.x * u;
                    grad[c][1] += gphi.y * u;
                }
            }
            double density = 0.0;
            if (sym) {
                const Mat2T<double> t = expand_sym(s.shape, val);
                density += contract(t, t);
                if (norm == NormType::H1)
                    for (int k = 0; k < 2; ++k) {
                        const double gc[3] = {grad[0][k], grad[1][k], grad[2][k]};
                        const Mat2T<double> gt = expand_sym(s.shape, gc);
                        density += contract(gt, gt);
                    }
            } else {
                for (int c = 0; c < s.ncomp; ++c) {
                    density += val[c] * val[c];
                    if (norm == NormType::H1)
                        density += grad[c][0] * grad[c][0] + grad[c][1] * grad[c][1];
                }
            }
            acc += density * rule.points[q].weight * g.detJ;
        }
    }
    return std::sqrt(acc);
}

// || f_fine - I(f_coarse) || on the fine space.
inline double error_norm(const FEFunction& f_fine, const FEFunction& f_coarse,
                         NormType norm, double extrap_dist = 1e-10) {
    if (f_fine.space->shape != f_coarse.space->shape)
        throw std::invalid_argument("error_norm: value shapes differ");
    const FEFunction ic = interpolate_to(f_coarse, *f_fine.space, extrap_dist);
    FEFunction diff(*f_fine.space);
    diff.coeffs = f_fine.coeffs - ic.coeffs;
    return function_norm(diff, norm);
}

// Mean value of a scalar field over the domain.
inline double mean_value(const FEFunction& f) {
    const FunctionSpace& s = *f.space;
    const QuadratureRule rule = triangle_rule(kAssemblyQuadDegree);
    double integral = 0.0, area = 0.0;
    for (int cell = 0; cell < s.mesh->n_cells(); ++cell) {
        const CellGeometry g = cell_geometry(*s.mesh, cell);
        for (const auto& qp : rule.points) {
            double v;
            eval_function(f, cell, qp.bary, &v);
            integral += v * qp.weight * g.detJ;
            area += qp.weight * g.detJ;
        }
    }
    return integral / area;
}

inline void demean(FEFunction& f) {
    f.coeffs.array() -= mean_value(f);
}

// Node/dof selection on a tagged part of the boundary.
inline std::vector<int> boundary_nodes(const FunctionSpace& s, BoundaryTag tag) {
    const Mesh& m = *s.mesh;
    bool found = false;
    std::vector<char> mark(s.n_nodes, 0);
    for (int e = 0; e < m.n_edges(); ++e) {
        if (m.boundary_tags[e] != tag) continue;
        found = true;
        mark[m.edges[e][0]] = 1;
        mark[m.edges[e][1]] = 1;
        if (s.family == Family::P2) mark[m.n_vertices() + e] = 1;
    }
    if (!found)
        throw std::invalid_argument(std::string("boundary tag ") +
                                    to_string(tag) + " absent from mesh");
    std::vector<int> nodes;
    for (int n = 0; n < s.n_nodes; ++n)
        if (mark[n]) nodes.push_back(n);
    return nodes;
}

inline std::vector<int> dirichlet_dofs(const FunctionSpace& s, BoundaryTag tag) {
    std::vector<int> dofs;
    for (int n : boundary_nodes(s, tag))
        for (int c = 0; c < s.ncomp; ++c) dofs.push_back(s.dof(n, c));
    std::sort(dofs.begin(), dofs.end());
    return dofs;
}

// All boundary nodes regardless of tag.
inline std::vector<int> all_boundary_nodes(const FunctionSpace& s) {
    const Mesh& m = *s.mesh;
    std::vector<char> mark(s.n_nodes, 0);
    for (int e = 0; e < m.n_edges(); ++e) {
        if (m.boundary_tags[e] == BoundaryTag::interior) continue;
        mark[m.edges[e][0]] = 1;
        mark[m.edges[e][1]] = 1;
        if (s.family == Family::P2) mark[m.n_vertices() + e] = 1;
    }
    std::vector<int> nodes;
    for (int n = 0; n < s.n_nodes; ++n)
        if (mark[n]) nodes.push_back(n);
    return nodes;
}

}  // namespace visco2d

#endif
