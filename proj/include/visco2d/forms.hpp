#ifndef VISCO2D_FORMS_HPP
#define VISCO2D_FORMS_HPP

#include <functional>
#include <optional>
#include <vector>

#include "visco2d/dual.hpp"
#include "visco2d/fem_ops.hpp"
#include "visco2d/linalg.hpp"
#include "visco2d/space.hpp"
#include "visco2d/tensor.hpp"

namespace visco2d {

using VectorField = std::function<Vec2(const Vec2&)>;

struct DirichletConstraint {
    int dof;
    double value;
};

namespace detail {

inline Mat2 make_mat2(double a00, double a01, double a10, double a11) {
    Mat2 m;
    m(0, 0) = a00;
    m(0, 1) = a01;
    m(1, 0) = a10;
    m(1, 1) = a11;
    return m;
}

// Basis tensors for the symmetric component storage.
inline const Mat2& sym_basis(int c) {
    static const Mat2 e[3] = {make_mat2(1, 0, 0, 0), make_mat2(0, 1, 1, 0),
                              make_mat2(0, 0, 0, 1)};
    return e[c];
}
inline const Mat2& traceless_basis(int c) {
    static const Mat2 e[2] = {make_mat2(1, 0, 0, -1), make_mat2(0, 1, 1, 0)};
    return e[c];
}
// A : sym_basis(m)
template <typename S>
inline S sym_contract(const Mat2T<S>& A, int m) {
    if (m == 0) return A(0, 0);
    if (m == 1) return A(0, 1) + A(1, 0);
    return A(1, 1);
}
// A : traceless_basis(m)
template <typename S>
inline S traceless_contract(const Mat2T<S>& A, int m) {
    if (m == 0) return A(0, 0) - A(1, 1);
    return A(0, 1) + A(1, 0);
}

struct QuadData {
    QuadratureRule rule;
    std::vector<BasisEval> p1, p2;

    QuadData() : rule(triangle_rule(kAssemblyQuadDegree)) {
        for (const auto& qp : rule.points) {
            p1.push_back(eval_basis(Family::P1, qp.bary));
            p2.push_back(eval_basis(Family::P2, qp.bary));
        }
    }
};

inline const QuadData& quad_data() {
    static const QuadData qd;
    return qd;
}

// Evaluate a lagged (plain-double) field at a quadrature point.
struct ScalarSample {
    double val = 0;
    Vec2 grad{};
};
struct VectorSample {
    Vec2 val{};
    Mat2 grad{};  // grad(i,j) = d u_i / d x_j
};
struct TensorSample {
    Mat2 val{};
    Mat2 dx{}, dy{};  // component-wise spatial derivatives
};

inline ScalarSample sample_scalar(const FEFunction& f, int cell,
                                  const BasisEval& b, const CellGeometry& g) {
    const FunctionSpace& s = *f.space;
    ScalarSample out;
    for (int i = 0; i < b.n; ++i) {
        const double u = f.coeffs[s.cell_nodes[cell][i]];
        const Vec2 gp = phys_grad(g, b, i);
        out.val += b.val[i] * u;
        out.grad.x += gp.x * u;
        out.grad.y += gp.y * u;
    }
    return out;
}

inline VectorSample sample_vector(const FEFunction& f, int cell,
                                  const BasisEval& b, const CellGeometry& g) {
    const FunctionSpace& s = *f.space;
    VectorSample out;
    for (int i = 0; i < b.n; ++i) {
        const int node = s.cell_nodes[cell][i];
        const double ux = f.coeffs[s.dof(node, 0)];
        const double uy = f.coeffs[s.dof(node, 1)];
        const Vec2 gp = phys_grad(g, b, i);
        out.val.x += b.val[i] * ux;
        out.val.y += b.val[i] * uy;
        out.grad(0, 0) += gp.x * ux;
        out.grad(0, 1) += gp.y * ux;
        out.grad(1, 0) += gp.x * uy;
        out.grad(1, 1) += gp.y * uy;
    }
    return out;
}

inline TensorSample sample_symtensor(const FEFunction& f, int cell,
                                     const BasisEval& b, const CellGeometry& g) {
    const FunctionSpace& s = *f.space;
    double v[3] = {0, 0, 0}, gx[3] = {0, 0, 0}, gy[3] = {0, 0, 0};
    for (int i = 0; i < b.n; ++i) {
        const int node = s.cell_nodes[cell][i];
        const Vec2 gp = phys_grad(g, b, i);
        for (int c = 0; c < s.ncomp; ++c) {
            const double u = f.coeffs[s.dof(node, c)];
            v[c] += b.val[i] * u;
            gx[c] += gp.x * u;
            gy[c] += gp.y * u;
        }
    }
    TensorSample out;
    out.val = expand_sym(s.shape, v);
    out.dx = expand_sym(s.shape, gx);
    out.dy = expand_sym(s.shape, gy);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage 1 (Navier-Stokes-like) system over (u, pi).  With lambda1 = 0 or
// no lagged fields this is the plain steady Navier-Stokes weak form.
// Unknown layout: [u dofs][pi dofs]; Dirichlet rows become identity.
// ---------------------------------------------------------------------------
class Stage1Form {
  public:
    // Lagged fields from the previous outer iteration; any may be null
    // (treated as zero, which reduces the right side to f alone).
    Stage1Form(const FunctionSpace& Vu, const FunctionSpace& Qpi,
               const ModelParams& params, VectorField body_force,
               const FEFunction* u_prev = nullptr,
               const FEFunction* p_prev = nullptr,
               const FEFunction* T_prev = nullptr)
        : Vu_(&Vu), Qpi_(&Qpi), params_(params),
          body_force_(std::move(body_force)), u_prev_(u_prev), p_prev_(p_prev),
          T_prev_(T_prev) {
        n_u_ = Vu.n_dofs;
        n_total_ = n_u_ + Qpi.n_dofs;
        constrained_.assign(n_total_, 0);
    }

    int n_dofs() const { return n_total_; }
    int pressure_offset() const { return n_u_; }

    void set_constraints(std::vector<DirichletConstraint> cs) {
        constraints_ = std::move(cs);
        constrained_.assign(n_total_, 0);
        for (const auto& c : constraints_) constrained_[c.dof] = 1;
    }
    const std::vector<DirichletConstraint>& constraints() const {
        return constraints_;
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n_total_);
        assemble<false>(x, r, nullptr);
        for (const auto& c : constraints_) r[c.dof] = x[c.dof] - c.value;
        return r;
    }

    SparseMatrix jacobian(const Eigen::VectorXd& x) const {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n_total_);
        std::vector<Triplet> ts;
        ts.reserve((size_t)Vu_->mesh->n_cells() * kLocal * kLocal);
        assemble<true>(x, r, &ts);
        for (const auto& c : constraints_) ts.push_back({c.dof, c.dof, 1.0});
        return triplet_assemble(n_total_, n_total_, ts);
    }

    NewtonCallbacks callbacks() const {
        return {[this](const Eigen::VectorXd& x) { return residual(x); },
                [this](const Eigen::VectorXd& x) { return jacobian(x); }};
    }

  private:
    static constexpr int kLocal = 15;  // 6 u-nodes x 2 + 3 pi-nodes

    template <bool WithJacobian>
    void assemble(const Eigen::VectorXd& x, Eigen::VectorXd& r,
                  std::vector<Triplet>* ts) const {
        using S = std::conditional_t<WithJacobian, Dual<kLocal>, double>;
        const auto& qd = detail::quad_data();
        const Mesh& mesh = *Vu_->mesh;
        const double eta0 = params_.eta0;
        const double l1 = params_.lambda1;
        const double lm = params_.lambda1 - params_.mu1;
        const bool has_prev = u_prev_ != nullptr && l1 != 0.0;

        std::array<int, kLocal> gdof;
        std::array<S, kLocal> xu;
        std::array<S, kLocal> rloc;

        for (int cell = 0; cell < mesh.n_cells(); ++cell) {
            const CellGeometry g = cell_geometry(mesh, cell);
            for (int i = 0; i < 6; ++i) {
                const int node = Vu_->cell_nodes[cell][i];
                gdof[2 * i] = Vu_->dof(node, 0);
                gdof[2 * i + 1] = Vu_->dof(node, 1);
            }
            for (int j = 0; j < 3; ++j)
                gdof[12 + j] = n_u_ + Qpi_->cell_nodes[cell][j];
            for (int k = 0; k < kLocal; ++k) {
                if constexpr (WithJacobian)
                    xu[k] = Dual<kLocal>::seeded(x[gdof[k]], k);
                else
                    xu[k] = x[gdof[k]];
                rloc[k] = S(0.0);
            }

            for (size_t q = 0; q < qd.rule.points.size(); ++q) {
                const BasisEval& b2 = qd.p2[q];
                const BasisEval& b1 = qd.p1[q];
                const double w = qd.rule.points[q].weight * g.detJ;

                // current-iterate fields
                Vec2T<S> u{S(0.0), S(0.0)};
                Mat2T<S> grad_u;
                S pi(0.0);
                std::array<Vec2, 6> gphi;
                for (int i = 0; i < 6; ++i) {
                    gphi[i] = phys_grad(g, b2, i);
                    const S ux = xu[2 * i], uy = xu[2 * i + 1];
                    u.x += b2.val[i] * ux;
                    u.y += b2.val[i] * uy;
                    grad_u(0, 0) += gphi[i].x * ux;
                    grad_u(0, 1) += gphi[i].y * ux;
                    grad_u(1, 0) += gphi[i].x * uy;
                    grad_u(1, 1) += gphi[i].y * uy;
                }
                for (int j = 0; j < 3; ++j) pi += b1.val[j] * xu[12 + j];
                const S div_u = grad_u(0, 0) + grad_u(1, 1);
                // convective term (grad u) . u
                const Vec2T<S> conv = matvec(grad_u, u);

                // lagged right side F
                const Vec2 xq = map_to_physical(g, qd.rule.points[q].bary);
                const Vec2 f = body_force_ ? body_force_(xq) : Vec2{0.0, 0.0};
                Vec2 uprev{0, 0};
                Mat2 A{};  // lumped tensor tested against grad v
                Vec2 adv_prev{0, 0};
                double p_prev_val = 0.0;
                if (has_prev) {
                    const auto us = detail::sample_vector(*u_prev_, cell, b2, g);
                    uprev = us.val;
                    adv_prev = matvec(us.grad, us.val);
                    if (p_prev_) {
                        const auto ps = detail::sample_scalar(*p_prev_, cell, b1, g);
                        p_prev_val = ps.val;
                    }
                    Mat2 Tprev{};
                    if (T_prev_) {
                        const auto tsamp =
                            detail::sample_symtensor(*T_prev_, cell, b2, g);
                        Tprev = tsamp.val;
                    }
                    const Mat2 Dprev = deformation(us.grad);
                    // -l1 p (grad u)^t : grad v  - l1 (grad u . T) : grad v
                    // + (l1 - mu1) (D.T + T.D) : grad v
                    A = scale(transpose(us.grad), -l1 * p_prev_val) -
                        scale(matmul(us.grad, Tprev), l1) +
                        scale(matmul(Dprev, Tprev) + matmul(Tprev, Dprev), lm);
                }

                // velocity test functions v = phi_i e_c
                for (int i = 0; i < 6; ++i) {
                    const double phi = b2.val[i];
                    const Vec2 gp = gphi[i];
                    const double ugv = has_prev ? uprev.x * gp.x + uprev.y * gp.y : 0.0;
                    for (int c = 0; c < 2; ++c) {
                        S term =
                            eta0 * (grad_u(c, 0) * gp.x + grad_u(c, 1) * gp.y);
                        term += (c == 0 ? conv.x : conv.y) * phi;
                        term -= pi * (c == 0 ? gp.x : gp.y);
                        // right side F tested against v (constant in x)
                        double rhs = (c == 0 ? f.x : f.y) * phi;
                        if (has_prev) {
                            rhs -= l1 * (c == 0 ? f.x : f.y) * ugv;
                            rhs += l1 * (c == 0 ? adv_prev.x : adv_prev.y) * ugv;
                            rhs += A(c, 0) * gp.x + A(c, 1) * gp.y;
                        }
                        rloc[2 * i + c] += (term - rhs) * w;
                    }
                }
                // pressure test functions
                for (int j = 0; j < 3; ++j)
                    rloc[12 + j] += div_u * (b1.val[j] * w);
            }

            for (int k = 0; k < kLocal; ++k) {
                const int row = gdof[k];
                if (constrained_[row]) continue;
                r[row] += value_of(rloc[k]);
                if constexpr (WithJacobian) {
                    for (int l = 0; l < kLocal; ++l) {
                        const double d = rloc[k].d[l];
                        if (d != 0.0) ts->push_back({row, gdof[l], d});
                    }
                }
            }
        }
    }

    const FunctionSpace *Vu_, *Qpi_;
    ModelParams params_;
    VectorField body_force_;
    const FEFunction *u_prev_, *p_prev_, *T_prev_;
    int n_u_ = 0, n_total_ = 0;
    std::vector<DirichletConstraint> constraints_;
    std::vector<char> constrained_;
};

// ---------------------------------------------------------------------------
// Stage 2: pressure transport.  Galerkin system for
//   (p + lambda1 u . grad p, r) = (pi, r),  P1 trial/test, no BCs.
// ---------------------------------------------------------------------------
inline std::pair<SparseMatrix, Eigen::VectorXd> assemble_stage2(
    const FEFunction& u, const FEFunction& pi, const FunctionSpace& Qp,
    double lambda1, bool supg = false) {
    const auto& qd = detail::quad_data();
    const Mesh& mesh = *Qp.mesh;
    std::vector<Triplet> ts;
    ts.reserve((size_t)mesh.n_cells() * 9);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Qp.n_dofs);
    for (int cell = 0; cell < mesh.n_cells(); ++cell) {
        const CellGeometry g = cell_geometry(mesh, cell);
        const double hc = cell_diameter(mesh, cell);
        double local[3][3] = {};
        for (size_t q = 0; q < qd.rule.points.size(); ++q) {
            const BasisEval& b1 = qd.p1[q];
            const BasisEval& b2 = qd.p2[q];
            const double w = qd.rule.points[q].weight * g.detJ;
            const auto us = detail::sample_vector(u, cell, b2, g);
            const auto pis = detail::sample_scalar(pi, cell, b1, g);
            Vec2 gp[3];
            for (int i = 0; i < 3; ++i) gp[i] = phys_grad(g, b1, i);
            for (int i = 0; i < 3; ++i) {
                const double test =
                    b1.val[i] +
                    (supg ? hc * (us.val.x * gp[i].x + us.val.y * gp[i].y) : 0.0);
                for (int j = 0; j < 3; ++j) {
                    const double trial =
                        b1.val[j] +
                        lambda1 * (us.val.x * gp[j].x + us.val.y * gp[j].y);
                    local[i][j] += trial * test * w;
                }
                rhs[Qp.cell_nodes[cell][i]] += pis.val * test * w;
            }
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                ts.push_back({Qp.cell_nodes[cell][i], Qp.cell_nodes[cell][j],
                              local[i][j]});
    }
    return {triplet_assemble(Qp.n_dofs, Qp.n_dofs, ts), rhs};
}

// ---------------------------------------------------------------------------
// Stage 3: constitutive transport for T (P2 symmetric tensors), linear in
// T, no BCs.
// ---------------------------------------------------------------------------
inline std::pair<SparseMatrix, Eigen::VectorXd> assemble_stage3(
    const FEFunction& u, const FunctionSpace& St, const ModelParams& params,
    bool supg = false) {
    const auto& qd = detail::quad_data();
    const Mesh& mesh = *St.mesh;
    std::vector<Triplet> ts;
    ts.reserve((size_t)mesh.n_cells() * 18 * 18);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(St.n_dofs);
    for (int cell = 0; cell < mesh.n_cells(); ++cell) {
        const CellGeometry g = cell_geometry(mesh, cell);
        const double hc = cell_diameter(mesh, cell);
        double local[18][18] = {};
        for (size_t q = 0; q < qd.rule.points.size(); ++q) {
            const BasisEval& b2 = qd.p2[q];
            const double w = qd.rule.points[q].weight * g.detJ;
            const auto us = detail::sample_vector(u, cell, b2, g);
            const Mat2 D = deformation(us.grad);
            const Mat2 W = spin(us.grad);
            Vec2 gp[6];
            for (int i = 0; i < 6; ++i) gp[i] = phys_grad(g, b2, i);
            // operator applied to each component basis tensor
            Mat2 LE[3];
            for (int c = 0; c < 3; ++c) {
                const Mat2& E = detail::sym_basis(c);
                LE[c] = scale(E, 1.0) +
                        scale(matmul(W, E) - matmul(E, W), params.lambda1) -
                        scale(matmul(D, E) + matmul(E, D), params.mu1);
            }
            for (int i = 0; i < 6; ++i) {
                const double test_i =
                    b2.val[i] +
                    (supg ? hc * (us.val.x * gp[i].x + us.val.y * gp[i].y) : 0.0);
                for (int m = 0; m < 3; ++m) {
                    for (int j = 0; j < 6; ++j) {
                        const double adv =
                            params.lambda1 *
                            (us.val.x * gp[j].x + us.val.y * gp[j].y);
                        for (int c = 0; c < 3; ++c) {
                            // L(phi_j E_c) : E_m weighting, including the
                            // advective part phi -> u.grad phi
                            local[3 * i + m][3 * j + c] +=
                                (b2.val[j] * detail::sym_contract(LE[c], m) +
                                 adv * detail::sym_contract(detail::sym_basis(c), m)) *
                                test_i * w;
                        }
                    }
                    rhs[St.dof(St.cell_nodes[cell][i], m)] +=
                        2.0 * params.eta0 * detail::sym_contract(D, m) * test_i * w;
                }
            }
        }
        for (int i = 0; i < 6; ++i)
            for (int m = 0; m < 3; ++m)
                for (int j = 0; j < 6; ++j)
                    for (int c = 0; c < 3; ++c)
                        ts.push_back({St.dof(St.cell_nodes[cell][i], m),
                                      St.dof(St.cell_nodes[cell][j], c),
                                      local[3 * i + m][3 * j + c]});
    }
    return {triplet_assemble(St.n_dofs, St.n_dofs, ts), rhs};
}

// ---------------------------------------------------------------------------
// Coupled EVSS system over (u, p, Sigma, D) with optional SUPG on the
// constitutive block.  Unknown layout: [u][p][Sigma][D].
// ---------------------------------------------------------------------------
class EVSSForm {
  public:
    EVSSForm(const FunctionSpace& Vu, const FunctionSpace& Qp,
             const FunctionSpace& SSig, const FunctionSpace& SD,
             const ModelParams& params, VectorField body_force, bool supg)
        : Vu_(&Vu), Qp_(&Qp), SSig_(&SSig), SD_(&SD), params_(params),
          body_force_(std::move(body_force)), supg_(supg) {
        off_p_ = Vu.n_dofs;
        off_sig_ = off_p_ + Qp.n_dofs;
        off_d_ = off_sig_ + SSig.n_dofs;
        n_total_ = off_d_ + SD.n_dofs;
        constrained_.assign(n_total_, 0);
    }

    int n_dofs() const { return n_total_; }
    int pressure_offset() const { return off_p_; }
    int sigma_offset() const { return off_sig_; }
    int d_offset() const { return off_d_; }

    void set_constraints(std::vector<DirichletConstraint> cs) {
        constraints_ = std::move(cs);
        constrained_.assign(n_total_, 0);
        for (const auto& c : constraints_) constrained_[c.dof] = 1;
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n_total_);
        assemble<false>(x, r, nullptr);
        for (const auto& c : constraints_) r[c.dof] = x[c.dof] - c.value;
        return r;
    }

    SparseMatrix jacobian(const Eigen::VectorXd& x) const {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n_total_);
        std::vector<Triplet> ts;
        ts.reserve((size_t)Vu_->mesh->n_cells() * kLocal * kLocal / 2);
        assemble<true>(x, r, &ts);
        for (const auto& c : constraints_) ts.push_back({c.dof, c.dof, 1.0});
        return triplet_assemble(n_total_, n_total_, ts);
    }

    NewtonCallbacks callbacks() const {
        return {[this](const Eigen::VectorXd& x) { return residual(x); },
                [this](const Eigen::VectorXd& x) { return jacobian(x); }};
    }

  private:
    static constexpr int kLocal = 39;  // 12 u + 3 p + 18 Sigma + 6 D

    template <bool WithJacobian>
    void assemble(const Eigen::VectorXd& x, Eigen::VectorXd& r,
                  std::vector<Triplet>* ts) const {
        using S = std::conditional_t<WithJacobian, Dual<kLocal>, double>;
        const auto& qd = detail::quad_data();
        const Mesh& mesh = *Vu_->mesh;
        const double eta0 = params_.eta0;
        const double l1 = params_.lambda1;
        const double lm = params_.lambda1 - params_.mu1;

        std::array<int, kLocal> gdof;
        std::array<S, kLocal> xu;
        std::array<S, kLocal> rloc;

        for (int cell = 0; cell < mesh.n_cells(); ++cell) {
            const CellGeometry g = cell_geometry(mesh, cell);
            const double hc = cell_diameter(mesh, cell);
            for (int i = 0; i < 6; ++i) {
                const int node = Vu_->cell_nodes[cell][i];
                gdof[2 * i] = Vu_->dof(node, 0);
                gdof[2 * i + 1] = Vu_->dof(node, 1);
            }
            for (int j = 0; j < 3; ++j)
                gdof[12 + j] = off_p_ + Qp_->cell_nodes[cell][j];
            for (int i = 0; i < 6; ++i)
                for (int c = 0; c < 3; ++c)
                    gdof[15 + 3 * i + c] =
                        off_sig_ + SSig_->dof(SSig_->cell_nodes[cell][i], c);
            for (int i = 0; i < 3; ++i)
                for (int c = 0; c < 2; ++c)
                    gdof[33 + 2 * i + c] =
                        off_d_ + SD_->dof(SD_->cell_nodes[cell][i], c);
            for (int k = 0; k < kLocal; ++k) {
                if constexpr (WithJacobian)
                    xu[k] = Dual<kLocal>::seeded(x[gdof[k]], k);
                else
                    xu[k] = x[gdof[k]];
                rloc[k] = S(0.0);
            }

            for (size_t q = 0; q < qd.rule.points.size(); ++q) {
                const BasisEval& b2 = qd.p2[q];
                const BasisEval& b1 = qd.p1[q];
                const double w = qd.rule.points[q].weight * g.detJ;
                std::array<Vec2, 6> gphi2;
                std::array<Vec2, 3> gphi1;
                for (int i = 0; i < 6; ++i) gphi2[i] = phys_grad(g, b2, i);
                for (int i = 0; i < 3; ++i) gphi1[i] = phys_grad(g, b1, i);

                // velocity and pressure
                Vec2T<S> u{S(0.0), S(0.0)};
                Mat2T<S> grad_u;
                S p(0.0);
                for (int i = 0; i < 6; ++i) {
                    const S ux = xu[2 * i], uy = xu[2 * i + 1];
                    u.x += b2.val[i] * ux;
                    u.y += b2.val[i] * uy;
                    grad_u(0, 0) += gphi2[i].x * ux;
                    grad_u(0, 1) += gphi2[i].y * ux;
                    grad_u(1, 0) += gphi2[i].x * uy;
                    grad_u(1, 1) += gphi2[i].y * uy;
                }
                for (int j = 0; j < 3; ++j) p += b1.val[j] * xu[12 + j];
                const S div_u = grad_u(0, 0) + grad_u(1, 1);
                const Vec2T<S> conv = matvec(grad_u, u);

                // Sigma, D and their spatial derivatives
                S sig_c[3] = {S(0.0), S(0.0), S(0.0)};
                S sig_dx[3] = {S(0.0), S(0.0), S(0.0)};
                S sig_dy[3] = {S(0.0), S(0.0), S(0.0)};
                for (int i = 0; i < 6; ++i)
                    for (int c = 0; c < 3; ++c) {
                        const S& v = xu[15 + 3 * i + c];
                        sig_c[c] += b2.val[i] * v;
                        sig_dx[c] += gphi2[i].x * v;
                        sig_dy[c] += gphi2[i].y * v;
                    }
                S d_c[2] = {S(0.0), S(0.0)};
                S d_dx[2] = {S(0.0), S(0.0)};
                S d_dy[2] = {S(0.0), S(0.0)};
                for (int i = 0; i < 3; ++i)
                    for (int c = 0; c < 2; ++c) {
                        const S& v = xu[33 + 2 * i + c];
                        d_c[c] += b1.val[i] * v;
                        d_dx[c] += gphi1[i].x * v;
                        d_dy[c] += gphi1[i].y * v;
                    }
                const Mat2T<S> Sig = expand_sym(ValueShape::symtensor2, sig_c);
                const Mat2T<S> Dvar =
                    expand_sym(ValueShape::symtensor2_traceless, d_c);

                const Vec2 xq = map_to_physical(g, qd.rule.points[q].bary);
                const Vec2 f = body_force_ ? body_force_(xq) : Vec2{0.0, 0.0};

                // momentum block
                for (int i = 0; i < 6; ++i) {
                    const double phi = b2.val[i];
                    const Vec2 gp = gphi2[i];
                    for (int c = 0; c < 2; ++c) {
                        S term =
                            eta0 * (grad_u(c, 0) * gp.x + grad_u(c, 1) * gp.y);
                        term += (c == 0 ? conv.x : conv.y) * phi;
                        term -= p * (c == 0 ? gp.x : gp.y);
                        term += Sig(c, 0) * gp.x + Sig(c, 1) * gp.y;
                        term -= (c == 0 ? f.x : f.y) * phi;
                        rloc[2 * i + c] += term * w;
                    }
                }
                // continuity block
                for (int j = 0; j < 3; ++j)
                    rloc[12 + j] += div_u * (b1.val[j] * w);

                // constitutive block: G = Sigma + 2 eta0 D
                // K = Sigma + l1 (u.grad G - grad_u.G - G.grad_u^t)
                //       + (l1 - mu1) (D(u).G + G.D(u))
                const Mat2T<S> G = Sig + scale(Dvar, 2.0 * eta0);
                // spatial derivatives of G, then the advective derivative
                S g_dx[3] = {sig_dx[0] + 2.0 * eta0 * d_dx[0],
                             sig_dx[1] + 2.0 * eta0 * d_dx[1],
                             sig_dx[2] - 2.0 * eta0 * d_dx[0]};
                S g_dy[3] = {sig_dy[0] + 2.0 * eta0 * d_dy[0],
                             sig_dy[1] + 2.0 * eta0 * d_dy[1],
                             sig_dy[2] - 2.0 * eta0 * d_dy[0]};
                const Mat2T<S> Gdx = expand_sym(ValueShape::symtensor2, g_dx);
                const Mat2T<S> Gdy = expand_sym(ValueShape::symtensor2, g_dy);
                const Mat2T<S> advG = scale(Gdx, u.x) + scale(Gdy, u.y);
                const Mat2T<S> Du = deformation(grad_u);
                const Mat2T<S> K =
                    Sig +
                    scale(advG - matmul(grad_u, G) - matmul(G, transpose(grad_u)),
                          S(l1)) +
                    scale(matmul(Du, G) + matmul(G, Du), S(lm));
                const S Km[3] = {detail::sym_contract(K, 0),
                                 detail::sym_contract(K, 1),
                                 detail::sym_contract(K, 2)};
                for (int i = 0; i < 6; ++i) {
                    S test = S(b2.val[i]);
                    if (supg_)
                        test += hc * (u.x * gphi2[i].x + u.y * gphi2[i].y);
                    for (int m = 0; m < 3; ++m)
                        rloc[15 + 3 * i + m] += Km[m] * test * w;
                }

                // D-projection block: (2 D - grad_u - grad_u^t) : Phi
                const Mat2T<S> P =
                    scale(Dvar, 2.0) - grad_u - transpose(grad_u);
                const S Pm[2] = {detail::traceless_contract(P, 0),
                                 detail::traceless_contract(P, 1)};
                for (int i = 0; i < 3; ++i)
                    for (int m = 0; m < 2; ++m)
                        rloc[33 + 2 * i + m] += Pm[m] * (b1.val[i] * w);
            }

            for (int k = 0; k < kLocal; ++k) {
                const int row = gdof[k];
                if (constrained_[row]) continue;
                r[row] += value_of(rloc[k]);
                if constexpr (WithJacobian) {
                    for (int l = 0; l < kLocal; ++l) {
                        const double d = rloc[k].d[l];
                        if (d != 0.0) ts->push_back({row, gdof[l], d});
                    }
                }
            }
        }
    }

    const FunctionSpace *Vu_, *Qp_, *SSig_, *SD_;
    ModelParams params_;
    VectorField body_force_;
    bool supg_;
    int off_p_ = 0, off_sig_ = 0, off_d_ = 0, n_total_ = 0;
    std::vector<DirichletConstraint> constraints_;
    std::vector<char> constrained_;
};

// Norm of the discrete continuity residual of u against all P1 test
// functions; diagnostic for the divergence constraint.
inline double divergence_residual_norm(const FEFunction& u,
                                       const FunctionSpace& Qp) {
    const auto& qd = detail::quad_data();
    const Mesh& mesh = *Qp.mesh;
    Eigen::VectorXd r = Eigen::VectorXd::Zero(Qp.n_dofs);
    for (int cell = 0; cell < mesh.n_cells(); ++cell) {
        const CellGeometry g = cell_geometry(mesh, cell);
        for (size_t q = 0; q < qd.rule.points.size(); ++q) {
            const auto us = detail::sample_vector(u, cell, qd.p2[q], g);
            const double div = us.grad(0, 0) + us.grad(1, 1);
            const double w = qd.rule.points[q].weight * g.detJ;
            for (int j = 0; j < 3; ++j)
                r[Qp.cell_nodes[cell][j]] += div * qd.p1[q].val[j] * w;
        }
    }
    return r.norm();
}

}  // namespace visco2d

#endif
