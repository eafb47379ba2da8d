#ifndef VISCO2D_SOLVERS_HPP
#define VISCO2D_SOLVERS_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "visco2d/fem_ops.hpp"
#include "visco2d/forms.hpp"
#include "visco2d/linalg.hpp"

namespace visco2d {

// Discrete spaces shared by all solvers on one mesh:
// P2 velocity, P1 pressure, P2 symmetric stress, P1 traceless tensor.
struct FlowSpaces {
    const Mesh* mesh = nullptr;
    FunctionSpace Vu, Qp, St, Sd;
};

inline FlowSpaces make_flow_spaces(const Mesh& mesh) {
    FlowSpaces s;
    s.mesh = &mesh;
    s.Vu = build_space(mesh, Family::P2, ValueShape::vector2);
    s.Qp = build_space(mesh, Family::P1, ValueShape::scalar);
    s.St = build_space(mesh, Family::P2, ValueShape::symtensor2);
    s.Sd = build_space(mesh, Family::P1, ValueShape::symtensor2_traceless);
    return s;
}

// Velocity Dirichlet data per boundary tag.
using BoundaryData = std::vector<std::pair<BoundaryTag, VectorField>>;

namespace detail {

inline std::vector<DirichletConstraint> velocity_constraints(
    const FunctionSpace& Vu, const BoundaryData& bc) {
    std::map<int, double> vals;
    for (const auto& [tag, g] : bc) {
        for (int node : boundary_nodes(Vu, tag)) {
            const Vec2 v = g(Vu.dof_coords[node]);
            vals[Vu.dof(node, 0)] = v.x;
            vals[Vu.dof(node, 1)] = v.y;
        }
    }
    std::vector<DirichletConstraint> cs;
    cs.reserve(vals.size());
    for (const auto& [dof, v] : vals) cs.push_back({dof, v});
    return cs;
}

// Lowest-index boundary vertex; its pressure dof is pinned to zero to
// remove the constant nullspace.
inline int pressure_pin_node(const Mesh& m) {
    std::vector<char> mark(m.n_vertices(), 0);
    for (int e = 0; e < m.n_edges(); ++e) {
        if (m.boundary_tags[e] == BoundaryTag::interior) continue;
        mark[m.edges[e][0]] = 1;
        mark[m.edges[e][1]] = 1;
    }
    for (int v = 0; v < m.n_vertices(); ++v)
        if (mark[v]) return v;
    throw std::runtime_error("pressure_pin_node: mesh has no boundary");
}

}  // namespace detail

struct NSEResult {
    FEFunction u, p;
    NewtonReport report;
    bool converged = false;
};

// Steady Navier-Stokes with Taylor-Hood elements; Newton from a zero
// initial guess (Dirichlet values imposed through the constraint rows).
inline NSEResult navier_stokes_solve(const FlowSpaces& spaces, double eta0,
                                     const VectorField& f,
                                     const BoundaryData& bc,
                                     double rtol = 1e-10, int max_iter = 50) {
    ModelParams newtonian{eta0, 0.0, 0.0};
    Stage1Form form(spaces.Vu, spaces.Qp, newtonian, f);
    auto cs = detail::velocity_constraints(spaces.Vu, bc);
    cs.push_back({form.pressure_offset() + detail::pressure_pin_node(*spaces.mesh), 0.0});
    form.set_constraints(std::move(cs));

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(form.n_dofs());
    auto [x, report] = newton_solve(form.callbacks(), x0, rtol, max_iter);

    NSEResult res;
    res.u = FEFunction(spaces.Vu);
    res.p = FEFunction(spaces.Qp);
    res.u.coeffs = x.head(spaces.Vu.n_dofs);
    res.p.coeffs = x.tail(spaces.Qp.n_dofs);
    demean(res.p);
    res.report = report;
    res.converged = report.converged;
    return res;
}

struct SRTDResult {
    FEFunction u, p, pi, T;
    int iterations = 0;                    // outer iterations performed
    std::vector<double> residual_history;  // relative L2 velocity increments
    std::vector<double> abs_increment_history;
    int best_iteration = 0;                // 1-based; iterate the fields are from
    bool converged = false;
    std::string message;
};

// Decoupled three-stage iteration.  Non-convergence is reported, never
// thrown: the minimum-residual iterate is returned.
inline SRTDResult srtd_solve(const FlowSpaces& spaces, const ModelParams& params,
                             const VectorField& f, const BoundaryData& bc,
                             double tol = 1e-9, int max_iter = 20,
                             bool supg = false) {
    SRTDResult res;
    res.u = FEFunction(spaces.Vu);
    res.p = FEFunction(spaces.Qp);
    res.pi = FEFunction(spaces.Qp);
    res.T = FEFunction(spaces.St);

    auto cs = detail::velocity_constraints(spaces.Vu, bc);
    const int pin = detail::pressure_pin_node(*spaces.mesh);

    FEFunction u_prev(spaces.Vu), p_prev(spaces.Qp), T_prev(spaces.St);
    FEFunction pi(spaces.Qp);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(spaces.Vu.n_dofs + spaces.Qp.n_dofs);
    double best = 1e300;

    for (int n = 1; n <= max_iter; ++n) {
        // stage 1: Navier-Stokes-like solve with lagged right side
        Stage1Form form(spaces.Vu, spaces.Qp, params, f, &u_prev, &p_prev,
                        &T_prev);
        auto cs1 = cs;
        cs1.push_back({form.pressure_offset() + pin, 0.0});
        form.set_constraints(std::move(cs1));
        NewtonReport newton;
        try {
            std::tie(x, newton) = newton_solve(form.callbacks(), x, 1e-10, 50);
        } catch (const SingularMatrixError& e) {
            res.message = std::string("stage 1 failed at iteration ") +
                          std::to_string(n) + ": " + e.what();
            return res;
        }
        if (!newton.converged) {
            res.message = "stage 1 Newton stalled at iteration " +
                          std::to_string(n);
            return res;
        }
        FEFunction u_n(spaces.Vu);
        u_n.coeffs = x.head(spaces.Vu.n_dofs);
        pi.coeffs = x.tail(spaces.Qp.n_dofs);

        // stage 2: pressure transport
        FEFunction p_n(spaces.Qp);
        // stage 3: constitutive transport
        FEFunction T_n(spaces.St);
        try {
            auto [A2, b2] = assemble_stage2(u_n, pi, spaces.Qp, params.lambda1, supg);
            p_n.coeffs = lu_solve(A2, b2);
            auto [A3, b3] = assemble_stage3(u_n, spaces.St, params, supg);
            T_n.coeffs = lu_solve(A3, b3);
        } catch (const SingularMatrixError& e) {
            res.message = std::string("transport stage failed at iteration ") +
                          std::to_string(n) + ": " + e.what();
            return res;
        }

        // relative velocity increment
        FEFunction diff(spaces.Vu);
        diff.coeffs = u_n.coeffs - u_prev.coeffs;
        const double inc = function_norm(diff, NormType::L2);
        const double denom = function_norm(u_n, NormType::L2);
        const double r = denom > 0.0 ? inc / denom : 0.0;
        res.residual_history.push_back(r);
        res.abs_increment_history.push_back(inc);
        res.iterations = n;
        if (r < best) {
            best = r;
            res.best_iteration = n;
            res.u = u_n;
            res.p = p_n;
            res.pi = pi;
            res.T = T_n;
        }
        u_prev = u_n;
        p_prev = p_n;
        T_prev = T_n;
        if (r <= tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged && res.message.empty())
        res.message = "outer iteration did not reach tolerance " +
                      std::to_string(tol);
    demean(res.p);
    return res;
}

struct EVSSResult {
    FEFunction u, p, T, Sigma, D;
    NewtonReport report;
    bool converged = false;
    bool solver_failure = false;  // singular Jacobian / breakdown
    std::string message;
};

// Coupled four-field Newton solve, warm-started from the Newtonian flow
// with Sigma = 0, D = 0.  Breakdown is caught and flagged, not thrown.
inline EVSSResult evss_solve(const FlowSpaces& spaces, const ModelParams& params,
                             const VectorField& f, const BoundaryData& bc,
                             bool supg = true, double rtol = 1e-9,
                             int max_iter = 50) {
    EVSSResult res;
    res.u = FEFunction(spaces.Vu);
    res.p = FEFunction(spaces.Qp);
    res.T = FEFunction(spaces.St);
    res.Sigma = FEFunction(spaces.St);
    res.D = FEFunction(spaces.Sd);

    EVSSForm form(spaces.Vu, spaces.Qp, spaces.St, spaces.Sd, params, f, supg);
    auto cs = detail::velocity_constraints(spaces.Vu, bc);
    cs.push_back({form.pressure_offset() + detail::pressure_pin_node(*spaces.mesh), 0.0});
    form.set_constraints(std::move(cs));

    Eigen::VectorXd x = Eigen::VectorXd::Zero(form.n_dofs());
    try {
        const NSEResult nse = navier_stokes_solve(spaces, params.eta0, f, bc);
        x.head(spaces.Vu.n_dofs) = nse.u.coeffs;
        x.segment(form.pressure_offset(), spaces.Qp.n_dofs) = nse.p.coeffs;
        NewtonReport report;
        std::tie(x, report) = newton_solve(form.callbacks(), x, rtol, max_iter);
        res.report = report;
        res.converged = report.converged;
        if (!res.converged)
            res.message = "Newton did not converge in " +
                          std::to_string(report.iterations) + " iterations";
    } catch (const SingularMatrixError& e) {
        res.solver_failure = true;
        res.message = e.what();
        return res;
    }

    res.u.coeffs = x.head(spaces.Vu.n_dofs);
    res.p.coeffs = x.segment(form.pressure_offset(), spaces.Qp.n_dofs);
    res.Sigma.coeffs = x.segment(form.sigma_offset(), spaces.St.n_dofs);
    Eigen::VectorXd d = x.segment(form.d_offset(), spaces.Sd.n_dofs);
    res.D.coeffs = d;
    demean(res.p);

    // recover T = Sigma + 2 eta0 D on the stress space; D is P1, so edge
    // midpoints average the endpoint values
    const Mesh& m = *spaces.mesh;
    const int V = m.n_vertices();
    for (int node = 0; node < spaces.St.n_nodes; ++node) {
        double dxx, dxy;
        if (node < V) {
            dxx = d[spaces.Sd.dof(node, 0)];
            dxy = d[spaces.Sd.dof(node, 1)];
        } else {
            const auto& e = m.edges[node - V];
            dxx = 0.5 * (d[spaces.Sd.dof(e[0], 0)] + d[spaces.Sd.dof(e[1], 0)]);
            dxy = 0.5 * (d[spaces.Sd.dof(e[0], 1)] + d[spaces.Sd.dof(e[1], 1)]);
        }
        res.T.coeffs[spaces.St.dof(node, 0)] =
            res.Sigma.coeffs[spaces.St.dof(node, 0)] + 2.0 * params.eta0 * dxx;
        res.T.coeffs[spaces.St.dof(node, 1)] =
            res.Sigma.coeffs[spaces.St.dof(node, 1)] + 2.0 * params.eta0 * dxy;
        res.T.coeffs[spaces.St.dof(node, 2)] =
            res.Sigma.coeffs[spaces.St.dof(node, 2)] - 2.0 * params.eta0 * dxx;
    }
    return res;
}

}  // namespace visco2d

#endif
