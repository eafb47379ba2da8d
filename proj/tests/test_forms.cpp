#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "visco2d/forms.hpp"
#include "visco2d/solvers.hpp"

using namespace visco2d;

namespace {

FEFunction interpolate_vec(const FunctionSpace& s,
                           const std::function<Vec2(const Vec2&)>& f) {
    FEFunction out(s);
    for (int n = 0; n < s.n_nodes; ++n) {
        const Vec2 v = f(s.dof_coords[n]);
        out.coeffs[s.dof(n, 0)] = v.x;
        out.coeffs[s.dof(n, 1)] = v.y;
    }
    return out;
}

FEFunction interpolate_scalar(const FunctionSpace& s,
                              const std::function<double(const Vec2&)>& f) {
    FEFunction out(s);
    for (int n = 0; n < s.n_nodes; ++n) out.coeffs[n] = f(s.dof_coords[n]);
    return out;
}

// central-difference check of J d against r(x +- eps d)
double jacobian_fd_error(const NewtonCallbacks& cb, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& d) {
    const double eps = 1e-6;
    const SparseMatrix J = cb.jacobian(x);
    const Eigen::VectorXd jd = J.multiply(d);
    const Eigen::VectorXd fd =
        (cb.residual(x + eps * d) - cb.residual(x - eps * d)) / (2.0 * eps);
    return (jd - fd).norm() / std::max(1.0, jd.norm());
}

}  // namespace

TEST_CASE("stage 1 residual vanishes at zero state with zero data", "[forms]") {
    const Mesh m = unit_square_mesh(4);
    const FlowSpaces sp = make_flow_spaces(m);
    Stage1Form form(sp.Vu, sp.Qp, ucm_params(1.0, 0.1), {});
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(form.n_dofs());
    CHECK(form.residual(x).norm() < 1e-13);
}

TEST_CASE("lagged fields are inert when lambda1 = 0", "[forms]") {
    const Mesh m = unit_square_mesh(4);
    const FlowSpaces sp = make_flow_spaces(m);
    FEFunction u_prev = interpolate_vec(sp.Vu, [](const Vec2& v) {
        return Vec2{v.y * v.y, -v.x};
    });
    FEFunction p_prev = interpolate_scalar(sp.Qp, [](const Vec2& v) { return v.x; });
    FEFunction T_prev(sp.St);
    T_prev.coeffs.setConstant(0.7);
    const ModelParams newtonian{1.0, 0.0, 0.0};
    const VectorField f = [](const Vec2& v) { return Vec2{v.x, -v.y}; };
    Stage1Form with_lag(sp.Vu, sp.Qp, newtonian, f, &u_prev, &p_prev, &T_prev);
    Stage1Form without(sp.Vu, sp.Qp, newtonian, f);
    std::mt19937 rng(2);
    std::normal_distribution<double> dist;
    Eigen::VectorXd x(with_lag.n_dofs());
    for (int i = 0; i < x.size(); ++i) x[i] = 0.1 * dist(rng);
    CHECK((with_lag.residual(x) - without.residual(x)).norm() < 1e-12);
}

TEST_CASE("stage 1 and EVSS Jacobians match finite differences", "[forms]") {
    const Mesh m = unit_square_mesh(4);
    const FlowSpaces sp = make_flow_spaces(m);
    std::mt19937 rng(4);
    std::normal_distribution<double> dist;

    FEFunction u_prev = interpolate_vec(sp.Vu, [](const Vec2& v) {
        return Vec2{std::sin(v.y), v.x * v.y};
    });
    FEFunction p_prev = interpolate_scalar(sp.Qp, [](const Vec2& v) { return v.y; });
    FEFunction T_prev(sp.St);
    for (int i = 0; i < T_prev.coeffs.size(); ++i)
        T_prev.coeffs[i] = 0.2 * dist(rng);
    const VectorField f = [](const Vec2& v) { return Vec2{v.y, v.x}; };

    Stage1Form s1(sp.Vu, sp.Qp, {1.0, 0.1, 0.04}, f, &u_prev, &p_prev, &T_prev);
    s1.set_constraints({{0, 0.5}, {7, -0.25}});
    EVSSForm evss_g(sp.Vu, sp.Qp, sp.St, sp.Sd, {1.0, 0.1, 0.04}, f, false);
    EVSSForm evss_supg(sp.Vu, sp.Qp, sp.St, sp.Sd, {1.0, 0.1, 0.04}, f, true);

    const auto check_form = [&](const NewtonCallbacks& cb, int n) {
        for (int state = 0; state < 2; ++state) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
            if (state == 1)
                for (int i = 0; i < n; ++i) x[i] = 0.3 * dist(rng);
            for (int dir = 0; dir < 2; ++dir) {
                Eigen::VectorXd d(n);
                for (int i = 0; i < n; ++i) d[i] = dist(rng);
                CHECK(jacobian_fd_error(cb, x, d) < 1e-6);
            }
        }
    };
    check_form(s1.callbacks(), s1.n_dofs());
    check_form(evss_g.callbacks(), evss_g.n_dofs());
    check_form(evss_supg.callbacks(), evss_supg.n_dofs());
}

TEST_CASE("stage 2 reduces to a projection when transport is off", "[forms]") {
    const Mesh m = unit_square_mesh(6);
    const FlowSpaces sp = make_flow_spaces(m);
    const FEFunction pi =
        interpolate_scalar(sp.Qp, [](const Vec2& v) { return v.x - v.y; });

    // lambda1 = 0: mass matrix on both sides, p = pi
    FEFunction u = interpolate_vec(sp.Vu, [](const Vec2& v) {
        return Vec2{v.y, v.x};
    });
    auto [A0, b0] = assemble_stage2(u, pi, sp.Qp, 0.0);
    CHECK((lu_solve(A0, b0) - pi.coeffs).lpNorm<Eigen::Infinity>() < 1e-12);

    // u = 0: the transport term drops regardless of lambda1
    FEFunction zero(sp.Vu);
    auto [Az, bz] = assemble_stage2(zero, pi, sp.Qp, 0.3);
    CHECK((lu_solve(Az, bz) - pi.coeffs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("stage 2 solves a manufactured transport problem", "[forms]") {
    // u = (1, 0), pi = x + lambda1: then p + lambda1 p_x = pi gives p = x
    const Mesh m = unit_square_mesh(20);
    const FlowSpaces sp = make_flow_spaces(m);
    const double l1 = 0.2;
    const FEFunction u =
        interpolate_vec(sp.Vu, [](const Vec2&) { return Vec2{1.0, 0.0}; });
    const FEFunction pi =
        interpolate_scalar(sp.Qp, [l1](const Vec2& v) { return v.x + l1; });
    auto [A, b] = assemble_stage2(u, pi, sp.Qp, l1);
    const Eigen::VectorXd p = lu_solve(A, b);
    const FEFunction px =
        interpolate_scalar(sp.Qp, [](const Vec2& v) { return v.x; });
    CHECK((p - px.coeffs).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("stage 3 projects the Newtonian stress when lambda1 = mu1 = 0",
          "[forms]") {
    const Mesh m = unit_square_mesh(6);
    const FlowSpaces sp = make_flow_spaces(m);
    const double eta0 = 2.0;
    // u = (y, 0): 2 eta0 D = [[0, 2],[2, 0]] constant
    const FEFunction u =
        interpolate_vec(sp.Vu, [](const Vec2& v) { return Vec2{v.y, 0.0}; });
    auto [A, b] = assemble_stage3(u, sp.St, {eta0, 0.0, 0.0});
    const Eigen::VectorXd T = lu_solve(A, b);
    for (int n = 0; n < sp.St.n_nodes; ++n) {
        CHECK(std::abs(T[sp.St.dof(n, 0)]) < 1e-12);
        CHECK(std::abs(T[sp.St.dof(n, 1)] - eta0) < 1e-12);
        CHECK(std::abs(T[sp.St.dof(n, 2)]) < 1e-12);
    }
}

TEST_CASE("stage 3 stress vanishes for zero flow and rigid rotation", "[forms]") {
    const Mesh m = unit_square_mesh(6);
    const FlowSpaces sp = make_flow_spaces(m);
    const ModelParams params = ucm_params(1.0, 0.1);

    FEFunction zero(sp.Vu);
    auto [Az, bz] = assemble_stage3(zero, sp.St, params);
    CHECK(lu_solve(Az, bz).lpNorm<Eigen::Infinity>() < 1e-12);

    // rigid rotation u = (-y, x): D = 0, so T = 0 despite W != 0
    const FEFunction rot =
        interpolate_vec(sp.Vu, [](const Vec2& v) { return Vec2{-v.y, v.x}; });
    auto [Ar, br] = assemble_stage3(rot, sp.St, params);
    CHECK(lu_solve(Ar, br).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("divergence residual of a solenoidal interpolant", "[forms]") {
    const Mesh m = unit_square_mesh(6);
    const FlowSpaces sp = make_flow_spaces(m);
    const FEFunction shear =
        interpolate_vec(sp.Vu, [](const Vec2& v) { return Vec2{v.y, 0.0}; });
    CHECK(divergence_residual_norm(shear, sp.Qp) < 1e-14);
    const FEFunction expanding =
        interpolate_vec(sp.Vu, [](const Vec2& v) { return Vec2{v.x, v.y}; });
    CHECK(divergence_residual_norm(expanding, sp.Qp) > 1e-2);
}

TEST_CASE("constrained rows become identity rows", "[forms]") {
    const Mesh m = unit_square_mesh(3);
    const FlowSpaces sp = make_flow_spaces(m);
    Stage1Form form(sp.Vu, sp.Qp, {1.0, 0.0, 0.0}, {});
    form.set_constraints({{3, 1.5}});
    Eigen::VectorXd x = Eigen::VectorXd::Zero(form.n_dofs());
    x[3] = 0.25;
    const Eigen::VectorXd r = form.residual(x);
    CHECK(r[3] == 0.25 - 1.5);
    const SparseMatrix J = form.jacobian(x);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(form.n_dofs());
    e[3] = 1.0;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(form.n_dofs());
    for (int c = 0; c < form.n_dofs(); ++c)
        row[c] = J.m.coeff(3, c);
    CHECK((row - e).norm() == 0.0);
}
