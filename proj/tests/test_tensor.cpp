#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "visco2d/tensor.hpp"

using namespace visco2d;

namespace {

Mat2 mat2(double a, double b, double c, double d) {
    Mat2 m;
    m(0, 0) = a;
    m(0, 1) = b;
    m(1, 0) = c;
    m(1, 1) = d;
    return m;
}

double frob(const Mat2& m) { return std::sqrt(contract(m, m)); }

Mat2 rotate(const Mat2& A, const Mat2& Q) {
    return matmul(Q, matmul(A, transpose(Q)));
}

}  // namespace

TEST_CASE("deformation and spin of a simple shear", "[tensor]") {
    // u = (y, 0): grad u = [[0,1],[0,0]]
    const Mat2 grad = mat2(0, 1, 0, 0);
    const Mat2 D = deformation(grad);
    const Mat2 W = spin(grad);
    CHECK(D(0, 0) == 0.0);
    CHECK(D(0, 1) == 0.5);
    CHECK(D(1, 0) == 0.5);
    CHECK(D(1, 1) == 0.0);
    CHECK(W(0, 0) == 0.0);
    CHECK(W(0, 1) == -0.5);
    CHECK(W(1, 0) == 0.5);
    CHECK(W(1, 1) == 0.0);
}

TEST_CASE("grad u = D - W for random gradients", "[tensor]") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        const Mat2 grad = mat2(dist(rng), dist(rng), dist(rng), dist(rng));
        const Mat2 back = deformation(grad) - spin(grad);
        CHECK(frob(back - grad) < 1e-15);
    }
}

TEST_CASE("model parameter helpers", "[tensor]") {
    const ModelParams ucm = ucm_params(2.0, 0.3);
    CHECK(ucm.eta0 == 2.0);
    CHECK(ucm.lambda1 == 0.3);
    CHECK(ucm.mu1 == 0.3);
    CHECK(ucm.valid());
    const ModelParams cor = corotational_params(1.0, 0.3);
    CHECK(cor.mu1 == 0.0);
    CHECK(cor.valid());
    CHECK_FALSE(ModelParams{1.0, 0.1, 0.2}.valid());  // |mu1| > lambda1
    CHECK_FALSE(ModelParams{-1.0, 0.1, 0.0}.valid());
}

TEST_CASE("constitutive operator matches the upper-convected form for mu1 = lambda1",
          "[tensor]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const ModelParams p = ucm_params(1.0, 0.37);
    for (int trial = 0; trial < 5; ++trial) {
        const Mat2 grad = mat2(dist(rng), dist(rng), dist(rng), dist(rng));
        const double txy = dist(rng);
        const Mat2 T = mat2(dist(rng), txy, txy, dist(rng));
        const double axy = dist(rng);
        const Mat2 adv = mat2(dist(rng), axy, axy, dist(rng));
        const Mat2 lhs = o3_constitutive_lhs(adv, grad, T, p);
        // upper-convected derivative: T + l1 (u.grad T - grad_u.T - T.grad_u^t)
        const Mat2 ucd =
            T + scale(adv - matmul(grad, T) - matmul(T, transpose(grad)),
                      p.lambda1);
        CHECK(frob(lhs - ucd) < 1e-14);
    }
}

TEST_CASE("corotational operator commutes with frame rotation", "[tensor]") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const ModelParams p = corotational_params(1.0, 0.42);
    const double ang = 0.83;
    const Mat2 Q = mat2(std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang));
    for (int trial = 0; trial < 5; ++trial) {
        const Mat2 grad = mat2(dist(rng), dist(rng), dist(rng), dist(rng));
        const double txy = dist(rng), axy = dist(rng);
        const Mat2 T = mat2(dist(rng), txy, txy, dist(rng));
        const Mat2 adv = mat2(dist(rng), axy, axy, dist(rng));
        const Mat2 lhs_rot = rotate(o3_constitutive_lhs(adv, grad, T, p), Q);
        const Mat2 rot_lhs = o3_constitutive_lhs(
            rotate(adv, Q), rotate(grad, Q), rotate(T, Q), p);
        CHECK(frob(lhs_rot - rot_lhs) < 1e-12);
    }
}

TEST_CASE("corotational terms vanish for T proportional to identity", "[tensor]") {
    const ModelParams p = corotational_params(1.0, 0.5);
    const Mat2 grad = mat2(0.3, -1.1, 0.7, -0.3);
    const Mat2 T = mat2(2.0, 0.0, 0.0, 2.0);
    const Mat2 zero{};
    const Mat2 lhs = o3_constitutive_lhs(zero, grad, T, p);
    CHECK(frob(lhs - T) < 1e-15);  // W.T - T.W = 0 when T = c I
}
