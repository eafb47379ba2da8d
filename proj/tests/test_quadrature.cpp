#include <catch2/catch_amalgamated.hpp>

#include "visco2d/quadrature.hpp"

using namespace visco2d;

namespace {

// exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!
double monomial_integral(int a, int b) {
    double num = 1.0;
    for (int k = 2; k <= a; ++k) num *= k;
    for (int k = 2; k <= b; ++k) num *= k;
    double den = 1.0;
    for (int k = 2; k <= a + b + 2; ++k) den *= k;
    return num / den;
}

double quad_integral(const QuadratureRule& rule, int a, int b) {
    double acc = 0.0;
    for (const auto& qp : rule.points) {
        const double x = qp.bary[1], y = qp.bary[2];
        acc += std::pow(x, a) * std::pow(y, b) * qp.weight;
    }
    return acc;
}

}  // namespace

TEST_CASE("triangle rule weights sum to the reference area", "[quadrature]") {
    for (int degree = 0; degree <= 8; ++degree) {
        const QuadratureRule rule = triangle_rule(degree);
        double sum = 0.0;
        for (const auto& qp : rule.points) sum += qp.weight;
        CHECK(std::abs(sum - 0.5) < 1e-14);
        for (const auto& qp : rule.points) {
            CHECK(std::abs(qp.bary[0] + qp.bary[1] + qp.bary[2] - 1.0) < 1e-14);
            CHECK(qp.weight > 0.0);
        }
    }
}

TEST_CASE("triangle rule integrates monomials exactly up to its degree",
          "[quadrature]") {
    for (int degree : {2, 4, 6}) {
        const QuadratureRule rule = triangle_rule(degree);
        for (int a = 0; a <= degree; ++a) {
            for (int b = 0; a + b <= degree; ++b) {
                const double exact = monomial_integral(a, b);
                const double got = quad_integral(rule, a, b);
                CHECK(std::abs(got - exact) <= 1e-13 * std::max(1.0, exact));
            }
        }
    }
}

TEST_CASE("assembly rule degree covers the worst integrand", "[quadrature]") {
    CHECK(kAssemblyQuadDegree >= 6);
    CHECK_THROWS_AS(triangle_rule(-1), std::invalid_argument);
}
