#include <cmath>
#include <memory>
#include <random>

#include "cmaflow/calculus.hpp"
#include "doctest.h"

using namespace cmaflow;

namespace {

std::shared_ptr<const Grid> disc_grid(double h) {
    Domain d = Domain::ball(1);
    return std::make_shared<const Grid>(classify_grid(d, h));
}

std::shared_ptr<const Grid> ball2_grid(double h) {
    Domain d = Domain::ball(2);
    return std::make_shared<const Grid>(classify_grid(d, h));
}

}  // namespace

TEST_SUITE_BEGIN("calculus");

TEST_CASE("constant fields have zero gradient and Laplacian") {
    auto g = disc_grid(0.2);
    GridField f = constant_field(g, 3.5);
    auto ops = first_order_ops(f);
    for (std::int32_t id = 0; id < g->num_points(); ++id) {
        CHECK(std::abs(ops.laplacian[static_cast<size_t>(id)]) < 1e-13);
        for (int axis = 0; axis < 2; ++axis)
            CHECK(std::abs(ops.gradient[static_cast<size_t>(id)][axis]) < 1e-13);
    }
}

TEST_CASE("Laplacian of |z|^2 is exactly 4 in n=1") {
    auto g = disc_grid(0.25);
    GridField f = make_field(g, [](const Vec& p) { return p.norm2(); });
    auto ops = first_order_ops(f);
    for (std::int32_t id = 0; id < g->num_points(); ++id)
        CHECK(ops.laplacian[static_cast<size_t>(id)] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("first-order ops are exact on quadratics independent of h") {
    for (double h : {0.2, 0.1}) {
        auto g = disc_grid(h);
        // q(x,y) = 2x^2 - xy + 3y^2 + x - 2y + 1
        GridField f = make_field(g, [](const Vec& p) {
            return 2 * p[0] * p[0] - p[0] * p[1] + 3 * p[1] * p[1] + p[0] - 2 * p[1] + 1;
        });
        auto ops = first_order_ops(f);
        for (std::int32_t id = 0; id < g->num_points(); ++id) {
            const Vec p = g->coords(id);
            CHECK(std::abs(ops.gradient[static_cast<size_t>(id)][0] - (4 * p[0] - p[1] + 1)) < 1e-12);
            CHECK(std::abs(ops.gradient[static_cast<size_t>(id)][1] - (-p[0] + 6 * p[1] - 2)) < 1e-12);
            CHECK(std::abs(ops.laplacian[static_cast<size_t>(id)] - 10.0) < 1e-11);
        }
    }
}

TEST_CASE("gradient converges at order >= 1.7 against analytic derivatives") {
    auto max_err = [](double h) {
        auto g = disc_grid(h);
        GridField f = make_field(g, [](const Vec& p) { return std::sin(p[0]) * p[1]; });
        auto ops = first_order_ops(f);
        double e = 0;
        for (std::int32_t id = 0; id < g->num_points(); ++id) {
            const Vec p = g->coords(id);
            e = std::max(e, std::abs(ops.gradient[static_cast<size_t>(id)][0] -
                                     std::cos(p[0]) * p[1]));
            e = std::max(e, std::abs(ops.gradient[static_cast<size_t>(id)][1] - std::sin(p[0])));
        }
        return e;
    };
    const double e1 = max_err(0.1);
    const double e2 = max_err(0.05);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 1.7);
}

TEST_CASE("complex Hessian of |z|^2 is the identity") {
    for (int n : {1, 2}) {
        auto g = (n == 1) ? disc_grid(0.2) : ball2_grid(0.25);
        GridField f = make_field(g, [](const Vec& p) { return p.norm2(); });
        auto hs = complex_hessian(f);
        for (const auto& h : hs) {
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    CHECK(std::abs(h.at(a, b) - (a == b ? Cplx(1) : Cplx(0))) < 1e-11);
        }
    }
}

TEST_CASE("complex Hessian of a pluriharmonic function vanishes") {
    auto g = disc_grid(0.2);
    GridField f = make_field(g, [](const Vec& p) { return p[0] * p[0] - p[1] * p[1]; });
    auto hs = complex_hessian(f);
    for (const auto& h : hs) CHECK(std::abs(h.at(0, 0)) < 1e-11);
}

TEST_CASE("complex Hessian of |z|^4 converges at second order") {
    // u = |z|^4 in n=1: u_{zz} = 4|z|^2 = 1 at z = 0.5.
    auto value_at = [](double h) {
        auto g = disc_grid(h);
        GridField f = make_field(g, [](const Vec& p) { return p.norm2() * p.norm2(); });
        for (std::int32_t id = 0; id < g->num_points(); ++id) {
            const Vec p = g->coords(id);
            if (std::abs(p[0] - 0.5) < 1e-9 && std::abs(p[1]) < 1e-9)
                return complex_hessian_at(f, id, nullptr, nullptr).at(0, 0).real();
        }
        REQUIRE(false);
        return 0.0;
    };
    const double e1 = std::abs(value_at(0.1) - 1.0);
    const double e2 = std::abs(value_at(0.05) - 1.0);
    CHECK(e2 < e1);
    CHECK(std::log2(e1 / e2) >= 1.7);
    CHECK(value_at(0.05) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("Hessian output is exactly Hermitian") {
    auto g = ball2_grid(0.25);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0, 1);
    GridField f = make_field(g, [&](const Vec& p) {
        return std::sin(3 * p[0]) * p[1] + std::cos(p[2] - p[3]) * p[0];
    });
    (void)dist;
    (void)rng;
    for (auto& h : complex_hessian(f)) CHECK(h.hermitian_defect() == 0.0);
}

TEST_CASE("Shortley-Weller pure seconds with feet values are exact on quadratics") {
    auto g = disc_grid(0.2);
    auto quad = [](const Vec& p) { return 3 * p.norm2() + p[0] - 0.5 * p[1]; };
    GridField f = make_field(g, quad);
    FootValueFn feet = foot_values_from(g, quad);
    for (std::int32_t id : g->boundary_adjacent()) {
        StencilDiagnostics diag;
        const double dxx = second_derivative(f, id, 0, &feet, &diag);
        const double dyy = second_derivative(f, id, 1, &feet, &diag);
        CHECK(dxx == doctest::Approx(6.0).epsilon(1e-9));
        CHECK(dyy == doctest::Approx(6.0).epsilon(1e-9));
    }
}

TEST_SUITE_END();
