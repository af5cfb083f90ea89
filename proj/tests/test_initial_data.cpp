#include <cmath>
#include <memory>

#include "cmaflow/initial_data.hpp"
#include "doctest.h"

using namespace cmaflow;

namespace {

struct Setup {
    Domain domain;
    std::shared_ptr<const Grid> grid;
    Setup(int n, double h) : domain(Domain::ball(n)) {
        grid = std::make_shared<const Grid>(classify_grid(domain, h));
    }
};

const SourceFn kZeroSource = [](double, const Vec&, double) { return 0.0; };

}  // namespace

TEST_SUITE_BEGIN("initial_data");

TEST_CASE("cutoff plateaus and slope") {
    CHECK(cutoff_zeta(0.5) == 1.0);
    CHECK(cutoff_zeta(0.0) == 1.0);
    CHECK(cutoff_zeta(-4.0) == 1.0);
    CHECK(cutoff_zeta(3.0) == 0.0);
    CHECK(cutoff_zeta(2.0) == 0.0);
    const double mid = cutoff_zeta(1.5);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    // finite-difference slope matches the analytic derivative and is negative
    const double fd = (cutoff_zeta(1.5 + 1e-6) - cutoff_zeta(1.5 - 1e-6)) / 2e-6;
    CHECK(fd < 0.0);
    CHECK(cutoff_zeta_deriv(1.5) == doctest::Approx(fd).epsilon(1e-6));
    // monotone on a sample
    double prev = 1.0;
    for (double t = 0.9; t <= 2.1; t += 0.01) {
        const double z = cutoff_zeta(t);
        CHECK(z <= prev + 1e-15);
        prev = z;
    }
}

TEST_CASE("mollified constant has Hessian exactly I/m") {
    Setup s(1, 0.2);
    InitialData d = InitialData::constant(2.0);
    for (int m : {1, 4}) {
        GridField u = mollify_initial(d, m, s.grid, s.domain);
        for (std::int32_t id : s.grid->interior()) {
            HermitianForm h = complex_hessian_at(u, id, nullptr, nullptr);
            CHECK(h.at(0, 0).real() == doctest::Approx(1.0 / m).epsilon(1e-12));
        }
        // value is c + (|z|^2 + 2 kappa delta^2)/m with a constant kappa from the
        // quadrature second moment; verify via an independently computed kappa.
        double kappa = 0, wsum = 0;
        for (int j = -3; j <= 3; ++j) {
            const double snode = j / 3.0;
            const double w = std::pow(1.0 - snode * snode, 3);
            kappa += w * snode * snode;
            wsum += w;
        }
        kappa /= wsum;
        const double delta = s.domain.margin() / m;
        for (std::int32_t id = 0; id < s.grid->num_points(); ++id) {
            const Vec p = s.grid->coords(id);
            const double expected = 2.0 + (p.norm2() + 2.0 * kappa * delta * delta) / m;
            CHECK(u[id] == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("mollified kink matches the exact 1-D convolution away from the kink") {
    Setup s(1, 0.1);
    InitialData d = InitialData::max_re();
    const int m = 4;
    const double delta = s.domain.margin() / m;
    GridField u = mollify_initial(d, m, s.grid, s.domain);
    double kappa = 0, wsum = 0;
    for (int j = -3; j <= 3; ++j) {
        const double sn = j / 3.0;
        const double w = std::pow(1.0 - sn * sn, 3);
        kappa += w * sn * sn;
        wsum += w;
    }
    kappa /= wsum;
    for (std::int32_t id = 0; id < s.grid->num_points(); ++id) {
        const Vec p = s.grid->coords(id);
        const double quad_part = (p.norm2() + 2.0 * kappa * delta * delta) / m;
        if (std::abs(p[0]) > delta) {
            // nodes never cross the kink: quadrature is exact on the linear part
            CHECK(u[id] == doctest::Approx(std::max(p[0], 0.0) + quad_part).epsilon(1e-12));
        } else {
            CHECK(u[id] >= std::max(p[0], 0.0) + quad_part - 1e-12);
        }
    }
}

TEST_CASE("mollification is monotone in the level index on the corpus") {
    Setup s(1, 0.1);
    for (const InitialData& d : {InitialData::max_re(), InitialData::quadratic(1.0),
                                 InitialData::max_ball(0.5), InitialData::constant(-1.0)}) {
        GridField prev;
        for (int m : {2, 4, 8, 16}) {
            GridField u = mollify_initial(d, m, s.grid, s.domain);
            if (!prev.values.empty())
                for (std::int32_t id = 0; id < s.grid->num_points(); ++id)
                    CHECK(u[id] <= prev[id] + 1e-8);
            prev = u;
        }
    }
}

TEST_CASE("compatibility source closed forms") {
    Setup s(1, 0.1);
    // u_{0,m} = |z|^2, f = 0: g = log det I = 0
    GridField u = make_field(s.grid, [](const Vec& p) { return p.norm2(); });
    auto gm = compatibility_source(u, [](const Vec& p) { return p.norm2(); }, kZeroSource);
    for (std::int32_t id : s.grid->boundary_adjacent())
        CHECK(gm[static_cast<size_t>(id)] == doctest::Approx(0.0).epsilon(1e-9));

    // f = -u: g = -|z|^2, about -1 near the unit circle
    auto gm2 = compatibility_source(u, [](const Vec& p) { return p.norm2(); },
                                    [](double, const Vec&, double uu) { return -uu; });
    for (std::int32_t id : s.grid->boundary_adjacent())
        CHECK(gm2[static_cast<size_t>(id)] ==
              doctest::Approx(-s.grid->coords(id).norm2()).epsilon(1e-9));
}

TEST_CASE("compatibility source of a scaled quadratic in n=2") {
    Setup s(2, 0.25);
    GridField u = make_field(s.grid, [](const Vec& p) { return 2.0 * p.norm2(); });
    auto gm = compatibility_source(u, [](const Vec& p) { return 2.0 * p.norm2(); }, kZeroSource);
    for (std::int32_t id : s.grid->boundary_adjacent())
        CHECK(gm[static_cast<size_t>(id)] == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-8));
}

TEST_CASE("cascade level invariants for the nonsmooth workhorse") {
    Setup s(1, 0.1);
    InitialData d = InitialData::max_re();
    PointFn u0copy = d.u0;
    BoundaryTimeFn phi = [u0copy](const Vec& z, double) { return u0copy(z); };
    CascadeLevel prev;
    bool have_prev = false;
    double prev_eps = 0, prev_epsg = 0, prev_dm = 0;
    for (int m : {4, 8, 16, 32}) {
        CascadeLevel lv = build_cascade_level(s.domain, s.grid, d, kZeroSource, phi, m,
                                              have_prev ? &prev : nullptr);
        CHECK(lv.min_hessian_eig >= 1.0 / m - 1e-8);
        CHECK(lv.delta_m >= 0.0);
        CHECK(lv.osc_u0 == doctest::Approx(1.0).epsilon(1e-6));
        if (have_prev) {
            CHECK(lv.eps_m < prev_eps);
            CHECK(lv.eps_m * lv.sup_gm <= prev_epsg + 1e-12);
            CHECK(lv.delta_m <= prev_dm + 1e-8);
        }
        prev_eps = lv.eps_m;
        prev_epsg = lv.eps_m * lv.sup_gm;
        prev_dm = lv.delta_m;
        prev = lv;
        have_prev = true;
    }
}

TEST_CASE("boundary ramp endpoints and midpoint") {
    Setup s(1, 0.1);
    InitialData d = InitialData::quadratic(1.0);
    BoundaryTimeFn phi = [](const Vec& z, double) { return z.norm2(); };
    CascadeLevel lv = build_cascade_level(s.domain, s.grid, d, kZeroSource, phi, 2, nullptr);
    REQUIRE(lv.eps_m > 0);
    for (std::int32_t id : s.grid->boundary_adjacent()) {
        // t = 0: the ramp starts at the mollified data
        CHECK(lv.phi_m(id, 0.0) == doctest::Approx(lv.u0m[id]).epsilon(1e-12));
        // t = 3 eps: past the plateau, exactly phi
        const Vec p = s.grid->coords(id);
        CHECK(lv.phi_m(id, 3.0 * lv.eps_m) == doctest::Approx(phi(p, 0.0)).epsilon(1e-14));
    }
    // midpoint formula with u0m = phi = 0, g = 1 reduces to zeta(1.5) * 1.5 eps
    CascadeLevel synth = lv;
    synth.gm.assign(synth.gm.size(), 1.0);
    synth.u0m.values.assign(synth.u0m.values.size(), 0.0);
    synth.phi = [](const Vec&, double) { return 0.0; };
    const double t = 1.5 * synth.eps_m;
    for (std::int32_t id : s.grid->boundary_adjacent())
        CHECK(synth.phi_m(id, t) == doctest::Approx(cutoff_zeta(1.5) * t).epsilon(1e-12));
}

TEST_CASE("direct level rejects data that is not strictly psh") {
    Setup s(1, 0.1);
    InitialData d = InitialData::max_re();
    PointFn u0copy = d.u0;
    BoundaryTimeFn phi = [u0copy](const Vec& z, double) { return u0copy(z); };
    CHECK_THROWS_AS(make_direct_level(s.domain, s.grid, d, kZeroSource, phi),
                    NotPlurisubharmonic);
}

TEST_CASE("tabulated data interpolates and reports tight domains") {
    Vec origin(2);
    origin[0] = -2.0;
    origin[1] = -2.0;
    std::vector<int> sizes = {41, 41};
    std::vector<double> vals;
    for (int i = 0; i < 41; ++i)
        for (int j = 0; j < 41; ++j) {
            const double x = -2.0 + 0.1 * i, y = -2.0 + 0.1 * j;
            vals.push_back(x * x + y * y);
        }
    InitialData d = InitialData::tabulated(origin, 0.1, sizes, vals);
    Vec q(2);
    q[0] = 0.33;
    q[1] = -0.41;
    // multilinear interpolation of a quadratic: error O(h^2)
    CHECK(d.u0(q) == doctest::Approx(q.norm2()).epsilon(0.01));
    Vec far(2);
    far[0] = 5.0;
    far[1] = 0.0;
    CHECK_THROWS_AS(d.u0(far), DomainTooTight);
}

TEST_SUITE_END();
