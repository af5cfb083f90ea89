#include <cmath>
#include <memory>

#include "cmaflow/barriers.hpp"
#include "doctest.h"

using namespace cmaflow;

namespace {

struct Instance {
    std::shared_ptr<const Domain> domain;
    std::shared_ptr<const Grid> grid;
    Instance(int n, double h) {
        domain = std::make_shared<const Domain>(Domain::ball(n));
        grid = std::make_shared<const Grid>(classify_grid(*domain, h));
    }
};

/// Stationary reference: u0 = |z|^2 - 1, phi = 0, f = 0; the flow fixes u0.
FlowProblem stationary_problem(const Instance& inst, double T) {
    FlowProblem p;
    p.domain = inst.domain;
    p.grid = inst.grid;
    p.T = T;
    p.f = [](double, const Vec&, double) { return 0.0; };
    p.phi = [](const Vec&, double) { return 0.0; };
    InitialData d;
    d.kind = "shifted_quadratic";
    d.u0 = [](const Vec& z) { return z.norm2() - 1.0; };
    d.smooth = true;
    p.initial = d;
    return p;
}

}  // namespace

TEST_SUITE_BEGIN("barriers");

TEST_CASE("constants are their own harmonic extension") {
    Instance inst(1, 0.1);
    GridField h = harmonic_majorant(*inst.domain, inst.grid,
                                    [](const Vec&, double) { return 3.25; }, 0.0);
    for (std::int32_t id = 0; id < inst.grid->num_points(); ++id)
        CHECK(h[id] == doctest::Approx(3.25).epsilon(1e-8));
}

TEST_CASE("harmonic extension of Re z is Re z") {
    Instance inst(1, 0.1);
    GridField h = harmonic_majorant(*inst.domain, inst.grid,
                                    [](const Vec& z, double) { return z[0]; }, 0.0);
    for (std::int32_t id = 0; id < inst.grid->num_points(); ++id)
        CHECK(h[id] == doctest::Approx(inst.grid->coords(id)[0]).epsilon(1e-7));
}

TEST_CASE("constant boundary data |z|^2 = 1 extends to 1") {
    Instance inst(1, 0.1);
    GridField h = harmonic_majorant(*inst.domain, inst.grid,
                                    [](const Vec& z, double) { return z.norm2(); }, 0.0);
    // On the unit circle |z|^2 = 1, so the extension is constant
    for (std::int32_t id = 0; id < inst.grid->num_points(); ++id)
        CHECK(h[id] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("discrete maximum principle for the harmonic extension") {
    Instance inst(2, 0.25);
    BoundaryTimeFn phi = [](const Vec& z, double) { return z[0] * z[1] - 0.3 * z[2]; };
    GridField h = harmonic_majorant(*inst.domain, inst.grid, phi, 0.0);
    double blo = 1e300, bhi = -1e300;
    for (std::int32_t id : inst.grid->boundary_adjacent()) {
        for (int axis = 0; axis < 4; ++axis)
            for (int dir = -1; dir <= 1; dir += 2) {
                if (inst.grid->neighbor(id, axis, dir) >= 0) continue;
                const double v = phi(inst.grid->foot(id, axis, dir), 0.0);
                blo = std::min(blo, v);
                bhi = std::max(bhi, v);
            }
    }
    for (std::int32_t id = 0; id < inst.grid->num_points(); ++id) {
        CHECK(h[id] >= blo - 1e-8);
        CHECK(h[id] <= bhi + 1e-8);
    }
}

TEST_CASE("trivial instance certifies M = 1") {
    // phi = 0, f = 0, u0 = 0: Hessian of u_ is M I and du_/dt = 0 <= n log M
    Instance inst(1, 0.1);
    FlowProblem p;
    p.domain = inst.domain;
    p.grid = inst.grid;
    p.T = 0.5;
    p.f = [](double, const Vec&, double) { return 0.0; };
    p.phi = [](const Vec&, double) { return 0.0; };
    p.initial = InitialData::constant(0.0);
    CascadeLevel lv = build_cascade_level(*p.domain, p.grid, p.initial, p.f, p.phi, 1);
    Subsolution s = construct_subsolution(p, lv);
    CHECK(s.M == doctest::Approx(1.0));
}

TEST_CASE("negative constant source forces M = exp(c/n)") {
    Instance inst(1, 0.1);
    const double c = 2.0;
    FlowProblem p;
    p.domain = inst.domain;
    p.grid = inst.grid;
    p.T = 0.5;
    p.f = [c](double, const Vec&, double) { return -c; };
    p.phi = [](const Vec&, double) { return 0.0; };
    p.initial = InitialData::constant(0.0);
    CascadeLevel lv = build_cascade_level(*p.domain, p.grid, p.initial, p.f, p.phi, 1);
    SubsolutionSearchLog log;
    Subsolution s = construct_subsolution(p, lv, &log);
    CHECK(s.M == doctest::Approx(std::exp(c)).epsilon(1e-3));
    CHECK(log.doublings >= 1);
    CHECK(log.certified_margin >= -1e-9);
}

TEST_CASE("search is monotone in the source") {
    Instance inst(1, 0.1);
    auto certify = [&](double fconst) {
        FlowProblem p;
        p.domain = inst.domain;
        p.grid = inst.grid;
        p.T = 0.5;
        p.f = [fconst](double, const Vec&, double) { return fconst; };
        p.phi = [](const Vec&, double) { return 0.0; };
        p.initial = InitialData::constant(0.0);
        CascadeLevel lv = build_cascade_level(*p.domain, p.grid, p.initial, p.f, p.phi, 1);
        return construct_subsolution(p, lv).M;
    };
    // increasing f pointwise never increases the certified constant
    CHECK(certify(1.0) <= certify(0.0) + 1e-12);
    CHECK(certify(0.0) <= certify(-1.0) + 1e-12);
}

TEST_CASE("sandwich and boundary gradient bound on the stationary run") {
    Instance inst(1, 0.1);
    FlowProblem p = stationary_problem(inst, 0.5);
    p.stepper = Stepper::kExplicit;
    p.snapshots = 6;
    p.validate();
    auto level = std::make_shared<const CascadeLevel>(
        make_direct_level(*p.domain, p.grid, p.initial, p.f, p.phi));
    Subsolution sub = construct_subsolution(p, *level);
    Trajectory traj = run_flow(p, level);

    // u_ <= u <= h at all snapshots past the ramp plateau of the subsolution
    for (size_t j = 0; j < traj.size(); ++j) {
        const double t = traj.snapshots[j].time;
        if (t <= 2.0 / sub.m) continue;
        GridField h = harmonic_majorant(*p.domain, p.grid, p.phi, t);
        for (std::int32_t id = 0; id < p.grid->num_points(); ++id) {
            const Vec z = p.grid->coords(id);
            CHECK(sub.value(z, t) <= traj.snapshots[j][id] + 1e-7);
            CHECK(traj.snapshots[j][id] <= h[id] + 1e-7);
        }
    }

    // |grad u| <= |grad u_| + |grad (h - u_)| near the boundary
    const double t = traj.snapshots.back().time;
    GridField h = harmonic_majorant(*p.domain, p.grid, p.phi, t);
    GridField ub = make_field(p.grid, [&](const Vec& z) { return sub.value(z, t); }, t);
    GridField hmub = h;
    for (std::int32_t id = 0; id < p.grid->num_points(); ++id) hmub[id] -= ub[id];
    auto gu = first_order_ops(traj.snapshots.back());
    auto gub = first_order_ops(ub);
    auto ghm = first_order_ops(hmub);
    double mgu = 0, mgub = 0, mghm = 0;
    for (std::int32_t id : p.grid->boundary_adjacent()) {
        mgu = std::max(mgu, gu.gradient[static_cast<size_t>(id)].norm());
        mgub = std::max(mgub, gub.gradient[static_cast<size_t>(id)].norm());
        mghm = std::max(mghm, ghm.gradient[static_cast<size_t>(id)].norm());
    }
    CHECK(mgu <= mgub + mghm + 1e-6);
}

TEST_CASE("degenerate collar configuration is reported") {
    Instance inst(1, 0.1);
    FlowProblem p = stationary_problem(inst, 0.5);
    p.stepper = Stepper::kExplicit;
    p.snapshots = 6;
    auto level = std::make_shared<const CascadeLevel>(
        make_direct_level(*p.domain, p.grid, p.initial, p.f, p.phi));
    Trajectory traj = run_flow(p, level);
    // u = u_ exactly when M = 1 matches the stationary state and a = N = 0
    Subsolution sub;
    sub.m = 1;
    sub.M = 1.0;
    sub.osc_u0 = 0.0;
    sub.domain = p.domain;
    sub.phi = p.phi;
    GuanReport rep = guan_barrier_check(traj, p, sub, 0.05, GuanParams{0.0, 0.0, 0.2});
    CHECK(rep.degenerate);
    CHECK(rep.collar_points > 0);
}

TEST_CASE("auto-search finds constants that certify most of the collar") {
    Instance inst(1, 0.1);
    FlowProblem p = stationary_problem(inst, 0.5);
    p.stepper = Stepper::kExplicit;
    p.snapshots = 6;
    auto level = std::make_shared<const CascadeLevel>(
        make_direct_level(*p.domain, p.grid, p.initial, p.f, p.phi));
    Subsolution sub = construct_subsolution(p, *level);
    Trajectory traj = run_flow(p, level);
    GuanReport rep = guan_barrier_check(traj, p, sub, 0.05);
    CHECK(rep.searched);
    CHECK(rep.collar_points > 0);
    CHECK(rep.frac_both_ok >= 0.9);
    // v >= 0 on the collar for the found constants
    for (const auto& r : rep.records) {
        (void)r;
    }
    long v_ok_frac = rep.v_ok;
    CHECK(static_cast<double>(v_ok_frac) / rep.collar_points >= 0.9);
}

TEST_SUITE_END();
