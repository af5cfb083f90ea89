#include "cmaflow/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "cmaflow/barriers.hpp"

namespace cmaflow {

namespace {

namespace fs = std::filesystem;

struct Scenario {
    FlowProblem problem;
    std::optional<ManufacturedCase> manufactured;
    std::string name;
};

std::shared_ptr<const Domain> build_domain(const Config& cfg) {
    const std::string kind = cfg.get("domain", "kind", "ball");
    const int n = static_cast<int>(cfg.get_long("domain", "n", 1));
    const double dilation = cfg.get_double("domain", "dilation", 1.2);
    if (n < 1 || n > kMaxComplexDim)
        throw ConfigError("n", "domain dimension must be between 1 and 3");
    if (kind == "ball") return std::make_shared<const Domain>(Domain::ball(n, dilation));
    if (kind == "ellipsoid") {
        std::vector<double> coeffs = cfg.get_list("domain", "coeffs");
        if (coeffs.empty()) coeffs.assign(static_cast<size_t>(n), 1.0);
        return std::make_shared<const Domain>(Domain::ellipsoid(coeffs, n, dilation));
    }
    throw ConfigError("kind", "unknown domain kind '" + kind + "'");
}

void apply_stepper(const Config& cfg, FlowProblem& p) {
    const std::string kind = cfg.get("stepper", "kind", "explicit");
    if (kind == "explicit")
        p.stepper = Stepper::kExplicit;
    else if (kind == "implicit")
        p.stepper = Stepper::kImplicit;
    else
        throw ConfigError("kind", "unknown stepper kind '" + kind + "'");
    p.cfl_safety = cfg.get_double("stepper", "cfl_safety", 0.2);
    p.dt = cfg.get_double("stepper", "dt", 0.0);
    p.dt_min = cfg.get_double("stepper", "dt_min", 1e-9);
    p.newton_tol = cfg.get_double("stepper", "newton_tol", 1e-10);
    p.newton_max_iters = static_cast<int>(cfg.get_long("stepper", "newton_max_iters", 50));
    p.lin_tol = cfg.get_double("stepper", "lin_tol", 1e-11);
    p.lin_max_iters = static_cast<int>(cfg.get_long("stepper", "lin_max_iters", 5000));
}

Scenario build_scenario(const Config& cfg, std::shared_ptr<const Domain> domain,
                        std::shared_ptr<const Grid> grid) {
    Scenario sc;
    const int n = domain->n();
    const std::string kind = cfg.get("scenario", "kind", "custom");
    sc.name = kind;
    FlowProblem& p = sc.problem;
    p.domain = domain;
    p.grid = grid;
    p.T = cfg.get_double("time", "horizon", 1.0);
    p.snapshots = static_cast<int>(cfg.get_long("time", "snapshots", 16));
    for (double t : cfg.get_list("time", "extra_snapshots")) p.extra_snapshot_times.push_back(t);
    apply_stepper(cfg, p);

    if (kind == "exact_quadratic") {
        const double a = cfg.get_double("scenario", "a", 1.0);
        const double b = cfg.get_double("scenario", "b", 1.0);
        sc.manufactured = exact_quadratic_family(a, b, n);
    } else if (kind == "mms_decay") {
        sc.manufactured = decay_case(n);
    } else if (kind == "stationary") {
        InitialData d;
        d.kind = "shifted_quadratic";
        d.smooth = true;
        d.u0 = [](const Vec& z) { return z.norm2() - 1.0; };
        p.initial = d;
        p.f = [](double, const Vec&, double) { return 0.0; };
        p.phi = [](const Vec&, double) { return 0.0; };
    } else if (kind == "nonsmooth_cascade") {
        p.initial = InitialData::max_re();
        PointFn u0 = p.initial.u0;
        p.phi = [u0](const Vec& z, double) { return u0(z); };
        p.f = [](double, const Vec&, double) { return 0.0; };
    } else if (kind == "radial_xval") {
        const int m_reg = static_cast<int>(cfg.get_long("scenario", "m_reg", 4));
        const double c = cfg.get_double("scenario", "c", 0.5);
        auto u_eff = radial_mollify([c](double r) { return std::max(r * r - c, 0.0); }, m_reg,
                                    domain->margin());
        InitialData d;
        d.kind = "radial_regularized";
        d.smooth = true;
        d.u0 = [u_eff](const Vec& z) { return u_eff(z.norm()); };
        p.initial = d;
        p.phi = [u_eff](const Vec&, double) { return u_eff(1.0); };
        p.f = [](double, const Vec&, double) { return 0.0; };
    } else if (kind == "custom") {
        const std::string ik = cfg.get("initial", "kind", "quadratic");
        if (ik == "constant")
            p.initial = InitialData::constant(cfg.get_double("initial", "value", 0.0));
        else if (ik == "quadratic")
            p.initial = InitialData::quadratic(cfg.get_double("initial", "a", 1.0));
        else if (ik == "max_re")
            p.initial = InitialData::max_re();
        else if (ik == "max_ball")
            p.initial = InitialData::max_ball(cfg.get_double("initial", "c", 0.5));
        else
            throw ConfigError("kind", "unknown initial kind '" + ik + "'");

        const std::string sk = cfg.get("source", "kind", "zero");
        if (sk == "zero")
            p.f = [](double, const Vec&, double) { return 0.0; };
        else if (sk == "constant") {
            const double b = cfg.get_double("source", "b", 1.0);
            p.f = [b](double, const Vec&, double) { return b; };
        } else if (sk == "decay") {
            p.f = [n](double t, const Vec&, double u) { return -u + n * t; };
        } else
            throw ConfigError("kind", "unknown source kind '" + sk + "'");

        const std::string bk = cfg.get("boundary", "kind", "from_initial");
        if (bk == "from_initial") {
            PointFn u0 = p.initial.u0;
            p.phi = [u0](const Vec& z, double) { return u0(z); };
        } else if (bk == "quadratic") {
            const double a = cfg.get_double("boundary", "a", 1.0);
            const double b = cfg.get_double("boundary", "b", 1.0);
            p.phi = [a, b](const Vec& z, double t) { return a * z.norm2() + b * t; };
        } else if (bk == "decay") {
            p.phi = [](const Vec& z, double t) { return std::exp(-t) * z.norm2(); };
        } else if (bk == "constant") {
            const double v = cfg.get_double("boundary", "value", 0.0);
            p.phi = [v](const Vec&, double) { return v; };
        } else
            throw ConfigError("kind", "unknown boundary kind '" + bk + "'");
    } else {
        throw ConfigError("kind", "unknown scenario kind '" + kind + "'");
    }

    if (sc.manufactured) {
        p.f = sc.manufactured->f;
        p.phi = sc.manufactured->phi;
        p.initial = sc.manufactured->u0;
    }
    return sc;
}

struct Summary {
    std::vector<std::string> lines;
    bool all_pass = true;

    // measured must stay below the bound
    void check(const std::string& name, bool pass, double measured, double bound) {
        lines.push_back(std::string(pass ? "PASS" : "FAIL") + " " + name +
                        " measured=" + fmt_g(measured) + " bound=" + fmt_g(bound) +
                        " margin=" + fmt_g(bound - measured));
        all_pass = all_pass && pass;
    }
    // measured must stay above the floor
    void check_ge(const std::string& name, bool pass, double measured, double floor_value) {
        lines.push_back(std::string(pass ? "PASS" : "FAIL") + " " + name +
                        " measured=" + fmt_g(measured) + " floor=" + fmt_g(floor_value) +
                        " margin=" + fmt_g(measured - floor_value));
        all_pass = all_pass && pass;
    }
    void info(const std::string& name, double value) {
        lines.push_back("INFO " + name + " value=" + fmt_g(value));
    }
    void note(const std::string& text) { lines.push_back("NOTE " + text); }
};

void emit_bound_lines(const BoundReport& rep, Summary& sum) {
    for (const auto& l : rep.lines) {
        if (l.enforced && l.pass) {
            if (l.lower_bound_style)
                sum.check_ge(l.name, *l.pass, l.measured, l.bound.value_or(0.0));
            else
                sum.check(l.name, *l.pass, l.measured, l.bound.value_or(0.0));
        } else if (l.pass) {
            sum.check_ge(l.name + " (report-only)", *l.pass, l.measured, 0.0);
        } else {
            sum.info(l.name, l.measured);
        }
    }
}

double error_vs_manufactured(const Trajectory& traj, const ManufacturedCase& mc) {
    const Grid& g = *traj.snapshots.front().grid;
    double e = 0;
    for (const auto& s : traj.snapshots)
        for (std::int32_t id = 0; id < g.num_points(); ++id)
            e = std::max(e, std::abs(s[id] - mc.value(g.coords(id), s.time)));
    return e;
}

/// Least-squares slope of log(err) against log(x).
double regression_order(const std::vector<double>& xs, const std::vector<double>& errs) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int k = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (!(errs[i] > 0)) continue;
        const double lx = std::log(xs[i]);
        const double ly = std::log(errs[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++k;
    }
    if (k < 2) return 0;
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

void run_single(const Config& cfg, const std::string& out, long seed, Summary& sum) {
    auto domain = build_domain(cfg);
    const double h = cfg.get_double("grid", "h", 0.1);
    const long budget = cfg.get_long("grid", "budget", 2'000'000);
    auto grid = std::make_shared<const Grid>(classify_grid(*domain, h, budget));
    Scenario sc = build_scenario(cfg, domain, grid);
    FlowProblem& p = sc.problem;
    const int shift_m = static_cast<int>(cfg.get_long("monitors", "shift_m", 0));
    if (shift_m > 0 && p.T > 1.0 / shift_m) p.extra_snapshot_times.push_back(1.0 / shift_m);
    p.validate(static_cast<unsigned>(seed));

    grid->write_points_csv(out + "/grid_points.csv");

    // Level: a single cascade index means a mollified start, otherwise direct.
    std::vector<long> levels = cfg.get_int_list("cascade", "levels");
    std::shared_ptr<const CascadeLevel> level;
    if (levels.size() == 1 && levels[0] > 0) {
        level = std::make_shared<const CascadeLevel>(build_cascade_level(
            *domain, grid, p.initial, p.f, p.phi, static_cast<int>(levels[0])));
    } else {
        level = std::make_shared<const CascadeLevel>(
            make_direct_level(*domain, grid, p.initial, p.f, p.phi));
    }

    double M1 = 1.0;
    Subsolution sub;
    const bool certify = cfg.get_bool("cascade", "certify", true);
    if (certify) {
        sub = construct_subsolution(p, *level);
        CascadeLevel as_m1 = *level;
        as_m1.m = 1;
        M1 = construct_subsolution(p, as_m1).M;
        sum.info("subsolution constant M_m", sub.M);
        sum.info("subsolution constant M_1", M1);
    } else {
        sum.note("subsolution certification skipped by config");
    }

    Trajectory traj = run_flow(p, level);
    sum.info("flow steps", static_cast<double>(traj.steps.size()));
    sum.check_ge("accepted states strictly psh", traj.min_hessian_eig > 0, traj.min_hessian_eig,
                 0.0);
    double bgap = 0;
    for (size_t j = 1; j < traj.size(); ++j)
        bgap = std::max(bgap, boundary_exactness_gap(traj, j));
    sum.check("boundary data exact at the feet", bgap <= 1e-10, bgap, 1e-10);

    if (cfg.get_bool("output", "write_snapshots", true)) {
        fs::create_directories(out + "/snapshots");
        for (size_t j = 0; j < traj.size(); ++j) {
            char idx[16];
            std::snprintf(idx, sizeof idx, "%03zu", j);
            write_field_csv(traj.snapshots[j], out + "/snapshots/snap_" + idx + ".csv");
            if (cfg.get_bool("output", "write_binary", true))
                write_field_binary(traj.snapshots[j], out + "/snapshots/snap_" + idx + ".bin");
        }
    }

    if (sc.manufactured) {
        const double err = error_vs_manufactured(traj, *sc.manufactured);
        sum.check("flow error vs manufactured solution", err <= 1e-8, err, 1e-8);
    }

    const double eps = cfg.get_double("monitors", "epsilon", 0.1 * p.T);
    if (cfg.get_bool("monitors", "bounds", true)) {
        BoundReport rep = bound_monitors(traj, p, eps, M1);
        emit_bound_lines(rep, sum);
        write_bound_report_csv(rep, out + "/bound_report.csv");
    }

    if (certify && cfg.get_bool("monitors", "comparison", true)) {
        std::vector<double> sched;
        for (const auto& s : traj.snapshots) sched.push_back(s.time);
        auto eu = evolution_from_evaluator(
            grid, [&](const Vec& z, double t) { return sub.value(z, t); }, nullptr, sched);
        auto ev = evolution_from_trajectory(traj);
        ComparisonReport rep = comparison_check(eu, ev, p.f);
        sum.check("subsolution stays below the flow", rep.holds, rep.excess, 1e-7);
    }

    if (cfg.get_bool("monitors", "trace", true)) {
        TraceReport rep =
            initial_trace_check(traj, p, cfg.get_double("monitors", "trace_threshold_frac", 0.05));
        sum.check_ge("initial trace monotone near t=0", rep.monotone_near_zero,
                     rep.monotone_near_zero ? 1.0 : 0.0, 1.0);
        if (rep.threshold > 0)
            sum.check("initial trace e(t_min) below threshold", rep.below_threshold, rep.e_min,
                      rep.threshold);
        else
            sum.info("initial trace e(t_min)", rep.e_min);
        sum.check_ge("lower barrier u >= u0 + a rho - A t found", rep.barrier_found,
                     rep.barrier_found ? 1.0 : 0.0, 1.0);
        write_trace_csv(rep, out + "/trace_decay.csv");
        std::vector<std::tuple<std::string, double, double>> rows;
        for (size_t i = 0; i < rep.times.size(); ++i)
            rows.emplace_back("trace_decay", rep.times[i], rep.sup_error[i]);
        write_long_csv(rows, out + "/long.csv");
    }

    if (cfg.get_bool("monitors", "holder", false)) {
        HolderParams hp;
        hp.t_lo = eps;
        hp.t_hi = p.T;
        const double alpha = cfg.get_double("monitors", "holder_alpha", 0.5);
        HolderReport rep = parabolic_holder_seminorm(traj, alpha, hp);
        sum.info("parabolic holder seminorm alpha=" + fmt_g(alpha), rep.seminorm);
        sum.info("time seminorm", rep.time_seminorm);
    }

    if (certify && cfg.get_bool("monitors", "guan", false)) {
        GuanReport rep = guan_barrier_check(traj, p, sub, eps);
        sum.info("collar barrier fraction satisfied", rep.frac_both_ok);
        write_guan_csv(rep, *grid, out + "/guan_report.csv");
    }

    if (shift_m > 0) {
        ShiftReport rep = shift_consistency_check(traj, p, shift_m);
        sum.check("shift consistency gap", rep.ok, rep.gap, rep.tol);
        sum.check_ge("shift lower barrier found", rep.barrier_found,
                     rep.barrier_found ? 1.0 : 0.0, 1.0);
    }

    if (sc.name == "radial_xval") {
        const int factor = static_cast<int>(cfg.get_long("oracle", "factor", 8));
        const int m_reg = static_cast<int>(cfg.get_long("scenario", "m_reg", 4));
        const double c = cfg.get_double("scenario", "c", 0.5);
        if (domain->n() != 1) throw NotRadial("radial cross-validation needs n=1");
        if (!is_radial(p.initial.u0, 1.0)) throw NotRadial("initial data is not radial");
        auto u_eff =
            radial_mollify([c](double r) { return std::max(r * r - c, 0.0); }, m_reg,
                           domain->margin());
        RadialProblem rp;
        rp.u0 = u_eff;
        rp.phi = [u_eff](double) { return u_eff(1.0); };
        rp.f = [](double, double, double) { return 0.0; };
        rp.T = p.T;
        RadialCurve ref = radial_reference(rp, grid->h() / factor, {p.T});
        write_radial_csv(ref, out + "/reference_curve.csv");
        double gap = 0;
        const GridField& last = traj.snapshots.back();
        for (std::int32_t id = 0; id < grid->num_points(); ++id)
            gap = std::max(gap, std::abs(last[id] - ref.value_at(grid->coords(id).norm(), 0)));
        double dt_max = 0;
        for (const auto& st : traj.steps) dt_max = std::max(dt_max, st.dt);
        const double tol = 3.0 * grid->h() * grid->h() + 3.0 * dt_max;
        sum.check("radial cross-validation", gap <= tol, gap, tol);
    }
}

void run_cascade_experiment(const Config& cfg, const std::string& out, long seed, Summary& sum,
                            int jobs) {
    (void)jobs;
    auto domain = build_domain(cfg);
    const double h = cfg.get_double("grid", "h", 0.1);
    const long budget = cfg.get_long("grid", "budget", 2'000'000);
    auto grid = std::make_shared<const Grid>(classify_grid(*domain, h, budget));
    Scenario sc = build_scenario(cfg, domain, grid);
    FlowProblem& p = sc.problem;
    p.validate(static_cast<unsigned>(seed));

    std::vector<long> levels_l = cfg.get_int_list("cascade", "levels");
    if (levels_l.empty()) levels_l = {4, 8, 16, 32};
    std::vector<int> levels(levels_l.begin(), levels_l.end());
    const double pair_tol = cfg.get_double("cascade", "pair_tol", 1e-6);

    CascadeReport rep = run_cascade(p, levels, pair_tol);
    write_cascade_csv(rep, out + "/cascade_gaps.csv");
    for (const auto& f : rep.failures)
        if (!f.empty()) sum.note("level aborted: " + f);
    for (const auto& pg : rep.pairs)
        sum.check("cascade gap m=" + std::to_string(pg.m) + " k=" + std::to_string(pg.k),
                  pg.ok, pg.sup_gap, pg.bound);
    sum.check_ge("cascade sup-norm gaps decrease in k", rep.gaps_decreasing,
                 rep.gaps_decreasing ? 1.0 : 0.0, 1.0);

    if (cfg.get_bool("monitors", "trace", true) && !rep.trajectories.empty() &&
        rep.failures.back().empty()) {
        TraceReport tr = initial_trace_check(
            rep.trajectories.back(), p,
            cfg.get_double("monitors", "trace_threshold_frac", 0.05));
        sum.check_ge("initial trace monotone near t=0", tr.monotone_near_zero,
                     tr.monotone_near_zero ? 1.0 : 0.0, 1.0);
        sum.check("initial trace e(t_min) below threshold", tr.below_threshold, tr.e_min,
                  tr.threshold);
        sum.check_ge("lower barrier u >= u0 + a rho - A t found", tr.barrier_found,
                     tr.barrier_found ? 1.0 : 0.0, 1.0);
        write_trace_csv(tr, out + "/trace_decay.csv");
    }
}

void run_converge(const Config& cfg, const std::string& out, long seed, Summary& sum) {
    auto domain = build_domain(cfg);
    const long budget = cfg.get_long("grid", "budget", 2'000'000);

    // Spatial study: explicit stepper, dt capped at 0.02 h^2 so the step size
    // refines with the grid.
    std::vector<double> hs = cfg.get_list("grid", "h_sequence");
    if (hs.empty()) hs = {0.2, 0.1, 0.05, 0.025};
    std::vector<double> errs;
    for (double h : hs) {
        auto grid = std::make_shared<const Grid>(classify_grid(*domain, h, budget));
        Scenario sc = build_scenario(cfg, domain, grid);
        if (!sc.manufactured)
            throw ConfigError("kind", "convergence studies need a manufactured scenario");
        FlowProblem p = sc.problem;
        p.stepper = Stepper::kExplicit;
        p.dt = 0.02 * h * h;
        if (errs.empty()) p.validate(static_cast<unsigned>(seed));
        auto level = std::make_shared<const CascadeLevel>(
            make_direct_level(*domain, grid, p.initial, p.f, p.phi));
        Trajectory traj = run_flow(p, level);
        errs.push_back(error_vs_manufactured(traj, *sc.manufactured));
    }
    write_convergence_csv(hs, errs, "h", out + "/convergence_spatial.csv");
    const double spatial_order = regression_order(hs, errs);
    sum.check_ge("spatial order (explicit, h^2-coupled dt)", spatial_order >= 1.7, spatial_order,
                 1.7);

    // Temporal study: implicit Euler at fixed fine h, dt halvings that divide
    // the snapshot segments evenly.
    const double h_fine = cfg.get_double("grid", "h", hs.back());
    auto grid = std::make_shared<const Grid>(classify_grid(*domain, h_fine, budget));
    Scenario sc = build_scenario(cfg, domain, grid);
    FlowProblem p = sc.problem;
    p.stepper = Stepper::kImplicit;
    p.snapshots = 2;
    std::vector<double> dts = cfg.get_list("stepper", "dt_sequence");
    if (dts.empty()) dts = {p.T / 8, p.T / 16, p.T / 32, p.T / 64};
    auto level = std::make_shared<const CascadeLevel>(
        make_direct_level(*domain, grid, p.initial, p.f, p.phi));
    std::vector<double> terrs;
    for (double dt : dts) {
        FlowProblem q = p;
        q.dt = dt;
        Trajectory traj = run_flow(q, level);
        terrs.push_back(error_vs_manufactured(traj, *sc.manufactured));
    }
    write_convergence_csv(dts, terrs, "dt", out + "/convergence_temporal.csv");
    const double temporal_order = regression_order(dts, terrs);
    sum.check_ge("temporal order (implicit Euler)", temporal_order >= 0.9, temporal_order, 0.9);
}

void run_verify(const Config& cfg, const std::string& out, long seed, Summary& sum) {
    (void)out;
    (void)cfg;
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::normal_distribution<double> dist(0.0, 1.0);
    auto random_pd = [&](int n) {
        std::array<Cplx, 9> raw{};
        for (int i = 0; i < n * n; ++i) raw[static_cast<size_t>(i)] = Cplx(dist(rng), dist(rng));
        HermitianForm h(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Cplx s = 0;
                for (int k = 0; k < n; ++k)
                    s += std::conj(raw[static_cast<size_t>(k * n + i)]) *
                         raw[static_cast<size_t>(k * n + j)];
                h.at(i, j) = s;
            }
        for (int i = 0; i < n; ++i) h.at(i, i) += 0.05;
        h.symmetrize();
        return h;
    };

    // Trace inequality property over 1000 random PD pairs in n = 2, 3.
    long fails = 0;
    for (int n : {2, 3})
        for (int rep = 0; rep < 1000; ++rep)
            if (!trace_inequality_check(random_pd(n), random_pd(n))) ++fails;
    sum.check("trace inequality on 1000 random PD pairs (n=2,3)", fails == 0,
              static_cast<double>(fails), 0.0);

    // log det scaling identity.
    double worst = 0;
    for (int n = 1; n <= 3; ++n)
        for (int rep = 0; rep < 200; ++rep) {
            HermitianForm h = random_pd(n);
            for (double c : {0.5, 3.0})
                worst = std::max(worst, std::abs(log_det_pd(c * h) - log_det_pd(h) -
                                                 n * std::log(c)));
        }
    sum.check("log det scaling identity", worst <= 1e-12, worst, 1e-12);

    // tr(linearization^T H) = n.
    worst = 0;
    for (int n = 1; n <= 3; ++n)
        for (int rep = 0; rep < 200; ++rep) {
            HermitianForm h = random_pd(n);
            HermitianForm r = linearization_coeffs(h);
            Cplx tr = 0;
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) tr += r.at(k, i) * h.at(k, i);
            worst = std::max(worst, std::abs(tr - Cplx(n)));
        }
    sum.check("tr(linearization^T H) = n", worst <= 1e-10, worst, 1e-10);

    // cutoff plateaus.
    const bool zeta_ok = cutoff_zeta(0.5) == 1.0 && cutoff_zeta(1.0) == 1.0 &&
                         cutoff_zeta(2.0) == 0.0 && cutoff_zeta(3.0) == 0.0 &&
                         cutoff_zeta(1.5) > 0.0 && cutoff_zeta(1.5) < 1.0;
    sum.check_ge("cutoff plateaus", zeta_ok, zeta_ok ? 1.0 : 0.0, 1.0);

    // quadratic exactness of the discrete operators on a random quadratic.
    auto domain = std::make_shared<const Domain>(Domain::ball(1));
    auto grid = std::make_shared<const Grid>(classify_grid(*domain, 0.1));
    std::uniform_real_distribution<double> unit(0.5, 2.0);
    const double qa = unit(rng), qb = unit(rng) - 1.25, qc = unit(rng) - 1.25;
    GridField f = make_field(grid, [&](const Vec& z) {
        return qa * z.norm2() + qb * z[0] + qc * z[1] + 0.3;
    });
    auto ops = first_order_ops(f);
    worst = 0;
    for (std::int32_t id = 0; id < grid->num_points(); ++id) {
        worst = std::max(worst, std::abs(ops.laplacian[static_cast<size_t>(id)] - 4.0 * qa));
        HermitianForm hm = complex_hessian_at(f, id, nullptr, nullptr);
        worst = std::max(worst, std::abs(hm.at(0, 0).real() - qa));
    }
    sum.check("quadratic exactness of discrete operators", worst <= 1e-11, worst, 1e-11);
}

}  // namespace

ExperimentResult run_experiment(const Config& cfg_in, const std::string& out_dir_override,
                                std::optional<long> seed_override, int jobs) {
    Config cfg = cfg_in;
    const std::string out =
        !out_dir_override.empty() ? out_dir_override : cfg.get("output", "dir", "out");
    const long seed = seed_override.value_or(cfg.get_long("output", "seed", 1234));
    fs::create_directories(out);

    Summary sum;
    const std::string kind = cfg.get("experiment", "kind", "run");
    sum.note("experiment " + kind + " seed=" + std::to_string(seed));

    if (kind == "run")
        run_single(cfg, out, seed, sum);
    else if (kind == "cascade")
        run_cascade_experiment(cfg, out, seed, sum, jobs);
    else if (kind == "converge")
        run_converge(cfg, out, seed, sum);
    else if (kind == "verify")
        run_verify(cfg, out, seed, sum);
    else
        throw ConfigError("kind", "unknown experiment kind '" + kind + "'");

    ExperimentResult res;
    res.all_pass = sum.all_pass;
    res.summary_lines = sum.lines;
    res.out_dir = out;
    write_summary(sum.lines, out + "/summary.txt");
    return res;
}

}  // namespace cmaflow
