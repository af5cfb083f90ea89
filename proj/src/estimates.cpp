#include "cmaflow/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace cmaflow {

namespace {

/// Central finite difference of a callable along one variable.
template <typename Fn>
double fd1(const Fn& f, double x, double step) {
    return (f(x + step) - f(x - step)) / (2.0 * step);
}

/// Mixed spatial derivative D^j phi(., t) by recursive central differences.
double spatial_derivative(const BoundaryTimeFn& phi, Vec z, double t,
                          std::array<int, kMaxRealDim>& order, int axis, double step) {
    while (axis < z.dim && order[static_cast<size_t>(axis)] == 0) ++axis;
    if (axis >= z.dim) return phi(z, t);
    --order[static_cast<size_t>(axis)];
    Vec zp = axis_step(z, axis, step);
    Vec zm = axis_step(z, axis, -step);
    const double vp = spatial_derivative(phi, zp, t, order, axis, step);
    const double vm = spatial_derivative(phi, zm, t, order, axis, step);
    ++order[static_cast<size_t>(axis)];
    return (vp - vm) / (2.0 * step);
}

/// Enumerates spatial multi-indices with |j| <= max_total.
void enumerate_multi(int nd, int max_total, std::vector<std::array<int, kMaxRealDim>>& out) {
    std::array<int, kMaxRealDim> cur{};
    std::function<void(int, int)> rec = [&](int axis, int remaining) {
        if (axis == nd) {
            out.push_back(cur);
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            cur[static_cast<size_t>(axis)] = k;
            rec(axis + 1, remaining - k);
        }
        cur[static_cast<size_t>(axis)] = 0;
    };
    rec(0, max_total);
}

int multi_total(const std::array<int, kMaxRealDim>& j, int nd) {
    int s = 0;
    for (int i = 0; i < nd; ++i) s += j[static_cast<size_t>(i)];
    return s;
}

}  // namespace

double measure_cphi(const BoundaryTimeFn& phi, const Grid& grid, double T, int max_points) {
    const int nd = grid.real_dim();
    const double hs = 1e-2;
    const double ht = std::max(1e-3, 1e-2 * T);
    std::vector<std::array<int, kMaxRealDim>> multis;
    enumerate_multi(nd, 4, multis);

    // Deterministic subsample of non-exterior points plus a few times.
    std::vector<std::int32_t> pts;
    const int stride = std::max(1, grid.num_points() / max_points);
    for (std::int32_t id = 0; id < grid.num_points(); id += stride) pts.push_back(id);
    std::vector<double> times = {0.25 * T, 0.5 * T, 0.75 * T};

    double total = 0;
    for (int l = 0; l <= 2; ++l) {
        for (const auto& j : multis) {
            const int tj = multi_total(j, nd);
            if (tj + 2 * l > 4) continue;
            double sup = 0;
            for (std::int32_t id : pts) {
                const Vec z = grid.coords(id);
                for (double t : times) {
                    std::array<int, kMaxRealDim> order = j;
                    double v;
                    if (l == 0) {
                        v = spatial_derivative(phi, z, t, order, 0, hs);
                    } else if (l == 1) {
                        v = fd1(
                            [&](double tt) {
                                std::array<int, kMaxRealDim> o2 = j;
                                return spatial_derivative(phi, z, tt, o2, 0, hs);
                            },
                            t, ht);
                    } else {
                        auto g = [&](double tt) {
                            std::array<int, kMaxRealDim> o2 = j;
                            return spatial_derivative(phi, z, tt, o2, 0, hs);
                        };
                        v = (g(t + ht) - 2.0 * g(t) + g(t - ht)) / (ht * ht);
                    }
                    sup = std::max(sup, std::abs(v));
                }
            }
            total += sup;
        }
    }
    return total;
}

double measure_cf(const SourceFn& f, const Domain& domain, double T, double u_range,
                  unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int nd = domain.real_dim();
    const double hs = 1e-3;
    const double ht = std::max(1e-4, 1e-3 * T);
    const double hu = 1e-3 * (1.0 + u_range);

    std::vector<Vec> zs;
    std::vector<double> ts, us;
    for (int s = 0; s < 128; ++s) {
        Vec z(nd);
        for (int i = 0; i < nd; ++i)
            z[i] = domain.bbox().lo[i] + unit(rng) * (domain.bbox().hi[i] - domain.bbox().lo[i]);
        zs.push_back(z);
        ts.push_back(0.05 * T + 0.9 * T * unit(rng));
        us.push_back(-u_range + 2.0 * u_range * unit(rng));
    }

    std::vector<std::array<int, kMaxRealDim>> multis;
    enumerate_multi(nd, 2, multis);
    double total = 0;
    for (int j1 = 0; j1 <= 2; ++j1) {          // d/dt order
        for (int j3 = 0; j3 + j1 <= 2; ++j3) {  // d/du order
            for (const auto& j2 : multis) {
                const int tj = multi_total(j2, nd);
                if (j1 + tj + j3 > 2) continue;
                double sup = 0;
                for (size_t s = 0; s < zs.size(); ++s) {
                    auto fu = [&](double t, const Vec& z, double u) {
                        if (j3 == 0) return f(t, z, u);
                        if (j3 == 1) return (f(t, z, u + hu) - f(t, z, u - hu)) / (2 * hu);
                        return (f(t, z, u + hu) - 2 * f(t, z, u) + f(t, z, u - hu)) / (hu * hu);
                    };
                    auto fs = [&](double t, const Vec& z, double u) {
                        if (tj == 0) return fu(t, z, u);
                        // first nonzero axis carries the whole |j2| <= 2 order here
                        int axis = 0;
                        while (j2[static_cast<size_t>(axis)] == 0) ++axis;
                        if (tj == 1 && j2[static_cast<size_t>(axis)] == 1) {
                            return (fu(t, axis_step(z, axis, hs), u) -
                                    fu(t, axis_step(z, axis, -hs), u)) /
                                   (2 * hs);
                        }
                        if (j2[static_cast<size_t>(axis)] == 2)
                            return (fu(t, axis_step(z, axis, hs), u) - 2 * fu(t, z, u) +
                                    fu(t, axis_step(z, axis, -hs), u)) /
                                   (hs * hs);
                        // mixed first-first across two axes
                        int axis2 = axis + 1;
                        while (j2[static_cast<size_t>(axis2)] == 0) ++axis2;
                        auto g = [&](double s1, double s2) {
                            Vec zz = axis_step(axis_step(z, axis, s1), axis2, s2);
                            return fu(t, zz, u);
                        };
                        return (g(hs, hs) - g(hs, -hs) - g(-hs, hs) + g(-hs, -hs)) /
                               (4 * hs * hs);
                    };
                    double v;
                    if (j1 == 0)
                        v = fs(ts[s], zs[s], us[s]);
                    else if (j1 == 1)
                        v = (fs(ts[s] + ht, zs[s], us[s]) - fs(ts[s] - ht, zs[s], us[s])) /
                            (2 * ht);
                    else
                        v = (fs(ts[s] + ht, zs[s], us[s]) - 2 * fs(ts[s], zs[s], us[s]) +
                             fs(ts[s] - ht, zs[s], us[s])) /
                            (ht * ht);
                    sup = std::max(sup, std::abs(v));
                }
                total += sup;
            }
        }
    }
    return total;
}

BoundReport bound_monitors(const Trajectory& traj, const FlowProblem& problem, double eps,
                           double M1) {
    const Grid& g = *problem.grid;
    const int n = g.n();
    BoundReport rep;
    rep.m1 = M1;
    rep.cu = traj.level->cu;
    rep.cphi = measure_cphi(problem.phi, g, problem.T);
    rep.cf = measure_cf(problem.f, *problem.domain, problem.T,
                        rep.cu + M1 + 2.0 * rep.cphi + 1.0);
    rep.c1 = M1 + 2.0 * rep.cphi + rep.cu;
    const double c2p = n + rep.cf * (problem.T + rep.c1);
    rep.c2 = (rep.cphi + 2.0 * c2p) * problem.T + 2.0 * rep.c1;

    std::vector<size_t> window;
    for (size_t j = 0; j < traj.size(); ++j)
        if (traj.snapshots[j].time > eps && traj.snapshots[j].time <= problem.T) window.push_back(j);
    if (window.size() < 2)
        throw WindowEmpty("bound monitors need at least 2 snapshots in (eps, T)");

    // (a) sup |u| over the whole run vs C1.
    rep.sup_u = 0;
    for (const auto& s : traj.snapshots)
        for (std::int32_t id = 0; id < g.num_points(); ++id)
            rep.sup_u = std::max(rep.sup_u, std::abs(s[id]));
    rep.lines.push_back({"sup|u| <= C1", rep.sup_u, rep.c1, rep.sup_u <= rep.c1, true,
                         "C1 = M1 + 2 C_phi + C_u"});

    // (b) max t |du/dt| vs C2.
    rep.max_t_udot = 0;
    for (size_t j = 1; j + 1 < traj.size(); ++j) {
        const double t = traj.snapshots[j].time;
        for (std::int32_t id = 0; id < g.num_points(); ++id)
            rep.max_t_udot = std::max(rep.max_t_udot, t * std::abs(traj.udot[j][id]));
    }
    rep.lines.push_back({"max t|du/dt| <= C2", rep.max_t_udot, rep.c2,
                         rep.max_t_udot <= rep.c2, true,
                         "C2 = (C_phi + 2 C2') T + 2 C1, C2' = n + C_f (T + C1)"});

    // (c) gradient and Laplacian suprema on the window: reported, finite.
    rep.sup_grad = 0;
    rep.sup_lap = -std::numeric_limits<double>::infinity();
    for (size_t j : window) {
        auto ops = first_order_ops(traj.snapshots[j]);
        for (std::int32_t id = 0; id < g.num_points(); ++id) {
            rep.sup_grad = std::max(rep.sup_grad, ops.gradient[static_cast<size_t>(id)].norm());
            rep.sup_lap = std::max(rep.sup_lap, ops.laplacian[static_cast<size_t>(id)]);
        }
    }
    rep.lines.push_back({"sup|grad u| finite on (eps,T)", rep.sup_grad, std::nullopt,
                         std::isfinite(rep.sup_grad), false, "no constructive constant"});
    rep.lines.push_back({"sup Laplacian u finite on (eps,T)", rep.sup_lap, std::nullopt,
                         std::isfinite(rep.sup_lap), false, "no constructive constant"});

    // (d) boundary tangential positivity at the feet; for n = 1 the
    // holomorphic tangent space is trivial and the full Hessian stands in.
    rep.c_eps = std::numeric_limits<double>::infinity();
    for (size_t j : window) {
        const double t = traj.snapshots[j].time;
        FootValueFn feet = [&](std::int32_t id, int axis, int dir) {
            return traj.level->phi_m_foot(id, axis, dir, t);
        };
        for (std::int32_t id : g.boundary_adjacent()) {
            HermitianForm h = complex_hessian_at(traj.snapshots[j], id, &feet, nullptr);
            if (n == 1) {
                rep.c_eps = std::min(rep.c_eps, h.at(0, 0).real());
                continue;
            }
            for (int axis = 0; axis < g.real_dim(); ++axis) {
                for (int dir = -1; dir <= 1; dir += 2) {
                    if (g.neighbor(id, axis, dir) >= 0) continue;
                    const Vec ft = g.foot(id, axis, dir);
                    const Vec gr = problem.domain->rho_grad(ft);
                    std::array<Cplx, kMaxComplexDim> w{};
                    for (int a = 0; a < n; ++a)
                        w[static_cast<size_t>(a)] = 0.5 * Cplx(gr[2 * a], -gr[2 * a + 1]);
                    HermitianForm restr = restrict_to_complement(h, w);
                    rep.c_eps = std::min(rep.c_eps, min_eigenvalue(restr));
                }
            }
        }
    }
    rep.lines.push_back({"boundary tangential Hessian c_eps > 0", rep.c_eps, 0.0,
                         rep.c_eps > 0.0, true, "restriction to the holomorphic tangent space",
                         true});

    // (e) uniform ellipticity certificate: eigenvalue range of u^{ab}.
    rep.lambda = std::numeric_limits<double>::infinity();
    rep.Lambda = 0;
    for (size_t j : window) {
        for (std::int32_t id : g.interior()) {
            HermitianForm h = complex_hessian_at(traj.snapshots[j], id, nullptr, nullptr);
            HermitianForm inv = inverse_pd(h);
            rep.lambda = std::min(rep.lambda, min_eigenvalue(inv));
            rep.Lambda = std::max(rep.Lambda, max_eigenvalue(inv));
        }
    }
    rep.lines.push_back({"uniform ellipticity lambda > 0", rep.lambda, std::nullopt,
                         rep.lambda > 0, false, "eigenvalue range of u^{ab}"});
    rep.lines.push_back({"uniform ellipticity Lambda finite", rep.Lambda, std::nullopt,
                         std::isfinite(rep.Lambda), false, "eigenvalue range of u^{ab}"});
    return rep;
}

DiscreteEvolution evolution_from_trajectory(const Trajectory& traj, double tol_scale) {
    DiscreteEvolution ev;
    ev.snapshots = traj.snapshots;
    ev.udot = traj.udot;
    ev.premise_tol.resize(traj.size());
    std::vector<double> times;
    for (size_t j = 0; j < traj.size(); ++j) {
        ev.premise_tol[j] = 1e-9 + tol_scale * traj.udot_error_scale[j];
        times.push_back(traj.snapshots[j].time);
    }
    auto level = traj.level;
    ev.foot = [level, times](size_t j, std::int32_t id, int axis, int dir) {
        return level->phi_m_foot(id, axis, dir, times[j]);
    };
    return ev;
}

DiscreteEvolution evolution_from_evaluator(std::shared_ptr<const Grid> grid,
                                           const BoundaryTimeFn& value,
                                           const BoundaryTimeFn* dt_fn,
                                           const std::vector<double>& schedule,
                                           double premise_tol) {
    DiscreteEvolution ev;
    BoundaryTimeFn val = value;
    for (double t : schedule) {
        ev.snapshots.push_back(make_field(grid, [&](const Vec& z) { return val(z, t); }, t));
        GridField d;
        if (dt_fn) {
            d = make_field(grid, [&](const Vec& z) { return (*dt_fn)(z, t); }, t);
        } else {
            const double dtt = 1e-6 * (1.0 + std::abs(t));
            const double tm = std::max(t - dtt, 0.0);
            d = make_field(
                grid, [&](const Vec& z) { return (val(z, t + dtt) - val(z, tm)) / (t + dtt - tm); },
                t);
        }
        ev.udot.push_back(std::move(d));
        ev.premise_tol.push_back(premise_tol);
    }
    std::vector<double> times = schedule;
    ev.foot = [val, grid, times](size_t j, std::int32_t id, int axis, int dir) {
        return val(grid->foot(id, axis, dir), times[j]);
    };
    return ev;
}

ComparisonReport comparison_check(const DiscreteEvolution& sub, const DiscreteEvolution& super,
                                  const SourceFn& f, double tol) {
    if (sub.snapshots.size() != super.snapshots.size())
        throw Error("comparison requires matching snapshot schedules");
    const Grid& g = *sub.snapshots.front().grid;
    const size_t J = sub.snapshots.size();
    for (size_t j = 0; j < J; ++j)
        if (std::abs(sub.snapshots[j].time - super.snapshots[j].time) > 1e-9)
            throw Error("comparison requires matching snapshot times");

    // Premises: discrete sub/supersolution inequalities at interior points.
    for (size_t j = 0; j < J; ++j) {
        const double t = sub.snapshots[j].time;
        for (std::int32_t id : g.interior()) {
            const Vec z = g.coords(id);
            {
                HermitianForm h = complex_hessian_at(sub.snapshots[j], id, nullptr, nullptr);
                double ld;
                try {
                    ld = log_det_pd(h);
                } catch (const NotPlurisubharmonic& e) {
                    throw PremiseViolated("subsolution (psh)", z, t, e.min_eig_estimate());
                }
                const double defect = sub.udot[j][id] - ld - f(t, z, sub.snapshots[j][id]);
                if (defect > sub.premise_tol[j]) throw PremiseViolated("subsolution", z, t, defect);
            }
            {
                HermitianForm h = complex_hessian_at(super.snapshots[j], id, nullptr, nullptr);
                double ld;
                try {
                    ld = log_det_pd(h);
                } catch (const NotPlurisubharmonic& e) {
                    throw PremiseViolated("supersolution (psh)", z, t, e.min_eig_estimate());
                }
                const double defect = ld + f(t, z, super.snapshots[j][id]) - super.udot[j][id];
                if (defect > super.premise_tol[j])
                    throw PremiseViolated("supersolution", z, t, defect);
            }
        }
    }

    ComparisonReport rep;
    rep.interior_sup = -std::numeric_limits<double>::infinity();
    rep.parabolic_sup = -std::numeric_limits<double>::infinity();
    // Parabolic boundary: the initial slice plus the boundary feet at all times.
    for (std::int32_t id = 0; id < g.num_points(); ++id)
        rep.parabolic_sup =
            std::max(rep.parabolic_sup, sub.snapshots[0][id] - super.snapshots[0][id]);
    for (size_t j = 0; j < J; ++j) {
        for (std::int32_t id : g.boundary_adjacent()) {
            for (int axis = 0; axis < g.real_dim(); ++axis) {
                for (int dir = -1; dir <= 1; dir += 2) {
                    if (g.neighbor(id, axis, dir) >= 0) continue;
                    rep.parabolic_sup = std::max(
                        rep.parabolic_sup, sub.foot(j, id, axis, dir) - super.foot(j, id, axis, dir));
                }
            }
        }
    }
    for (size_t j = 1; j < J; ++j) {
        for (std::int32_t id = 0; id < g.num_points(); ++id) {
            const double d = sub.snapshots[j][id] - super.snapshots[j][id];
            if (d > rep.interior_sup) {
                rep.interior_sup = d;
                rep.worst_point = g.coords(id);
                rep.worst_time = sub.snapshots[j].time;
            }
        }
    }
    rep.excess = rep.interior_sup - std::max(0.0, rep.parabolic_sup);
    rep.holds = rep.excess <= tol;
    return rep;
}

TraceReport initial_trace_check(const Trajectory& traj, const FlowProblem& problem,
                                double threshold_frac) {
    const Grid& g = *problem.grid;
    TraceReport rep;
    const PointFn& u0 = problem.initial.u0;
    for (size_t j = 1; j < traj.size(); ++j) {
        double e = 0;
        for (std::int32_t id = 0; id < g.num_points(); ++id)
            e = std::max(e, std::abs(traj.snapshots[j][id] - u0(g.coords(id))));
        rep.times.push_back(traj.snapshots[j].time);
        rep.sup_error.push_back(e);
    }
    // Monotone decrease (as t falls) over the last 5 snapshots toward 0.
    rep.monotone_near_zero = true;
    const size_t k = std::min<size_t>(5, rep.times.size());
    for (size_t i = 0; i + 1 < k; ++i)
        if (rep.sup_error[i] > rep.sup_error[i + 1] + 1e-9) rep.monotone_near_zero = false;
    rep.e_min = rep.sup_error.empty() ? 0 : rep.sup_error.front();
    rep.threshold = threshold_frac * traj.level->osc_u0;
    rep.below_threshold = rep.e_min <= rep.threshold;

    // Lower barrier u >= u0 + a rho - A t over a small candidate search.
    for (double a : {0.25, 0.5, 1.0, 2.0}) {
        for (int p = 0; p <= 14 && !rep.barrier_found; ++p) {
            const double A = std::pow(2.0, p);
            double worst = std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < traj.size(); ++j) {
                const double t = traj.snapshots[j].time;
                for (std::int32_t id = 0; id < g.num_points(); ++id) {
                    const Vec z = g.coords(id);
                    worst = std::min(worst, traj.snapshots[j][id] -
                                                (u0(z) + a * problem.domain->rho(z) - A * t));
                }
            }
            if (worst >= -1e-7) {
                rep.barrier_found = true;
                rep.barrier_a = a;
                rep.barrier_A = A;
            }
        }
        if (rep.barrier_found) break;
    }
    return rep;
}

HolderReport parabolic_holder_seminorm(const Trajectory& traj, double alpha,
                                       const HolderParams& params, double beta) {
    if (!(alpha > 0) || alpha > 1.0) throw Error("holder exponent must lie in (0, 1]");
    if (beta <= 0) beta = std::min(alpha + 1.0, 1.99);
    const Grid& g = *traj.snapshots.front().grid;
    std::vector<size_t> window;
    for (size_t j = 0; j < traj.size(); ++j) {
        const double t = traj.snapshots[j].time;
        if (t >= params.t_lo && t <= params.t_hi) window.push_back(j);
    }
    if (window.size() < 2) throw WindowEmpty("holder window needs at least 2 snapshots");

    const long npts = g.num_points();
    const long K = static_cast<long>(window.size()) * npts;
    const double tspan = std::max(params.t_hi - params.t_lo, 1e-300);
    double xscale = 1.0, tscale = 1.0;
    if (params.unit_box_rescale) {
        double diam = 0;
        for (int i = 0; i < g.real_dim(); ++i)
            diam = std::max(diam, (g.size()[static_cast<size_t>(i)] - 1) * g.h());
        xscale = 1.0 / std::max(diam, 1e-300);
        tscale = 1.0 / tspan;
    }

    auto sample = [&](long flat, Vec& z, double& t, double& v) {
        const long j = flat / npts;
        const std::int32_t id = static_cast<std::int32_t>(flat % npts);
        const size_t sj = window[static_cast<size_t>(j)];
        z = g.coords(id);
        t = traj.snapshots[sj].time;
        v = traj.snapshots[sj][id];
    };

    HolderReport rep;
    Vec z1, z2;
    double t1, t2, v1, v2;
    auto consider = [&](long i, long j) {
        sample(i, z1, t1, v1);
        sample(j, z2, t2, v2);
        double dx = 0;
        for (int a = 0; a < g.real_dim(); ++a) dx += (z1[a] - z2[a]) * (z1[a] - z2[a]);
        double d = std::sqrt(dx) * xscale + std::sqrt(std::abs(t1 - t2) * tscale);
        d = std::max(d, params.min_distance);
        if (d <= 0) return;
        rep.seminorm = std::max(rep.seminorm, std::abs(v1 - v2) / std::pow(d, alpha));
        ++rep.pairs_used;
    };
    // Short-offset family first: the supremum for alpha < 1 lives at small
    // distances, so all near-index pairs (spatial neighbors) are included.
    const long max_offset = std::max(1L, params.pair_budget / (2 * std::max(K, 1L)));
    for (long delta = 1; delta <= std::min(max_offset, K - 1); ++delta)
        for (long i = 0; i + delta < K; ++i) consider(i, i + delta);
    // Strided global family for the long-range part.
    const double total_pairs = 0.5 * static_cast<double>(K) * (K - 1);
    const long stride = std::max(1L, static_cast<long>(2.0 * total_pairs / params.pair_budget));
    for (double p = 0; p < total_pairs; p += stride) {
        const double pd = p;
        const double kd = static_cast<double>(K);
        long i = static_cast<long>(
            std::floor(kd - 0.5 - std::sqrt(std::max((kd - 0.5) * (kd - 0.5) - 2.0 * pd, 0.0))));
        i = std::clamp(i, 0L, K - 2);
        auto tri = [&](long ii) { return ii * kd - 0.5 * ii * (ii + 1.0); };
        while (i > 0 && tri(i) > pd) --i;
        while (i + 1 < K - 1 && tri(i + 1) <= pd) ++i;
        const long j = i + 1 + static_cast<long>(pd - tri(i));
        if (j <= i || j >= K) continue;
        consider(i, j);
    }

    // time-only seminorm <u>_beta over same-point pairs
    for (size_t a = 0; a < window.size(); ++a) {
        for (size_t b = a + 1; b < window.size(); ++b) {
            const size_t ja = window[a], jb = window[b];
            const double dt = std::abs(traj.snapshots[ja].time - traj.snapshots[jb].time) * tscale;
            if (dt <= 0) continue;
            const double den = std::pow(std::max(std::sqrt(dt), params.min_distance), beta);
            for (std::int32_t id = 0; id < npts; ++id) {
                const double dv = std::abs(traj.snapshots[ja][id] - traj.snapshots[jb][id]);
                rep.time_seminorm = std::max(rep.time_seminorm, dv / den);
            }
        }
    }
    return rep;
}

ShiftReport shift_consistency_check(const Trajectory& traj, const FlowProblem& problem, int m) {
    if (!(problem.T > 1.0 / m)) throw Error("shift test needs T > 1/m");
    const double shift = 1.0 / m;
    const Grid& g = *problem.grid;

    // Locate the snapshot at t = 1/m.
    size_t j0 = traj.size();
    for (size_t j = 0; j < traj.size(); ++j)
        if (std::abs(traj.snapshots[j].time - shift) <= 1e-9 * (1 + problem.T)) j0 = j;
    if (j0 == traj.size())
        throw Error("shift test needs a snapshot at t = 1/m; add it to the schedule");

    // Shifted problem: start from u(., 1/m), advance with shifted data.
    FlowProblem q = problem;
    q.T = problem.T - shift;
    SourceFn f0 = problem.f;
    q.f = [f0, shift](double t, const Vec& z, double u) { return f0(t + shift, z, u); };
    BoundaryTimeFn phi0 = problem.phi;
    q.phi = [phi0, shift](const Vec& z, double t) { return phi0(z, t + shift); };
    q.extra_snapshot_times.clear();
    for (size_t j = j0 + 1; j < traj.size(); ++j)
        q.extra_snapshot_times.push_back(traj.snapshots[j].time - shift);
    q.only_extra_snapshots = true;  // align the step partition with the original

    auto level = std::make_shared<CascadeLevel>();
    level->m = 0;
    level->grid = problem.grid;
    level->phi = q.phi;
    level->u0m = traj.snapshots[j0];
    level->u0m.time = 0;
    const GridField& s0 = traj.snapshots[j0];
    level->u0m_eval = [&g, s0](const Vec& z) {
        // nearest-lattice lookup; the shifted run only samples lattice points
        double best = 0, bd = std::numeric_limits<double>::infinity();
        for (std::int32_t id = 0; id < g.num_points(); ++id) {
            const double d2 = (g.coords(id) - z).norm2();
            if (d2 < bd) {
                bd = d2;
                best = s0[id];
            }
        }
        return best;
    };
    level->osc_u0 = traj.level->osc_u0;
    level->cu = traj.level->cu;

    Trajectory shifted = run_flow(q, std::shared_ptr<const CascadeLevel>(level));

    ShiftReport rep;
    double step_tol = 0;
    for (const auto& st : shifted.steps)
        step_tol += (problem.stepper == Stepper::kImplicit) ? problem.newton_tol
                                                            : 1e-14 * (1.0 + std::abs(st.dt));
    rep.tol = 10.0 * std::max(step_tol, 1e-12);
    for (size_t js = 0; js < shifted.size(); ++js) {
        const double ts = shifted.snapshots[js].time;
        for (size_t j = j0; j < traj.size(); ++j) {
            if (std::abs(traj.snapshots[j].time - (ts + shift)) > 1e-9 * (1 + problem.T)) continue;
            ++rep.compared_snapshots;
            for (std::int32_t id = 0; id < g.num_points(); ++id)
                rep.gap = std::max(rep.gap,
                                   std::abs(shifted.snapshots[js][id] - traj.snapshots[j][id]));
        }
    }
    rep.ok = rep.gap <= rep.tol;

    // Lower barrier u(z,t) >= u0(z) - eps - A t for searched (eps, A).
    const PointFn& u0 = problem.initial.u0;
    for (double eb : {0.05, 0.1, 0.2, 0.5}) {
        const double eps_b = eb * std::max(traj.level->osc_u0, 1.0);
        for (int p = 0; p <= 14 && !rep.barrier_found; ++p) {
            const double A = std::pow(2.0, p);
            double worst = std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < traj.size(); ++j) {
                const double t = traj.snapshots[j].time;
                for (std::int32_t id = 0; id < g.num_points(); ++id)
                    worst = std::min(worst, traj.snapshots[j][id] -
                                                (u0(g.coords(id)) - eps_b - A * t));
            }
            if (worst >= -1e-7) {
                rep.barrier_found = true;
                rep.barrier_eps = eps_b;
                rep.barrier_A = A;
            }
        }
        if (rep.barrier_found) break;
    }
    return rep;
}

}  // namespace cmaflow
