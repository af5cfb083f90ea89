#include "cmaflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cmaflow/krylov.hpp"

namespace cmaflow {

namespace {

struct StepRejected {
    std::string reason;
};

/// Per-point data assembled once per residual sweep of the implicit stepper.
struct Linearization {
    std::vector<HermitianForm> inv_hessian;  // per interior index
    std::vector<double> f_u;                 // per interior index
};

class FlowEngine {
public:
    FlowEngine(const FlowProblem& p, std::shared_ptr<const CascadeLevel> level)
        : p_(p), level_(std::move(level)), grid_(p.grid.get()) {
        interior_ = &grid_->interior();
        badj_ = &grid_->boundary_adjacent();
    }

    Trajectory run() {
        Trajectory traj;
        traj.level = level_;
        traj.min_hessian_eig = std::numeric_limits<double>::infinity();

        GridField u = level_->u0m;
        u.time = 0;
        const std::vector<double> schedule = p_.snapshot_schedule();
        traj.snapshots.push_back(u);
        double t = 0;
        for (size_t j = 1; j < schedule.size(); ++j) {
            const double target = schedule[j];
            try {
                advance(u, t, target, traj);
            } catch (const StepRejected& rej) {
                finalize(traj);
                throw FlowAborted("flow aborted at t=" + std::to_string(t) + ": " + rej.reason,
                                  std::move(traj), t);
            }
            u.time = t;
            traj.snapshots.push_back(u);
        }
        finalize(traj);
        return traj;
    }

private:
    /// Reconstruct boundary-adjacent values from the Dirichlet feet by
    /// quadratic interpolation along the shortest fractional arm. Iterated to
    /// a fixed point since closures may read other boundary-adjacent values.
    void refresh_boundary(GridField& u, double t) const {
        double scale = 1.0;
        for (int sweep = 0; sweep < 60; ++sweep) {
            double change = 0;
            for (std::int32_t id : *badj_) {
                const auto& c = grid_->closure(id);
                double v;
                if (c.mode == Grid::BoundaryClosure::kQuadratic) {
                    const double th = c.theta;
                    const double phif = level_->phi_m_foot(id, c.axis, c.dir, t);
                    v = -th / (2.0 + th) * u[c.inner2] + 2.0 * th / (1.0 + th) * u[c.inner1] +
                        2.0 / ((2.0 + th) * (1.0 + th)) * phif;
                } else if (c.mode == Grid::BoundaryClosure::kLinear) {
                    const double th = c.theta;
                    const double phif = level_->phi_m_foot(id, c.axis, c.dir, t);
                    v = (th * u[c.inner1] + phif) / (1.0 + th);
                } else {
                    v = level_->phi_m(id, t);
                }
                change = std::max(change, std::abs(v - u[id]));
                scale = std::max(scale, std::abs(v));
                u[id] = v;
            }
            if (change <= 1e-14 * scale) return;
        }
    }

    /// Same closure with zero boundary data, for Jacobian corrections.
    void refresh_homogeneous(GridField& w) const {
        double scale = 1.0;
        for (int sweep = 0; sweep < 60; ++sweep) {
            double change = 0;
            for (std::int32_t id : *badj_) {
                const auto& c = grid_->closure(id);
                double v = 0;
                if (c.mode == Grid::BoundaryClosure::kQuadratic) {
                    const double th = c.theta;
                    v = -th / (2.0 + th) * w[c.inner2] + 2.0 * th / (1.0 + th) * w[c.inner1];
                } else if (c.mode == Grid::BoundaryClosure::kLinear) {
                    v = c.theta * w[c.inner1] / (1.0 + c.theta);
                }
                change = std::max(change, std::abs(v - w[id]));
                scale = std::max(scale, std::abs(v));
                w[id] = v;
            }
            if (change <= 1e-14 * scale) return;
        }
    }

    /// log det H + f sweep; also tracks the smallest Hessian eigenvalue.
    /// Returns false when the state leaves the PD cone.
    bool rate_sweep(const GridField& u, double t, std::vector<double>* rate,
                    double* min_eig) const {
        const int ni = static_cast<int>(interior_->size());
        double me = std::numeric_limits<double>::infinity();
        for (int k = 0; k < ni; ++k) {
            const std::int32_t id = (*interior_)[static_cast<size_t>(k)];
            HermitianForm h = complex_hessian_at(u, id, nullptr, nullptr);
            Cholesky c = cholesky(h);
            if (!c.ok) {
                if (min_eig) *min_eig = c.min_pivot;
                return false;
            }
            if (rate) {
                double ld = 0;
                for (int i = 0; i < h.n; ++i) ld += std::log(c.lat(i, i).real());
                (*rate)[static_cast<size_t>(k)] = 2.0 * ld + p_.f(t, grid_->coords(id), u[id]);
            }
            me = std::min(me, min_eigenvalue(h));
        }
        if (min_eig) *min_eig = me;
        return true;
    }

    /// PD guard: perturb interior values by eps |z|^2 until Cholesky succeeds
    /// everywhere, at most 3 attempts. Boundary closures are re-applied so the
    /// Dirichlet feet stay exact.
    bool ensure_pd(GridField& u, double t, double* min_eig, int* projections) const {
        for (int attempt = 0; attempt <= 3; ++attempt) {
            if (rate_sweep(u, 0.0, nullptr, min_eig)) return true;
            if (attempt == 3) break;
            double umax = 0;
            for (std::int32_t id : *interior_) umax = std::max(umax, std::abs(u[id]));
            const double eps = 1e-8 * (1.0 + umax);
            for (std::int32_t id : *interior_) u[id] += eps * grid_->coords(id).norm2();
            refresh_boundary(u, t);
            ++(*projections);
        }
        return false;
    }

    void advance(GridField& u, double& t, double target, Trajectory& traj) {
        const double h = grid_->h();
        const int nd = grid_->real_dim();
        std::vector<double> rate(interior_->size());
        // Anything closer than dt_min counts as reached; accumulated rounding
        // over many steps can leave such slivers at segment ends.
        while (target - t > p_.dt_min) {
            double min_eig = 0;
            if (p_.stepper == Stepper::kExplicit) {
                if (!rate_sweep(u, t, &rate, &min_eig))
                    throw StepRejected{"state left the plurisubharmonic cone"};
                traj.min_hessian_eig = std::min(traj.min_hessian_eig, min_eig);
                double dt = p_.cfl_safety * h * h * min_eig / nd;
                if (p_.dt > 0) dt = std::min(dt, p_.dt);  // optional fixed cap
                dt = std::min(dt, target - t);
                while (true) {
                    if (dt < p_.dt_min) throw StepRejected{"dt fell below dt_min"};
                    GridField next = u;
                    for (size_t k = 0; k < interior_->size(); ++k)
                        next[(*interior_)[k]] = u[(*interior_)[k]] + dt * rate[k];
                    refresh_boundary(next, t + dt);
                    StepDiagnostics diag;
                    diag.t = t;
                    diag.dt = dt;
                    double guard_eig = 0;
                    if (ensure_pd(next, t + dt, &guard_eig, &diag.pd_projections)) {
                        u = std::move(next);
                        t += dt;
                        traj.steps.push_back(std::move(diag));
                        break;
                    }
                    dt *= 0.5;
                }
            } else {
                if (!rate_sweep(u, t, &rate, &min_eig))
                    throw StepRejected{"state left the plurisubharmonic cone"};
                traj.min_hessian_eig = std::min(traj.min_hessian_eig, min_eig);
                double dt = p_.dt > 0 ? p_.dt : p_.T / (4.0 * p_.snapshots);
                dt = std::min(dt, target - t);
                while (true) {
                    if (dt < p_.dt_min) throw StepRejected{"dt fell below dt_min"};
                    StepDiagnostics diag;
                    diag.t = t;
                    diag.dt = dt;
                    // Explicit predictor as the Newton warm start; a stale
                    // interior against the refreshed boundary data can leave
                    // the PD cone when dt >> h^2.
                    GridField next = u;
                    for (size_t k = 0; k < interior_->size(); ++k)
                        next[(*interior_)[k]] = u[(*interior_)[k]] + dt * rate[k];
                    refresh_boundary(next, t + dt);
                    if (newton_solve(u, next, t + dt, dt, diag, traj)) {
                        u = std::move(next);
                        t += dt;
                        traj.steps.push_back(std::move(diag));
                        break;
                    }
                    dt *= 0.5;
                }
            }
        }
        t = target;
    }

    /// Residual of the backward Euler system at interior points; boundary
    /// closures are re-applied first. Returns false outside the PD cone.
    bool residual(GridField& x, const GridField& u_prev, double t_new, double dt,
                  std::vector<double>* res, Linearization* lin, double* min_eig) const {
        refresh_boundary(x, t_new);
        const int ni = static_cast<int>(interior_->size());
        double me = std::numeric_limits<double>::infinity();
        for (int k = 0; k < ni; ++k) {
            const std::int32_t id = (*interior_)[static_cast<size_t>(k)];
            HermitianForm hm = complex_hessian_at(x, id, nullptr, nullptr);
            Cholesky c = cholesky(hm);
            if (!c.ok) {
                if (min_eig) *min_eig = c.min_pivot;
                return false;
            }
            double ld = 0;
            for (int i = 0; i < hm.n; ++i) ld += std::log(c.lat(i, i).real());
            const Vec z = grid_->coords(id);
            const double fx = p_.f(t_new, z, x[id]);
            (*res)[static_cast<size_t>(k)] = x[id] - dt * (2.0 * ld + fx) - u_prev[id];
            if (lin) {
                lin->inv_hessian[static_cast<size_t>(k)] = inverse_pd(hm);
                const double du = 1e-6 * (1.0 + std::abs(x[id]));
                lin->f_u[static_cast<size_t>(k)] =
                    (p_.f(t_new, z, x[id] + du) - p_.f(t_new, z, x[id] - du)) / (2.0 * du);
            }
            me = std::min(me, min_eigenvalue(hm));
        }
        if (min_eig) *min_eig = std::min(*min_eig, me);
        return true;
    }

    bool newton_solve(const GridField& u_prev, GridField& x, double t_new, double dt,
                      StepDiagnostics& diag, Trajectory& traj) const {
        const std::int64_t ni = static_cast<std::int64_t>(interior_->size());
        const double h = grid_->h();
        std::vector<double> res(static_cast<size_t>(ni));
        Linearization lin;
        lin.inv_hessian.resize(static_cast<size_t>(ni));
        lin.f_u.resize(static_cast<size_t>(ni));
        double min_eig = std::numeric_limits<double>::infinity();
        if (!residual(x, u_prev, t_new, dt, &res, &lin, &min_eig)) {
            int guard_events = 0;
            if (!ensure_pd(x, t_new, &min_eig, &guard_events)) return false;
            diag.pd_projections += guard_events;
            if (!residual(x, u_prev, t_new, dt, &res, &lin, &min_eig)) return false;
        }
        double rnorm = max_abs(res.data(), ni);
        diag.newton_residuals.push_back(rnorm);

        GridField scratch = x;  // correction field; zero at boundary-adjacent points
        for (std::int32_t id = 0; id < grid_->num_points(); ++id) scratch[id] = 0.0;

        std::vector<double> rhs(static_cast<size_t>(ni)), delta(static_cast<size_t>(ni)),
            inv_diag(static_cast<size_t>(ni));
        for (int iter = 0; iter < p_.newton_max_iters; ++iter) {
            if (rnorm <= p_.newton_tol) {
                diag.newton_iters = iter;
                diag.final_residual = rnorm;
                traj.min_hessian_eig = std::min(traj.min_hessian_eig, min_eig);
                return true;
            }
            // J delta = -G with J = I - dt (tr(H^{-1} CH(.)) + f_u .)
            for (std::int64_t k = 0; k < ni; ++k) {
                double trace_diag = 0;
                for (int a = 0; a < lin.inv_hessian[static_cast<size_t>(k)].n; ++a)
                    trace_diag += lin.inv_hessian[static_cast<size_t>(k)].at(a, a).real();
                const double d =
                    1.0 + dt * (trace_diag / (h * h) - lin.f_u[static_cast<size_t>(k)]);
                inv_diag[static_cast<size_t>(k)] = 1.0 / d;
                rhs[static_cast<size_t>(k)] = -res[static_cast<size_t>(k)];
            }
            ApplyFn apply = [this, &scratch, &lin, dt](const double* w, double* out) {
                for (size_t k = 0; k < interior_->size(); ++k) scratch[(*interior_)[k]] = w[k];
                refresh_homogeneous(scratch);
                for (size_t k = 0; k < interior_->size(); ++k) {
                    const std::int32_t id = (*interior_)[k];
                    HermitianForm ch = complex_hessian_at(scratch, id, nullptr, nullptr);
                    double tr = 0;
                    const HermitianForm& ih = lin.inv_hessian[k];
                    for (int a = 0; a < ih.n; ++a) {
                        tr += (ih.at(a, a) * ch.at(a, a)).real();
                        for (int b = a + 1; b < ih.n; ++b)
                            tr += 2.0 * (ih.at(b, a) * ch.at(a, b)).real();
                    }
                    out[k] = w[k] - dt * (tr + lin.f_u[k] * w[k]);
                }
            };
            std::fill(delta.begin(), delta.end(), 0.0);
            const double lin_target = std::max(p_.lin_tol * rnorm, 1e-15);
            KrylovResult kr = bicgstab(ni, apply, rhs.data(), delta.data(), inv_diag.data(),
                                       lin_target, p_.lin_max_iters);
            if (!kr.converged && kr.final_residual > 1e3 * lin_target) return false;

            // Damped update: halve until the residual decreases and stays PD.
            double step = 1.0;
            bool accepted = false;
            for (int halving = 0; halving < 20; ++halving) {
                GridField cand = x;
                for (std::int64_t k = 0; k < ni; ++k)
                    cand[(*interior_)[static_cast<size_t>(k)]] +=
                        step * delta[static_cast<size_t>(k)];
                std::vector<double> cand_res(static_cast<size_t>(ni));
                double cand_eig = std::numeric_limits<double>::infinity();
                if (residual(cand, u_prev, t_new, dt, &cand_res, &lin, &cand_eig)) {
                    const double cn = max_abs(cand_res.data(), ni);
                    if (cn < rnorm) {
                        x = std::move(cand);
                        res = std::move(cand_res);
                        rnorm = cn;
                        min_eig = cand_eig;
                        diag.newton_residuals.push_back(rnorm);
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!accepted) return false;
        }
        return false;
    }

    void finalize(Trajectory& traj) const {
        const size_t J = traj.snapshots.size();
        traj.udot.resize(J);
        traj.udot_error_scale.assign(J, 0.0);
        if (J < 2) return;
        auto diff = [&](size_t a, size_t b) {
            GridField d = traj.snapshots[a];
            const double dt = traj.snapshots[a].time - traj.snapshots[b].time;
            for (std::int32_t id = 0; id < grid_->num_points(); ++id)
                d[id] = (traj.snapshots[a][id] - traj.snapshots[b][id]) / dt;
            return d;
        };
        for (size_t j = 0; j < J; ++j) {
            const size_t a = (j + 1 < J) ? j + 1 : j;
            const size_t b = (j > 0) ? j - 1 : j;
            traj.udot[j] = diff(a, b);
            traj.udot[j].time = traj.snapshots[j].time;
        }
        for (size_t j = 1; j + 1 < J; ++j) {
            GridField fwd = diff(j + 1, j);
            GridField bwd = diff(j, j - 1);
            double scale = 0;
            for (std::int32_t id = 0; id < grid_->num_points(); ++id)
                scale = std::max(scale, std::abs(fwd[id] - bwd[id]));
            traj.udot_error_scale[j] = scale;
        }
        if (J >= 3) {
            traj.udot_error_scale[0] = traj.udot_error_scale[1];
            traj.udot_error_scale[J - 1] = traj.udot_error_scale[J - 2];
        }
    }

    const FlowProblem& p_;
    std::shared_ptr<const CascadeLevel> level_;
    const Grid* grid_ = nullptr;
    const std::vector<std::int32_t>* interior_ = nullptr;
    const std::vector<std::int32_t>* badj_ = nullptr;
};

}  // namespace

void FlowProblem::validate(unsigned seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int nd = grid->real_dim();
    for (int s = 0; s < 64; ++s) {
        const double t = unit(rng) * T;
        Vec z(nd);
        for (int i = 0; i < nd; ++i)
            z[i] = domain->bbox().lo[i] + unit(rng) * (domain->bbox().hi[i] - domain->bbox().lo[i]);
        const double u = -10.0 + 20.0 * unit(rng);
        const double du = 1e-5;
        const double fu = (f(t, z, u + du) - f(t, z, u - du)) / (2.0 * du);
        if (fu > 1e-8)
            throw Error("source term must be non-increasing in u; measured f_u=" +
                        std::to_string(fu) + " at t=" + std::to_string(t));
    }
    // Corner compatibility: phi(., 0) = u0 at boundary feet.
    for (std::int32_t id : grid->boundary_adjacent()) {
        for (int axis = 0; axis < nd; ++axis) {
            for (int dir = -1; dir <= 1; dir += 2) {
                if (grid->neighbor(id, axis, dir) >= 0) continue;
                const Vec ft = grid->foot(id, axis, dir);
                const double gap = std::abs(phi(ft, 0.0) - initial.u0(ft));
                if (gap > 1e-6)
                    throw Error("phi(.,0) != u0 at a boundary foot " + to_string(ft) + " (gap " +
                                std::to_string(gap) + ")");
            }
        }
    }
}

std::vector<double> FlowProblem::snapshot_schedule() const {
    std::vector<double> s;
    if (only_extra_snapshots) {
        s.push_back(0.0);
        s.push_back(T);
    } else {
        const int J = std::max(snapshots, 2);
        for (int j = 0; j <= J; ++j) {
            const double frac = static_cast<double>(j) / J;
            s.push_back(T * frac * frac);
        }
    }
    for (double t : extra_snapshot_times)
        if (t > 0 && t < T) s.push_back(t);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end(),
                        [this](double a, double b) { return std::abs(a - b) < 1e-12 * T; }),
            s.end());
    return s;
}

Trajectory run_flow(const FlowProblem& problem, std::shared_ptr<const CascadeLevel> level) {
    FlowEngine engine(problem, std::move(level));
    return engine.run();
}

double boundary_exactness_gap(const Trajectory& traj, size_t snapshot_index) {
    const GridField& s = traj.snapshots.at(snapshot_index);
    const Grid& g = *s.grid;
    const CascadeLevel& level = *traj.level;
    const double t = s.time;
    double gap = 0;
    for (std::int32_t id : g.boundary_adjacent()) {
        const auto& c = g.closure(id);
        const double th = c.theta;
        double foot_value;
        if (c.mode == Grid::BoundaryClosure::kQuadratic) {
            // quadratic through (-2h, -h, 0) evaluated at theta h
            foot_value = 0.5 * th * (th + 1.0) * s[c.inner2] - th * (th + 2.0) * s[c.inner1] +
                         0.5 * (th + 2.0) * (th + 1.0) * s[id];
        } else if (c.mode == Grid::BoundaryClosure::kLinear) {
            foot_value = s[c.inner1] + (1.0 + th) * (s[id] - s[c.inner1]);
        } else {
            continue;  // pinned points carry the extended data directly
        }
        gap = std::max(gap, std::abs(foot_value - level.phi_m_foot(id, c.axis, c.dir, t)));
    }
    return gap;
}

CascadeReport run_cascade(const FlowProblem& problem, const std::vector<int>& levels,
                          double pair_tol) {
    if (levels.empty()) throw Error("cascade needs at least one level");
    CascadeReport rep;
    std::vector<std::shared_ptr<const CascadeLevel>> built;
    const CascadeLevel* prev = nullptr;
    for (int m : levels) {
        auto lv = std::make_shared<const CascadeLevel>(build_cascade_level(
            *problem.domain, problem.grid, problem.initial, problem.f, problem.phi, m, prev));
        prev = lv.get();
        rep.levels.push_back(m);
        rep.eps_m.push_back(lv->eps_m);
        rep.sup_gm.push_back(lv->sup_gm);
        rep.delta_m.push_back(lv->delta_m);
        built.push_back(std::move(lv));
    }
    for (size_t i = 0; i < built.size(); ++i) {
        try {
            rep.trajectories.push_back(run_flow(problem, built[i]));
            rep.failures.emplace_back();
        } catch (const FlowAborted& e) {
            rep.trajectories.push_back(e.partial());
            rep.failures.push_back(e.what());
        }
    }
    // Pairwise gaps on the shared snapshot schedule.
    rep.all_bounds_ok = true;
    rep.gap_by_k.assign(levels.size(), -std::numeric_limits<double>::infinity());
    for (size_t ki = 0; ki < levels.size(); ++ki) {
        for (size_t mi = ki + 1; mi < levels.size(); ++mi) {
            if (!rep.failures[ki].empty() || !rep.failures[mi].empty()) continue;
            const Trajectory& tm = rep.trajectories[mi];
            const Trajectory& tk = rep.trajectories[ki];
            const size_t J = std::min(tm.size(), tk.size());
            double gap = -std::numeric_limits<double>::infinity();
            double norm_gap = 0;
            for (size_t j = 0; j < J; ++j)
                for (std::int32_t id = 0; id < problem.grid->num_points(); ++id) {
                    const double d = tm.snapshots[j][id] - tk.snapshots[j][id];
                    gap = std::max(gap, d);
                    norm_gap = std::max(norm_gap, std::abs(d));
                }
            CascadePairGap pg;
            pg.m = levels[mi];
            pg.k = levels[ki];
            pg.sup_gap = gap;
            pg.bound = 2.0 * rep.eps_m[ki] * (1.0 + rep.sup_gm[ki]) + pair_tol;
            pg.ok = gap <= pg.bound;
            rep.all_bounds_ok = rep.all_bounds_ok && pg.ok;
            rep.pairs.push_back(pg);
            // Cauchy decay is measured in the sup norm
            rep.gap_by_k[ki] = std::max(rep.gap_by_k[ki], norm_gap);
        }
    }
    rep.gaps_decreasing = true;
    for (size_t ki = 0; ki + 2 < levels.size(); ++ki)
        if (rep.gap_by_k[ki + 1] > rep.gap_by_k[ki] + 1e-9) rep.gaps_decreasing = false;
    return rep;
}

}  // namespace cmaflow
