#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cmaflow/flow.hpp"

namespace cmaflow {

/// u_m = phi(z,t) - Osc(u0) zeta(m t) + M_m rho(z), certified so that its
/// complex Hessian dominates the identity and it is a discrete subsolution.
struct Subsolution {
    int m = 1;
    double M = 1.0;
    double osc_u0 = 0;
    std::shared_ptr<const Domain> domain;
    BoundaryTimeFn phi;

    double value(const Vec& z, double t) const {
        return phi(z, t) - osc_u0 * cutoff_zeta(m * t) + M * domain->rho(z);
    }
    double dt_value(const Vec& z, double t) const;
};

/// Discrete harmonic extension of phi(., t): Shortley-Weller Laplace solve with
/// Dirichlet feet, max-norm residual below 1e-9. Throws SolverStall on failure.
GridField harmonic_majorant(const Domain& domain, std::shared_ptr<const Grid> grid,
                            const BoundaryTimeFn& phi, double t,
                            double residual_tol = 1e-9, int max_iters = 20000);

struct SubsolutionSearchLog {
    int doublings = 0;
    int bisection_steps = 0;
    double certified_margin = 0;  // smallest slack of the subsolution inequality
};

/// Smallest M (doubling then bisection from M = 1) such that both Subsolution
/// invariants hold on the grid across the snapshot schedule plus the ramp
/// transition times {0, eps_m, 2 eps_m}.
Subsolution construct_subsolution(const FlowProblem& problem, const CascadeLevel& level,
                                  SubsolutionSearchLog* log = nullptr);

struct GuanParams {
    double a = 0, N = 0, delta = 0;
};

struct GuanPointRecord {
    std::int32_t id = 0;
    double t = 0;
    double lv_residual = 0;  // L(v) - (1 + sum u^{aa})/4; nonnegative means pass
    double v = 0;
};

struct GuanReport {
    GuanParams params;
    bool searched = false;
    bool degenerate = false;  // v identically zero
    long collar_points = 0;   // point-time pairs examined
    long lv_ok = 0;
    long v_ok = 0;
    double frac_both_ok = 0;
    std::vector<GuanPointRecord> records;
};

/// Diagnostic check of the collar barrier v = (u - u_) + a (h - u_) - N d^2:
/// evaluates L(v) >= (1 + sum u^{aa})/4 and v >= 0 on U_delta x (eps, T).
/// With no params given, searches a small candidate grid for the best triple.
/// Throws CollarEmpty when the collar holds no grid points.
GuanReport guan_barrier_check(const Trajectory& traj, const FlowProblem& problem,
                              const Subsolution& subsol, double eps,
                              std::optional<GuanParams> params = std::nullopt,
                              double tol = 1e-6);

/// Writes per-point barrier residuals as CSV (point, time, residuals).
void write_guan_csv(const GuanReport& report, const Grid& grid, const std::string& path);

}  // namespace cmaflow
