#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmaflow/barriers.hpp"
#include "cmaflow/flow.hpp"

namespace cmaflow {

struct EstimateLine {
    std::string name;
    double measured = 0;
    std::optional<double> bound;  // constant-formula bound when computable
    std::optional<bool> pass;     // present for enforced monitors
    bool enforced = false;
    std::string provenance;
    bool lower_bound_style = false;  // measured must stay above the bound
};

/// Measured suprema against the constant formulas, with provenance.
struct BoundReport {
    std::vector<EstimateLine> lines;
    double cu = 0, cphi = 0, cf = 0, m1 = 0;
    double c1 = 0, c2 = 0;
    double sup_u = 0, max_t_udot = 0, sup_grad = 0, sup_lap = 0;
    double c_eps = 0;
    double lambda = 0, Lambda = 0;  // eigenvalue range of u^{ab}

    bool all_enforced_pass() const {
        for (const auto& l : lines)
            if (l.enforced && l.pass && !*l.pass) return false;
        return true;
    }
};

/// Measured C4-norm surrogate of the boundary data (all derivatives with
/// |j| + 2l <= 4) over a grid subsample and the time window.
double measure_cphi(const BoundaryTimeFn& phi, const Grid& grid, double T, int max_points = 128);

/// Measured C2-norm surrogate of the source over random (t, z, u) samples.
double measure_cf(const SourceFn& f, const Domain& domain, double T, double u_range,
                  unsigned seed = 2024);

/// Runs the sup-bound, t|du/dt|, gradient/Laplacian, boundary tangential
/// positivity and uniform-ellipticity monitors over the window (eps, T).
/// M1 is the certified subsolution constant of level m = 1.
BoundReport bound_monitors(const Trajectory& traj, const FlowProblem& problem, double eps,
                           double M1);

/// A discrete evolution presented to the comparison checker: snapshot fields,
/// time derivatives, per-snapshot premise tolerances, and boundary feet data.
struct DiscreteEvolution {
    std::vector<GridField> snapshots;
    std::vector<GridField> udot;
    std::vector<double> premise_tol;
    std::function<double(size_t j, std::int32_t id, int axis, int dir)> foot;
};

DiscreteEvolution evolution_from_trajectory(const Trajectory& traj, double tol_scale = 10.0);
/// Closed-form sub/supersolutions sampled on the schedule; dt_fn may be null
/// (finite differences in t are used instead).
DiscreteEvolution evolution_from_evaluator(std::shared_ptr<const Grid> grid,
                                           const BoundaryTimeFn& value,
                                           const BoundaryTimeFn* dt_fn,
                                           const std::vector<double>& schedule,
                                           double premise_tol = 1e-7);

struct ComparisonReport {
    double interior_sup = 0;      // sup over the parabolic interior of (u - v)
    double parabolic_sup = 0;     // sup over the parabolic boundary of (u - v)
    double excess = 0;            // interior_sup - max(0, parabolic_sup)
    bool holds = false;
    Vec worst_point;
    double worst_time = 0;
};

/// Verifies sup (u - v) <= max{0, sup over the parabolic boundary of (u - v)}.
/// Premises (u a discrete subsolution, v a supersolution of the same f) are
/// checked pointwise first; violations throw PremiseViolated.
ComparisonReport comparison_check(const DiscreteEvolution& sub, const DiscreteEvolution& super,
                                  const SourceFn& f, double tol = 1e-7);

struct TraceReport {
    std::vector<double> times;
    std::vector<double> sup_error;  // e(t) = sup |u(.,t) - u0|
    bool monotone_near_zero = false;
    double e_min = 0;
    double threshold = 0;
    bool below_threshold = false;
    bool barrier_found = false;
    double barrier_a = 0, barrier_A = 0;
};

/// Initial-trace recovery: e(t) decay toward t = 0, the threshold test at the
/// smallest time, and the searched lower barrier u >= u0 + a rho - A t.
TraceReport initial_trace_check(const Trajectory& traj, const FlowProblem& problem,
                                double threshold_frac = 0.05);

struct HolderParams {
    double t_lo = 0, t_hi = 0;     // window in (eps, T)
    long pair_budget = 1000000;
    bool unit_box_rescale = false; // rescale window to the unit box
    double min_distance = 0;       // clamp d below (monotonicity normalization)
};

struct HolderReport {
    double seminorm = 0;        // [u]_alpha
    double time_seminorm = 0;   // <u>_beta with beta = alpha + 1 by default
    long pairs_used = 0;
};

/// Brute-force parabolic Holder seminorm over snapshot point pairs, subsampled
/// to the budget with a deterministic stride.
HolderReport parabolic_holder_seminorm(const Trajectory& traj, double alpha,
                                       const HolderParams& params, double beta = 0);

struct ShiftReport {
    double gap = 0;
    double tol = 0;
    bool ok = false;
    bool barrier_found = false;
    double barrier_eps = 0, barrier_A = 0;
    int compared_snapshots = 0;
};

/// Uniqueness probe: re-solve from u(., 1/m) with time-shifted data and
/// compare against the shifted original trajectory.
ShiftReport shift_consistency_check(const Trajectory& traj, const FlowProblem& problem, int m);

}  // namespace cmaflow
