#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cmaflow/initial_data.hpp"

namespace cmaflow {

enum class Stepper { kExplicit, kImplicit };

/// A full flow instance: domain, horizon, source, boundary data, initial data
/// and the discretization policy.
struct FlowProblem {
    std::shared_ptr<const Domain> domain;
    std::shared_ptr<const Grid> grid;
    double T = 1.0;
    SourceFn f;
    BoundaryTimeFn phi;
    InitialData initial;

    Stepper stepper = Stepper::kExplicit;
    double cfl_safety = 0.2;   // explicit dt policy
    double dt = 0.0;           // implicit target step; 0 means T / (4 snapshots)
    double dt_min = 1e-9;
    double newton_tol = 1e-10;
    int newton_max_iters = 50;
    double lin_tol = 1e-11;
    int lin_max_iters = 5000;

    int snapshots = 16;  // schedule t_j = T (j/J)^2, refined near t = 0
    std::vector<double> extra_snapshot_times;
    // Use only {0} + extras + {T}: lets a re-solve align its step partition
    // with a reference run (backward Euler is partition sensitive at O(dt^2)).
    bool only_extra_snapshots = false;

    /// Spot-checks f_u <= 0 at pseudorandom samples and the corner condition
    /// phi(., 0) = u0 at boundary feet. Throws on violation.
    void validate(unsigned seed = 1234) const;

    std::vector<double> snapshot_schedule() const;
};

struct StepDiagnostics {
    double t = 0, dt = 0;
    int newton_iters = 0;
    int pd_projections = 0;
    double final_residual = 0;
    bool rejected = false;
    std::vector<double> newton_residuals;
};

struct Trajectory {
    std::vector<GridField> snapshots;
    std::vector<GridField> udot;            // discrete time derivatives at snapshots
    std::vector<double> udot_error_scale;   // per snapshot: second-difference magnitude
    std::vector<StepDiagnostics> steps;
    std::shared_ptr<const CascadeLevel> level;
    double min_hessian_eig = 0;  // over all accepted states and interior points

    const GridField& at(size_t j) const { return snapshots[j]; }
    size_t size() const { return snapshots.size(); }
};

class FlowAborted : public Error {
public:
    FlowAborted(const std::string& msg, Trajectory partial, double t_reached)
        : Error(msg), partial_(std::move(partial)), t_reached_(t_reached) {}
    const Trajectory& partial() const { return partial_; }
    double t_reached() const { return t_reached_; }

private:
    Trajectory partial_;
    double t_reached_;
};

/// One forward Euler step: u <- u + dt (log det H(u) + f) at interior points,
/// boundary refreshed from the level's ramped data at t + dt.
/// One backward Euler step: damped Newton on
/// u+ - dt (log det H(u+) + f(t+dt, z, u+)) = u.
/// Both guard the plurisubharmonic cone; a failed guard rejects the step and
/// the driver halves dt.
Trajectory run_flow(const FlowProblem& problem, std::shared_ptr<const CascadeLevel> level);

struct CascadePairGap {
    int m = 0, k = 0;
    double sup_gap = 0;
    double bound = 0;
    bool ok = false;
};

struct CascadeReport {
    std::vector<int> levels;
    std::vector<double> eps_m, sup_gm, delta_m;
    std::vector<CascadePairGap> pairs;
    std::vector<double> gap_by_k;  // max over m > k of sup_gap
    bool gaps_decreasing = false;
    bool all_bounds_ok = false;
    std::vector<Trajectory> trajectories;
    std::vector<std::string> failures;  // per-level abort messages, if any
};

/// Runs the flow at each level and checks the pairwise cascade inequality
/// sup (u_m - u_k) <= 2 eps_k (1 + sup|g_k|) + tol for every m > k.
CascadeReport run_cascade(const FlowProblem& problem, const std::vector<int>& levels,
                          double pair_tol = 1e-6);

/// Max gap between the snapshot's value at the Dirichlet feet (reconstructed
/// through each boundary closure) and the level's ramped boundary data.
double boundary_exactness_gap(const Trajectory& traj, size_t snapshot_index);

}  // namespace cmaflow
