#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cmaflow/calculus.hpp"
#include "cmaflow/geometry.hpp"

namespace cmaflow {

/// Source term f(t, z, u), non-increasing in u.
using SourceFn = std::function<double(double t, const Vec& z, double u)>;
/// Boundary data (and its smooth extension) phi(z, t).
using BoundaryTimeFn = std::function<double(const Vec& z, double t)>;

/// Smooth cutoff: 1 on (-inf, 1], 0 on [2, inf), strictly decreasing between.
double cutoff_zeta(double t);
double cutoff_zeta_deriv(double t);

/// Bounded plurisubharmonic initial data on a neighborhood of the closure.
struct InitialData {
    PointFn u0;
    bool smooth = true;
    std::string kind = "custom";

    static InitialData constant(double c);
    static InitialData quadratic(double a);      // a |z|^2
    static InitialData max_re();                 // max(Re z_1, 0)
    static InitialData max_ball(double c);       // max(|z|^2 - c, 0)
    static InitialData tabulated(Vec origin, double h, std::vector<int> sizes,
                                 std::vector<double> values);
};

/// One level of the approximation cascade: mollified initial data, its
/// compatibility source on the boundary, the ramp duration and the boundary gap.
struct CascadeLevel {
    int m = 0;  // 0 denotes the direct level (no mollification, no ramp)
    double delta_mollify = 0;
    GridField u0m;
    PointFn u0m_eval;
    std::shared_ptr<const Grid> grid;
    BoundaryTimeFn phi;
    double sup_gm = 0;
    double eps_m = 0;
    double delta_m = 0;
    double osc_u0 = 0;  // Osc(u0) over the closure, measured on the grid
    double cu = 0;      // sup |u0|, measured on the grid
    double min_hessian_eig = 0;

    std::vector<double> gm;  // per compact id; meaningful at boundary-adjacent points

    bool direct() const { return m == 0; }

    /// Ramped boundary data at a lattice point.
    double phi_m(std::int32_t id, double t) const;
    /// Ramped boundary data at the Dirichlet foot of a fractional arm.
    double phi_m_foot(std::int32_t id, int axis, int dir, double t) const;
    /// Value of u0m at a foot (exact quadrature evaluation).
    double u0m_at_foot(std::int32_t id, int axis, int dir) const;
};

/// u_{0,m} = (u0 + |z|^2/m) convolved with a tensor-product polynomial bump of
/// radius delta = margin/m, sampled on the grid by quadrature.
GridField mollify_initial(const InitialData& data, int m, std::shared_ptr<const Grid> grid,
                          const Domain& domain);
PointFn mollify_evaluator(const InitialData& data, int m, const Domain& domain);

/// g_m = log det (u_{0,m})_{ab} + f(0, z, u_{0,m}) on the boundary; the sign is
/// fixed so that the ramp satisfies d/dt phi_m(.,0) = g_m.
std::vector<double> compatibility_source(const GridField& u0m, const PointFn& u0m_eval,
                                         const SourceFn& f);

/// Builds a full cascade level for index m >= 1. prev enforces that eps_m and
/// eps_m * sup|g_m| decrease along the cascade. Throws RampInfeasible when no
/// feasible ramp duration is found after 40 halvings.
CascadeLevel build_cascade_level(const Domain& domain, std::shared_ptr<const Grid> grid,
                                 const InitialData& data, const SourceFn& f,
                                 const BoundaryTimeFn& phi, int m,
                                 const CascadeLevel* prev = nullptr);

/// Level that runs the flow directly from smooth, strictly psh initial data.
CascadeLevel make_direct_level(const Domain& domain, std::shared_ptr<const Grid> grid,
                               const InitialData& data, const SourceFn& f,
                               const BoundaryTimeFn& phi);

}  // namespace cmaflow
