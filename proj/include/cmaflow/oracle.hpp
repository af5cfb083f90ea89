#pragma once

#include <functional>
#include <vector>

#include "cmaflow/flow.hpp"

namespace cmaflow {

/// Closed-form reference solution with analytically supplied derivatives; the
/// induced source makes it an exact solution of the flow.
struct ManufacturedCase {
    std::string name;
    std::function<double(const Vec&, double)> value;
    std::function<double(const Vec&, double)> dt;
    std::function<HermitianForm(const Vec&, double)> hessian;
    SourceFn f;          // induced source, independent of u
    BoundaryTimeFn phi;  // the restriction of value to the boundary
    InitialData u0;

    FlowProblem problem(std::shared_ptr<const Domain> domain, std::shared_ptr<const Grid> grid,
                        double T) const;
};

struct ManufacturedParts {
    std::string name;
    std::function<double(const Vec&, double)> value;
    std::function<double(const Vec&, double)> dt;
    std::function<HermitianForm(const Vec&, double)> hessian;
};

/// f(t,z) = dw/dt - log det (w_ab); rejects fields that are not strictly psh
/// on the sampled box x [0, T].
ManufacturedCase manufactured_source(const ManufacturedParts& w, const Domain& domain, double T,
                                     int samples_per_axis = 9);

/// w = a|z|^2 + b t with f = b - n log a; exact for both steppers.
ManufacturedCase exact_quadratic_family(double a, double b, int n);

/// w = e^{-t} |z|^2 with f = -u + n t.
ManufacturedCase decay_case(int n);

/// Reference curve of the radial reduction du/dt = log((U_rr + U_r/r)/4) + f
/// on the unit disc, solved by explicit Euler on a fine radial mesh.
struct RadialCurve {
    std::vector<double> r;                     // nodes, r[0] = 0
    std::vector<double> times;                 // snapshot times
    std::vector<std::vector<double>> values;   // per time, per node
    double value_at(double radius, size_t time_index) const;
};

struct RadialProblem {
    std::function<double(double r)> u0;        // radial initial data
    std::function<double(double t)> phi;       // boundary value at r = 1
    std::function<double(double t, double r, double u)> f;
    double T = 0.25;
};

/// Solves the radial reduction at spacing dr (typically h/8) and returns the
/// curve sampled at the requested times. Throws NotRadial when the 2-D inputs
/// fail the radial-symmetry spot check.
RadialCurve radial_reference(const RadialProblem& problem, double dr,
                             const std::vector<double>& snapshot_times);

/// Spot check that a 2-D field evaluator is radially symmetric.
bool is_radial(const PointFn& fn, double radius_max, double tol = 1e-9);

/// 1-D mollification of radial data: (u0 + r^2/m) convolved with the
/// polynomial bump at radius delta = margin/m, evenly extended through r = 0.
/// Keeps the regularized data exactly radial so that the 2-D solver and the
/// radial reference discretize the same problem.
std::function<double(double)> radial_mollify(const std::function<double(double)>& u0, int m,
                                             double margin);

/// Max-norm discrete residual du/dt - log det H - f of a manufactured case
/// sampled at t = 0 on the grid.
double manufactured_residual(const ManufacturedCase& mc, const Grid& grid,
                             std::shared_ptr<const Grid> grid_sp);

}  // namespace cmaflow
