#include "cmaflow/calculus.hpp"

#include <cmath>

namespace cmaflow {

GridField make_field(std::shared_ptr<const Grid> grid, const PointFn& fn, double time) {
    GridField f;
    f.grid = grid;
    f.time = time;
    f.values.resize(static_cast<size_t>(grid->num_points()));
    for (std::int32_t id = 0; id < grid->num_points(); ++id)
        f.values[static_cast<size_t>(id)] = fn(grid->coords(id));
    return f;
}

GridField constant_field(std::shared_ptr<const Grid> grid, double value, double time) {
    GridField f;
    f.grid = grid;
    f.time = time;
    f.values.assign(static_cast<size_t>(grid->num_points()), value);
    return f;
}

FootValueFn foot_values_from(const std::shared_ptr<const Grid>& grid, const PointFn& fn) {
    return [grid, fn](std::int32_t id, int axis, int dir) {
        return fn(grid->foot(id, axis, dir));
    };
}

double second_derivative(const GridField& f, std::int32_t id, int axis, const FootValueFn* feet,
                         StencilDiagnostics* diag) {
    const Grid& g = *f.grid;
    const double h = g.h();
    const std::int32_t np = g.neighbor(id, axis, +1);
    const std::int32_t nm = g.neighbor(id, axis, -1);
    const double u0 = f[id];
    if (np >= 0 && nm >= 0) return (f[np] - 2.0 * u0 + f[nm]) / (h * h);
    if (feet) {
        const double tp = g.arm(id, axis, +1);
        const double tm = g.arm(id, axis, -1);
        const double up = np >= 0 ? f[np] : (*feet)(id, axis, +1);
        const double um = nm >= 0 ? f[nm] : (*feet)(id, axis, -1);
        return (2.0 / (h * h)) * (up / (tp * (tp + tm)) - u0 / (tp * tm) + um / (tm * (tp + tm)));
    }
    // One-sided second difference toward the available side.
    const int s = (np >= 0) ? +1 : (nm >= 0 ? -1 : 0);
    if (s != 0) {
        const std::int32_t n1 = g.neighbor(id, axis, s);
        const std::int32_t n2 = n1 >= 0 ? g.neighbor(n1, axis, s) : -1;
        if (n2 >= 0) return (u0 - 2.0 * f[n1] + f[n2]) / (h * h);
    }
    if (diag) ++diag->missing;
    return 0.0;
}

double mixed_derivative(const GridField& f, std::int32_t id, int axis_a, int axis_b,
                        StencilDiagnostics* diag) {
    const Grid& g = *f.grid;
    const double h = g.h();
    const std::int32_t pp = g.corner(id, axis_a, +1, axis_b, +1);
    const std::int32_t pm = g.corner(id, axis_a, +1, axis_b, -1);
    const std::int32_t mp = g.corner(id, axis_a, -1, axis_b, +1);
    const std::int32_t mm = g.corner(id, axis_a, -1, axis_b, -1);
    if (pp >= 0 && pm >= 0 && mp >= 0 && mm >= 0)
        return (f[pp] - f[pm] - f[mp] + f[mm]) / (4.0 * h * h);
    // Corner fallback, deterministic preference order.
    static constexpr int kCorner[4][2] = {{+1, +1}, {+1, -1}, {-1, +1}, {-1, -1}};
    for (const auto& c : kCorner) {
        const std::int32_t ea = g.neighbor(id, axis_a, c[0]);
        const std::int32_t eb = g.neighbor(id, axis_b, c[1]);
        const std::int32_t cc = g.corner(id, axis_a, c[0], axis_b, c[1]);
        if (ea >= 0 && eb >= 0 && cc >= 0) {
            if (diag) ++diag->one_sided_mixed;
            return c[0] * c[1] * (f[cc] - f[ea] - f[eb] + f[id]) / (h * h);
        }
    }
    if (diag) ++diag->missing;
    return 0.0;
}

HermitianForm complex_hessian_at(const GridField& f, std::int32_t id, const FootValueFn* feet,
                                 StencilDiagnostics* diag) {
    const int n = f.grid->n();
    HermitianForm hf(n);
    for (int a = 0; a < n; ++a) {
        const double dxx = second_derivative(f, id, 2 * a, feet, diag);
        const double dyy = second_derivative(f, id, 2 * a + 1, feet, diag);
        hf.at(a, a) = 0.25 * (dxx + dyy);
        for (int b = a + 1; b < n; ++b) {
            const double xaxb = mixed_derivative(f, id, 2 * a, 2 * b, diag);
            const double yayb = mixed_derivative(f, id, 2 * a + 1, 2 * b + 1, diag);
            const double xayb = mixed_derivative(f, id, 2 * a, 2 * b + 1, diag);
            const double yaxb = mixed_derivative(f, id, 2 * a + 1, 2 * b, diag);
            const Cplx v(0.25 * (xaxb + yayb), 0.25 * (xayb - yaxb));
            hf.at(a, b) = v;
            hf.at(b, a) = std::conj(v);
        }
    }
    return hf;
}

std::vector<HermitianForm> complex_hessian(const GridField& f, const FootValueFn* feet,
                                           StencilDiagnostics* diag) {
    std::vector<HermitianForm> out(static_cast<size_t>(f.grid->num_points()));
    for (std::int32_t id = 0; id < f.grid->num_points(); ++id)
        out[static_cast<size_t>(id)] = complex_hessian_at(f, id, feet, diag);
    return out;
}

FirstOrderOps first_order_ops(const GridField& field) {
    const Grid& g = *field.grid;
    const double h = g.h();
    const int nd = g.real_dim();
    FirstOrderOps out;
    out.gradient.resize(static_cast<size_t>(g.num_points()), Vec(nd));
    out.laplacian.assign(static_cast<size_t>(g.num_points()), 0.0);
    for (std::int32_t id = 0; id < g.num_points(); ++id) {
        Vec grad(nd);
        double lap = 0;
        for (int axis = 0; axis < nd; ++axis) {
            const std::int32_t np = g.neighbor(id, axis, +1);
            const std::int32_t nm = g.neighbor(id, axis, -1);
            if (np >= 0 && nm >= 0) {
                grad[axis] = (field[np] - field[nm]) / (2.0 * h);
            } else {
                const int s = (np >= 0) ? +1 : (nm >= 0 ? -1 : 0);
                if (s != 0) {
                    const std::int32_t n1 = g.neighbor(id, axis, s);
                    const std::int32_t n2 = n1 >= 0 ? g.neighbor(n1, axis, s) : -1;
                    if (n2 >= 0)
                        grad[axis] = s * (-3.0 * field[id] + 4.0 * field[n1] - field[n2]) / (2.0 * h);
                    else
                        grad[axis] = s * (field[n1] - field[id]) / h;
                } else {
                    ++out.diag.missing;
                }
            }
            lap += second_derivative(field, id, axis, nullptr, &out.diag);
        }
        out.gradient[static_cast<size_t>(id)] = grad;
        out.laplacian[static_cast<size_t>(id)] = lap;
    }
    return out;
}

}  // namespace cmaflow
