#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cmaflow/geometry.hpp"
#include "cmaflow/hermitian.hpp"

namespace cmaflow {

/// Real values attached to the non-exterior lattice points of a Grid.
struct GridField {
    std::shared_ptr<const Grid> grid;
    std::vector<double> values;  // indexed by compact id
    double time = 0;

    double operator[](std::int32_t id) const { return values[static_cast<size_t>(id)]; }
    double& operator[](std::int32_t id) { return values[static_cast<size_t>(id)]; }
};

using PointFn = std::function<double(const Vec&)>;

GridField make_field(std::shared_ptr<const Grid> grid, const PointFn& fn, double time = 0);
GridField constant_field(std::shared_ptr<const Grid> grid, double value, double time = 0);

/// Dirichlet values at Shortley-Weller feet, addressed by the owning
/// boundary-adjacent point and arm direction.
using FootValueFn = std::function<double(std::int32_t id, int axis, int dir)>;

FootValueFn foot_values_from(const std::shared_ptr<const Grid>& grid, const PointFn& fn);

struct StencilDiagnostics {
    long one_sided_mixed = 0;  // mixed stencil fell back to a corner difference
    long missing = 0;          // no usable stencil; derivative reported as 0
};

struct FirstOrderOps {
    std::vector<Vec> gradient;      // per compact id
    std::vector<double> laplacian;  // real 2n-dimensional Laplacian
    StencilDiagnostics diag;
};

/// Central differences at interior points; one-sided stencils (exact on
/// quadratics) at boundary-adjacent points.
FirstOrderOps first_order_ops(const GridField& field);

/// Pure second derivative along an axis. With foot values, boundary-adjacent
/// points use the Shortley-Weller unequal-arm stencil; otherwise one-sided.
double second_derivative(const GridField& f, std::int32_t id, int axis, const FootValueFn* feet,
                         StencilDiagnostics* diag);

/// Mixed second derivative: 4-point centered cross when the full stencil is
/// non-exterior, corner fallback (still exact on quadratics) otherwise.
double mixed_derivative(const GridField& f, std::int32_t id, int axis_a, int axis_b,
                        StencilDiagnostics* diag);

/// Discrete complex Hessian (u_{ab}) at one point, Hermitian by construction.
HermitianForm complex_hessian_at(const GridField& f, std::int32_t id, const FootValueFn* feet,
                                 StencilDiagnostics* diag);

/// Complex Hessian at every non-exterior point.
std::vector<HermitianForm> complex_hessian(const GridField& f, const FootValueFn* feet = nullptr,
                                           StencilDiagnostics* diag = nullptr);

}  // namespace cmaflow
