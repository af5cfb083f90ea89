#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cmaflow/errors.hpp"
#include "cmaflow/hermitian.hpp"
#include "cmaflow/vec.hpp"

namespace cmaflow {

struct BBox {
    Vec lo, hi;
};

/// Strictly pseudoconvex domain, represented by a defining function rho with
/// inf rho = -1, rho < 0 exactly on the domain and rho = 0 on its boundary.
class Domain {
public:
    using Fn = std::function<double(const Vec&)>;
    using GradFn = std::function<Vec(const Vec&)>;

    static Domain ball(int n, double dilation = 1.2);
    /// rho = sum_a c_a |z_a|^2 - 1 (so inf rho = -1 at the origin).
    static Domain ellipsoid(const std::vector<double>& coeffs, int n, double dilation = 1.2);
    /// Validates strict plurisubharmonicity by sampling and rescales so inf rho = -1.
    static Domain custom(const std::string& name, int n, Fn rho, GradFn rho_grad, BBox bbox,
                         double dilation = 1.2);

    double rho(const Vec& p) const { return rho_(p); }
    Vec rho_grad(const Vec& p) const { return grad_(p); }

    const std::string& name() const { return name_; }
    int n() const { return n_; }
    int real_dim() const { return 2 * n_; }
    const BBox& bbox() const { return bbox_; }
    double dilation() const { return dilation_; }
    /// Width of the collar between the domain closure and the bounding box.
    double margin() const { return margin_; }

    struct BoundaryFoot {
        double distance = 0;
        Vec foot;
    };
    /// Euclidean distance to the boundary and its nearest-point foot.
    /// Throws ProjectionStall when the projection iteration fails to converge.
    BoundaryFoot boundary_distance(const Vec& p) const;

    /// Complex Hessian of rho by central finite differences of the gradient.
    HermitianForm rho_complex_hessian(const Vec& p, double step = 1e-4) const;

private:
    Domain() = default;
    void validate_and_normalize();

    std::string name_;
    int n_ = 0;
    Fn rho_;
    GradFn grad_;
    BBox bbox_;
    double dilation_ = 1.2;
    double margin_ = 0;
};

enum class PointClass : std::uint8_t { exterior = 0, boundary_adjacent = 1, interior = 2 };

struct DomainKind {
    enum Kind { kBall, kEllipsoid, kCustom } kind = kBall;
    int n = 1;
    std::vector<double> coeffs;
};

Domain make_domain(const DomainKind& kind, double dilation = 1.2);

/// Uniform Cartesian lattice over the bounding box with point classification
/// and Shortley-Weller fractional arms. Immutable once built.
class Grid {
public:
    friend Grid classify_grid(const Domain& domain, double h, std::int64_t budget);

    int n() const { return n_; }
    int real_dim() const { return 2 * n_; }
    double h() const { return h_; }
    const std::array<int, kMaxRealDim>& size() const { return size_; }
    const Vec& origin() const { return origin_; }
    std::int64_t box_points() const { return box_points_; }

    int num_points() const { return static_cast<int>(flat_of_.size()); }  // non-exterior
    const std::vector<std::int32_t>& interior() const { return interior_; }
    const std::vector<std::int32_t>& boundary_adjacent() const { return boundary_adjacent_; }

    PointClass point_class(std::int32_t id) const { return cls_[static_cast<size_t>(id)]; }
    Vec coords(std::int32_t id) const;

    /// Compact id of the axis neighbor, or -1 when the neighbor is exterior
    /// or outside the box.
    std::int32_t neighbor(std::int32_t id, int axis, int dir) const {
        return neighbors_[static_cast<size_t>(id)][static_cast<size_t>(axis * 2 + (dir < 0 ? 1 : 0))];
    }

    /// Compact id of the diagonal neighbor p + da h e_a + db h e_b, or -1.
    std::int32_t corner(std::int32_t id, int axis_a, int dir_a, int axis_b, int dir_b) const;

    /// Fractional arm length in (0, 1]; 1 whenever the axis neighbor is non-exterior.
    double arm(std::int32_t id, int axis, int dir) const;
    /// Location of the Dirichlet foot p + theta h e_axis for a fractional arm.
    Vec foot(std::int32_t id, int axis, int dir) const;

    /// How a boundary-adjacent value is reconstructed from the Dirichlet foot
    /// and inward lattice values along the shortest fractional arm.
    struct BoundaryClosure {
        enum Mode : std::uint8_t { kPin = 0, kLinear = 1, kQuadratic = 2 };
        Mode mode = kPin;
        std::int8_t axis = 0;
        std::int8_t dir = +1;  // direction toward the foot
        double theta = 1.0;
        std::int32_t inner1 = -1, inner2 = -1;
    };
    const BoundaryClosure& closure(std::int32_t badj_id) const {
        return closures_[static_cast<size_t>(arm_slot_[static_cast<size_t>(badj_id)])];
    }

    /// CSV point table: id, lattice index, coordinates, class, arms.
    void write_points_csv(const std::string& path) const;

private:
    std::int64_t flat_index(const std::array<int, kMaxRealDim>& idx) const;
    void unflatten(std::int64_t flat, std::array<int, kMaxRealDim>& idx) const;

    int n_ = 0;
    double h_ = 0;
    std::array<int, kMaxRealDim> size_{};
    Vec origin_;
    std::int64_t box_points_ = 0;
    std::array<std::int64_t, kMaxRealDim> stride_{};

    std::vector<std::int32_t> compact_of_;  // full box -> compact id or -1
    std::vector<std::int64_t> flat_of_;     // compact id -> flat box index
    std::vector<PointClass> cls_;           // per compact id
    std::vector<std::int32_t> interior_;
    std::vector<std::int32_t> boundary_adjacent_;
    std::vector<std::int32_t> arm_slot_;          // compact id -> slot or -1
    std::vector<std::array<double, 2 * kMaxRealDim>> arms_;  // slot -> theta[axis*2+dirbit]
    std::vector<BoundaryClosure> closures_;       // per slot
    std::vector<std::array<std::int32_t, 2 * kMaxRealDim>> neighbors_;
    std::vector<std::array<std::uint16_t, kMaxRealDim>> packed_idx_;
};

/// Classify the lattice of spacing h over the domain's bounding box.
/// dir: +1 or -1 throughout this module; dirbit = (dir < 0).
Grid classify_grid(const Domain& domain, double h, std::int64_t budget = 2'000'000);

}  // namespace cmaflow
