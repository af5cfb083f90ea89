#include "cmaflow/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmaflow {

namespace {

double bump(double s) { return s > 0 ? std::exp(-1.0 / s) : 0.0; }
double bump_deriv(double s) { return s > 0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

constexpr int kRampHalvings = 40;

/// Tensor-product quadrature nodes for the (1-s^2)^3 bump on [-1, 1].
struct BumpQuadrature {
    std::vector<double> node;    // in [-1, 1]
    std::vector<double> weight;  // normalized to sum 1
    BumpQuadrature() {
        for (int j = -3; j <= 3; ++j) {
            const double s = j / 3.0;
            const double w = std::pow(1.0 - s * s, 3);
            if (w > 0) {
                node.push_back(s);
                weight.push_back(w);
            }
        }
        double total = 0;
        for (double w : weight) total += w;
        for (double& w : weight) w /= total;
    }
};

const BumpQuadrature& quadrature() {
    static const BumpQuadrature q;
    return q;
}

}  // namespace

double cutoff_zeta(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double a = bump(2.0 - t);
    const double b = bump(t - 1.0);
    return a / (a + b);
}

double cutoff_zeta_deriv(double t) {
    if (t <= 1.0 || t >= 2.0) return 0.0;
    const double a = bump(2.0 - t);
    const double b = bump(t - 1.0);
    const double da = -bump_deriv(2.0 - t);
    const double db = bump_deriv(t - 1.0);
    return (da * b - a * db) / ((a + b) * (a + b));
}

InitialData InitialData::constant(double c) {
    InitialData d;
    d.kind = "constant";
    d.u0 = [c](const Vec&) { return c; };
    d.smooth = true;
    return d;
}

InitialData InitialData::quadratic(double a) {
    InitialData d;
    d.kind = "quadratic";
    d.u0 = [a](const Vec& p) { return a * p.norm2(); };
    d.smooth = true;
    return d;
}

InitialData InitialData::max_re() {
    InitialData d;
    d.kind = "max_re";
    d.u0 = [](const Vec& p) { return std::max(p[0], 0.0); };
    d.smooth = false;
    return d;
}

InitialData InitialData::max_ball(double c) {
    InitialData d;
    d.kind = "max_ball";
    d.u0 = [c](const Vec& p) { return std::max(p.norm2() - c, 0.0); };
    d.smooth = false;
    return d;
}

InitialData InitialData::tabulated(Vec origin, double h, std::vector<int> sizes,
                                   std::vector<double> values) {
    InitialData d;
    d.kind = "tabulated";
    d.smooth = false;
    const int nd = origin.dim;
    d.u0 = [origin, h, sizes, values, nd](const Vec& p) {
        // Multilinear interpolation; throws when the query leaves the table.
        std::array<int, kMaxRealDim> base{};
        std::array<double, kMaxRealDim> frac{};
        for (int i = 0; i < nd; ++i) {
            const double x = (p[i] - origin[i]) / h;
            const double fl = std::floor(x);
            base[static_cast<size_t>(i)] = static_cast<int>(fl);
            frac[static_cast<size_t>(i)] = x - fl;
            if (base[static_cast<size_t>(i)] < 0 ||
                base[static_cast<size_t>(i)] + 1 >= sizes[static_cast<size_t>(i)])
                throw DomainTooTight("tabulated initial data queried outside its table at " +
                                     to_string(p));
        }
        double acc = 0;
        for (int corner = 0; corner < (1 << nd); ++corner) {
            double w = 1;
            std::int64_t flat = 0;
            std::int64_t stride = 1;
            for (int i = nd - 1; i >= 0; --i) {
                const int bit = (corner >> i) & 1;
                w *= bit ? frac[static_cast<size_t>(i)] : 1.0 - frac[static_cast<size_t>(i)];
                flat += stride * (base[static_cast<size_t>(i)] + bit);
                stride *= sizes[static_cast<size_t>(i)];
            }
            acc += w * values[static_cast<size_t>(flat)];
        }
        return acc;
    };
    return d;
}

PointFn mollify_evaluator(const InitialData& data, int m, const Domain& domain) {
    if (m < 1) throw Error("mollification level must be >= 1");
    const double delta = domain.margin() / m;
    const int nd = domain.real_dim();
    const PointFn u0 = data.u0;
    const double inv_m = 1.0 / m;
    return [u0, delta, nd, inv_m](const Vec& z) {
        const auto& q = quadrature();
        const int k = static_cast<int>(q.node.size());
        std::array<int, kMaxRealDim> j{};
        double acc = 0;
        bool done = false;
        while (!done) {
            double w = 1;
            Vec y = z;
            for (int i = 0; i < nd; ++i) {
                w *= q.weight[static_cast<size_t>(j[static_cast<size_t>(i)])];
                y[i] -= delta * q.node[static_cast<size_t>(j[static_cast<size_t>(i)])];
            }
            acc += w * (u0(y) + inv_m * y.norm2());
            done = true;
            for (int i = 0; i < nd; ++i) {
                if (++j[static_cast<size_t>(i)] < k) {
                    done = false;
                    break;
                }
                j[static_cast<size_t>(i)] = 0;
            }
        }
        return acc;
    };
}

GridField mollify_initial(const InitialData& data, int m, std::shared_ptr<const Grid> grid,
                          const Domain& domain) {
    PointFn ev = mollify_evaluator(data, m, domain);
    return make_field(std::move(grid), ev, 0.0);
}

std::vector<double> compatibility_source(const GridField& u0m, const PointFn& u0m_eval,
                                         const SourceFn& f) {
    const Grid& g = *u0m.grid;
    std::vector<double> gm(static_cast<size_t>(g.num_points()), 0.0);
    FootValueFn feet = [&](std::int32_t id, int axis, int dir) {
        return u0m_eval(g.foot(id, axis, dir));
    };
    for (std::int32_t id : g.boundary_adjacent()) {
        HermitianForm h = complex_hessian_at(u0m, id, &feet, nullptr);
        double ld;
        try {
            ld = log_det_pd(h);
        } catch (const NotPlurisubharmonic& e) {
            throw NotPlurisubharmonic("compatibility source needs strictly psh data",
                                      e.min_eig_estimate(), g.coords(id));
        }
        gm[static_cast<size_t>(id)] = ld + f(0.0, g.coords(id), u0m[id]);
    }
    return gm;
}

double CascadeLevel::phi_m(std::int32_t id, double t) const {
    const Vec p = grid->coords(id);
    if (direct()) return phi(p, t);
    const double z = cutoff_zeta(t / eps_m);
    if (z == 0.0) return phi(p, t);
    return z * (t * gm[static_cast<size_t>(id)] + u0m[id]) + (1.0 - z) * phi(p, t);
}

double CascadeLevel::u0m_at_foot(std::int32_t id, int axis, int dir) const {
    return u0m_eval(grid->foot(id, axis, dir));
}

double CascadeLevel::phi_m_foot(std::int32_t id, int axis, int dir, double t) const {
    const Vec p = grid->foot(id, axis, dir);
    if (direct()) return phi(p, t);
    const double z = cutoff_zeta(t / eps_m);
    if (z == 0.0) return phi(p, t);
    // g_m at the foot is collocated at its owning boundary-adjacent point.
    return z * (t * gm[static_cast<size_t>(id)] + u0m_eval(p)) + (1.0 - z) * phi(p, t);
}

namespace {

void measure_osc_cu(const Grid& g, const PointFn& u0, CascadeLevel& level) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::int32_t id = 0; id < g.num_points(); ++id) {
        const double v = u0(g.coords(id));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (std::int32_t id : g.boundary_adjacent()) {
        for (int axis = 0; axis < g.real_dim(); ++axis) {
            for (int dir = -1; dir <= 1; dir += 2) {
                if (g.neighbor(id, axis, dir) >= 0) continue;
                const double v = u0(g.foot(id, axis, dir));
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    level.osc_u0 = hi - lo;
    level.cu = std::max(std::abs(lo), std::abs(hi));
}

double min_interior_hessian_eig(const GridField& u, const Grid& g) {
    double me = std::numeric_limits<double>::infinity();
    for (std::int32_t id : g.interior())
        me = std::min(me, min_eigenvalue(complex_hessian_at(u, id, nullptr, nullptr)));
    return me;
}

}  // namespace

CascadeLevel build_cascade_level(const Domain& domain, std::shared_ptr<const Grid> grid,
                                 const InitialData& data, const SourceFn& f,
                                 const BoundaryTimeFn& phi, int m, const CascadeLevel* prev) {
    if (m < 1) throw Error("cascade level index must be >= 1");
    CascadeLevel level;
    level.m = m;
    level.grid = grid;
    level.phi = phi;
    level.delta_mollify = domain.margin() / m;
    level.u0m_eval = mollify_evaluator(data, m, domain);
    level.u0m = mollify_initial(data, m, grid, domain);
    measure_osc_cu(*grid, data.u0, level);

    level.min_hessian_eig = min_interior_hessian_eig(level.u0m, *grid);
    if (level.min_hessian_eig < 1.0 / m - 1e-8)
        throw NotPlurisubharmonic("mollified initial data loses its Hessian lower bound",
                                  level.min_hessian_eig);

    level.gm = compatibility_source(level.u0m, level.u0m_eval, f);
    level.sup_gm = 0;
    for (std::int32_t id : grid->boundary_adjacent())
        level.sup_gm = std::max(level.sup_gm, std::abs(level.gm[static_cast<size_t>(id)]));

    double eps = 1.0 / (m * (1.0 + level.sup_gm));
    if (prev && !prev->direct()) {
        eps = std::min(eps, 0.95 * prev->eps_m);
        if (level.sup_gm > 0)
            eps = std::min(eps, 0.95 * prev->eps_m * prev->sup_gm / level.sup_gm);
    }

    // Ramp feasibility: u_{0,m} >= phi(., t) at boundary feet wherever the
    // cutoff is active, i.e. for t < 2 eps.
    auto feasible = [&](double e) {
        for (int k = 0; k <= 8; ++k) {
            const double t = 2.0 * e * k / 8.0;
            if (cutoff_zeta(t / e) == 0.0) continue;
            for (std::int32_t id : grid->boundary_adjacent()) {
                for (int axis = 0; axis < grid->real_dim(); ++axis) {
                    for (int dir = -1; dir <= 1; dir += 2) {
                        if (grid->neighbor(id, axis, dir) >= 0) continue;
                        const Vec ft = grid->foot(id, axis, dir);
                        if (level.u0m_eval(ft) - phi(ft, t) < -1e-12) return false;
                    }
                }
            }
        }
        return true;
    };
    int halvings = 0;
    while (!feasible(eps)) {
        eps *= 0.5;
        if (++halvings > kRampHalvings)
            throw RampInfeasible("no feasible ramp duration after " +
                                 std::to_string(kRampHalvings) + " halvings at level m=" +
                                 std::to_string(m));
    }
    level.eps_m = eps;

    // delta_m = sup over boundary feet of (u_{0,m} - u_0), with u_{0,m} read at
    // the foot by linear arm interpolation from the grid values.
    double dm = -std::numeric_limits<double>::infinity();
    bool any_foot = false;
    for (std::int32_t id : grid->boundary_adjacent()) {
        for (int axis = 0; axis < grid->real_dim(); ++axis) {
            for (int dir = -1; dir <= 1; dir += 2) {
                if (grid->neighbor(id, axis, dir) >= 0) continue;
                const double theta = grid->arm(id, axis, dir);
                const std::int32_t inner = grid->neighbor(id, axis, -dir);
                const double up = level.u0m[id];
                const double ui = inner >= 0 ? level.u0m[inner] : up;
                const double u_foot = up + theta * (up - ui);
                const Vec ft = grid->foot(id, axis, dir);
                dm = std::max(dm, u_foot - data.u0(ft));
                any_foot = true;
            }
        }
    }
    level.delta_m = any_foot ? dm : 0.0;
    return level;
}

CascadeLevel make_direct_level(const Domain& domain, std::shared_ptr<const Grid> grid,
                               const InitialData& data, const SourceFn& f,
                               const BoundaryTimeFn& phi) {
    (void)domain;
    (void)f;
    CascadeLevel level;
    level.m = 0;
    level.grid = grid;
    level.phi = phi;
    level.u0m = make_field(grid, data.u0, 0.0);
    level.u0m_eval = data.u0;
    measure_osc_cu(*grid, data.u0, level);
    level.min_hessian_eig = min_interior_hessian_eig(level.u0m, *grid);
    if (!(level.min_hessian_eig > 0))
        throw NotPlurisubharmonic(
            "direct runs need strictly psh initial data; use a cascade level instead",
            level.min_hessian_eig);
    return level;
}

}  // namespace cmaflow
