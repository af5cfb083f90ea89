#include "cmaflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace cmaflow {

namespace {

constexpr int kBisectionIters = 60;
constexpr int kProjectionMaxIters = 100;

/// Small dense LU solve with partial pivoting, m <= 2n+1 <= 7.
bool solve_dense(int m, double* a /* m x m row-major */, double* b) {
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
        if (std::abs(a[piv * m + col]) < 1e-300) return false;
        if (piv != col) {
            for (int c = 0; c < m; ++c) std::swap(a[col * m + c], a[piv * m + c]);
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < m; ++r) {
            const double f = a[r * m + col] / a[col * m + col];
            for (int c = col; c < m; ++c) a[r * m + c] -= f * a[col * m + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = m - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < m; ++c) s -= a[r * m + c] * b[c];
        b[r] = s / a[r * m + r];
    }
    return true;
}

}  // namespace

Domain Domain::ball(int n, double dilation) {
    Domain d;
    d.name_ = "ball";
    d.n_ = n;
    d.dilation_ = dilation;
    d.rho_ = [](const Vec& p) { return p.norm2() - 1.0; };
    d.grad_ = [](const Vec& p) {
        Vec g = p;
        g *= 2.0;
        return g;
    };
    d.bbox_.lo = Vec(2 * n);
    d.bbox_.hi = Vec(2 * n);
    for (int i = 0; i < 2 * n; ++i) {
        d.bbox_.lo[i] = -dilation;
        d.bbox_.hi[i] = dilation;
    }
    d.margin_ = dilation - 1.0;
    return d;
}

Domain Domain::ellipsoid(const std::vector<double>& coeffs, int n, double dilation) {
    if (static_cast<int>(coeffs.size()) != n)
        throw Error("ellipsoid needs one coefficient per complex coordinate");
    for (double c : coeffs)
        if (!(c > 0)) throw Error("ellipsoid coefficients must be positive");
    Domain d;
    d.name_ = "ellipsoid";
    d.n_ = n;
    d.dilation_ = dilation;
    std::vector<double> cs = coeffs;
    d.rho_ = [cs](const Vec& p) {
        double s = -1.0;
        for (size_t a = 0; a < cs.size(); ++a)
            s += cs[a] * (p[static_cast<int>(2 * a)] * p[static_cast<int>(2 * a)] +
                          p[static_cast<int>(2 * a + 1)] * p[static_cast<int>(2 * a + 1)]);
        return s;
    };
    d.grad_ = [cs](const Vec& p) {
        Vec g(p.dim);
        for (size_t a = 0; a < cs.size(); ++a) {
            g[static_cast<int>(2 * a)] = 2.0 * cs[a] * p[static_cast<int>(2 * a)];
            g[static_cast<int>(2 * a + 1)] = 2.0 * cs[a] * p[static_cast<int>(2 * a + 1)];
        }
        return g;
    };
    d.bbox_.lo = Vec(2 * n);
    d.bbox_.hi = Vec(2 * n);
    for (int a = 0; a < n; ++a) {
        const double semi = 1.0 / std::sqrt(coeffs[static_cast<size_t>(a)]);
        for (int k = 0; k < 2; ++k) {
            d.bbox_.lo[2 * a + k] = -dilation * semi;
            d.bbox_.hi[2 * a + k] = dilation * semi;
        }
    }
    double min_semi = std::numeric_limits<double>::infinity();
    for (double c : coeffs) min_semi = std::min(min_semi, 1.0 / std::sqrt(c));
    d.margin_ = (dilation - 1.0) * min_semi;
    return d;
}

Domain Domain::custom(const std::string& name, int n, Fn rho, GradFn rho_grad, BBox bbox,
                      double dilation) {
    Domain d;
    d.name_ = name;
    d.n_ = n;
    d.dilation_ = dilation;
    d.rho_ = std::move(rho);
    d.grad_ = std::move(rho_grad);
    d.bbox_ = bbox;
    d.validate_and_normalize();
    return d;
}

void Domain::validate_and_normalize() {
    const int samples_per_axis = (n_ <= 2) ? 17 : 9;
    const int nd = 2 * n_;
    std::array<int, kMaxRealDim> idx{};
    double inf_rho = std::numeric_limits<double>::infinity();
    Vec argmin(nd);
    double boundary_scale = 0;
    bool done = false;
    while (!done) {
        Vec p(nd);
        for (int i = 0; i < nd; ++i) {
            const double t = static_cast<double>(idx[static_cast<size_t>(i)]) / (samples_per_axis - 1);
            p[i] = bbox_.lo[i] + t * (bbox_.hi[i] - bbox_.lo[i]);
        }
        const double r = rho_(p);
        if (r < inf_rho) {
            inf_rho = r;
            argmin = p;
        }
        if (r < 0) {
            HermitianForm hr = rho_complex_hessian(p);
            const double me = min_eigenvalue(hr);
            if (!(me > 0)) throw DomainNotPseudoconvex(p, me);
            boundary_scale = std::max(boundary_scale, rho_grad(p).norm());
        }
        // advance multi-index
        done = true;
        for (int i = 0; i < nd; ++i) {
            if (++idx[static_cast<size_t>(i)] < samples_per_axis) {
                done = false;
                break;
            }
            idx[static_cast<size_t>(i)] = 0;
        }
    }
    if (!(inf_rho < 0)) throw Error("custom defining function is nonnegative on the bounding box");
    // A few descent refinements of the sampled minimizer.
    Vec p = argmin;
    for (int it = 0; it < 200; ++it) {
        Vec g = rho_grad(p);
        const double gn = g.norm();
        if (gn < 1e-12) break;
        double step = 0.25 / (1.0 + gn);
        Vec q = p - step * g;
        bool inside = true;
        for (int i = 0; i < nd; ++i)
            if (q[i] < bbox_.lo[i] || q[i] > bbox_.hi[i]) inside = false;
        if (!inside || rho_(q) >= rho_(p)) break;
        p = q;
    }
    inf_rho = std::min(inf_rho, rho_(p));
    const double scale = -1.0 / inf_rho;
    if (std::abs(scale - 1.0) > 1e-12) {
        Fn base = rho_;
        GradFn gbase = grad_;
        rho_ = [base, scale](const Vec& q) { return scale * base(q); };
        grad_ = [gbase, scale](const Vec& q) {
            Vec g = gbase(q);
            g *= scale;
            return g;
        };
    }
    // Margin estimate: smallest gap between the zero set and the box faces, probed
    // along the axes through the sampled minimizer.
    margin_ = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nd; ++i) {
        for (int dir = -1; dir <= 1; dir += 2) {
            const double face = (dir > 0) ? bbox_.hi[i] : bbox_.lo[i];
            double lo = 0, hi = std::abs(face - p[i]);
            if (rho_(axis_step(p, i, dir * hi)) <= 0) continue;  // face touches closure: no gap
            for (int it = 0; it < kBisectionIters; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (rho_(axis_step(p, i, dir * mid)) < 0)
                    lo = mid;
                else
                    hi = mid;
            }
            margin_ = std::min(margin_, std::abs(face - p[i]) - hi);
        }
    }
    if (!std::isfinite(margin_) || margin_ <= 0) margin_ = 0.05;
}

HermitianForm Domain::rho_complex_hessian(const Vec& p, double step) const {
    const int n = n_;
    HermitianForm h(n);
    // Real Hessian of rho from central differences of the gradient.
    std::array<Vec, kMaxRealDim> gp, gm;
    for (int i = 0; i < 2 * n; ++i) {
        gp[static_cast<size_t>(i)] = grad_(axis_step(p, i, step));
        gm[static_cast<size_t>(i)] = grad_(axis_step(p, i, -step));
    }
    auto d2 = [&](int i, int j) {
        return 0.5 * ((gp[static_cast<size_t>(i)][j] - gm[static_cast<size_t>(i)][j]) / (2 * step) +
                      (gp[static_cast<size_t>(j)][i] - gm[static_cast<size_t>(j)][i]) / (2 * step));
    };
    for (int a = 0; a < n; ++a) {
        h.at(a, a) = 0.25 * (d2(2 * a, 2 * a) + d2(2 * a + 1, 2 * a + 1));
        for (int b = a + 1; b < n; ++b) {
            const double re = 0.25 * (d2(2 * a, 2 * b) + d2(2 * a + 1, 2 * b + 1));
            const double im = 0.25 * (d2(2 * a, 2 * b + 1) - d2(2 * a + 1, 2 * b));
            h.at(a, b) = Cplx(re, im);
            h.at(b, a) = std::conj(h.at(a, b));
        }
    }
    return h;
}

Domain::BoundaryFoot Domain::boundary_distance(const Vec& p) const {
    const int nd = 2 * n_;
    // Initial guess: bisect to the boundary along the outward gradient ray
    // (or a fixed axis when the gradient vanishes, e.g. at a center point).
    Vec dir = grad_(p);
    if (dir.norm() < 1e-8) {
        dir = Vec(nd);
        dir[0] = 1.0;
    }
    dir *= 1.0 / dir.norm();
    Vec w = p;
    if (rho_(p) < 0) {
        double step = 1e-3;
        while (rho_(p + step * dir) < 0 && step < 1e6) step *= 2.0;
        double lo = 0, hi = step;
        for (int it = 0; it < kBisectionIters; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (rho_(p + mid * dir) < 0)
                lo = mid;
            else
                hi = mid;
        }
        w = p + hi * dir;
    }
    // Polish onto the level set.
    for (int it = 0; it < 30; ++it) {
        const double r = rho_(w);
        Vec g = grad_(w);
        const double g2 = g.norm2();
        if (g2 < 1e-300) break;
        w -= (r / g2) * g;
        if (std::abs(rho_(w)) < 1e-14) break;
    }
    double lambda = 0;
    {
        Vec g = grad_(w);
        const double g2 = g.norm2();
        if (g2 > 0) lambda = dot(w - p, g) / g2;
    }
    // Newton on the first-order optimality system: w - p + lambda grad(w) = 0, rho(w) = 0.
    const double fd = 1e-6;
    double last_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < kProjectionMaxIters; ++it) {
        Vec g = grad_(w);
        const double r = rho_(w);
        Vec opt = w - p + lambda * g;
        double res = std::abs(r);
        for (int i = 0; i < nd; ++i) res = std::max(res, std::abs(opt[i]));
        last_res = res;
        if (res < 1e-12 * (1.0 + p.norm())) break;

        const int m = nd + 1;
        std::array<double, (kMaxRealDim + 1) * (kMaxRealDim + 1)> a{};
        std::array<double, kMaxRealDim + 1> b{};
        for (int i = 0; i < nd; ++i) {
            Vec gpi = grad_(axis_step(w, i, fd));
            Vec gmi = grad_(axis_step(w, i, -fd));
            for (int j = 0; j < nd; ++j) {
                double hess_ij = (gpi[j] - gmi[j]) / (2 * fd);
                a[static_cast<size_t>(j * m + i)] = lambda * hess_ij + (i == j ? 1.0 : 0.0);
            }
        }
        for (int i = 0; i < nd; ++i) {
            a[static_cast<size_t>(i * m + nd)] = g[i];
            a[static_cast<size_t>(nd * m + i)] = g[i];
            b[static_cast<size_t>(i)] = -opt[i];
        }
        a[static_cast<size_t>(nd * m + nd)] = 0;
        b[static_cast<size_t>(nd)] = -r;
        if (!solve_dense(m, a.data(), b.data())) break;
        double step_norm = 0;
        for (int i = 0; i < nd; ++i) {
            w[i] += b[static_cast<size_t>(i)];
            step_norm = std::max(step_norm, std::abs(b[static_cast<size_t>(i)]));
        }
        lambda += b[static_cast<size_t>(nd)];
        if (step_norm < 1e-14 && std::abs(rho_(w)) < 1e-12) break;
    }
    if (!(std::abs(rho_(w)) < 1e-10)) throw ProjectionStall(w, last_res);
    BoundaryFoot out;
    out.foot = w;
    out.distance = (w - p).norm();
    return out;
}

Domain make_domain(const DomainKind& kind, double dilation) {
    switch (kind.kind) {
        case DomainKind::kBall:
            return Domain::ball(kind.n, dilation);
        case DomainKind::kEllipsoid:
            return Domain::ellipsoid(kind.coeffs, kind.n, dilation);
        default:
            throw Error("custom domains are constructed through Domain::custom");
    }
}

std::int64_t Grid::flat_index(const std::array<int, kMaxRealDim>& idx) const {
    std::int64_t f = 0;
    for (int i = 0; i < 2 * n_; ++i) f += stride_[static_cast<size_t>(i)] * idx[static_cast<size_t>(i)];
    return f;
}

void Grid::unflatten(std::int64_t flat, std::array<int, kMaxRealDim>& idx) const {
    for (int i = 0; i < 2 * n_; ++i) {
        idx[static_cast<size_t>(i)] = static_cast<int>(flat / stride_[static_cast<size_t>(i)]);
        flat %= stride_[static_cast<size_t>(i)];
    }
}

Vec Grid::coords(std::int32_t id) const {
    const auto& idx = packed_idx_[static_cast<size_t>(id)];
    Vec p(2 * n_);
    for (int i = 0; i < 2 * n_; ++i) p[i] = origin_[i] + h_ * idx[static_cast<size_t>(i)];
    return p;
}

std::int32_t Grid::corner(std::int32_t id, int axis_a, int dir_a, int axis_b, int dir_b) const {
    const auto& idx = packed_idx_[static_cast<size_t>(id)];
    const int ia = idx[static_cast<size_t>(axis_a)] + dir_a;
    const int ib = idx[static_cast<size_t>(axis_b)] + dir_b;
    if (ia < 0 || ia >= size_[static_cast<size_t>(axis_a)] || ib < 0 ||
        ib >= size_[static_cast<size_t>(axis_b)])
        return -1;
    const std::int64_t f = flat_of_[static_cast<size_t>(id)] +
                           dir_a * stride_[static_cast<size_t>(axis_a)] +
                           dir_b * stride_[static_cast<size_t>(axis_b)];
    return compact_of_[static_cast<size_t>(f)];
}

double Grid::arm(std::int32_t id, int axis, int dir) const {
    const std::int32_t slot = arm_slot_[static_cast<size_t>(id)];
    if (slot < 0) return 1.0;
    return arms_[static_cast<size_t>(slot)][static_cast<size_t>(axis * 2 + (dir < 0 ? 1 : 0))];
}

Vec Grid::foot(std::int32_t id, int axis, int dir) const {
    return axis_step(coords(id), axis, dir * arm(id, axis, dir) * h_);
}

Grid classify_grid(const Domain& domain, double h, std::int64_t budget) {
    if (!(h > 0)) throw Error("grid spacing must be positive");
    Grid g;
    g.n_ = domain.n();
    g.h_ = h;
    const int nd = 2 * g.n_;
    // Lattice points are integer multiples of h, clipped to the bounding box,
    // so that the origin is always a lattice point.
    std::int64_t total = 1;
    g.origin_ = Vec(nd);
    for (int i = 0; i < nd; ++i) {
        const double lo = domain.bbox().lo[i];
        const double hi = domain.bbox().hi[i];
        const long i_lo = static_cast<long>(std::ceil(lo / h - 1e-12));
        const long i_hi = static_cast<long>(std::floor(hi / h + 1e-12));
        if (i_hi < i_lo) throw Error("bounding box too small for the requested spacing");
        g.size_[static_cast<size_t>(i)] = static_cast<int>(i_hi - i_lo + 1);
        g.origin_[i] = static_cast<double>(i_lo) * h;
        total *= g.size_[static_cast<size_t>(i)];
    }
    if (total > budget) throw GridBudgetExceeded(total, budget);
    g.box_points_ = total;
    g.stride_[static_cast<size_t>(nd - 1)] = 1;
    for (int i = nd - 2; i >= 0; --i)
        g.stride_[static_cast<size_t>(i)] =
            g.stride_[static_cast<size_t>(i + 1)] * g.size_[static_cast<size_t>(i + 1)];

    // Pass 1: inside/outside by the sign of rho. Points within 1e-8 of the
    // zero set count as exterior so that they can serve as exact Dirichlet feet.
    constexpr double kRhoMargin = 1e-8;
    std::vector<std::uint8_t> inside(static_cast<size_t>(total), 0);
    std::array<int, kMaxRealDim> idx{};
    Vec p(nd);
    for (std::int64_t f = 0; f < total; ++f) {
        std::int64_t rem = f;
        for (int i = 0; i < nd; ++i) {
            idx[static_cast<size_t>(i)] = static_cast<int>(rem / g.stride_[static_cast<size_t>(i)]);
            rem %= g.stride_[static_cast<size_t>(i)];
            p[i] = g.origin_[i] + h * idx[static_cast<size_t>(i)];
        }
        inside[static_cast<size_t>(f)] = domain.rho(p) < -kRhoMargin ? 1 : 0;
    }

    // Pass 1b: demote points whose fractional arm would collapse. A point that
    // sits within 1e-6 h of the zero set (in arm units) becomes the Dirichlet
    // foot of its neighbor instead of carrying a degenerate stencil.
    constexpr double kMinArm = 1e-6;
    auto point_at = [&](std::int64_t f, Vec& q) {
        std::int64_t rem = f;
        for (int i = 0; i < nd; ++i) {
            const int ii = static_cast<int>(rem / g.stride_[static_cast<size_t>(i)]);
            rem %= g.stride_[static_cast<size_t>(i)];
            q[i] = g.origin_[i] + h * ii;
        }
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::int64_t f = 0; f < total; ++f) {
            if (!inside[static_cast<size_t>(f)]) continue;
            std::int64_t rem = f;
            bool demote = false;
            for (int i = 0; i < nd; ++i) {
                idx[static_cast<size_t>(i)] = static_cast<int>(rem / g.stride_[static_cast<size_t>(i)]);
                rem %= g.stride_[static_cast<size_t>(i)];
            }
            point_at(f, p);
            for (int axis = 0; axis < nd && !demote; ++axis) {
                for (int dir = -1; dir <= 1 && !demote; dir += 2) {
                    const int j = idx[static_cast<size_t>(axis)] + dir;
                    bool ext = j < 0 || j >= g.size_[static_cast<size_t>(axis)];
                    if (!ext)
                        ext = !inside[static_cast<size_t>(f + dir * g.stride_[static_cast<size_t>(axis)])];
                    if (!ext) continue;
                    double lo = 0.0, hi = 1.0;
                    for (int it = 0; it < kBisectionIters; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        if (domain.rho(axis_step(p, axis, dir * mid * h)) < 0)
                            lo = mid;
                        else
                            hi = mid;
                    }
                    if (hi < kMinArm) demote = true;
                }
            }
            if (demote) {
                inside[static_cast<size_t>(f)] = 0;
                changed = true;
            }
        }
    }

    // Pass 2: compact ids, neighbor tables, classification.
    g.compact_of_.assign(static_cast<size_t>(total), -1);
    for (std::int64_t f = 0; f < total; ++f) {
        if (!inside[static_cast<size_t>(f)]) continue;
        const std::int32_t id = static_cast<std::int32_t>(g.flat_of_.size());
        g.compact_of_[static_cast<size_t>(f)] = id;
        g.flat_of_.push_back(f);
    }
    const std::int32_t npts = static_cast<std::int32_t>(g.flat_of_.size());
    g.cls_.assign(static_cast<size_t>(npts), PointClass::interior);
    g.arm_slot_.assign(static_cast<size_t>(npts), -1);
    g.packed_idx_.resize(static_cast<size_t>(npts));
    g.neighbors_.resize(static_cast<size_t>(npts));
    for (std::int32_t id = 0; id < npts; ++id) {
        g.unflatten(g.flat_of_[static_cast<size_t>(id)], idx);
        for (int i = 0; i < nd; ++i)
            g.packed_idx_[static_cast<size_t>(id)][static_cast<size_t>(i)] =
                static_cast<std::uint16_t>(idx[static_cast<size_t>(i)]);
        bool adj = false;
        for (int axis = 0; axis < nd; ++axis) {
            for (int dir = -1; dir <= 1; dir += 2) {
                std::int32_t nb = -1;
                const int j = idx[static_cast<size_t>(axis)] + dir;
                if (j >= 0 && j < g.size_[static_cast<size_t>(axis)]) {
                    const std::int64_t f2 = g.flat_of_[static_cast<size_t>(id)] +
                                            dir * g.stride_[static_cast<size_t>(axis)];
                    nb = g.compact_of_[static_cast<size_t>(f2)];
                }
                g.neighbors_[static_cast<size_t>(id)][static_cast<size_t>(axis * 2 + (dir < 0 ? 1 : 0))] = nb;
                if (nb < 0) adj = true;
            }
        }
        if (adj) {
            g.cls_[static_cast<size_t>(id)] = PointClass::boundary_adjacent;
            g.boundary_adjacent_.push_back(id);
        } else {
            g.interior_.push_back(id);
        }
    }

    // Pass 3: fractional arms at boundary-adjacent points by bisection on rho.
    g.arms_.resize(g.boundary_adjacent_.size());
    g.closures_.resize(g.boundary_adjacent_.size());
    for (size_t k = 0; k < g.boundary_adjacent_.size(); ++k) {
        const std::int32_t id = g.boundary_adjacent_[k];
        g.arm_slot_[static_cast<size_t>(id)] = static_cast<std::int32_t>(k);
        auto& rec = g.arms_[k];
        rec.fill(1.0);
        const Vec base = g.coords(id);
        for (int axis = 0; axis < nd; ++axis) {
            for (int dir = -1; dir <= 1; dir += 2) {
                if (g.neighbor(id, axis, dir) >= 0) continue;  // non-exterior neighbor
                double lo = 0.0, hi = 1.0;
                // rho(base) < 0 and rho at the neighbor is >= 0 (or off the box).
                for (int it = 0; it < kBisectionIters; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (domain.rho(axis_step(base, axis, dir * mid * h)) < 0)
                        lo = mid;
                    else
                        hi = mid;
                }
                rec[static_cast<size_t>(axis * 2 + (dir < 0 ? 1 : 0))] = std::max(hi, 1e-6);
            }
        }
        // Value closure: shortest fractional arm whose inward ray has two
        // non-exterior lattice points (quadratic fit through the foot), else
        // one (linear), else pin to the extended boundary data.
        Grid::BoundaryClosure best;
        for (int axis = 0; axis < nd; ++axis) {
            for (int dir = -1; dir <= 1; dir += 2) {
                if (g.neighbor(id, axis, dir) >= 0) continue;
                const double theta = rec[static_cast<size_t>(axis * 2 + (dir < 0 ? 1 : 0))];
                const std::int32_t in1 = g.neighbor(id, axis, -dir);
                const std::int32_t in2 = in1 >= 0 ? g.neighbor(in1, axis, -dir) : -1;
                Grid::BoundaryClosure cand;
                cand.axis = static_cast<std::int8_t>(axis);
                cand.dir = static_cast<std::int8_t>(dir);
                cand.theta = theta;
                cand.inner1 = in1;
                cand.inner2 = in2;
                cand.mode = in2 >= 0 ? Grid::BoundaryClosure::kQuadratic
                                     : (in1 >= 0 ? Grid::BoundaryClosure::kLinear
                                                 : Grid::BoundaryClosure::kPin);
                if (cand.mode > best.mode ||
                    (cand.mode == best.mode && cand.theta < best.theta))
                    best = cand;
            }
        }
        g.closures_[k] = best;
    }
    return g;
}

void Grid::write_points_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("cannot open " + path + " for writing");
    const int nd = 2 * n_;
    std::fprintf(f, "id");
    for (int i = 0; i < nd; ++i) std::fprintf(f, ",i%d", i);
    for (int i = 0; i < nd; ++i) std::fprintf(f, ",s%d", i);
    std::fprintf(f, ",class");
    for (int i = 0; i < nd; ++i) std::fprintf(f, ",arm_p%d,arm_m%d", i, i);
    std::fprintf(f, "\n");
    std::array<int, kMaxRealDim> idx{};
    for (std::int32_t id = 0; id < num_points(); ++id) {
        unflatten(flat_of_[static_cast<size_t>(id)], idx);
        std::fprintf(f, "%d", id);
        for (int i = 0; i < nd; ++i) std::fprintf(f, ",%d", idx[static_cast<size_t>(i)]);
        const Vec p = coords(id);
        for (int i = 0; i < nd; ++i) std::fprintf(f, ",%.12g", p[i]);
        std::fprintf(f, ",%s", cls_[static_cast<size_t>(id)] == PointClass::interior
                                   ? "interior"
                                   : "boundary_adjacent");
        for (int i = 0; i < nd; ++i)
            std::fprintf(f, ",%.12g,%.12g", arm(id, i, +1), arm(id, i, -1));
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

}  // namespace cmaflow
