#include "cmaflow/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace cmaflow {

FlowProblem ManufacturedCase::problem(std::shared_ptr<const Domain> domain,
                                      std::shared_ptr<const Grid> grid, double T) const {
    FlowProblem p;
    p.domain = std::move(domain);
    p.grid = std::move(grid);
    p.T = T;
    p.f = f;
    p.phi = phi;
    p.initial = u0;
    return p;
}

ManufacturedCase manufactured_source(const ManufacturedParts& w, const Domain& domain, double T,
                                     int samples_per_axis) {
    // Strict plurisubharmonicity spot check over the box and [0, T].
    const int nd = domain.real_dim();
    std::array<int, kMaxRealDim> idx{};
    bool done = false;
    while (!done) {
        Vec p(nd);
        for (int i = 0; i < nd; ++i) {
            const double s = static_cast<double>(idx[static_cast<size_t>(i)]) / (samples_per_axis - 1);
            p[i] = domain.bbox().lo[i] + s * (domain.bbox().hi[i] - domain.bbox().lo[i]);
        }
        if (domain.rho(p) < 0) {
            for (double t : {0.0, 0.5 * T, T}) {
                const double me = min_eigenvalue(w.hessian(p, t));
                if (!(me > 0))
                    throw NotPlurisubharmonic("manufactured field is not strictly psh", me, p);
            }
        }
        done = true;
        for (int i = 0; i < nd; ++i) {
            if (++idx[static_cast<size_t>(i)] < samples_per_axis) {
                done = false;
                break;
            }
            idx[static_cast<size_t>(i)] = 0;
        }
    }
    ManufacturedCase mc;
    mc.name = w.name;
    mc.value = w.value;
    mc.dt = w.dt;
    mc.hessian = w.hessian;
    auto dt = w.dt;
    auto hess = w.hessian;
    mc.f = [dt, hess](double t, const Vec& z, double) {
        return dt(z, t) - log_det_pd(hess(z, t));
    };
    auto val = w.value;
    mc.phi = [val](const Vec& z, double t) { return val(z, t); };
    mc.u0.kind = "manufactured:" + w.name;
    mc.u0.smooth = true;
    mc.u0.u0 = [val](const Vec& z) { return val(z, 0.0); };
    return mc;
}

ManufacturedCase exact_quadratic_family(double a, double b, int n) {
    if (!(a > 0)) throw Error("exact quadratic family needs a > 0");
    ManufacturedCase mc;
    mc.name = "quadratic(a=" + std::to_string(a) + ",b=" + std::to_string(b) + ")";
    mc.value = [a, b](const Vec& z, double t) { return a * z.norm2() + b * t; };
    mc.dt = [b](const Vec&, double) { return b; };
    mc.hessian = [a, n](const Vec&, double) {
        HermitianForm hm = HermitianForm::identity(n);
        hm *= a;
        return hm;
    };
    const double fconst = b - n * std::log(a);
    mc.f = [fconst](double, const Vec&, double) { return fconst; };
    mc.phi = [a, b](const Vec& z, double t) { return a * z.norm2() + b * t; };
    mc.u0 = InitialData::quadratic(a);
    return mc;
}

ManufacturedCase decay_case(int n) {
    ManufacturedCase mc;
    mc.name = "decay";
    mc.value = [](const Vec& z, double t) { return std::exp(-t) * z.norm2(); };
    mc.dt = [](const Vec& z, double t) { return -std::exp(-t) * z.norm2(); };
    mc.hessian = [n](const Vec&, double t) {
        HermitianForm hm = HermitianForm::identity(n);
        hm *= std::exp(-t);
        return hm;
    };
    // dw/dt - log det = -e^{-t}|z|^2 + n t = -u + n t along the solution
    mc.f = [n](double t, const Vec&, double u) { return -u + n * t; };
    mc.phi = [](const Vec& z, double t) { return std::exp(-t) * z.norm2(); };
    mc.u0 = InitialData::quadratic(1.0);
    return mc;
}

double RadialCurve::value_at(double radius, size_t time_index) const {
    const auto& v = values.at(time_index);
    if (radius <= r.front()) return v.front();
    if (radius >= r.back()) return v.back();
    const double dr = r[1] - r[0];
    const size_t k = std::min(static_cast<size_t>(radius / dr), r.size() - 2);
    const double s = (radius - r[k]) / dr;
    return (1.0 - s) * v[k] + s * v[k + 1];
}

bool is_radial(const PointFn& fn, double radius_max, double tol) {
    for (double rr : {0.25 * radius_max, 0.5 * radius_max, 0.9 * radius_max}) {
        Vec a(2), b(2), c(2);
        a[0] = rr;
        a[1] = 0;
        b[0] = 0;
        b[1] = rr;
        c[0] = rr * std::sqrt(0.5);
        c[1] = rr * std::sqrt(0.5);
        const double va = fn(a);
        if (std::abs(fn(b) - va) > tol * (1 + std::abs(va))) return false;
        if (std::abs(fn(c) - va) > tol * (1 + std::abs(va))) return false;
    }
    return true;
}

std::function<double(double)> radial_mollify(const std::function<double(double)>& u0, int m,
                                             double margin) {
    if (m < 1) throw Error("mollification level must be >= 1");
    const double delta = margin / m;
    // normalized (1-s^2)^3 bump on 7 nodes, matching the grid mollifier
    std::vector<double> node, weight;
    double total = 0;
    for (int j = -3; j <= 3; ++j) {
        const double s = j / 3.0;
        const double w = std::pow(1.0 - s * s, 3);
        if (w > 0) {
            node.push_back(s);
            weight.push_back(w);
            total += w;
        }
    }
    for (double& w : weight) w /= total;
    const double inv_m = 1.0 / m;
    return [u0, node, weight, delta, inv_m](double r) {
        double acc = 0;
        for (size_t j = 0; j < node.size(); ++j) {
            const double rr = std::abs(r - delta * node[j]);  // even extension at r = 0
            acc += weight[j] * (u0(rr) + inv_m * rr * rr);
        }
        return acc;
    };
}

RadialCurve radial_reference(const RadialProblem& problem, double dr,
                             const std::vector<double>& snapshot_times) {
    RadialCurve curve;
    const int nr = static_cast<int>(std::round(1.0 / dr));
    curve.r.resize(static_cast<size_t>(nr + 1));
    for (int i = 0; i <= nr; ++i) curve.r[static_cast<size_t>(i)] = i * dr;

    std::vector<double> u(static_cast<size_t>(nr + 1));
    for (int i = 0; i <= nr; ++i) u[static_cast<size_t>(i)] = problem.u0(curve.r[static_cast<size_t>(i)]);
    u[static_cast<size_t>(nr)] = problem.phi(0.0);

    // Monge-Ampere density q = (U_rr + U_r/r)/4; at the axis both terms tend
    // to U_rr(0), handled by the symmetric stencil.
    std::vector<double> q(static_cast<size_t>(nr + 1));
    auto density = [&](const std::vector<double>& v, int i) {
        if (i == 0) {
            const double urr = 2.0 * (v[1] - v[0]) / (dr * dr);  // U_r(0) = 0
            return 0.5 * urr;
        }
        const double urr = (v[static_cast<size_t>(i + 1)] - 2.0 * v[static_cast<size_t>(i)] +
                            v[static_cast<size_t>(i - 1)]) /
                           (dr * dr);
        const double ur = (v[static_cast<size_t>(i + 1)] - v[static_cast<size_t>(i - 1)]) / (2.0 * dr);
        return 0.25 * (urr + ur / curve.r[static_cast<size_t>(i)]);
    };

    double t = 0;
    std::vector<double> rate(static_cast<size_t>(nr + 1));
    for (double target : snapshot_times) {
        while (target - t > 1e-14) {
            double qmin = std::numeric_limits<double>::infinity();
            for (int i = 0; i < nr; ++i) {
                q[static_cast<size_t>(i)] = density(u, i);
                if (!(q[static_cast<size_t>(i)] > 0))
                    throw NotPlurisubharmonic("radial reference left the PD cone",
                                              q[static_cast<size_t>(i)]);
                qmin = std::min(qmin, q[static_cast<size_t>(i)]);
                rate[static_cast<size_t>(i)] = std::log(q[static_cast<size_t>(i)]) +
                                               problem.f(t, curve.r[static_cast<size_t>(i)],
                                                         u[static_cast<size_t>(i)]);
            }
            // explicit stability: dt <= 0.2 dr^2 / max(1/(4q)) x safety
            double dt = 0.4 * qmin * dr * dr;
            dt = std::min(dt, target - t);
            for (int i = 0; i < nr; ++i) u[static_cast<size_t>(i)] += dt * rate[static_cast<size_t>(i)];
            t += dt;
            u[static_cast<size_t>(nr)] = problem.phi(t);
        }
        t = target;
        u[static_cast<size_t>(nr)] = problem.phi(t);
        curve.times.push_back(t);
        curve.values.push_back(u);
    }
    return curve;
}

double manufactured_residual(const ManufacturedCase& mc, const Grid& grid,
                             std::shared_ptr<const Grid> grid_sp) {
    GridField f0 = make_field(grid_sp, [&](const Vec& z) { return mc.value(z, 0.0); }, 0.0);
    double res = 0;
    for (std::int32_t id : grid.interior()) {
        const Vec z = grid.coords(id);
        HermitianForm h = complex_hessian_at(f0, id, nullptr, nullptr);
        const double r = mc.dt(z, 0.0) - log_det_pd(h) - mc.f(0.0, z, f0[id]);
        res = std::max(res, std::abs(r));
    }
    return res;
}

}  // namespace cmaflow
